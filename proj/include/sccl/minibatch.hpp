#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "sccl/augment.hpp"
#include "sccl/dataset.hpp"
#include "sccl/errors.hpp"
#include "sccl/rng.hpp"

namespace sccl {

// M originals plus their 2M augmented views; rows 2i and 2i+1 of `aug` are the
// positive pair for original row i.
struct Minibatch {
  DenseMatrix orig;
  DenseMatrix aug;
  std::vector<std::size_t> orig_indices;
  // aug_source[r] is the batch row of `orig` that aug row r was produced from.
  std::vector<std::size_t> aug_source;

  [[nodiscard]] std::size_t size() const noexcept { return orig.rows(); }
};

// Epoch-based sampling without replacement. Each epoch is a fresh permutation cut
// into floor(N / M) batches of exactly M = min(batch_size, N) rows (drop-last).
//
// Precomputed aug1/aug2 are used unless an augmenter is supplied, in which case the
// pair is regenerated on every draw. Token augmenters read `Dataset::texts` and map
// the augmented tokens back to vectors with hashing_featurize at the dataset's width.
class MinibatchSampler {
 public:
  MinibatchSampler(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                   std::optional<Augmenter> augmenter = std::nullopt)
      : dataset_(&dataset),
        batch_size_(std::min(batch_size, dataset.size())),
        rng_(make_rng(seed)),
        augmenter_(std::move(augmenter)) {
    if (dataset.size() == 0) throw ArgumentError("sampler: dataset is empty");
    if (batch_size_ == 0) throw ArgumentError("sampler: batch_size must be positive");
    if (!augmenter_ && !dataset.has_augmentations()) {
      throw ContractError("sampler: dataset has no precomputed augmentations and no augmenter is configured");
    }
    if (augmenter_ && augmenter_->spec().is_token_kind() && !dataset.has_texts()) {
      throw KindMismatchError("sampler: token augmentation requires dataset texts");
    }
    if (augmenter_ && augmenter_->spec().is_token_kind()) {
      tokens_.reserve(dataset.size());
      for (const auto& t : dataset.texts) tokens_.push_back(tokenize(t));
    }
  }

  [[nodiscard]] std::size_t batch_size() const noexcept { return batch_size_; }
  [[nodiscard]] std::size_t batches_per_epoch() const noexcept { return dataset_->size() / batch_size_; }
  [[nodiscard]] std::size_t epoch() const noexcept { return epoch_; }

  Minibatch next() {
    if (cursor_ + batch_size_ > order_.size()) start_epoch();
    std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_size_));
    cursor_ += batch_size_;
    return make_batch(std::move(idx));
  }

  // Batch over explicit dataset rows, with augmentations drawn from this sampler's stream.
  Minibatch make_batch(std::vector<std::size_t> idx) {
    const Dataset& ds = *dataset_;
    Minibatch b;
    b.orig = gather_rows(ds.vectors, idx);
    b.aug = DenseMatrix(2 * idx.size(), ds.dim());
    b.aug_source.resize(2 * idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      b.aug_source[2 * i] = i;
      b.aug_source[2 * i + 1] = i;
      auto r1 = b.aug.row(2 * i);
      auto r2 = b.aug.row(2 * i + 1);
      if (!augmenter_) {
        std::copy(ds.aug1->row(idx[i]).begin(), ds.aug1->row(idx[i]).end(), r1.begin());
        std::copy(ds.aug2->row(idx[i]).begin(), ds.aug2->row(idx[i]).end(), r2.begin());
        continue;
      }
      Sample src = augmenter_->spec().is_token_kind()
                       ? Sample(tokens_[idx[i]])
                       : Sample(std::vector<double>(ds.vectors.row(idx[i]).begin(), ds.vectors.row(idx[i]).end()));
      auto [a1, a2] = augmenter_->augment_pair(src, rng_);
      write_view(a1, r1);
      write_view(a2, r2);
    }
    b.orig_indices = std::move(idx);
    return b;
  }

 private:
  void start_epoch() {
    order_.resize(dataset_->size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    shuffle(std::span<std::size_t>(order_), rng_);
    cursor_ = 0;
    ++epoch_;
  }

  void write_view(const Sample& s, std::span<double> out) const {
    if (const auto* v = std::get_if<std::vector<double>>(&s)) {
      std::copy(v->begin(), v->end(), out.begin());
      return;
    }
    const auto f = hashing_featurize(std::get<TokenSeq>(s), out.size());
    std::copy(f.begin(), f.end(), out.begin());
  }

  const Dataset* dataset_;
  std::size_t batch_size_;
  Rng rng_;
  std::optional<Augmenter> augmenter_;
  std::vector<TokenSeq> tokens_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

// One-shot convenience over MinibatchSampler::next.
inline Minibatch sample_minibatch(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                                  std::optional<Augmenter> augmenter = std::nullopt) {
  MinibatchSampler s(dataset, batch_size, seed, std::move(augmenter));
  return s.next();
}

}  // namespace sccl
