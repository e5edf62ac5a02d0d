#include <cmath>
#include <set>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "sccl/config.hpp"
#include "sccl/dataset.hpp"
#include "sccl/minibatch.hpp"
#include "sccl/synthetic.hpp"

using namespace sccl;
using Catch::Matchers::WithinAbs;

TEST_CASE("DenseMatrix shape and storage") {
  DenseMatrix m(2, 3, 1.5);
  CHECK(m.size() == 6);
  CHECK(m(1, 2) == 1.5);
  CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  DenseMatrix r{{1, 2}, {3, 4}};
  CHECK(r(1, 0) == 3);
  CHECK(r.row(0)[1] == 2);
  CHECK(r.all_finite());
  r(0, 0) = std::nan("");
  CHECK_FALSE(r.all_finite());
}

TEST_CASE("row helpers interleave and split") {
  DenseMatrix even{{1, 1}, {3, 3}};
  DenseMatrix odd{{2, 2}, {4, 4}};
  DenseMatrix both = interleave_rows(even, odd);
  REQUIRE(both.rows() == 4);
  CHECK(both(2, 0) == 3);
  CHECK(strided_rows(both, 1, 2) == odd);
  CHECK(strided_rows(both, 0, 2) == even);
}

TEST_CASE("jsonl: three records without labels") {
  const std::string text =
      "{\"id\": \"a\", \"vec\": [1, 2, 3, 4]}\n"
      "{\"id\": \"b\", \"vec\": [0, 0, 0, 1]}\n"
      "{\"id\": \"c\", \"vec\": [5, 6, 7, 8]}\n";
  const Dataset ds = parse_dataset(text, DatasetFormat::Jsonl);
  CHECK(ds.size() == 3);
  CHECK(ds.dim() == 4);
  CHECK_FALSE(ds.has_labels());
  CHECK_FALSE(ds.has_augmentations());
  CHECK(ds.ids == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("jsonl: ragged vec is a dimension error") {
  const std::string text =
      "{\"id\": \"a\", \"vec\": [1, 2, 3]}\n"
      "{\"id\": \"b\", \"vec\": [1, 2, 3, 4]}\n";
  CHECK_THROWS_AS(parse_dataset(text, DatasetFormat::Jsonl), DimensionError);
}

TEST_CASE("jsonl: partial augmentation coverage is a schema error") {
  const std::string some =
      "{\"id\": \"a\", \"vec\": [1, 2], \"aug1\": [1, 2], \"aug2\": [1, 2]}\n"
      "{\"id\": \"b\", \"vec\": [1, 2]}\n";
  CHECK_THROWS_AS(parse_dataset(some, DatasetFormat::Jsonl), SchemaError);
  const std::string only_one = "{\"id\": \"a\", \"vec\": [1, 2], \"aug1\": [1, 2]}\n";
  CHECK_THROWS_AS(parse_dataset(only_one, DatasetFormat::Jsonl), SchemaError);
}

TEST_CASE("jsonl: full augmentation and labels load") {
  const std::string text =
      "{\"id\": \"a\", \"vec\": [1, 2], \"aug1\": [1.5, 2], \"aug2\": [1, 2.5], \"label\": 1}\n"
      "{\"id\": \"b\", \"vec\": [3, 4], \"aug1\": [3, 4], \"aug2\": [3, 4], \"label\": 0}\n";
  const Dataset ds = parse_dataset(text, DatasetFormat::Jsonl);
  REQUIRE(ds.has_augmentations());
  CHECK((*ds.aug1)(0, 0) == 1.5);
  CHECK((*ds.aug2)(0, 1) == 2.5);
  CHECK(*ds.labels == std::vector<int>{1, 0});
}

TEST_CASE("non-finite values are parse errors") {
  CHECK_THROWS_AS(parse_dataset("{\"id\": \"a\", \"vec\": [1e999, 2]}\n", DatasetFormat::Jsonl), ParseError);
  CHECK_THROWS_AS(parse_dataset("id,label,v0,v1\na,,nan,1\n", DatasetFormat::Csv), ParseError);
  CHECK_THROWS_AS(parse_dataset("{\"id\": \"a\", \"vec\": [1, \n", DatasetFormat::Jsonl), ParseError);
}

TEST_CASE("csv loads with and without labels") {
  const Dataset ds = parse_dataset("id,label,v0,v1\na,0,1.25,2\nb,1,3,-4\n", DatasetFormat::Csv);
  CHECK(ds.size() == 2);
  CHECK(ds.vectors(1, 1) == -4);
  CHECK(*ds.labels == std::vector<int>{0, 1});
  const Dataset nl = parse_dataset("id,label,v0\na,,1\nb,,2\n", DatasetFormat::Csv);
  CHECK_FALSE(nl.has_labels());
  CHECK_THROWS_AS(parse_dataset("id,label,v0\na,0,1\nb,,2\n", DatasetFormat::Csv), SchemaError);
  CHECK_THROWS_AS(parse_dataset("id,label,v0,v1\na,0,1\n", DatasetFormat::Csv), DimensionError);
}

TEST_CASE("write then load reproduces vectors bit-exactly") {
  Dataset ds = make_synthetic(3, 7, 5, 2.0, 0.7, 1.0, 42);
  // Awkward values that need the full 17 digits.
  ds.vectors(0, 0) = 0.1 + 0.2;
  ds.vectors(1, 1) = -1e-300;
  ds.vectors(2, 2) = 123456789.123456789;
  for (DatasetFormat f : {DatasetFormat::Jsonl, DatasetFormat::Csv}) {
    std::ostringstream out;
    write_dataset(out, ds, f);
    const Dataset back = parse_dataset(out.str(), f);
    CHECK(back.vectors == ds.vectors);
    CHECK(back.labels == ds.labels);
    CHECK(back.ids == ds.ids);
    if (f == DatasetFormat::Jsonl) {
      CHECK(back.aug1 == ds.aug1);
      CHECK(back.aug2 == ds.aug2);
    }
  }
}

TEST_CASE("make_synthetic balanced sizes") {
  const Dataset ds = make_synthetic(2, 10, 4, 3.0, 1.0, 1.0, 1);
  REQUIRE(ds.size() == 20);
  int ones = 0;
  for (int l : *ds.labels) ones += l;
  CHECK(ones == 10);
  CHECK(ds.has_augmentations());
}

TEST_CASE("make_synthetic imbalance ratio 4 gives sizes 16 and 4") {
  CHECK(geometric_cluster_sizes(2, 10, 4.0) == std::vector<std::size_t>{16, 4});
  const Dataset ds = make_synthetic(2, 10, 4, 3.0, 1.0, 4.0, 1);
  REQUIRE(ds.size() == 20);
  std::vector<int> counts(2, 0);
  for (int l : *ds.labels) ++counts[static_cast<std::size_t>(l)];
  CHECK(counts == std::vector<int>{16, 4});
}

TEST_CASE("geometric sizes keep the total and the ratio") {
  for (double r : {1.0, 2.0, 5.0, 10.0}) {
    const auto s = geometric_cluster_sizes(5, 40, r);
    std::size_t total = 0;
    for (auto x : s) total += x;
    CHECK(total == 200);
    CHECK_THAT(static_cast<double>(s.front()) / static_cast<double>(s.back()), WithinAbs(r, 0.35 * r));
  }
}

TEST_CASE("make_synthetic is deterministic and validates arguments") {
  const Dataset a = make_synthetic(3, 20, 6, 2.0, 0.5, 2.0, 9);
  const Dataset b = make_synthetic(3, 20, 6, 2.0, 0.5, 2.0, 9);
  CHECK(a.vectors == b.vectors);
  CHECK(a.aug1 == b.aug1);
  CHECK(a.aug2 == b.aug2);
  CHECK(a.labels == b.labels);
  CHECK_FALSE(make_synthetic(3, 20, 6, 2.0, 0.5, 2.0, 10).vectors == a.vectors);
  CHECK_THROWS_AS(make_synthetic(3, 0, 6, 2.0, 0.5, 1.0, 9), ArgumentError);
  CHECK_THROWS_AS(make_synthetic(1, 5, 6, 2.0, 0.5, 1.0, 9), ArgumentError);
  CHECK_THROWS_AS(make_synthetic(3, 5, 6, 2.0, 0.0, 1.0, 9), ArgumentError);
  CHECK_THROWS_AS(make_synthetic(3, 5, 6, 2.0, 0.5, 0.5, 9), ArgumentError);
}

TEST_CASE("synthetic cluster means converge to the generator centroids") {
  const double sigma = 0.8;
  const std::size_t n = 4000;
  // 12 coordinates at 3 sigma each: a fixed seed keeps the check from flaking
  const Dataset ds = make_synthetic(3, n, 4, 3.0, sigma, 1.0, 7);
  const DenseMatrix mu = synthetic_centroids(3, 4, 3.0, 7);
  DenseMatrix mean(3, 4);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t d = 0; d < 4; ++d) mean(static_cast<std::size_t>((*ds.labels)[i]), d) += ds.vectors(i, d);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t d = 0; d < 4; ++d) {
      CHECK_THAT(mean(c, d) / static_cast<double>(n), WithinAbs(mu(c, d), 3.0 * sigma / std::sqrt(double(n))));
    }
  }
  // pairwise centroid distance is the requested separation
  CHECK_THAT(distance(mu.row(0), mu.row(1)), WithinAbs(3.0, 1e-12));
}

TEST_CASE("minibatch clamps M to N") {
  const Dataset ds = make_synthetic(5, 1, 3, 2.0, 1.0, 1.0, 3);
  const Minibatch b = sample_minibatch(ds, 400, 11);
  CHECK(b.size() == 5);
  CHECK(b.aug.rows() == 10);
}

TEST_CASE("two draws in one epoch are disjoint") {
  const Dataset ds = make_synthetic(2, 10, 3, 2.0, 1.0, 1.0, 3);
  MinibatchSampler s(ds, 8, 4);
  REQUIRE(s.batches_per_epoch() == 2);
  const Minibatch a = s.next();
  const Minibatch b = s.next();
  std::set<std::size_t> seen(a.orig_indices.begin(), a.orig_indices.end());
  for (auto i : b.orig_indices) CHECK(seen.count(i) == 0);
  CHECK(s.epoch() == 1);
  s.next();
  CHECK(s.epoch() == 2);
}

TEST_CASE("fixed seed gives an identical minibatch") {
  const Dataset ds = make_synthetic(2, 10, 3, 2.0, 1.0, 1.0, 3);
  const Minibatch a = sample_minibatch(ds, 6, 77);
  const Minibatch b = sample_minibatch(ds, 6, 77);
  CHECK(a.orig_indices == b.orig_indices);
  CHECK(a.aug == b.aug);
  const Augmenter aug(AugmentSpec::gaussian_noise(0.5, 0.3));
  const Minibatch c = sample_minibatch(ds, 6, 77, aug);
  const Minibatch d = sample_minibatch(ds, 6, 77, aug);
  CHECK(c.aug == d.aug);
}

TEST_CASE("aug rows 2i and 2i+1 come from orig row i") {
  const Dataset ds = make_synthetic(3, 10, 4, 2.0, 1.0, 1.0, 8);
  MinibatchSampler pre(ds, 7, 1);
  const Minibatch b = pre.next();
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(b.aug_source[2 * i] == i);
    CHECK(b.aug_source[2 * i + 1] == i);
    const std::size_t src = b.orig_indices[i];
    for (std::size_t d = 0; d < 4; ++d) {
      CHECK(b.orig(i, d) == ds.vectors(src, d));
      CHECK(b.aug(2 * i, d) == (*ds.aug1)(src, d));
      CHECK(b.aug(2 * i + 1, d) == (*ds.aug2)(src, d));
    }
  }
  // Dropout views keep every surviving coordinate of their source row.
  MinibatchSampler drop(ds, 7, 1, Augmenter(AugmentSpec::feature_dropout(0.5)));
  const Minibatch c = drop.next();
  for (std::size_t r = 0; r < c.aug.rows(); ++r) {
    const std::size_t i = c.aug_source[r];
    CHECK(i == r / 2);
    for (std::size_t d = 0; d < 4; ++d) {
      if (c.aug(r, d) != 0.0) CHECK(c.aug(r, d) == c.orig(i, d));
    }
  }
}

TEST_CASE("sampler needs augmentations from somewhere") {
  Dataset ds = make_synthetic(2, 5, 3, 2.0, 1.0, 1.0, 3);
  ds.aug1.reset();
  ds.aug2.reset();
  CHECK_THROWS_AS(MinibatchSampler(ds, 4, 0), ContractError);
  CHECK_NOTHROW(MinibatchSampler(ds, 4, 0, Augmenter(AugmentSpec::gaussian_noise(0.2, 0.1))));
  CHECK_THROWS_AS(MinibatchSampler(ds, 4, 0, Augmenter(AugmentSpec::char_swap(0.2))), KindMismatchError);
}

TEST_CASE("config defaults and validation") {
  SCCLConfig c;
  CHECK(c.temperature == 0.5);
  CHECK(c.alpha == 1.0);
  CHECK(c.eta == 10.0);
  CHECK(c.batch_size == 400);
  CHECK(c.lr_backbone == 5e-6);
  CHECK(c.lr_heads == 5e-4);
  CHECK(c.contrast_dim == 128);
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    SCCLConfig x;
    mutate(x);
    return x;
  };
  CHECK_THROWS_AS(bad([](SCCLConfig& x) { x.temperature = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SCCLConfig& x) { x.alpha = -1; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SCCLConfig& x) { x.eta = -0.1; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SCCLConfig& x) { x.n_clusters = 1; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SCCLConfig& x) { x.batch_size = 1; }).validate(), ConfigError);
}

TEST_CASE("config json round trip and unknown keys") {
  SCCLConfig c;
  c.n_clusters = 5;
  c.mode = TrainMode::Sequential;
  c.cluster_loss_variant = ClusterLossVariant::AltAnchorSwap;
  c.eta_on = EtaTarget::Instance;
  c.max_iters = 123;
  c.phase_split = 40;
  const nlohmann::json j = c;
  const SCCLConfig back = config_from_json(j);
  CHECK(nlohmann::json(back) == j);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"n_clustres", 3}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"mode", "Both"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"eta", "ten"}}), ConfigError);
}

TEST_CASE("max_iters resolves from epochs with drop-last") {
  SCCLConfig c;
  c.batch_size = 400;
  c.epochs = 3;
  CHECK(c.resolve_max_iters(1000) == 6);
  CHECK(c.resolve_max_iters(10) == 3);
  c.max_iters = 17;
  CHECK(c.resolve_max_iters(1000) == 17);
  CHECK(c.resolve_phase_split(17) == 8);
}
