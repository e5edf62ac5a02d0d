#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sccl/errors.hpp"
#include "sccl/rng.hpp"

namespace sccl {

using TokenSeq = std::vector<std::string>;

// One augmentable instance: a feature vector or a token sequence.
using Sample = std::variant<std::vector<double>, TokenSeq>;

enum class AugmentKind { GaussianNoise, FeatureDropout, TokenSubstitute, CharSwap, Compose };

inline std::string_view to_string(AugmentKind k) {
  switch (k) {
    case AugmentKind::GaussianNoise: return "GaussianNoise";
    case AugmentKind::FeatureDropout: return "FeatureDropout";
    case AugmentKind::TokenSubstitute: return "TokenSubstitute";
    case AugmentKind::CharSwap: return "CharSwap";
    case AugmentKind::Compose: return "Compose";
  }
  return "?";
}

inline AugmentKind parse_augment_kind(std::string_view s) {
  if (s == "GaussianNoise") return AugmentKind::GaussianNoise;
  if (s == "FeatureDropout") return AugmentKind::FeatureDropout;
  if (s == "TokenSubstitute") return AugmentKind::TokenSubstitute;
  if (s == "CharSwap") return AugmentKind::CharSwap;
  if (s == "Compose") return AugmentKind::Compose;
  throw ConfigError("unknown augmentation kind '" + std::string(s) + "'");
}

// `strength` is the fraction of coordinates, words or characters a single draw touches.
struct AugmentSpec {
  AugmentKind kind = AugmentKind::GaussianNoise;
  double strength = 0.2;
  double noise_sigma = 0.1;
  std::vector<AugmentSpec> stages;  // Compose only, applied in order

  static AugmentSpec gaussian_noise(double strength, double sigma) {
    return {AugmentKind::GaussianNoise, strength, sigma, {}};
  }
  static AugmentSpec feature_dropout(double strength) { return {AugmentKind::FeatureDropout, strength, 0.0, {}}; }
  static AugmentSpec token_substitute(double strength) { return {AugmentKind::TokenSubstitute, strength, 0.0, {}}; }
  static AugmentSpec char_swap(double strength) { return {AugmentKind::CharSwap, strength, 0.0, {}}; }
  static AugmentSpec compose(std::vector<AugmentSpec> stages) {
    return {AugmentKind::Compose, 0.0, 0.0, std::move(stages)};
  }

  [[nodiscard]] bool is_token_kind() const {
    if (kind == AugmentKind::Compose) return !stages.empty() && stages.front().is_token_kind();
    return kind == AugmentKind::TokenSubstitute || kind == AugmentKind::CharSwap;
  }

  void validate() const {
    if (kind == AugmentKind::Compose) {
      if (stages.empty()) throw ConfigError("Compose augmentation needs at least one stage");
      for (const auto& s : stages) {
        s.validate();
        if (s.is_token_kind() != stages.front().is_token_kind()) {
          throw KindMismatchError("Compose stages mix vector and token augmentations");
        }
      }
      return;
    }
    if (!(strength >= 0.0 && strength <= 1.0)) throw ConfigError("augmentation strength must lie in [0, 1]");
    if (kind == AugmentKind::GaussianNoise && !(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const AugmentSpec& s) {
  j = nlohmann::json{{"kind", std::string(to_string(s.kind))}};
  if (s.kind == AugmentKind::Compose) {
    j["stages"] = nlohmann::json::array();
    for (const auto& st : s.stages) j["stages"].push_back(st);
    return;
  }
  j["strength"] = s.strength;
  if (s.kind == AugmentKind::GaussianNoise) j["noise_sigma"] = s.noise_sigma;
}

inline AugmentSpec augment_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("augment block needs a `kind`");
  AugmentSpec s;
  try {
    s.kind = parse_augment_kind(j.at("kind").get<std::string>());
    if (s.kind == AugmentKind::Compose) {
      if (!j.contains("stages") || !j["stages"].is_array()) throw ConfigError("Compose needs a `stages` array");
      for (const auto& st : j["stages"]) s.stages.push_back(augment_spec_from_json(st));
    } else {
      s.strength = j.value("strength", s.strength);
      s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("augment config: ") + e.what());
  }
  s.validate();
  return s;
}

inline TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(std::move(tok));
  return out;
}

inline std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Sorted distinct whitespace tokens of a corpus.
inline std::vector<std::string> build_vocabulary(const std::vector<std::string>& texts) {
  std::set<std::string> vocab;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) vocab.insert(std::move(tok));
  }
  return {vocab.begin(), vocab.end()};
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Signed bag-of-buckets feature vector, L2-normalized.
inline std::vector<double> hashing_featurize(const TokenSeq& tokens, std::size_t dim) {
  if (dim < 16) throw ArgumentError("hashing_featurize: dim must be >= 16");
  if (tokens.empty()) throw DegenerateVectorError("hashing_featurize: empty token sequence");
  std::vector<double> v(dim, 0.0);
  for (const auto& tok : tokens) {
    const std::uint64_t h = fnv1a(tok);
    const std::size_t bucket = static_cast<std::size_t>(h % dim);
    const double sign = (derive_seed(h, 0) >> 63) ? -1.0 : 1.0;
    v[bucket] += sign;
  }
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (n2 == 0.0) throw DegenerateVectorError("hashing_featurize: token hashes cancelled to the zero vector");
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

class Augmenter {
 public:
  explicit Augmenter(AugmentSpec spec, std::vector<std::string> vocabulary = {})
      : spec_(std::move(spec)), vocabulary_(std::move(vocabulary)) {
    spec_.validate();
  }

  [[nodiscard]] const AugmentSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }

  // One random draw from the augmentation distribution.
  [[nodiscard]] Sample apply(const Sample& x, Rng& rng) const { return apply(spec_, x, rng); }

  // Two independent draws; the positive pair of the contrastive loss.
  [[nodiscard]] std::pair<Sample, Sample> augment_pair(const Sample& x, Rng& rng) const {
    Sample a1 = apply(x, rng);
    Sample a2 = apply(x, rng);
    return {std::move(a1), std::move(a2)};
  }

 private:
  Sample apply(const AugmentSpec& spec, const Sample& x, Rng& rng) const {
    const bool token_input = std::holds_alternative<TokenSeq>(x);
    if (spec.kind == AugmentKind::Compose) {
      Sample cur = x;
      for (const auto& stage : spec.stages) cur = apply(stage, cur, rng);
      return cur;
    }
    if (spec.is_token_kind() != token_input) {
      throw KindMismatchError(std::string("augmentation ") + std::string(to_string(spec.kind)) +
                              (token_input ? " cannot be applied to a token sequence" : " requires a token sequence"));
    }
    switch (spec.kind) {
      case AugmentKind::GaussianNoise: return gaussian_noise(std::get<std::vector<double>>(x), spec, rng);
      case AugmentKind::FeatureDropout: return feature_dropout(std::get<std::vector<double>>(x), spec, rng);
      case AugmentKind::TokenSubstitute: return token_substitute(std::get<TokenSeq>(x), spec, rng);
      case AugmentKind::CharSwap: return char_swap(std::get<TokenSeq>(x), spec, rng);
      case AugmentKind::Compose: break;
    }
    return x;
  }

  static std::vector<double> gaussian_noise(std::vector<double> v, const AugmentSpec& spec, Rng& rng) {
    if (spec.strength == 0.0) return v;
    const std::size_t count = stochastic_round(rng, spec.strength * static_cast<double>(v.size()));
    for (std::size_t idx : sample_without_replacement(rng, v.size(), count)) {
      v[idx] += spec.noise_sigma * standard_normal(rng);
    }
    return v;
  }

  static std::vector<double> feature_dropout(std::vector<double> v, const AugmentSpec& spec, Rng& rng) {
    if (spec.strength == 0.0) return v;
    const std::size_t count = stochastic_round(rng, spec.strength * static_cast<double>(v.size()));
    for (std::size_t idx : sample_without_replacement(rng, v.size(), count)) v[idx] = 0.0;
    return v;
  }

  TokenSeq token_substitute(TokenSeq tokens, const AugmentSpec& spec, Rng& rng) const {
    if (spec.strength == 0.0 || tokens.empty()) return tokens;
    if (vocabulary_.size() < 2) throw ConfigError("TokenSubstitute needs a vocabulary of at least two tokens");
    const std::size_t count = stochastic_round(rng, spec.strength * static_cast<double>(tokens.size()));
    for (std::size_t idx : sample_without_replacement(rng, tokens.size(), count)) {
      // Draw from the vocabulary minus the current token so every selected word changes.
      const auto cur = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), tokens[idx]);
      const bool present = cur != vocabulary_.end() && *cur == tokens[idx];
      std::size_t pick = uniform_index(rng, vocabulary_.size() - (present ? 1 : 0));
      if (present && pick >= static_cast<std::size_t>(cur - vocabulary_.begin())) ++pick;
      tokens[idx] = vocabulary_[pick];
    }
    return tokens;
  }

  // Character edits: substitute, delete, insert, or swap with a neighbour.
  static TokenSeq char_swap(TokenSeq tokens, const AugmentSpec& spec, Rng& rng) {
    if (spec.strength == 0.0) return tokens;
    std::vector<std::pair<std::size_t, std::size_t>> positions;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      for (std::size_t c = 0; c < tokens[t].size(); ++c) positions.emplace_back(t, c);
    }
    const std::size_t count = stochastic_round(rng, spec.strength * static_cast<double>(positions.size()));
    auto chosen = sample_without_replacement(rng, positions.size(), count);
    // Descending order keeps not-yet-edited positions valid after inserts and deletes.
    std::sort(chosen.begin(), chosen.end(), std::greater<>());
    auto random_letter = [&rng](char avoid) {
      char c = static_cast<char>('a' + uniform_index(rng, 25));
      if (c >= avoid && avoid >= 'a' && avoid <= 'z') ++c;
      return c;
    };
    for (std::size_t flat : chosen) {
      auto [t, c] = positions[flat];
      std::string& tok = tokens[t];
      std::size_t op = uniform_index(rng, 4);
      if (tok.size() == 1 && (op == 1 || op == 3)) op = 0;
      switch (op) {
        case 0: tok[c] = random_letter(tok[c]); break;
        case 1: tok.erase(c, 1); break;
        case 2: tok.insert(tok.begin() + static_cast<std::ptrdiff_t>(c), random_letter(0)); break;
        default: {
          const std::size_t other = c + 1 < tok.size() ? c + 1 : c - 1;
          if (tok[other] == tok[c]) tok[c] = random_letter(tok[c]);
          else std::swap(tok[c], tok[other]);
          break;
        }
      }
    }
    return tokens;
  }

  AugmentSpec spec_;
  std::vector<std::string> vocabulary_;
};

// Free-function form of Augmenter::augment_pair.
inline std::pair<Sample, Sample> augment_pair(const Sample& x, const AugmentSpec& spec, Rng& rng,
                                              const std::vector<std::string>& vocabulary = {}) {
  return Augmenter(spec, vocabulary).augment_pair(x, rng);
}

}  // namespace sccl
