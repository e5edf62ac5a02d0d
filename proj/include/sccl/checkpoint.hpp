#pragma once

// JSON checkpoint:
//   {"format": "sccl-checkpoint", "version": 1, "config": {...}, "seed": n,
//    "input_dim": D, "centroids_initialized": bool,
//    "tensors": {"<name>": {"rows": r, "cols": c, "data": [row-major values]}, ...}}
// Tensor names are those of tensors(ModelParams&): encoder.<l>.weight, encoder.<l>.bias,
// g.hidden.weight, g.hidden.bias, g.out.weight, g.out.bias, centroids. Biases have rows = 1.

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "sccl/config.hpp"
#include "sccl/errors.hpp"
#include "sccl/nn.hpp"

namespace sccl {

inline constexpr const char* kCheckpointFormat = "sccl-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  SCCLConfig config;
  ModelParams params;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> tensor_shape(const ModelParams& p, const std::string& name) {
  if (name == "centroids") return {p.centroids.rows(), p.centroids.cols()};
  auto affine_shape = [&](const Affine& a, bool weight) {
    return weight ? std::pair{a.weight.rows(), a.weight.cols()} : std::pair<std::size_t, std::size_t>{1, a.bias.size()};
  };
  const bool weight = name.ends_with(".weight");
  if (name.starts_with("g.hidden.")) return affine_shape(p.g_hidden, weight);
  if (name.starts_with("g.out.")) return affine_shape(p.g_out, weight);
  const std::size_t l = std::stoul(name.substr(8, name.find('.', 8) - 8));
  return affine_shape(p.encoder.at(l), weight);
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const SCCLConfig& config, const ModelParams& params) {
  ModelParams copy = params;
  nlohmann::json tj = nlohmann::json::object();
  for (const auto& t : tensors(copy)) {
    const auto [r, c] = detail::tensor_shape(copy, t.name);
    tj[t.name] = {{"rows", r}, {"cols", c}, {"data", std::vector<double>(t.values.begin(), t.values.end())}};
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", config},
          {"seed", config.seed},
          {"input_dim", params.input_dim},
          {"centroids_initialized", params.centroids_initialized},
          {"tensors", tj}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
    throw SchemaError("not an sccl checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw SchemaError("unsupported checkpoint version " + j.value("version", nlohmann::json()).dump());
  }
  Checkpoint ck;
  try {
    ck.config = config_from_json(j.at("config"));
    ck.config.seed = j.at("seed").get<std::uint64_t>();
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    ck.params = init_params(ck.config, input_dim, std::uint64_t{0});
    ck.params.centroids_initialized = j.at("centroids_initialized").get<bool>();
    const auto& tj = j.at("tensors");
    for (auto& t : tensors(ck.params)) {
      if (!tj.contains(t.name)) throw SchemaError("checkpoint lacks tensor " + t.name);
      const auto& e = tj.at(t.name);
      const auto [r, c] = detail::tensor_shape(ck.params, t.name);
      if (e.at("rows").get<std::size_t>() != r || e.at("cols").get<std::size_t>() != c) {
        throw DimensionError("checkpoint tensor " + t.name + " has the wrong shape for its config");
      }
      const auto data = e.at("data").get<std::vector<double>>();
      if (data.size() != t.values.size()) throw DimensionError("checkpoint tensor " + t.name + " has wrong length");
      std::copy(data.begin(), data.end(), t.values.begin());
    }
    if (tj.size() != tensors(ck.params).size()) throw SchemaError("checkpoint has unexpected tensors");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const SCCLConfig& config, const ModelParams& params) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << checkpoint_to_json(config, params).dump(1) << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace sccl
