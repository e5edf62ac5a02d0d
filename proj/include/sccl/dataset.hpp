#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sccl/errors.hpp"
#include "sccl/matrix.hpp"

namespace sccl {

enum class DatasetFormat { Jsonl, Csv };

inline DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "jsonl") return DatasetFormat::Jsonl;
  if (s == "csv") return DatasetFormat::Csv;
  throw ConfigError("dataset format must be 'jsonl' or 'csv', got '" + std::string(s) + "'");
}

inline DatasetFormat format_from_path(const std::filesystem::path& p) {
  return p.extension() == ".csv" ? DatasetFormat::Csv : DatasetFormat::Jsonl;
}

struct Dataset {
  DenseMatrix vectors;
  std::optional<DenseMatrix> aug1;
  std::optional<DenseMatrix> aug2;
  std::optional<std::vector<int>> labels;
  std::vector<std::string> ids;
  // Raw text per instance; empty unless the source carried it.
  std::vector<std::string> texts;

  [[nodiscard]] std::size_t size() const noexcept { return vectors.rows(); }
  [[nodiscard]] std::size_t dim() const noexcept { return vectors.cols(); }
  [[nodiscard]] bool has_augmentations() const noexcept { return aug1.has_value() && aug2.has_value(); }
  [[nodiscard]] bool has_labels() const noexcept { return labels.has_value(); }
  [[nodiscard]] bool has_texts() const noexcept { return !texts.empty(); }

  [[nodiscard]] std::size_t n_classes() const {
    if (!labels || labels->empty()) return 0;
    return static_cast<std::size_t>(*std::max_element(labels->begin(), labels->end())) + 1;
  }

  void validate() const {
    if (aug1.has_value() != aug2.has_value()) throw SchemaError("aug1 and aug2 must both be present or both absent");
    for (const auto* a : {aug1 ? &*aug1 : nullptr, aug2 ? &*aug2 : nullptr}) {
      if (a && (a->rows() != vectors.rows() || a->cols() != vectors.cols())) {
        throw DimensionError("augmentation shape differs from vectors");
      }
    }
    if (labels) {
      if (labels->size() != size()) throw SchemaError("labels length differs from instance count");
      for (int l : *labels) {
        if (l < 0) throw SchemaError("labels must be non-negative");
      }
    }
    if (ids.size() != size()) throw SchemaError("ids length differs from instance count");
    if (!texts.empty() && texts.size() != size()) throw SchemaError("texts length differs from instance count");
    if (!vectors.all_finite()) throw ParseError("non-finite value in vectors");
  }
};

namespace detail {

inline std::vector<double> json_vector(const nlohmann::json& v, std::size_t line, const char* field) {
  if (!v.is_array()) throw SchemaError("line " + std::to_string(line) + ": `" + field + "` must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw ParseError("line " + std::to_string(line) + ": non-numeric entry in `" + field + "`");
    const double d = x.get<double>();
    if (!std::isfinite(d)) throw ParseError("line " + std::to_string(line) + ": non-finite entry in `" + field + "`");
    out.push_back(d);
  }
  return out;
}

// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError("line " + std::to_string(line) + ": cannot parse number '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) throw ParseError("line " + std::to_string(line) + ": non-finite value");
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline DenseMatrix stack_rows(const std::vector<std::vector<double>>& rows, std::size_t dim) {
  DenseMatrix m(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return m;
}

inline Dataset load_jsonl(std::istream& in) {
  std::vector<std::vector<double>> vecs, a1s, a2s;
  std::vector<int> labels;
  std::vector<std::string> ids, texts;
  std::size_t n_aug = 0, n_labels = 0, n_texts = 0;
  std::optional<std::size_t> dim;
  std::string line;
  std::size_t lineno = 0, records = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("vec")) {
      throw SchemaError("line " + std::to_string(lineno) + ": record lacks `vec`");
    }
    auto v = json_vector(rec["vec"], lineno, "vec");
    if (!dim) dim = v.size();
    if (v.size() != *dim) {
      throw DimensionError("line " + std::to_string(lineno) + ": `vec` has length " + std::to_string(v.size()) +
                           ", expected " + std::to_string(*dim));
    }
    const bool has1 = rec.contains("aug1"), has2 = rec.contains("aug2");
    if (has1 && has2) {
      auto a1 = json_vector(rec["aug1"], lineno, "aug1");
      auto a2 = json_vector(rec["aug2"], lineno, "aug2");
      if (a1.size() != *dim || a2.size() != *dim) {
        throw DimensionError("line " + std::to_string(lineno) + ": augmentation length differs from `vec`");
      }
      a1s.push_back(std::move(a1));
      a2s.push_back(std::move(a2));
      ++n_aug;
    } else if (has1 || has2) {
      throw SchemaError("line " + std::to_string(lineno) + ": record carries only one of aug1/aug2");
    }
    if (rec.contains("label") && !rec["label"].is_null()) {
      if (!rec["label"].is_number_integer()) throw SchemaError("line " + std::to_string(lineno) + ": label must be an integer");
      labels.push_back(rec["label"].get<int>());
      ++n_labels;
    }
    if (rec.contains("text") && rec["text"].is_string()) {
      texts.push_back(rec["text"].get<std::string>());
      ++n_texts;
    } else {
      texts.emplace_back();
    }
    if (rec.contains("id")) {
      ids.push_back(rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump());
    } else {
      ids.push_back(std::to_string(records));
    }
    vecs.push_back(std::move(v));
    ++records;
  }
  if (records == 0) throw SchemaError("dataset has no records");
  if (n_aug != 0 && n_aug != records) throw SchemaError("only some records carry aug1/aug2");
  if (n_labels != 0 && n_labels != records) throw SchemaError("only some records carry a label");

  Dataset ds;
  ds.vectors = stack_rows(vecs, *dim);
  if (n_aug == records) {
    ds.aug1 = stack_rows(a1s, *dim);
    ds.aug2 = stack_rows(a2s, *dim);
  }
  if (n_labels == records) ds.labels = std::move(labels);
  ds.ids = std::move(ids);
  if (n_texts > 0) ds.texts = std::move(texts);
  ds.validate();
  return ds;
}

inline Dataset load_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
    throw SchemaError("csv header must be id,label,v0..v{D-1}");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[d + 2] != "v" + std::to_string(d)) throw SchemaError("csv header column " + std::to_string(d + 2) + " must be v" + std::to_string(d));
  }
  std::vector<std::vector<double>> vecs;
  std::vector<int> labels;
  std::vector<std::string> ids;
  std::size_t n_labels = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw DimensionError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
    }
    ids.emplace_back(fields[0]);
    if (!fields[1].empty()) {
      int l = 0;
      const auto res = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), l);
      if (res.ec != std::errc{} || res.ptr != fields[1].data() + fields[1].size()) {
        throw ParseError("line " + std::to_string(lineno) + ": bad label");
      }
      labels.push_back(l);
      ++n_labels;
    }
    std::vector<double> v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = parse_double(fields[d + 2], lineno);
    vecs.push_back(std::move(v));
  }
  if (vecs.empty()) throw SchemaError("dataset has no records");
  if (n_labels != 0 && n_labels != vecs.size()) throw SchemaError("only some rows carry a label");
  Dataset ds;
  ds.vectors = stack_rows(vecs, dim);
  if (n_labels == vecs.size()) ds.labels = std::move(labels);
  ds.ids = std::move(ids);
  ds.validate();
  return ds;
}

inline nlohmann::json row_json(const DenseMatrix& m, std::size_t r) {
  const auto row = m.row(r);
  return nlohmann::json(std::vector<double>(row.begin(), row.end()));
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset '" + path.string() + "'");
  return format == DatasetFormat::Csv ? detail::load_csv(in) : detail::load_jsonl(in);
}

inline Dataset load_dataset(const std::filesystem::path& path) { return load_dataset(path, format_from_path(path)); }

inline Dataset parse_dataset(std::string_view text, DatasetFormat format) {
  std::istringstream in{std::string(text)};
  return format == DatasetFormat::Csv ? detail::load_csv(in) : detail::load_jsonl(in);
}

// CSV carries only id, label and vec; augmentations and text are dropped.
inline void write_dataset(std::ostream& out, const Dataset& ds, DatasetFormat format) {
  ds.validate();
  if (format == DatasetFormat::Csv) {
    out << "id,label";
    for (std::size_t d = 0; d < ds.dim(); ++d) out << ",v" << d;
    out << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
      out << ds.ids[i] << ',';
      if (ds.labels) out << (*ds.labels)[i];
      for (double v : ds.vectors.row(i)) out << ',' << detail::format_double(v);
      out << '\n';
    }
    return;
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    nlohmann::json rec;
    rec["id"] = ds.ids[i];
    rec["vec"] = detail::row_json(ds.vectors, i);
    if (ds.has_augmentations()) {
      rec["aug1"] = detail::row_json(*ds.aug1, i);
      rec["aug2"] = detail::row_json(*ds.aug2, i);
    }
    if (ds.labels) rec["label"] = (*ds.labels)[i];
    if (ds.has_texts()) rec["text"] = ds.texts[i];
    out << rec.dump() << '\n';
  }
}

inline void write_dataset(const std::filesystem::path& path, const Dataset& ds, DatasetFormat format) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset '" + path.string() + "'");
  write_dataset(out, ds, format);
}

}  // namespace sccl
