#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "camo/core.hpp"
#include "camo/rng.hpp"

namespace camo {

enum class FileFormat { Csv, Jsonl };

/// Picks the format from the file extension (.jsonl / .ndjson, otherwise CSV).
inline FileFormat format_from_path(std::string_view path) {
  auto ends_with = [&](std::string_view s) {
    return path.size() >= s.size() && path.substr(path.size() - s.size()) == s;
  };
  return (ends_with(".jsonl") || ends_with(".ndjson")) ? FileFormat::Jsonl : FileFormat::Csv;
}

struct LoadOptions {
  /// Class name -> sign. Labels not present here are rejected.
  std::map<std::string, int> label_map{{"1", +1}, {"+1", +1}, {"-1", -1}};
  /// Append a constant-1 feature (bias column) to every instance.
  bool append_bias = false;
  Role role = Role::TrainingSet;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

inline int map_label(const LoadOptions& opts, const std::string& raw, std::size_t row) {
  const auto it = opts.label_map.find(raw);
  if (it == opts.label_map.end())
    throw Error("row " + std::to_string(row) + ": unknown label value '" + raw + "'");
  if (it->second != 1 && it->second != -1) throw Error("label map must send classes to -1 or +1");
  return it->second;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Dataset assemble(std::vector<std::vector<double>>& rows, std::vector<int>& labels, const LoadOptions& opts) {
  if (rows.empty()) throw Error("empty dataset");
  const auto d = static_cast<Eigen::Index>(rows.front().size()) + (opts.append_bias ? 1 : 0);
  Matrix x(static_cast<Eigen::Index>(rows.size()), d);
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(r, static_cast<Eigen::Index>(j)) = rows[i][j];
    if (opts.append_bias) x(r, d - 1) = 1.0;
    y[r] = labels[i];
  }
  return Dataset(std::move(x), std::move(y), opts.role);
}

inline Dataset parse_csv(std::istream& in, const LoadOptions& opts) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t data_row = 0;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_commas(line);
    if (first_line) {
      first_line = false;
      if (fields.back() == "label") continue;
    }
    ++data_row;
    if (fields.size() < 2)
      throw Error("row " + std::to_string(data_row) + ": expected at least one feature and a label");
    std::vector<double> feats(fields.size() - 1);
    for (std::size_t j = 0; j + 1 < fields.size(); ++j) {
      if (!parse_double(fields[j], feats[j]))
        throw Error("row " + std::to_string(data_row) + ": non-numeric feature '" + std::string(fields[j]) + "'");
    }
    if (!rows.empty() && feats.size() != rows.front().size())
      throw Error("row " + std::to_string(data_row) + ": dimension " + std::to_string(feats.size()) +
                  " does not match " + std::to_string(rows.front().size()));
    labels.push_back(map_label(opts, std::string(fields.back()), data_row));
    rows.push_back(std::move(feats));
  }
  return assemble(rows, labels, opts);
}

inline Dataset parse_jsonl(std::istream& in, const LoadOptions& opts) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_row;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("row " + std::to_string(data_row) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("features") || !obj.contains("label") || !obj["features"].is_array())
      throw Error("row " + std::to_string(data_row) + ": expected object with 'features' array and 'label'");
    std::vector<double> feats;
    for (const auto& v : obj["features"]) {
      if (!v.is_number()) throw Error("row " + std::to_string(data_row) + ": non-numeric feature");
      feats.push_back(v.get<double>());
    }
    if (feats.empty()) throw Error("row " + std::to_string(data_row) + ": no features");
    if (!rows.empty() && feats.size() != rows.front().size())
      throw Error("row " + std::to_string(data_row) + ": dimension " + std::to_string(feats.size()) +
                  " does not match " + std::to_string(rows.front().size()));
    const auto& lab = obj["label"];
    std::string raw;
    if (lab.is_string()) {
      raw = lab.get<std::string>();
    } else if (lab.is_number_integer()) {
      raw = std::to_string(lab.get<long long>());
    } else {
      throw Error("row " + std::to_string(data_row) + ": label must be a string or integer");
    }
    labels.push_back(map_label(opts, raw, data_row));
    rows.push_back(std::move(feats));
  }
  return assemble(rows, labels, opts);
}

}  // namespace detail

inline Dataset read_dataset(std::istream& in, FileFormat format, const LoadOptions& opts = {}) {
  return format == FileFormat::Csv ? detail::parse_csv(in, opts) : detail::parse_jsonl(in, opts);
}

/// Loads a dataset; instance order follows file order.
inline Dataset load_dataset(const std::string& path, FileFormat format, const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file '" + path + "'");
  return read_dataset(in, format, opts);
}

inline Dataset load_dataset(const std::string& path, const LoadOptions& opts = {}) {
  return load_dataset(path, format_from_path(path), opts);
}

inline void write_dataset(std::ostream& out, const Dataset& data, FileFormat format) {
  const auto d = data.dimension();
  if (format == FileFormat::Csv) {
    for (Eigen::Index j = 0; j < d; ++j) out << 'f' << j << ',';
    out << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) out << detail::format_double(data.row(i)[j]) << ',';
      out << static_cast<int>(data.label(i)) << '\n';
    }
    return;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << "{\"features\":[";
    for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << detail::format_double(data.row(i)[j]);
    out << "],\"label\":" << static_cast<int>(data.label(i)) << "}\n";
  }
}

inline void save_dataset(const std::string& path, const Dataset& data, FileFormat format) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file '" + path + "'");
  write_dataset(out, data, format);
}

inline void save_dataset(const std::string& path, const Dataset& data) {
  save_dataset(path, data, format_from_path(path));
}

/// Shuffled partition into sizes ceil(fraction * n) and n - ceil(fraction * n).
/// The first part keeps the input role; the second is tagged test_set.
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double fraction, RngState& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("split_train_test: fraction must lie in (0,1)");
  if (data.empty()) throw Error("split_train_test: empty dataset");
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  const auto first = std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  if (first == n) std::clog << "warning: split_train_test leaves the second part empty (n=" << n << ")\n";
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(first), order.end());
  return {data.subset(a, data.role()), data.subset(b, Role::TestSet)};
}

/// Uniform m-subset of {0..n-1} (partial Fisher-Yates).
inline CandidateSet sample_subset(std::size_t n, std::size_t m, RngState& rng) {
  if (m > n) throw Error("sample_subset: m=" + std::to_string(m) + " exceeds pool size " + std::to_string(n));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.uniform_index(n - i)]);
  idx.resize(m);
  return CandidateSet(std::move(idx));
}

inline CandidateSet sample_subset(const Dataset& pool, std::size_t m, RngState& rng) {
  return sample_subset(pool.size(), m, rng);
}

}  // namespace camo
