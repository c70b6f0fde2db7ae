// Copyright 2026 The GWI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gwi/numerics.hpp"

namespace gwi {

enum class TaskKind { kRegression, kClassification };

struct Dataset {
  TaskKind task = TaskKind::kRegression;
  Matrix x;                  // N x D, inputs are never rescaled
  Vector y_raw;              // original targets (regression)
  Vector y;                  // standardized targets, filled by split_standardize
  std::vector<int> labels;   // 0-based class labels (classification)
  int num_classes = 0;
  double y_mean = 0.0;
  double y_std = 1.0;        // sigma_hat_train
  std::vector<Index> train_idx, val_idx, test_idx;
  std::uint64_t split_seed = 0;
  Index skipped_rows = 0;    // rows dropped for missing values at load time

  Index size() const { return x.rows(); }
  Index dim() const { return x.cols(); }

  Matrix rows(const std::vector<Index>& idx) const {
    Matrix out(static_cast<Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = x.row(idx[i]);
    return out;
  }
  Vector targets(const std::vector<Index>& idx) const {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = y(idx[i]);
    return out;
  }
  std::vector<int> class_labels(const std::vector<Index>& idx) const {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      out[i] = labels[static_cast<std::size_t>(idx[i])];
    return out;
  }
};

struct Batch {
  std::vector<Index> indices;  // into the dataset rows
  Matrix x;
  Vector y;                 // regression targets (standardized)
  std::vector<int> labels;  // classification labels
};

// ---------------------------------------------------------------------------
// CSV loading
// ---------------------------------------------------------------------------

// Which column holds the target: the last one, a 0-based index, or a header name.
struct TargetSpec {
  enum class Kind { kLast, kIndex, kName } kind = Kind::kLast;
  Index index = 0;
  std::string name;

  static TargetSpec last() { return {}; }
  static TargetSpec at(Index i) { return {Kind::kIndex, i, {}}; }
  static TargetSpec named(std::string n) { return {Kind::kName, 0, std::move(n)}; }

  static TargetSpec parse(const std::string& text) {
    if (text.empty() || text == "last") return last();
    Index value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc() && ptr == text.data() + text.size()) return at(value);
    return named(text);
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
      field.pop_back();
    std::size_t start = 0;
    while (start < field.size() && field[start] == ' ') ++start;
    fields.push_back(field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline std::optional<double> parse_double(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) return std::nullopt;
  return value;
}

}  // namespace detail

// Comma-separated numeric file, optional header (detected by a non-numeric
// first row). Rows with empty cells are skipped and counted; any other
// non-numeric cell is an error naming the row and column. Classification
// labels are 1-based in files and 0-based internally.
inline Dataset load_csv(const std::string& path, const TargetSpec& target,
                        TaskKind task) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (!blank) lines.push_back(line);
  }
  if (lines.empty()) throw EmptyFile("'" + path + "' has no data rows");

  std::vector<std::string> header;
  std::size_t first_data = 0;
  {
    const auto fields = detail::split_csv_line(lines[0]);
    bool numeric = true;
    for (const auto& f : fields)
      if (!detail::parse_double(f)) numeric = false;
    if (!numeric) {
      header = fields;
      first_data = 1;
    }
  }
  if (first_data >= lines.size()) throw EmptyFile("'" + path + "' has a header only");

  const Index num_cols =
      static_cast<Index>(detail::split_csv_line(lines[first_data]).size());
  require(num_cols >= 2, "load_csv: need at least one feature and one target column");

  Index target_col = num_cols - 1;
  switch (target.kind) {
    case TargetSpec::Kind::kLast:
      break;
    case TargetSpec::Kind::kIndex:
      require(target.index >= 0 && target.index < num_cols,
              "load_csv: target column index out of range");
      target_col = target.index;
      break;
    case TargetSpec::Kind::kName: {
      if (header.empty())
        throw ParseError("load_csv: named target '" + target.name +
                         "' needs a header row");
      bool found = false;
      for (Index c = 0; c < static_cast<Index>(header.size()); ++c)
        if (header[static_cast<std::size_t>(c)] == target.name) {
          target_col = c;
          found = true;
        }
      if (!found)
        throw ParseError("load_csv: target column '" + target.name + "' not found");
      break;
    }
  }

  std::vector<double> targets;
  std::vector<double> features;
  Index skipped = 0;
  Index rows_kept = 0;
  for (std::size_t li = first_data; li < lines.size(); ++li) {
    const auto fields = detail::split_csv_line(lines[li]);
    if (static_cast<Index>(fields.size()) != num_cols) {
      std::ostringstream os;
      os << "load_csv: row " << li + 1 << " has " << fields.size()
         << " fields, expected " << num_cols;
      throw ParseError(os.str());
    }
    bool missing = false;
    for (const auto& f : fields)
      if (f.empty()) missing = true;
    if (missing) {
      ++skipped;
      continue;
    }
    std::vector<double> row(static_cast<std::size_t>(num_cols));
    for (Index c = 0; c < num_cols; ++c) {
      const auto value = detail::parse_double(fields[static_cast<std::size_t>(c)]);
      if (!value) {
        std::ostringstream os;
        os << "load_csv: non-numeric value '" << fields[static_cast<std::size_t>(c)]
           << "' at row " << li + 1 << ", column " << c + 1;
        throw ParseError(os.str());
      }
      row[static_cast<std::size_t>(c)] = *value;
    }
    for (Index c = 0; c < num_cols; ++c)
      if (c != target_col) features.push_back(row[static_cast<std::size_t>(c)]);
    targets.push_back(row[static_cast<std::size_t>(target_col)]);
    ++rows_kept;
  }
  if (rows_kept == 0) throw EmptyFile("'" + path + "' has no usable rows");
  if (skipped > 0) {
    std::ostringstream os;
    os << "load_csv: skipped " << skipped << " rows with missing values in '"
       << path << "'";
    diag::warn(os.str());
  }

  Dataset data;
  data.task = task;
  data.skipped_rows = skipped;
  const Index dim = num_cols - 1;
  data.x = Eigen::Map<const Matrix>(features.data(), dim, rows_kept).transpose();
  data.y_raw = Eigen::Map<const Vector>(targets.data(), rows_kept);
  if (task == TaskKind::kClassification) {
    data.labels.resize(static_cast<std::size_t>(rows_kept));
    int max_label = 0;
    for (Index i = 0; i < rows_kept; ++i) {
      const double raw = data.y_raw(i);
      const int label = static_cast<int>(std::llround(raw)) - 1;
      if (std::abs(raw - std::llround(raw)) > 1e-9 || label < 0)
        throw InvalidLabels("load_csv: labels must be integers starting at 1");
      data.labels[static_cast<std::size_t>(i)] = label;
      max_label = std::max(max_label, label);
    }
    data.num_classes = max_label + 1;
  }
  return data;
}

// ---------------------------------------------------------------------------
// Splitting and target standardization
// ---------------------------------------------------------------------------

// Shuffles rows with the seed and carves train/val/test; regression targets are
// standardized by the training-split mean and standard deviation, inputs are
// left unaltered.
inline Dataset split_standardize(Dataset data, const std::array<double, 3>& fractions,
                                 std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  require(std::abs(total - 1.0) <= 1e-9, "split_standardize: fractions must sum to 1");
  const Index n = data.size();
  Index n_train = static_cast<Index>(std::llround(fractions[0] * static_cast<double>(n)));
  Index n_val = static_cast<Index>(std::llround(fractions[1] * static_cast<double>(n)));
  n_train = std::max<Index>(n_train, 1);
  n_val = std::max<Index>(n_val, 1);
  const Index n_test = n - n_train - n_val;
  if (n_test < 1) throw DegenerateSplit("split_standardize: empty test split");

  Rng rng(seed);
  const std::vector<Index> perm = rng.permutation(n);
  data.train_idx.assign(perm.begin(), perm.begin() + n_train);
  data.val_idx.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  data.test_idx.assign(perm.begin() + n_train + n_val, perm.end());
  data.split_seed = seed;

  if (data.task == TaskKind::kRegression) {
    double mean = 0.0;
    for (Index i : data.train_idx) mean += data.y_raw(i);
    mean /= static_cast<double>(n_train);
    double var = 0.0;
    for (Index i : data.train_idx) {
      const double d = data.y_raw(i) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n_train);
    const double std_dev = std::sqrt(var);
    if (!(std_dev > 0.0))
      throw DegenerateSplit("split_standardize: constant training targets");
    data.y_mean = mean;
    data.y_std = std_dev;
    data.y = (data.y_raw.array() - mean) / std_dev;
  } else {
    data.y = data.y_raw;
  }
  return data;
}

// ---------------------------------------------------------------------------
// Synthetic datasets
// ---------------------------------------------------------------------------

enum class Toy1dKind { kA, kB, kC };

inline double toy_1d_value(Toy1dKind kind, double x) {
  switch (kind) {
    case Toy1dKind::kA:
      return std::sin(M_PI * x);
    case Toy1dKind::kB:
      return x * std::cos(2.0 * x);
    case Toy1dKind::kC:
      return std::tanh(2.0 * x) + 0.5 * std::sin(3.0 * x);
  }
  return 0.0;
}

// N equidistant inputs on [-2, 2], chosen test function plus Gaussian noise.
inline Dataset make_toy_1d(Toy1dKind kind, Index n, double noise_std,
                           std::uint64_t seed) {
  require(n >= 2, "make_toy_1d: need N >= 2");
  require(noise_std >= 0.0, "make_toy_1d: noise std must be >= 0");
  Dataset data;
  data.task = TaskKind::kRegression;
  data.x = Matrix(n, 1);
  data.y_raw = Vector(n);
  Rng rng(seed);
  for (Index i = 0; i < n; ++i) {
    const double x = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    data.x(i, 0) = x;
    data.y_raw(i) = toy_1d_value(kind, x) + noise_std * rng.normal();
  }
  return data;
}

// Two well-separated 2D input clusters; the straight segment between the
// cluster centers is exposed via toy_2d_segment for in-between evaluation.
inline constexpr double kToy2dSeparation = 6.0;  // center distance, input units

inline Dataset make_toy_2d_clusters(std::uint64_t seed, Index per_cluster = 50,
                                    double cluster_std = 0.25,
                                    double noise_std = 0.1) {
  Dataset data;
  data.task = TaskKind::kRegression;
  const Index n = 2 * per_cluster;
  data.x = Matrix(n, 2);
  data.y_raw = Vector(n);
  Rng rng(seed);
  const double half = 0.5 * kToy2dSeparation;
  for (Index i = 0; i < n; ++i) {
    const double cx = i < per_cluster ? -half : half;
    data.x(i, 0) = cx + cluster_std * rng.normal();
    data.x(i, 1) = cluster_std * rng.normal();
    data.y_raw(i) = std::sin(data.x(i, 0)) + 0.5 * std::cos(data.x(i, 1)) +
                    noise_std * rng.normal();
  }
  return data;
}

// Points on the between-cluster line, parameterized so lambda = -1 and 1 sit at
// the cluster centers and lambda = 0 at the midpoint.
inline std::pair<Vector, Matrix> toy_2d_segment(Index count, double lambda_max = 1.5) {
  require(count >= 2, "toy_2d_segment: need at least two points");
  Vector lambda(count);
  Matrix pts(count, 2);
  const double half = 0.5 * kToy2dSeparation;
  for (Index i = 0; i < count; ++i) {
    const double t =
        -lambda_max + 2.0 * lambda_max * static_cast<double>(i) / static_cast<double>(count - 1);
    lambda(i) = t;
    pts(i, 0) = t * half;
    pts(i, 1) = 0.0;
  }
  return {lambda, pts};
}

// Gaussian blobs for multiclass experiments: class centers on a circle.
inline Dataset make_blobs(Index num_classes, Index per_class, double radius,
                          double spread, std::uint64_t seed) {
  require(num_classes >= 2, "make_blobs: need at least two classes");
  require(per_class >= 1, "make_blobs: need at least one point per class");
  Dataset data;
  data.task = TaskKind::kClassification;
  data.num_classes = static_cast<int>(num_classes);
  const Index n = num_classes * per_class;
  data.x = Matrix(n, 2);
  data.y_raw = Vector(n);
  data.labels.resize(static_cast<std::size_t>(n));
  Rng rng(seed);
  for (Index j = 0; j < num_classes; ++j) {
    const double angle = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(num_classes);
    for (Index i = 0; i < per_class; ++i) {
      const Index row = j * per_class + i;
      data.x(row, 0) = radius * std::cos(angle) + spread * rng.normal();
      data.x(row, 1) = radius * std::sin(angle) + spread * rng.normal();
      data.labels[static_cast<std::size_t>(row)] = static_cast<int>(j);
      data.y_raw(row) = static_cast<double>(j + 1);
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

// One epoch of batches covering every training index exactly once, in an order
// reshuffled from the generator.
inline std::vector<std::vector<Index>> epoch_batches(const std::vector<Index>& train_idx,
                                                     Index batch_size, Rng& rng) {
  require(batch_size >= 1, "epoch_batches: batch size must be >= 1");
  require(!train_idx.empty(), "epoch_batches: empty training split");
  const Index n = static_cast<Index>(train_idx.size());
  const std::vector<Index> order = rng.permutation(n);
  std::vector<std::vector<Index>> batches;
  for (Index start = 0; start < n; start += batch_size) {
    const Index stop = std::min(start + batch_size, n);
    std::vector<Index> batch;
    batch.reserve(static_cast<std::size_t>(stop - start));
    for (Index i = start; i < stop; ++i)
      batch.push_back(train_idx[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

inline Batch gather_batch(const Dataset& data, const std::vector<Index>& indices) {
  Batch batch;
  batch.indices = indices;
  batch.x = data.rows(indices);
  if (data.task == TaskKind::kRegression) {
    batch.y = data.targets(indices);
  } else {
    batch.labels = data.class_labels(indices);
  }
  return batch;
}

// De-standardize a prediction back to the original target scale.
inline double destandardize(const Dataset& data, double standardized) {
  return data.y_mean + data.y_std * standardized;
}

}  // namespace gwi
