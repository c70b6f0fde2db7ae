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
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gwi/dataio.hpp"
#include "gwi/models.hpp"

namespace gwi {

// Model checkpoint: everything needed to rebuild the trained model and its
// evaluation context. Binary, little-endian, 64-bit floats written raw so the
// save/load round trip is bit-exact. Layout (version 1):
//   magic "GWICKPT1", u32 version, u8 task, u8 variant,
//   u64 run_seed, u64 split_seed, 3 x f64 split fractions,
//   f64 y_mean, f64 y_std, str data_id, str target_spec,
//   u64 toy_n, f64 toy_noise,
//   u32 D, u32 J (0 for regression), u32 M,
//   prior (f64 log_sigma_f, D x f64 log_alpha), f64 noise2,
//   Z (M x D), mean parameters (beta | MLP layers), L factors (1 or J),
//   calibration vector.
struct Checkpoint {
  TaskKind task = TaskKind::kRegression;
  MeanVariant variant = MeanVariant::kMlp;
  std::uint64_t run_seed = 0;
  std::uint64_t split_seed = 0;
  std::array<double, 3> fractions{0.8, 0.1, 0.1};
  double y_mean = 0.0;
  double y_std = 1.0;
  std::string data_id;      // "csv:<path>" or a generator name
  std::string target_spec;  // "last", an index, or a column name
  std::uint64_t toy_n = 0;
  double toy_noise = 0.0;
  int num_classes = 0;  // 0 for regression

  ArdParams prior;
  double noise2 = 1.0;
  Matrix z;
  Vector beta;
  MlpParams mlp;
  std::vector<Matrix> lowers;
  Vector alpha;  // tempering factors, length 1 or J
};

namespace detail {

inline void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  write_bytes(out, &value, sizeof(T));
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

inline void write_vector(std::ostream& out, const Vector& v) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
  write_bytes(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  write_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

inline void read_bytes(std::istream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!in) throw IncompatibleCheckpoint("checkpoint: truncated file");
}

template <typename T>
T read_pod(std::istream& in) {
  T value;
  read_bytes(in, &value, sizeof(T));
  return value;
}

inline std::string read_string(std::istream& in) {
  const auto n = read_pod<std::uint32_t>(in);
  std::string s(n, '\0');
  read_bytes(in, s.data(), n);
  return s;
}

inline Vector read_vector(std::istream& in) {
  const auto n = read_pod<std::uint32_t>(in);
  Vector v(n);
  read_bytes(in, v.data(), sizeof(double) * n);
  return v;
}

inline Matrix read_matrix(std::istream& in) {
  const auto rows = read_pod<std::uint32_t>(in);
  const auto cols = read_pod<std::uint32_t>(in);
  Matrix m(rows, cols);
  read_bytes(in, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  return m;
}

inline constexpr char kCheckpointMagic[9] = "GWICKPT1";

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint '" + path + "'");
  detail::write_bytes(out, detail::kCheckpointMagic, 8);
  detail::write_pod<std::uint32_t>(out, 1);
  detail::write_pod<std::uint8_t>(out, ckpt.task == TaskKind::kRegression ? 0 : 1);
  detail::write_pod<std::uint8_t>(out, ckpt.variant == MeanVariant::kSvgp ? 0 : 1);
  detail::write_pod<std::uint64_t>(out, ckpt.run_seed);
  detail::write_pod<std::uint64_t>(out, ckpt.split_seed);
  for (double f : ckpt.fractions) detail::write_pod<double>(out, f);
  detail::write_pod<double>(out, ckpt.y_mean);
  detail::write_pod<double>(out, ckpt.y_std);
  detail::write_string(out, ckpt.data_id);
  detail::write_string(out, ckpt.target_spec);
  detail::write_pod<std::uint64_t>(out, ckpt.toy_n);
  detail::write_pod<double>(out, ckpt.toy_noise);
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.z.cols()));
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.num_classes));
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.z.rows()));
  detail::write_pod<double>(out, ckpt.prior.log_sigma_f);
  detail::write_vector(out, ckpt.prior.log_alpha);
  detail::write_pod<double>(out, ckpt.noise2);
  detail::write_matrix(out, ckpt.z);
  if (ckpt.variant == MeanVariant::kSvgp) {
    detail::write_vector(out, ckpt.beta);
  } else {
    detail::write_pod<std::uint32_t>(out,
                                     static_cast<std::uint32_t>(ckpt.mlp.num_layers()));
    for (Index l = 0; l < ckpt.mlp.num_layers(); ++l) {
      detail::write_matrix(out, ckpt.mlp.weights[l]);
      detail::write_vector(out, ckpt.mlp.biases[l]);
    }
  }
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.lowers.size()));
  for (const Matrix& lower : ckpt.lowers) detail::write_matrix(out, lower);
  detail::write_vector(out, ckpt.alpha);
  if (!out) throw ParseError("checkpoint write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IncompatibleCheckpoint("cannot open checkpoint '" + path + "'");
  char magic[8];
  detail::read_bytes(in, magic, 8);
  if (std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw IncompatibleCheckpoint("'" + path + "' is not a checkpoint file");
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != 1)
    throw IncompatibleCheckpoint("unsupported checkpoint version " +
                                 std::to_string(version));
  Checkpoint ckpt;
  ckpt.task = detail::read_pod<std::uint8_t>(in) == 0 ? TaskKind::kRegression
                                                      : TaskKind::kClassification;
  ckpt.variant =
      detail::read_pod<std::uint8_t>(in) == 0 ? MeanVariant::kSvgp : MeanVariant::kMlp;
  ckpt.run_seed = detail::read_pod<std::uint64_t>(in);
  ckpt.split_seed = detail::read_pod<std::uint64_t>(in);
  for (double& f : ckpt.fractions) f = detail::read_pod<double>(in);
  ckpt.y_mean = detail::read_pod<double>(in);
  ckpt.y_std = detail::read_pod<double>(in);
  ckpt.data_id = detail::read_string(in);
  ckpt.target_spec = detail::read_string(in);
  ckpt.toy_n = detail::read_pod<std::uint64_t>(in);
  ckpt.toy_noise = detail::read_pod<double>(in);
  (void)detail::read_pod<std::uint32_t>(in);  // D, implied by the stored matrices
  ckpt.num_classes = static_cast<int>(detail::read_pod<std::uint32_t>(in));
  (void)detail::read_pod<std::uint32_t>(in);  // M, implied as well
  ckpt.prior.log_sigma_f = detail::read_pod<double>(in);
  ckpt.prior.log_alpha = detail::read_vector(in);
  ckpt.noise2 = detail::read_pod<double>(in);
  ckpt.z = detail::read_matrix(in);
  if (ckpt.variant == MeanVariant::kSvgp) {
    ckpt.beta = detail::read_vector(in);
  } else {
    const auto layers = detail::read_pod<std::uint32_t>(in);
    ckpt.mlp.weights.resize(layers);
    ckpt.mlp.biases.resize(layers);
    for (std::uint32_t l = 0; l < layers; ++l) {
      ckpt.mlp.weights[l] = detail::read_matrix(in);
      ckpt.mlp.biases[l] = detail::read_vector(in);
    }
  }
  const auto n_lowers = detail::read_pod<std::uint32_t>(in);
  ckpt.lowers.resize(n_lowers);
  for (std::uint32_t l = 0; l < n_lowers; ++l)
    ckpt.lowers[l] = detail::read_matrix(in);
  ckpt.alpha = detail::read_vector(in);
  return ckpt;
}

// ---------------------------------------------------------------------------
// Model <-> checkpoint conversion
// ---------------------------------------------------------------------------

inline Checkpoint make_checkpoint(const RegressionModel& model) {
  Checkpoint ckpt;
  ckpt.task = TaskKind::kRegression;
  ckpt.variant = model.variant();
  ckpt.prior = model.kernel().prior().params();
  ckpt.noise2 = model.noise2();
  ckpt.z = model.kernel().inducing();
  ckpt.lowers = {model.kernel().lower()};
  if (model.variant() == MeanVariant::kSvgp)
    ckpt.beta = model.beta();
  else
    ckpt.mlp = model.mlp();
  ckpt.alpha = Vector::Ones(1);
  return ckpt;
}

inline Checkpoint make_checkpoint(const ClassificationModel& model) {
  Checkpoint ckpt;
  ckpt.task = TaskKind::kClassification;
  ckpt.variant = MeanVariant::kMlp;
  ckpt.num_classes = static_cast<int>(model.num_classes());
  ckpt.prior = model.prior().params();
  ckpt.z = model.inducing();
  for (Index j = 0; j < model.num_classes(); ++j)
    ckpt.lowers.push_back(model.kernel(j).lower());
  ckpt.mlp = model.mlp();
  ckpt.alpha = Vector::Ones(model.num_classes());
  return ckpt;
}

inline RegressionModel to_regression_model(const Checkpoint& ckpt) {
  require(ckpt.task == TaskKind::kRegression, "checkpoint is not a regression model");
  require(ckpt.lowers.size() == 1, "regression checkpoint needs exactly one L");
  if (ckpt.variant == MeanVariant::kSvgp)
    return RegressionModel(ckpt.prior, ckpt.noise2, ckpt.z, ckpt.lowers[0], ckpt.beta,
                           /*train_inducing=*/true);
  return RegressionModel(ckpt.prior, ckpt.noise2, ckpt.z, ckpt.lowers[0], ckpt.mlp);
}

inline ClassificationModel to_classification_model(const Checkpoint& ckpt) {
  require(ckpt.task == TaskKind::kClassification,
          "checkpoint is not a classification model");
  return ClassificationModel(ckpt.prior, ckpt.z, ckpt.lowers, ckpt.mlp);
}

}  // namespace gwi
