// Copyright 2026 The cosine-audit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Independent reference computations for tests. Nothing here calls into
// the library's linear algebra paths.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "cosaudit/matrix_core.hpp"

namespace cosaudit::testing {

// Plain triple loop.
inline DataMatrix naive_matmul(const DataMatrix& a, const DataMatrix& b) {
  DataMatrix c = DataMatrix::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Index t = 0; t < a.cols(); ++t) acc += a(i, t) * b(t, j);
      c(i, j) = acc;
    }
  return c;
}

inline DataMatrix naive_transpose(const DataMatrix& a) {
  DataMatrix t(a.cols(), a.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// Scalar cosine of row i of a and row j of b.
inline double scalar_cosine(const DataMatrix& a, Index i, const DataMatrix& b, Index j) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (Index t = 0; t < a.cols(); ++t) {
    dot += a(i, t) * b(j, t);
    na += a(i, t) * a(i, t);
    nb += b(j, t) * b(j, t);
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline DataMatrix brute_force_cosine(const DataMatrix& a, const DataMatrix& b) {
  DataMatrix c(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) c(i, j) = scalar_cosine(a, i, b, j);
  return c;
}

// Test inputs drawn from a generator independent of cosaudit::Rng.
inline DataMatrix std_uniform_matrix(Index rows, Index cols, std::uint32_t seed,
                                     double lo = 0.0, double hi = 1.0) {
  std::mt19937 gen(seed);
  DataMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      m(i, j) = lo + (hi - lo) * (static_cast<double>(gen()) / 4294967296.0);
  return m;
}

inline double max_abs_diff(const DataMatrix& a, const DataMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("cosaudit_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace cosaudit::testing
