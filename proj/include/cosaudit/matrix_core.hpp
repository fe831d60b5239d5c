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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace cosaudit {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;

// Dense real matrix: interactions X (n x p) or any factor.
using DataMatrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes, ranks and parameter ranges.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A row whose Euclidean norm vanishes: a user or item with no signal.
class ZeroRowError : public Error {
 public:
  explicit ZeroRowError(Index index)
      : Error("row " + std::to_string(index) + " has zero norm"),
        index_(index) {}
  Index index() const { return index_; }

 private:
  Index index_;
};

inline constexpr double kZeroNormThreshold = 1e-300;

inline void require_finite(const DataMatrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidArgument(std::string(what) + " contains non-finite entries");
  }
}

inline void require_nonempty(const DataMatrix& m, const char* what) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw InvalidArgument(std::string(what) + " must have at least one row and column");
  }
}

// Truncated SVD M ~= left * diag(singular_values) * right^T.
struct SvdFactors {
  DataMatrix left;         // n x r, orthonormal columns
  Vector singular_values;  // descending, nonnegative
  DataMatrix right;        // p x r, orthonormal columns

  Index rank() const { return singular_values.size(); }

  // Leading r triples; r must not exceed rank().
  SvdFactors truncated(Index r) const {
    if (r < 1 || r > rank()) {
      throw InvalidArgument("truncation rank " + std::to_string(r) +
                            " outside [1, " + std::to_string(rank()) + "]");
    }
    return {left.leftCols(r), singular_values.head(r), right.leftCols(r)};
  }

  // Singular values at or below this are treated as exact zeros.
  double zero_tolerance() const {
    if (rank() == 0) return 0.0;
    const double dim = static_cast<double>(std::max(left.rows(), right.rows()));
    return singular_values(0) * dim * std::numeric_limits<double>::epsilon();
  }

  DataMatrix reconstruct() const {
    return left * singular_values.asDiagonal() * right.transpose();
  }
};

namespace detail {

// Full thin SVD of a matrix with rows >= cols, via QR preconditioning so
// the bidiagonal solver only ever sees a square cols x cols factor.
inline SvdFactors tall_svd(const DataMatrix& m, Index r) {
  const Index p = m.cols();
  Eigen::HouseholderQR<DataMatrix> qr(m);
  DataMatrix upper = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<DataMatrix> core(upper, Eigen::ComputeFullU | Eigen::ComputeFullV);

  DataMatrix left = DataMatrix::Zero(m.rows(), r);
  left.topRows(p) = core.matrixU().leftCols(r);
  left.applyOnTheLeft(qr.householderQ());
  return {std::move(left), core.singularValues().head(r), core.matrixV().leftCols(r)};
}

}  // namespace detail

// Rank-r truncated SVD. Each singular pair is sign-normalized so that the
// largest-magnitude entry of its right singular vector is positive.
inline SvdFactors svd(const DataMatrix& m, Index r) {
  require_nonempty(m, "svd input");
  require_finite(m, "svd input");
  const Index max_rank = std::min(m.rows(), m.cols());
  if (r < 1 || r > max_rank) {
    throw InvalidArgument("svd rank " + std::to_string(r) + " outside [1, " +
                          std::to_string(max_rank) + "]");
  }

  SvdFactors f;
  if (m.rows() >= m.cols()) {
    f = detail::tall_svd(m, r);
  } else {
    SvdFactors t = detail::tall_svd(m.transpose(), r);
    f = {std::move(t.right), std::move(t.singular_values), std::move(t.left)};
  }

  for (Index j = 0; j < r; ++j) {
    Index arg = 0;
    f.right.col(j).cwiseAbs().maxCoeff(&arg);
    if (f.right(arg, j) < 0.0) {
      f.right.col(j) *= -1.0;
      f.left.col(j) *= -1.0;
    }
  }
  return f;
}

// Diagonal of the row-normalization matrix: scale(i) = 1 / ||row_i||.
struct RowNormalizer {
  Vector scale;
};

inline std::pair<DataMatrix, RowNormalizer> normalize_rows(const DataMatrix& m) {
  RowNormalizer normalizer{Vector(m.rows())};
  for (Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (!(norm >= kZeroNormThreshold)) throw ZeroRowError(i);
    normalizer.scale(i) = 1.0 / norm;
  }
  DataMatrix out = normalizer.scale.asDiagonal() * m;
  return {std::move(out), std::move(normalizer)};
}

// Entry (i, j) is the cosine between row i of m1 and row j of m2.
inline DataMatrix cosine_of_rows(const DataMatrix& m1, const DataMatrix& m2) {
  if (m1.cols() != m2.cols()) {
    throw InvalidArgument("cosine_of_rows: column counts differ (" +
                          std::to_string(m1.cols()) + " vs " +
                          std::to_string(m2.cols()) + ")");
  }
  const DataMatrix n1 = normalize_rows(m1).first;
  if (&m1 == &m2) {
    DataMatrix out = n1 * n1.transpose();
    out.diagonal().setOnes();
    return out;
  }
  const DataMatrix n2 = normalize_rows(m2).first;
  return n1 * n2.transpose();
}

inline DataMatrix cosine_of_columns(const DataMatrix& m) {
  const DataMatrix t = m.transpose();
  return cosine_of_rows(t, t);
}

}  // namespace cosaudit
