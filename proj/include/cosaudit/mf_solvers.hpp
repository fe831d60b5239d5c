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

// Closed-form solutions of the two regularized linear autoencoder
// objectives, for data X (n x p) and factors A, B (p x k):
//
//   ProductReg:  ||X - X A B^T||_F^2 + lambda ||A B^T||_F^2
//   SplitReg:    ||X - X A B^T||_F^2 + lambda (||X A||_F^2 + ||B||_F^2)
//
// plus the losses, their gradients and a gradient-descent oracle used to
// cross-check the closed forms on small instances.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cosaudit/matrix_core.hpp"
#include "cosaudit/random.hpp"

namespace cosaudit {

enum class Objective { kProductReg, kSplitReg };

inline const char* to_string(Objective o) {
  return o == Objective::kProductReg ? "ProductReg" : "SplitReg";
}

// Numeric tag used on the command line and in configs: 1 or 2.
inline int objective_number(Objective o) { return o == Objective::kProductReg ? 1 : 2; }

inline Objective objective_from_number(int number) {
  if (number == 1) return Objective::kProductReg;
  if (number == 2) return Objective::kSplitReg;
  throw InvalidArgument("objective must be 1 or 2, got " + std::to_string(number));
}

struct EmbeddingPair {
  DataMatrix A;  // p x k
  DataMatrix B;  // p x k
  double lambda = 0.0;
  Index rank = 0;
  Objective objective = Objective::kProductReg;
  bool scaled = false;
  Vector sigma;  // top-k singular values of the training data
  std::vector<std::string> warnings;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(double last_finite_loss)
      : Error("gradient descent diverged; last finite loss " +
              std::to_string(last_finite_loss)),
        last_finite_loss_(last_finite_loss) {}
  double last_finite_loss() const { return last_finite_loss_; }

 private:
  double last_finite_loss_;
};

namespace detail {

inline void check_solver_args(const DataMatrix& x, Index k, double lambda) {
  require_nonempty(x, "X");
  require_finite(x, "X");
  const Index max_rank = std::min(x.rows(), x.cols());
  if (k < 1 || k > max_rank) {
    throw InvalidArgument("rank " + std::to_string(k) + " outside [1, " +
                          std::to_string(max_rank) + "]");
  }
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw InvalidArgument("lambda must be finite and >= 0");
  }
}

inline void check_factor_shapes(const DataMatrix& x, const DataMatrix& a, const DataMatrix& b) {
  if (a.rows() != x.cols() || b.rows() != x.cols() || a.cols() != b.cols()) {
    throw InvalidArgument("factor shapes do not conform: X is " + std::to_string(x.rows()) +
                          "x" + std::to_string(x.cols()) + ", A is " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          ", B is " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
}

// Builds A = V diag(a_scale), B = V diag(b_scale), zeroing dimensions whose
// singular value is numerically zero.
template <typename AScale, typename BScale>
EmbeddingPair assemble_pair(const SvdFactors& f, Index k, double lambda, Objective objective,
                            AScale a_scale, BScale b_scale) {
  const SvdFactors t = f.truncated(k);
  const double tol = f.zero_tolerance();
  Vector a_diag(k), b_diag(k);
  Index positive = 0;
  for (Index i = 0; i < k; ++i) {
    const double s = t.singular_values(i);
    if (s > tol) {
      ++positive;
      a_diag(i) = a_scale(s);
      b_diag(i) = b_scale(s);
    } else {
      a_diag(i) = 0.0;
      b_diag(i) = 0.0;
    }
  }

  EmbeddingPair pair;
  pair.A = t.right * a_diag.asDiagonal();
  pair.B = t.right * b_diag.asDiagonal();
  pair.lambda = lambda;
  pair.rank = k;
  pair.objective = objective;
  pair.sigma = t.singular_values;
  if (positive < k) {
    pair.warnings.push_back("data has only " + std::to_string(positive) +
                            " nonzero singular values; " + std::to_string(k - positive) +
                            " embedding dimensions padded with zeros");
  }
  return pair;
}

}  // namespace detail

// A = B = V_k diag((1 + lambda / sigma_i^2)^(-1/2)).
inline EmbeddingPair solve_objective1(const SvdFactors& f, Index k, double lambda) {
  auto shrink = [lambda](double s) { return 1.0 / std::sqrt(1.0 + lambda / (s * s)); };
  return detail::assemble_pair(f, k, lambda, Objective::kProductReg, shrink, shrink);
}

inline EmbeddingPair solve_objective1(const DataMatrix& x, Index k, double lambda) {
  detail::check_solver_args(x, k, lambda);
  return solve_objective1(svd(x, k), k, lambda);
}

// A = V_k diag(sqrt((1/sigma_i)(1 - lambda/sigma_i)_+)),
// B = V_k diag(sqrt(sigma_i (1 - lambda/sigma_i)_+)).
inline EmbeddingPair solve_objective2(const SvdFactors& f, Index k, double lambda) {
  auto keep = [lambda](double s) { return std::max(0.0, 1.0 - lambda / s); };
  return detail::assemble_pair(
      f, k, lambda, Objective::kSplitReg,
      [keep](double s) { return std::sqrt(keep(s) / s); },
      [keep](double s) { return std::sqrt(s * keep(s)); });
}

inline EmbeddingPair solve_objective2(const DataMatrix& x, Index k, double lambda) {
  detail::check_solver_args(x, k, lambda);
  return solve_objective2(svd(x, k), k, lambda);
}

inline EmbeddingPair solve(const DataMatrix& x, Index k, double lambda, Objective objective) {
  return objective == Objective::kProductReg ? solve_objective1(x, k, lambda)
                                             : solve_objective2(x, k, lambda);
}

inline EmbeddingPair solve(const SvdFactors& f, Index k, double lambda, Objective objective) {
  return objective == Objective::kProductReg ? solve_objective1(f, k, lambda)
                                             : solve_objective2(f, k, lambda);
}

inline double objective1_loss(const DataMatrix& x, const DataMatrix& a, const DataMatrix& b,
                              double lambda) {
  detail::check_factor_shapes(x, a, b);
  const DataMatrix product = a * b.transpose();
  return (x - x * product).squaredNorm() + lambda * product.squaredNorm();
}

inline double objective2_loss(const DataMatrix& x, const DataMatrix& a, const DataMatrix& b,
                              double lambda) {
  detail::check_factor_shapes(x, a, b);
  const DataMatrix xa = x * a;
  return (x - xa * b.transpose()).squaredNorm() +
         lambda * (xa.squaredNorm() + b.squaredNorm());
}

inline double objective_loss(Objective objective, const DataMatrix& x, const DataMatrix& a,
                             const DataMatrix& b, double lambda) {
  return objective == Objective::kProductReg ? objective1_loss(x, a, b, lambda)
                                             : objective2_loss(x, a, b, lambda);
}

inline double loss(const DataMatrix& x, const EmbeddingPair& pair) {
  return objective_loss(pair.objective, x, pair.A, pair.B, pair.lambda);
}

// Scores X A B^T, n x p.
inline DataMatrix predicted_scores(const DataMatrix& x, const EmbeddingPair& pair) {
  detail::check_factor_shapes(x, pair.A, pair.B);
  return (x * pair.A) * pair.B.transpose();
}

struct Gradient {
  DataMatrix dA;
  DataMatrix dB;
};

inline Gradient objective_gradient(Objective objective, const DataMatrix& x,
                                   const DataMatrix& a, const DataMatrix& b, double lambda) {
  detail::check_factor_shapes(x, a, b);
  const DataMatrix xa = x * a;
  const DataMatrix residual = x - xa * b.transpose();  // n x p
  // d/dM of ||X - X M||^2 for M = A B^T.
  DataMatrix d_product = -2.0 * (x.transpose() * residual);
  if (objective == Objective::kProductReg) {
    d_product += 2.0 * lambda * (a * b.transpose());
    return {d_product * b, d_product.transpose() * a};
  }
  return {d_product * b + 2.0 * lambda * (x.transpose() * xa),
          d_product.transpose() * a + 2.0 * lambda * b};
}

struct OracleOptions {
  Index iters = 200000;
  double step = 1e-3;
  double init_scale = 0.1;
  std::uint64_t seed = 1;
  Index checkpoint_every = 1000;
};

struct OracleResult {
  EmbeddingPair pair;
  double final_loss = 0.0;
  std::vector<double> checkpoints;  // loss every checkpoint_every iterations
  Index accepted_steps = 0;
};

// Full-batch gradient descent from a small seeded initialization. A step
// that would increase the loss is rejected and the step size halved, so
// the loss sequence is non-increasing.
inline OracleResult gradient_descent_oracle(const DataMatrix& x, Index k, double lambda,
                                            Objective objective,
                                            const OracleOptions& options = {}) {
  detail::check_solver_args(x, k, lambda);
  const Index p = x.cols();
  Rng rng(options.seed, Stream::kOracleInit);
  DataMatrix a = options.init_scale * rng.normal_matrix(p, k);
  DataMatrix b = options.init_scale * rng.normal_matrix(p, k);

  double step = options.step;
  double current = objective_loss(objective, x, a, b, lambda);
  if (!std::isfinite(current)) throw DivergenceError(std::numeric_limits<double>::quiet_NaN());

  OracleResult result;
  result.checkpoints.push_back(current);
  for (Index it = 1; it <= options.iters; ++it) {
    const Gradient g = objective_gradient(objective, x, a, b, lambda);
    const double g_norm = g.dA.squaredNorm() + g.dB.squaredNorm();
    if (!std::isfinite(g_norm)) throw DivergenceError(current);
    if (g_norm == 0.0) break;
    for (;;) {
      DataMatrix a_next = a - step * g.dA;
      DataMatrix b_next = b - step * g.dB;
      const double next = objective_loss(objective, x, a_next, b_next, lambda);
      if (std::isfinite(next) && next <= current) {
        a = std::move(a_next);
        b = std::move(b_next);
        current = next;
        ++result.accepted_steps;
        break;
      }
      step *= 0.5;
      if (step < 1e-300) break;
    }
    if (step < 1e-300) break;
    if (options.checkpoint_every > 0 && it % options.checkpoint_every == 0) {
      result.checkpoints.push_back(current);
    }
  }

  result.final_loss = current;
  result.pair.A = std::move(a);
  result.pair.B = std::move(b);
  result.pair.lambda = lambda;
  result.pair.rank = k;
  result.pair.objective = objective;
  result.pair.sigma = svd(x, k).singular_values;
  return result;
}

}  // namespace cosaudit
