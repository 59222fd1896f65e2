// Copyright 2026 The bandmf Authors
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

#include "bandmf/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bandmf/errors.hpp"
#include "bandmf/loss.hpp"
#include "bandmf/parallel.hpp"
#include "bandmf/slo.hpp"

namespace bandmf {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

std::vector<double> toeplitz_loss_gradient(const ToeplitzCoeffs& s) {
  const std::size_t n = s.n;
  const std::size_t b = s.theta.size();
  const std::vector<double> ones(n, 1.0);
  const std::vector<double> w = toeplitz_solve(s.theta, ones);

  double weighted = 0.0;
  std::vector<double> dF_dw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = static_cast<double>(n - i);
    weighted += m * w[i] * w[i];
    dF_dw[i] = 2.0 * m * w[i];
  }
  double sens_sq = 0.0;
  for (double v : s.theta) sens_sq += v * v;

  // Adjoint of the linear solve: C^T u = dF/dw, then
  // dF/dtheta_l = -sum_i u_i w_{i-l}.
  const std::vector<double> u = toeplitz_solve_transpose(s.theta, dF_dw);
  std::vector<double> grad(b);
  for (std::size_t l = 0; l < b; ++l) {
    double acc = 0.0;
    for (std::size_t i = l; i < n; ++i) acc += u[i] * w[i - l];
    grad[l] = 2.0 * s.theta[l] * weighted - sens_sq * acc;
  }
  return grad;
}

namespace {

struct BandedGradScratch {
  std::vector<double> theta_bar;  // b x n
  std::vector<double> c_bar;      // n
};

// Reverse accumulation through the streaming objective for coordinates
// [j0, j1). The forward scalar trajectories (rows of the raw inverse and the
// running prefix sums, restricted to the block) are stored, then the adjoint
// recurrence runs backward over them. Accumulates into `scratch`.
void banded_grad_block(const BandedParams& s, const std::vector<double>& norms,
                       const std::vector<double>& inv_diag, std::size_t j0,
                       std::size_t j1, BandedGradScratch& scratch) {
  const std::size_t n = s.n;
  const std::size_t b = s.b;
  const std::size_t width = j1 - j0;
  const std::size_t rows = n - j0;

  std::vector<double> traj_y(rows * width, 0.0);
  std::vector<double> traj_b(rows * width, 0.0);
  std::vector<double> bacc(width, 0.0);

  auto y_row = [&](std::size_t i) { return traj_y.data() + (i - j0) * width; };
  auto b_row = [&](std::size_t i) { return traj_b.data() + (i - j0) * width; };

  for (std::size_t i = j0; i < n; ++i) {
    double* cur = y_row(i);
    if (i < j1) cur[i - j0] = 1.0;
    const std::size_t lmax = std::min(b - 1, i);
    for (std::size_t l = 1; l <= lmax; ++l) {
      if (i - l < j0) break;  // earlier rows are zero in this block
      const double coef = s.param(l, i - l);
      if (coef == 0.0) continue;
      const double* prev = y_row(i - l);
      for (std::size_t w = 0; w < width; ++w) cur[w] -= coef * prev[w];
    }
    const double d = inv_diag[i];
    const double c = norms[i];
    double* brow = b_row(i);
    for (std::size_t w = 0; w < width; ++w) {
      cur[w] *= d;
      bacc[w] += c * cur[w];
      brow[w] = bacc[w];
    }
  }

  // Backward sweep. ybar_{i} = c_i * Bbar_i - sum_l theta(l,i)/diag(i+l) *
  // ybar_{i+l}; ring slot i%b may be overwritten because only ybar_{i+1} ..
  // ybar_{i+b-1} are still needed below step i.
  std::vector<double> ybar_ring(b * width, 0.0);
  std::vector<double> bbar(width, 0.0);
  for (std::size_t ii = n; ii-- > j0;) {
    const std::size_t i = ii;
    const double* yrow = y_row(i);
    const double* brow = b_row(i);
    double cbar_i = 0.0;
    for (std::size_t w = 0; w < width; ++w) {
      bbar[w] += 2.0 * brow[w];
      cbar_i += bbar[w] * yrow[w];
    }
    scratch.c_bar[i] += cbar_i;

    double* ybar = ybar_ring.data() + (i % b) * width;
    const double c = norms[i];
    for (std::size_t w = 0; w < width; ++w) ybar[w] = c * bbar[w];
    const std::size_t fmax = std::min(b - 1, n - 1 - i);
    for (std::size_t l = 1; l <= fmax; ++l) {
      const double coef = s.param(l, i) * inv_diag[i + l];
      if (coef == 0.0) continue;
      const double* later = ybar_ring.data() + ((i + l) % b) * width;
      for (std::size_t w = 0; w < width; ++w) ybar[w] -= coef * later[w];
    }

    const double d = inv_diag[i];
    scratch.theta_bar[0 * n + i] -= d * dot({ybar, width}, {yrow, width});
    const std::size_t lmax = std::min(b - 1, i);
    for (std::size_t l = 1; l <= lmax; ++l) {
      if (i - l < j0) break;
      const double* prev = y_row(i - l);
      scratch.theta_bar[l * n + (i - l)] -=
          d * dot({ybar, width}, {prev, width});
    }
  }
}

}  // namespace

std::vector<double> banded_loss_gradient(const BandedParams& s) {
  const std::size_t n = s.n;
  const std::size_t b = s.b;
  const std::vector<double> norms = s.column_norms();
  std::vector<double> inv_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = s.param(0, i);
    if (!(std::abs(d) > kSingularTol)) {
      throw SingularStrategyError("strategy diagonal entry " +
                                  std::to_string(i) + " is zero or subnormal");
    }
    inv_diag[i] = 1.0 / d;
  }

  const auto blocks = parallel::fixed_blocks(n);
  std::vector<BandedGradScratch> partials(blocks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(blocks.size());
       ++bi) {
    partials[bi].theta_bar.assign(b * n, 0.0);
    partials[bi].c_bar.assign(n, 0.0);
    banded_grad_block(s, norms, inv_diag, blocks[bi].begin, blocks[bi].end,
                      partials[bi]);
  }

  std::vector<double> theta_bar(b * n, 0.0);
  std::vector<double> c_bar(n, 0.0);
  for (const auto& part : partials) {
    for (std::size_t i = 0; i < b * n; ++i) theta_bar[i] += part.theta_bar[i];
    for (std::size_t i = 0; i < n; ++i) c_bar[i] += part.c_bar[i];
  }

  // Column-norm chain rule: dc_j/dTheta(l,j) = Theta(l,j)/c_j.
  for (std::size_t j = 0; j < n; ++j) {
    const double scale = c_bar[j] / norms[j];
    for (std::size_t l = 0; l < b; ++l) {
      theta_bar[l * n + j] += scale * s.param(l, j);
    }
  }
  return theta_bar;
}

std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x) {
  std::vector<double> grad(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    const double saved = probe[i];
    probe[i] = saved + h;
    const double fp = f(probe);
    probe[i] = saved - h;
    const double fm = f(probe);
    probe[i] = saved;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

std::vector<double> toeplitz_sqrt_series_init(std::size_t b) {
  std::vector<double> theta(b);
  theta[0] = 1.0;
  for (std::size_t j = 1; j < b; ++j) {
    const double jj = static_cast<double>(j + 1);
    theta[j] = theta[j - 1] * (2.0 * jj - 3.0) / (2.0 * jj - 2.0);
  }
  return theta;
}

namespace {

// Objective adapter for the L-BFGS driver. Trial points that leave the
// feasible region (singular diagonal or zero column) evaluate to +inf, which
// the Armijo test rejects.
struct Objective {
  std::function<double(std::span<const double>)> value;
  std::function<double(std::span<const double>, std::vector<double>&)>
      value_and_grad;
};

double guarded_value(
    const std::function<double(std::span<const double>)>& value,
    std::span<const double> x) {
  try {
    const double f = value(x);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  } catch (const SingularStrategyError&) {
    return std::numeric_limits<double>::infinity();
  }
}

struct LbfgsOutcome {
  std::vector<double> x;
  std::vector<double> history;
  bool converged = false;
  int iterations = 0;
};

LbfgsOutcome lbfgs_minimize(const Objective& objective,
                            std::vector<double> x,
                            const OptimizerConfig& config,
                            std::vector<TraceEntry>* trace) {
  const std::size_t dim = x.size();
  const std::size_t mem = static_cast<std::size_t>(
      std::max(1, config.lbfgs_memory));

  std::vector<double> grad(dim);
  double f = objective.value_and_grad(x, grad);
  if (!std::isfinite(f)) throw NumericError("non-finite loss at start point");

  LbfgsOutcome out;
  out.history.push_back(f);
  if (trace) trace->push_back({0, f, inf_norm(grad)});

  std::vector<std::vector<double>> mem_s;
  std::vector<std::vector<double>> mem_y;
  std::vector<double> mem_rho;

  std::vector<double> direction(dim);
  std::vector<double> trial(dim);
  std::vector<double> grad_new(dim);
  std::vector<double> alpha(mem);

  int iter = 0;
  for (iter = 1; iter <= config.max_iters; ++iter) {
    const double gnorm = inf_norm(grad);
    if (gnorm <= 1e-15 * (1.0 + std::abs(f))) {
      out.converged = true;
      break;
    }

    // Two-loop recursion for -H g.
    std::copy(grad.begin(), grad.end(), direction.begin());
    const std::size_t k = mem_s.size();
    for (std::size_t idx = k; idx-- > 0;) {
      alpha[idx] = mem_rho[idx] * dot(mem_s[idx], direction);
      for (std::size_t i = 0; i < dim; ++i) {
        direction[i] -= alpha[idx] * mem_y[idx][i];
      }
    }
    double gamma = 1.0;
    if (k > 0) {
      const double yy = dot(mem_y[k - 1], mem_y[k - 1]);
      const double sy = 1.0 / mem_rho[k - 1];
      if (yy > 0.0) gamma = sy / yy;
    }
    for (double& v : direction) v *= gamma;
    for (std::size_t idx = 0; idx < k; ++idx) {
      const double beta = mem_rho[idx] * dot(mem_y[idx], direction);
      for (std::size_t i = 0; i < dim; ++i) {
        direction[i] += mem_s[idx][i] * (alpha[idx] - beta);
      }
    }
    for (double& v : direction) v = -v;

    double gp = dot(grad, direction);
    if (!(gp < 0.0)) {
      // Not a descent direction; fall back to steepest descent.
      mem_s.clear();
      mem_y.clear();
      mem_rho.clear();
      for (std::size_t i = 0; i < dim; ++i) direction[i] = -grad[i];
      gp = dot(grad, direction);
    }

    // Backtracking Armijo line search. The first iterate has no curvature
    // information yet, so its trial step is scaled to a unit move.
    double step = 1.0;
    if (mem_s.empty()) step = std::min(1.0, 1.0 / std::max(1.0, gnorm));
    double trial_f = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt <= config.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < dim; ++i) trial[i] = x[i] + step * direction[i];
      trial_f = guarded_value(objective.value, trial);
      if (trial_f <= f + config.armijo_c1 * step * gp) {
        accepted = true;
        break;
      }
      step *= config.backtrack_factor;
    }
    if (!accepted) break;  // no acceptable step; return best iterate

    const double f_new = objective.value_and_grad(trial, grad_new);

    // Curvature update.
    std::vector<double> s_vec(dim);
    std::vector<double> y_vec(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      s_vec[i] = trial[i] - x[i];
      y_vec[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(s_vec, y_vec);
    const double ss = dot(s_vec, s_vec);
    const double yy = dot(y_vec, y_vec);
    if (sy > 1e-10 * std::sqrt(ss * yy) && sy > 0.0) {
      if (mem_s.size() == mem) {
        mem_s.erase(mem_s.begin());
        mem_y.erase(mem_y.begin());
        mem_rho.erase(mem_rho.begin());
      }
      mem_s.push_back(std::move(s_vec));
      mem_y.push_back(std::move(y_vec));
      mem_rho.push_back(1.0 / sy);
    }

    x.swap(trial);
    grad.swap(grad_new);
    const double f_prev = f;
    f = f_new;
    out.history.push_back(f);
    if (trace) trace->push_back({iter, f, inf_norm(grad)});

    if (std::abs(f_prev - f) <= config.rel_tol * std::abs(f)) {
      out.converged = true;
      break;
    }
  }

  out.iterations = static_cast<int>(out.history.size()) - 1;
  out.x = std::move(x);
  return out;
}

Objective toeplitz_objective(std::size_t n, const OptimizerConfig& config) {
  Objective obj;
  obj.value = [n](std::span<const double> x) {
    return toeplitz_loss(ToeplitzCoeffs(n, {x.begin(), x.end()}));
  };
  if (config.grad_mode == GradMode::kAnalytic) {
    obj.value_and_grad = [n](std::span<const double> x,
                             std::vector<double>& g) {
      ToeplitzCoeffs s(n, {x.begin(), x.end()});
      g = toeplitz_loss_gradient(s);
      return toeplitz_loss(s);
    };
  } else {
    auto value = obj.value;
    obj.value_and_grad = [value](std::span<const double> x,
                                 std::vector<double>& g) {
      g = finite_difference_gradient(value, x);
      return value(x);
    };
  }
  return obj;
}

Objective banded_objective(std::size_t n, std::size_t b,
                           const OptimizerConfig& config) {
  Objective obj;
  obj.value = [n, b](std::span<const double> x) {
    return banded_loss(BandedParams(n, b, {x.begin(), x.end()}));
  };
  if (config.grad_mode == GradMode::kAnalytic) {
    obj.value_and_grad = [n, b](std::span<const double> x,
                                std::vector<double>& g) {
      BandedParams s(n, b, {x.begin(), x.end()});
      g = banded_loss_gradient(s);
      return banded_loss(s);
    };
  } else {
    auto value = obj.value;
    obj.value_and_grad = [value](std::span<const double> x,
                                 std::vector<double>& g) {
      g = finite_difference_gradient(value, x);
      return value(x);
    };
  }
  return obj;
}

}  // namespace

OptimizeResult optimize_toeplitz_traced(std::size_t n, std::size_t b,
                                        const OptimizerConfig& config,
                                        std::vector<TraceEntry>* trace) {
  if (b == 0 || b > n) {
    throw InfeasibleError("optimize_toeplitz requires 1 <= b <= n");
  }
  auto outcome = lbfgs_minimize(toeplitz_objective(n, config),
                                toeplitz_sqrt_series_init(b), config, trace);
  // Sign canonicalization: the loss is invariant to a global sign flip.
  if (outcome.x[0] < 0.0) {
    for (double& v : outcome.x) v = -v;
  }
  OptimizeResult result;
  result.strategy = ToeplitzCoeffs(n, std::move(outcome.x));
  result.loss_history = std::move(outcome.history);
  result.converged = outcome.converged;
  result.iterations = outcome.iterations;
  return result;
}

OptimizeResult optimize_toeplitz(std::size_t n, std::size_t b,
                                 const OptimizerConfig& config) {
  return optimize_toeplitz_traced(n, b, config, nullptr);
}

OptimizeResult optimize_banded_traced(std::size_t n, std::size_t b,
                                      const OptimizerConfig& config,
                                      const std::optional<BandedParams>& init,
                                      std::vector<TraceEntry>* trace) {
  if (b == 0 || b > n) {
    throw InfeasibleError("optimize_banded requires 1 <= b <= n");
  }
  std::vector<double> x0;
  if (init.has_value()) {
    if (init->n != n || init->b != b) {
      throw ShapeError("initial strategy has mismatched shape");
    }
    x0 = init->theta;
  } else {
    OptimizeResult warm = optimize_toeplitz(n, b, config);
    x0 = column_normalize(std::get<ToeplitzCoeffs>(warm.strategy)).theta;
  }
  auto outcome =
      lbfgs_minimize(banded_objective(n, b, config), std::move(x0), config,
                     trace);
  // Per-column sign canonicalization: diagonals positive.
  BandedParams params(n, b, std::move(outcome.x));
  for (std::size_t j = 0; j < n; ++j) {
    if (params.param(0, j) < 0.0) {
      for (std::size_t l = 0; l < b; ++l) {
        params.param(l, j) = -params.param(l, j);
      }
    }
  }
  OptimizeResult result;
  result.strategy = std::move(params);
  result.loss_history = std::move(outcome.history);
  result.converged = outcome.converged;
  result.iterations = outcome.iterations;
  return result;
}

OptimizeResult optimize_banded(std::size_t n, std::size_t b,
                               const OptimizerConfig& config,
                               const std::optional<BandedParams>& init) {
  return optimize_banded_traced(n, b, config, init, nullptr);
}

}  // namespace bandmf
