#include "boxnorm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace boxnorm {

namespace {

bool squared_kind(const PenaltySelector& penalty) {
  return penalty.kind == PenaltySelector::Kind::sq_box ||
         penalty.kind == PenaltySelector::Kind::sq_ksup;
}

struct Objective {
  std::function<LossEval(const DenseMatrix&)> smooth;
  std::function<DenseMatrix(const DenseMatrix&, double)> prox;
  std::function<double(const DenseMatrix&)> reg;
  double lipschitz = 0.0;
};

SolveReport run_fista(const Objective& obj, const SolveConfig& cfg,
                      const DenseMatrix& x0) {
  cfg.validate();
  detail::require_finite(x0, "W0");

  double step = 1.0;
  if (cfg.step == StepRule::fixed) {
    if (!(obj.lipschitz > 0.0) || !std::isfinite(obj.lipschitz))
      throw ParameterError("fixed step rule needs a positive Lipschitz bound");
    step = 1.0 / obj.lipschitz;
  }

  SolveReport report;
  DenseMatrix x = x0;
  DenseMatrix y = x0;
  double t = 1.0;
  double f_prev = obj.smooth(x).value + obj.reg(x);
  if (!std::isfinite(f_prev)) throw NumericError("objective not finite at start", 0);
  report.objective_trace.push_back(f_prev);

  for (Index j = 1; j <= cfg.max_iter; ++j) {
    const LossEval at_y = obj.smooth(y);
    DenseMatrix x_next;
    double f_smooth = 0.0;
    if (cfg.step == StepRule::fixed) {
      x_next = obj.prox(y - step * at_y.grad, step);
      f_smooth = obj.smooth(x_next).value;
    } else {
      bool accepted = false;
      for (int halvings = 0; halvings < 60; ++halvings) {
        x_next = obj.prox(y - step * at_y.grad, step);
        f_smooth = obj.smooth(x_next).value;
        const DenseMatrix diff = x_next - y;
        const double quad = at_y.value + (at_y.grad.array() * diff.array()).sum() +
                            diff.squaredNorm() / (2.0 * step);
        if (f_smooth <= quad + 1e-12 * std::max(1.0, std::abs(quad))) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) throw NumericError("backtracking failed", j);
    }

    const double f_next = f_smooth + obj.reg(x_next);
    if (!std::isfinite(f_next)) throw NumericError("objective diverged", j);
    report.objective_trace.push_back(f_next);
    report.iterations = j;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_next + ((t - 1.0) / t_next) * (x_next - x);
    x = x_next;
    t = t_next;

    const double rel = std::abs(f_next - f_prev) / std::max(std::abs(f_prev), 1e-12);
    f_prev = f_next;
    if (rel < cfg.tol) break;
  }

  report.w_hat = std::move(x);
  return report;
}

}  // namespace

double preset_tol(const std::string& name) {
  if (name == "synthetic") return 1e-5;
  if (name == "real") return 1e-3;
  throw ParameterError("unknown tolerance preset: " + name);
}

void SolveConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw ParameterError("lambda must be nonnegative");
  if (!std::isfinite(tol) || tol <= 0.0) throw ParameterError("tol must be positive");
  if (max_iter < 1) throw ParameterError("max_iter must be at least 1");
  if (!std::isfinite(eps_mean) || eps_mean < 0.0)
    throw ParameterError("eps_mean must be nonnegative");
}

double penalty_term(const DenseMatrix& w, const PenaltySelector& penalty,
                    double lambda) {
  const double phi = spectral_penalty(w, penalty);
  return lambda * (squared_kind(penalty) ? 2.0 * phi : phi);
}

double prox_scale(const PenaltySelector& penalty, double step, double lambda) {
  return (squared_kind(penalty) ? 2.0 : 1.0) * step * lambda;
}

SolveReport fista(const SmoothLoss& loss, const SolveConfig& cfg,
                  const DenseMatrix& w0) {
  if (cfg.centered) throw ParameterError("fista: use solve_centered for centered runs");
  if (!loss.eval) throw ParameterError("fista: missing loss");
  Objective obj;
  obj.smooth = loss.eval;
  obj.prox = [&cfg](const DenseMatrix& g, double s) {
    return spectral_prox(g, cfg.penalty, prox_scale(cfg.penalty, s, cfg.lambda));
  };
  obj.reg = [&cfg](const DenseMatrix& x) {
    return penalty_term(x, cfg.penalty, cfg.lambda);
  };
  obj.lipschitz = loss.lipschitz;
  return run_fista(obj, cfg, w0);
}

SolveReport solve_centered(const SmoothLoss& loss, const SolveConfig& cfg,
                           const DenseMatrix& w0, const DenseVector& z0) {
  if (!cfg.centered)
    throw ParameterError("solve_centered: config must set centered");
  if (!loss.eval) throw ParameterError("solve_centered: missing loss");
  if (z0.size() != w0.rows())
    throw ParameterError("solve_centered: z0 length must match rows of W0");
  detail::require_finite(z0, "z0");
  const Index d = w0.rows();
  const Index t = w0.cols();

  Objective obj;
  obj.smooth = [&loss, &cfg, d, t](const DenseMatrix& p) {
    const DenseMatrix w = p.leftCols(t).colwise() + p.col(t);
    LossEval le = loss.eval(w);
    if (cfg.eps_mean > 0.0) {
      const LossEval mp = mean_penalty(w, cfg.eps_mean);
      le.value += mp.value;
      le.grad += mp.grad;
    }
    LossEval out;
    out.value = le.value;
    out.grad.resize(d, t + 1);
    out.grad.leftCols(t) = le.grad;
    out.grad.col(t) = le.grad.rowwise().sum();
    return out;
  };
  obj.prox = [&cfg, t](const DenseMatrix& g, double s) {
    DenseMatrix out(g.rows(), t + 1);
    out.leftCols(t) =
        spectral_prox(g.leftCols(t), cfg.penalty, prox_scale(cfg.penalty, s, cfg.lambda));
    out.col(t) = g.col(t);
    return out;
  };
  obj.reg = [&cfg, t](const DenseMatrix& p) {
    return penalty_term(p.leftCols(t), cfg.penalty, cfg.lambda);
  };
  obj.lipschitz =
      (loss.lipschitz + 2.0 * cfg.eps_mean) * (1.0 + static_cast<double>(t));

  DenseMatrix p0(d, t + 1);
  p0.leftCols(t) = w0;
  p0.col(t) = z0;
  SolveReport report = run_fista(obj, cfg, p0);
  report.z_hat = report.w_hat.col(t);
  report.w_hat = DenseMatrix(report.w_hat.leftCols(t).colwise() + report.z_hat);
  return report;
}

ThresholdResult threshold_rank(
    const DenseMatrix& w, const std::vector<double>& grid,
    const std::function<double(const DenseMatrix&)>& validator) {
  if (grid.empty()) throw ParameterError("threshold_rank: empty grid");
  if (!validator) throw ParameterError("threshold_rank: missing validator");
  const SvdFactors f = thin_svd(w);
  const double cutoff =
      f.sigma.size() > 0
          ? f.sigma(0) * static_cast<double>(std::max(w.rows(), w.cols())) *
                std::numeric_limits<double>::epsilon()
          : 0.0;

  ThresholdResult best;
  double best_score = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double tau : grid) {
    if (!std::isfinite(tau) || tau < 0.0)
      throw ParameterError("threshold_rank: thresholds must be nonnegative");
    DenseVector kept = f.sigma;
    Index rank = 0;
    for (Index i = 0; i < kept.size(); ++i) {
      if (kept(i) < tau)
        kept(i) = 0.0;
      else if (kept(i) > cutoff)
        ++rank;
    }
    DenseMatrix w_thr =
        tau == 0.0 ? w
                   : DenseMatrix(f.u * kept.asDiagonal() * f.v.transpose());
    const double score = validator(w_thr);
    if (!std::isfinite(score)) continue;
    if (!found || score <= best_score) {
      best.w_thr = std::move(w_thr);
      best.rank = rank;
      best.tau = tau;
      best_score = score;
      found = true;
    }
  }
  if (!found) throw NumericError("threshold_rank: no admissible threshold", 0);
  return best;
}

std::vector<double> log_spaced(double lo, double hi, Index count) {
  if (count < 1) throw ParameterError("log_spaced: count must be positive");
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
    throw ParameterError("log_spaced: need 0 < lo <= hi");
  std::vector<double> out;
  out.reserve(static_cast<size_t>(count));
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  const double ratio = std::log(hi / lo);
  for (Index i = 0; i < count; ++i)
    out.push_back(lo * std::exp(ratio * static_cast<double>(i) /
                                static_cast<double>(count - 1)));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> default_lambda_grid() { return log_spaced(1e-4, 1e2, 10); }

std::vector<double> default_threshold_grid(const DenseMatrix& w) {
  const DenseVector sigma = singular_values(w);
  const double top = sigma.size() > 0 ? sigma(0) : 0.0;
  if (!(top > 0.0)) return {0.0};
  return log_spaced(1e-4 * top, top, 20);
}

GridOutcome grid_search(
    const std::vector<GridCell>& cells,
    const std::function<SolveReport(const SolveConfig&)>& solve_cell,
    const std::function<double(const SolveReport&)>& validation_metric) {
  if (cells.empty()) throw ParameterError("grid_search: empty grid");
  if (!solve_cell || !validation_metric)
    throw ParameterError("grid_search: missing callbacks");

  const auto key = [](double v) {
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  };
  std::vector<size_t> order(cells.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    const GridCell& x = cells[i];
    const GridCell& y = cells[j];
    if (x.config.lambda != y.config.lambda)
      return x.config.lambda < y.config.lambda;
    if (key(x.k) != key(y.k)) return key(x.k) < key(y.k);
    return key(x.a) > key(y.a);
  });

  GridOutcome out;
  double best_score = std::numeric_limits<double>::infinity();
  bool found = false;
  for (size_t idx : order) {
    const GridCell& cell = cells[idx];
    try {
      SolveReport rep = solve_cell(cell.config);
      const double score = validation_metric(rep);
      if (!std::isfinite(score))
        throw NumericError("non-finite validation score", rep.iterations);
      ++out.evaluated;
      if (!found || score < best_score) {
        rep.selected.lambda = cell.config.lambda;
        rep.selected.k = cell.k;
        rep.selected.a = cell.a;
        rep.metrics["validation"] = score;
        out.best = std::move(rep);
        best_score = score;
        found = true;
      }
    } catch (const std::exception& err) {
      out.failures.push_back("cell " + std::to_string(idx) + ": " + err.what());
    }
  }
  if (!found) throw NumericError("grid search: every cell failed", 0);
  return out;
}

}  // namespace boxnorm
