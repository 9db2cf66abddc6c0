#pragma once

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "boxnorm/losses.hpp"
#include "boxnorm/spectral.hpp"
#include "boxnorm/types.hpp"

namespace boxnorm {

/// Smooth part of a composite objective. `lipschitz` bounds the gradient's
/// Lipschitz constant and is required by the fixed step rule; backtracking
/// ignores it.
struct SmoothLoss {
  std::function<LossEval(const DenseMatrix&)> eval;
  double lipschitz = 0.0;
};

enum class StepRule { fixed, backtracking };

/// Stopping tolerances: `synthetic` = 1e-5, `real` = 1e-3.
double preset_tol(const std::string& name);

struct SolveConfig {
  double lambda = 0.0;
  PenaltySelector penalty = PenaltySelector::trace();
  double tol = 1e-5;
  Index max_iter = 20000;
  StepRule step = StepRule::fixed;
  bool centered = false;
  double eps_mean = 0.0;

  void validate() const;
};

struct SelectedParams {
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double k = std::numeric_limits<double>::quiet_NaN();
  double a = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
};

struct SolveReport {
  DenseMatrix w_hat;
  DenseVector z_hat;  ///< column-shift estimate; size 0 on uncentered runs
  std::vector<double> objective_trace;  ///< F(W0) first, then one entry per iteration
  Index iterations = 0;
  SelectedParams selected;
  Index rank_after_threshold = -1;
  std::map<std::string, double> metrics;
};

/// The solved objective is loss(W) + lambda * P(W) with
///   P = ||W||_box^2 (sq_box), ||W||_(k)^2 (sq_ksup), ||W||_tr (trace),
///   ||W||_tr + (gamma/2) ||W||_F^2 (elastic_net),
/// all spectral. penalty_term returns lambda * P(W); prox_scale maps a
/// gradient step of size s onto the spectral_prox scale (2*s*lambda for the
/// squared kinds, s*lambda for the linear ones).
double penalty_term(const DenseMatrix& w, const PenaltySelector& penalty,
                    double lambda);
double prox_scale(const PenaltySelector& penalty, double step, double lambda);

/// FISTA with momentum t_{j+1} = (1 + sqrt(1 + 4 t_j^2)) / 2. Stops when the
/// relative objective change |F_j - F_{j-1}| / max(|F_{j-1}|, 1e-12) drops
/// below cfg.tol or at max_iter; the report holds the last proximal iterate,
/// not the momentum point. Divergence raises NumericError with the iteration.
SolveReport fista(const SmoothLoss& loss, const SolveConfig& cfg,
                  const DenseMatrix& w0);

/// Centered variant over (V, z) with W = V + z 1^T. The penalty applies to V
/// only and the prox leaves z unchanged; the smooth part is
/// loss(V + z 1^T) + mean_penalty(V + z 1^T, cfg.eps_mean). Reports
/// w_hat = V_hat + z_hat 1^T along with z_hat.
SolveReport solve_centered(const SmoothLoss& loss, const SolveConfig& cfg,
                           const DenseMatrix& w0, const DenseVector& z0);

struct ThresholdResult {
  DenseMatrix w_thr;
  Index rank = 0;
  double tau = 0.0;
};

/// Zeroes singular values below tau for each tau in the grid, keeps the
/// reconstruction minimizing the validation metric. Ties go to the later
/// grid entry, so on an ascending grid equal scores prefer the stronger
/// threshold. Rank counts the kept singular values above the numeric-rank
/// cutoff, so tau = 0 reports the numeric rank.
ThresholdResult threshold_rank(
    const DenseMatrix& w, const std::vector<double>& grid,
    const std::function<double(const DenseMatrix&)>& validator);

std::vector<double> log_spaced(double lo, double hi, Index count);

/// 10 log-spaced lambdas in [1e-4, 1e2].
std::vector<double> default_lambda_grid();

/// 20 log-spaced thresholds in [1e-4 * sigma_1, sigma_1] of W.
std::vector<double> default_threshold_grid(const DenseMatrix& w);

/// One hyperparameter cell: the full solve configuration plus the (k, a)
/// values it encodes, kept separately for tie-breaking and reporting.
struct GridCell {
  SolveConfig config;
  double k = std::numeric_limits<double>::quiet_NaN();
  double a = std::numeric_limits<double>::quiet_NaN();
};

struct GridOutcome {
  SolveReport best;  ///< winning report; selected and metrics["validation"] filled
  Index evaluated = 0;
  std::vector<std::string> failures;
};

/// Exhaustive search over cells. Each cell is solved by solve_cell and scored
/// by validation_metric (lower is better); ties break toward smaller lambda,
/// then smaller k, then larger a. Cells that throw or produce a non-finite
/// score are recorded in failures and skipped; if every cell fails, the last
/// failure is rethrown as NumericError.
GridOutcome grid_search(
    const std::vector<GridCell>& cells,
    const std::function<SolveReport(const SolveConfig&)>& solve_cell,
    const std::function<double(const SolveReport&)>& validation_metric);

}  // namespace boxnorm
