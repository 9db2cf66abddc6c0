#include "boxnorm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace boxnorm {

namespace {

constexpr double ksup_family_a = 1e-6;
constexpr std::uint64_t trial_stride = 0x9e3779b97f4a7c15ULL;

bool integral(double k) { return std::abs(k - std::round(k)) < 1e-9; }

GridCell make_cell(const SolveConfig& base, double lambda,
                   const PenaltySelector& penalty, double k, double a) {
  GridCell cell;
  cell.config = base;
  cell.config.lambda = lambda;
  cell.config.penalty = penalty;
  cell.k = k;
  cell.a = a;
  return cell;
}

SolveReport solve_cell(const SmoothLoss& loss, const SolveConfig& cfg,
                       Index rows, Index cols) {
  const DenseMatrix w0 = DenseMatrix::Zero(rows, cols);
  if (cfg.centered) return solve_centered(loss, cfg, w0, DenseVector::Zero(rows));
  return fista(loss, cfg, w0);
}

}  // namespace

std::vector<GridCell> penalty_cells(const std::string& penalty,
                                    Index spectral_dim,
                                    const ExperimentGrids& grids,
                                    const SolveConfig& base) {
  if (spectral_dim < 1)
    throw ParameterError("penalty_cells: spectral dimension must be positive");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double r = static_cast<double>(spectral_dim);

  std::vector<double> lambdas = grids.lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  std::vector<double> ks = grids.k_grid;
  std::sort(ks.begin(), ks.end());
  std::vector<double> as = grids.a_grid;
  std::sort(as.begin(), as.end(), std::greater<double>());
  std::vector<double> gammas = grids.gamma_grid;
  std::sort(gammas.begin(), gammas.end());

  std::vector<GridCell> cells;
  for (double lambda : lambdas) {
    if (penalty == "trace") {
      cells.push_back(make_cell(base, lambda, PenaltySelector::trace(), nan, nan));
    } else if (penalty == "fr") {
      cells.push_back(
          make_cell(base, lambda, PenaltySelector::sq_ksup(spectral_dim), nan, nan));
    } else if (penalty == "el.net") {
      for (double gamma : gammas)
        cells.push_back(
            make_cell(base, lambda, PenaltySelector::elastic_net(gamma), nan, nan));
    } else if (penalty == "ksup") {
      for (double k : ks) {
        if (k < 1.0 - 1e-9 || k > r + 1e-9) continue;
        const PenaltySelector sel =
            integral(k)
                ? PenaltySelector::sq_ksup(static_cast<Index>(std::llround(k)))
                : PenaltySelector::sq_box(
                      BoxParams::from_k(ksup_family_a, 1.0, k, spectral_dim));
        cells.push_back(make_cell(base, lambda, sel, k, nan));
      }
    } else if (penalty == "box") {
      for (double k : ks) {
        if (k < 1.0 - 1e-9 || k > r + 1e-9) continue;
        for (double a : as) {
          if (!(a > 0.0) || a >= 1.0) continue;
          const PenaltySelector sel = PenaltySelector::sq_box(
              BoxParams::from_k(a, 1.0, std::min(k, r), spectral_dim));
          cells.push_back(make_cell(base, lambda, sel, k, a));
        }
      }
    } else {
      throw ParameterError("unknown penalty family: " + penalty);
    }
  }
  if (cells.empty())
    throw ParameterError("penalty_cells: empty grid for " + penalty);
  return cells;
}

CompletionTrial run_completion_trial(const CompletionProblem& prob,
                                     const std::string& penalty,
                                     const CompletionRunConfig& cfg) {
  prob.validate();
  if (prob.train.entries.empty())
    throw InputError("completion trial: empty training mask");
  if (prob.validation.entries.empty())
    throw InputError("completion trial: empty validation mask");
  if (!cfg.use_nmae && !prob.has_truth())
    throw InputError("completion trial: relative-error protocol needs w_true");
  if (cfg.use_nmae && prob.test.entries.empty())
    throw InputError("completion trial: NMAE protocol needs a test mask");

  const Index rows = prob.rows();
  const Index cols = prob.cols();
  SolveConfig base;
  base.tol = cfg.tol;
  base.max_iter = cfg.max_iter;
  base.centered = cfg.centered;
  base.eps_mean = cfg.eps_mean;
  const auto cells =
      penalty_cells(penalty, std::min(rows, cols), cfg.grids, base);

  SmoothLoss loss;
  loss.eval = [&prob](const DenseMatrix& w) { return masked_sq_loss(w, prob.train); };
  loss.lipschitz = 2.0;

  DenseMatrix val_ref = DenseMatrix::Zero(rows, cols);
  for (const auto& e : prob.validation.entries) val_ref(e.row, e.col) = e.value;
  const auto validation_score = [&](const DenseMatrix& w) {
    return cfg.use_nmae ? nmae(w, prob.validation, prob.r_min, prob.r_max)
                        : relative_sq_error(w, val_ref, prob.validation);
  };
  const auto test_score = [&](const DenseMatrix& w) {
    if (cfg.use_nmae) return nmae(w, prob.test, prob.r_min, prob.r_max);
    return prob.test.entries.empty()
               ? relative_sq_error(w, prob.w_true)
               : relative_sq_error(w, prob.w_true, prob.test);
  };

  struct Best {
    bool found = false;
    double score = 0.0;
    DenseMatrix w;
    SelectedParams sel;
    Index rank = -1;
  };
  Best raw, thr;
  std::vector<std::string> failures;

  for (const auto& cell : cells) {
    try {
      const SolveReport rep = solve_cell(loss, cell.config, rows, cols);
      const double score = validation_score(rep.w_hat);
      if (std::isfinite(score) && (!raw.found || score < raw.score)) {
        raw.found = true;
        raw.score = score;
        raw.w = rep.w_hat;
        raw.sel = {cell.config.lambda, cell.k, cell.a,
                   std::numeric_limits<double>::quiet_NaN()};
      }
      if (cfg.with_threshold) {
        const ThresholdResult t = threshold_rank(
            rep.w_hat, default_threshold_grid(rep.w_hat), validation_score);
        const double t_score = validation_score(t.w_thr);
        if (std::isfinite(t_score) && (!thr.found || t_score < thr.score)) {
          thr.found = true;
          thr.score = t_score;
          thr.w = t.w_thr;
          thr.sel = {cell.config.lambda, cell.k, cell.a, t.tau};
          thr.rank = t.rank;
        }
      }
    } catch (const std::exception& err) {
      failures.push_back(err.what());
    }
  }
  if (!raw.found)
    throw NumericError("completion trial: every grid cell failed",
                       static_cast<long>(failures.size()));

  CompletionTrial out;
  out.raw.test_error = test_score(raw.w);
  out.raw.rank = numeric_rank(raw.w);
  out.raw.selected = raw.sel;
  if (cfg.with_threshold && thr.found) {
    out.thresholded.test_error = test_score(thr.w);
    out.thresholded.rank = thr.rank;
    out.thresholded.selected = thr.sel;
  }
  return out;
}

std::map<std::string, std::vector<CompletionTrial>> run_completion_experiment(
    const CompletionExperimentOptions& opt) {
  if (opt.trials < 1) throw ParameterError("trials must be positive");
  std::map<std::string, std::vector<CompletionTrial>> out;
  for (Index trial = 0; trial < opt.trials; ++trial) {
    const std::uint64_t gen_seed =
        opt.seed ^ (trial_stride * (static_cast<std::uint64_t>(trial) + 1));
    CompletionProblem problem;
    if (opt.source == "blocks")
      problem = gen_block_clustered(opt.d, opt.blocks, opt.block_size, gen_seed);
    else if (opt.source == "lowrank")
      problem = gen_lowrank(opt.d, opt.rank, true, gen_seed);
    else
      throw ParameterError("unknown source: " + opt.source);

    SplitSpec spec;
    spec.train_frac = opt.train_frac;
    spec.validation_frac = opt.validation_frac;
    spec.test_frac = 1.0 - opt.train_frac - opt.validation_frac;
    spec.seed = gen_seed + 1;
    const CompletionProblem sp = split(problem, spec);

    for (const auto& name : opt.penalties) {
      CompletionRunConfig rc = opt.run;
      rc.centered = false;
      out[name].push_back(run_completion_trial(sp, name, rc));
      if (opt.centered_variants) {
        rc.centered = true;
        out["c-" + name].push_back(run_completion_trial(sp, name, rc));
      }
    }
  }
  return out;
}

std::map<std::string, std::vector<CompletionTrial>> run_ratings_experiment(
    const CompletionProblem& base, const RatingsExperimentOptions& opt) {
  if (opt.trials < 1) throw ParameterError("trials must be positive");
  std::map<std::string, std::vector<CompletionTrial>> out;
  for (Index trial = 0; trial < opt.trials; ++trial) {
    SplitSpec spec;
    spec.train_frac = opt.train_frac;
    spec.validation_frac = opt.validation_frac;
    spec.test_frac = 1.0 - opt.train_frac - opt.validation_frac;
    spec.per_user = opt.per_user;
    spec.seed = opt.seed ^ (trial_stride * (static_cast<std::uint64_t>(trial) + 1));
    const CompletionProblem sp = split(base, spec);

    for (const auto& name : opt.penalties) {
      CompletionRunConfig rc = opt.run;
      rc.use_nmae = true;
      rc.centered = false;
      out[name].push_back(run_completion_trial(sp, name, rc));
      if (opt.centered_variants) {
        rc.centered = true;
        out["c-" + name].push_back(run_completion_trial(sp, name, rc));
      }
    }
  }
  return out;
}

TaskSplit split_tasks(const TaskDataset& data, double train_frac,
                      double validation_frac, std::uint64_t seed) {
  data.validate();
  if (!(train_frac > 0.0) || !(validation_frac > 0.0) ||
      train_frac + validation_frac >= 1.0 - 1e-12)
    throw ParameterError("split_tasks: fractions must be positive with sum < 1");
  const Index n = data.points();
  const double nd = static_cast<double>(n);
  const Index n_train =
      std::min<Index>(n, static_cast<Index>(std::llround(train_frac * nd)));
  const Index n_val = std::min<Index>(
      n - n_train, static_cast<Index>(std::llround(validation_frac * nd)));
  const Index n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1)
    throw ParameterError("split_tasks: every split needs at least one point");

  std::mt19937_64 rng(seed);
  TaskSplit out;
  for (Index t = 0; t < data.tasks(); ++t) {
    std::vector<Index> idx(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    for (size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[static_cast<size_t>(rng() % i)]);

    const auto& x = data.x[static_cast<size_t>(t)];
    const auto& y = data.y[static_cast<size_t>(t)];
    const auto take = [&](Index from, Index count, TaskDataset& dst) {
      DenseMatrix xs(count, x.cols());
      DenseVector ys(count);
      for (Index i = 0; i < count; ++i) {
        xs.row(i) = x.row(idx[static_cast<size_t>(from + i)]);
        ys(i) = y(idx[static_cast<size_t>(from + i)]);
      }
      dst.x.push_back(std::move(xs));
      dst.y.push_back(std::move(ys));
    };
    take(0, n_train, out.train);
    take(n_train, n_val, out.validation);
    take(n_train + n_val, n_test, out.test);
  }
  return out;
}

std::map<std::string, std::vector<TrialSelection>> run_mtl_experiment(
    const TaskDataset& data, const MtlExperimentOptions& opt) {
  data.validate();
  if (opt.trials < 1) throw ParameterError("trials must be positive");
  const Index d = data.dim();
  const Index t_count = data.tasks();
  const Index r = std::min(d, t_count);

  std::map<std::string, std::vector<TrialSelection>> out;
  for (Index trial = 0; trial < opt.trials; ++trial) {
    const std::uint64_t seed =
        opt.seed ^ (trial_stride * (static_cast<std::uint64_t>(trial) + 1));
    const TaskSplit s =
        split_tasks(data, opt.train_frac, opt.validation_frac, seed);

    SmoothLoss loss;
    loss.eval = [&s](const DenseMatrix& w) { return mtl_sq_loss(w, s.train); };
    double top = 0.0;
    for (const auto& x : s.train.x) top = std::max(top, singular_values(x)(0));
    loss.lipschitz = 2.0 * top * top /
                     static_cast<double>(s.train.tasks() * s.train.points());

    for (const auto& name : opt.penalties) {
      for (int variant = 0; variant < (opt.centered_variants ? 2 : 1); ++variant) {
        const bool centered = variant == 1;
        SolveConfig base;
        base.tol = opt.run.tol;
        base.max_iter = opt.run.max_iter;
        base.centered = centered;
        base.eps_mean = opt.run.eps_mean;
        const auto cells = penalty_cells(name, r, opt.run.grids, base);

        bool found = false;
        double best_score = 0.0;
        DenseMatrix best_w;
        SelectedParams best_sel;
        std::vector<std::string> failures;
        for (const auto& cell : cells) {
          try {
            const SolveReport rep = solve_cell(loss, cell.config, d, t_count);
            const double score = task_rmse(rep.w_hat, s.validation);
            if (std::isfinite(score) && (!found || score < best_score)) {
              found = true;
              best_score = score;
              best_w = rep.w_hat;
              best_sel = {cell.config.lambda, cell.k, cell.a,
                          std::numeric_limits<double>::quiet_NaN()};
            }
          } catch (const std::exception& err) {
            failures.push_back(err.what());
          }
        }
        if (!found)
          throw NumericError("mtl trial: every grid cell failed",
                             static_cast<long>(failures.size()));

        TrialSelection sel;
        sel.test_error = task_rmse(best_w, s.test);
        sel.rank = numeric_rank(best_w);
        sel.selected = best_sel;
        out[centered ? "c-" + name : name].push_back(sel);
      }
    }
  }
  return out;
}

double sample_mean(const std::vector<double>& v) {
  if (v.empty()) throw MetricError("sample_mean: empty sample");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.empty()) throw MetricError("sample_std: empty sample");
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace boxnorm
