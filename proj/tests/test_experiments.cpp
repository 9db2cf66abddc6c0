#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "boxnorm/experiments.hpp"

using namespace boxnorm;

namespace {

ExperimentGrids tiny_grids() {
  ExperimentGrids g;
  g.lambdas = {1e-3, 1e-1};
  g.k_grid = {2.0};
  g.a_grid = {1e-2};
  g.gamma_grid = {0.1};
  return g;
}

TaskDataset make_task_data(Index t_count, Index n, Index d, Index rank,
                           double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix u(d, rank), v(rank, t_count);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < rank; ++j) u(i, j) = gauss(rng);
  for (Index i = 0; i < rank; ++i)
    for (Index j = 0; j < t_count; ++j) v(i, j) = gauss(rng);
  const DenseMatrix w = u * v;

  TaskDataset data;
  for (Index t = 0; t < t_count; ++t) {
    DenseMatrix x(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) x(i, j) = gauss(rng);
    DenseVector y = x * w.col(t);
    for (Index i = 0; i < n; ++i) y(i) += noise * gauss(rng);
    data.x.push_back(x);
    data.y.push_back(y);
  }
  return data;
}

std::multiset<double> y_values(const TaskDataset& data, Index t) {
  std::multiset<double> out;
  const auto& y = data.y[static_cast<size_t>(t)];
  for (Index i = 0; i < y.size(); ++i) out.insert(y(i));
  return out;
}

}  // namespace

TEST_CASE("penalty_cells: counts, ordering and parameter fields") {
  ExperimentGrids g;
  g.lambdas = {0.1, 0.01};
  g.k_grid = {2.0, 2.5, 30.0};
  g.a_grid = {1e-3, 1e-2};
  g.gamma_grid = {0.1, 0.01};
  const SolveConfig base;

  const auto trace = penalty_cells("trace", 6, g, base);
  REQUIRE(trace.size() == 2);
  CHECK(trace[0].config.lambda == 0.01);
  CHECK(trace[1].config.lambda == 0.1);
  CHECK(std::isnan(trace[0].k));
  CHECK(std::isnan(trace[0].a));

  const auto fr = penalty_cells("fr", 6, g, base);
  REQUIRE(fr.size() == 2);
  CHECK(std::isnan(fr[0].k));

  const auto elnet = penalty_cells("el.net", 6, g, base);
  REQUIRE(elnet.size() == 4);
  CHECK(elnet[0].config.lambda == 0.01);
  CHECK(elnet[3].config.lambda == 0.1);

  const auto ksup = penalty_cells("ksup", 6, g, base);
  REQUIRE(ksup.size() == 4);  // k = 30 dropped
  CHECK(ksup[0].k == 2.0);
  CHECK(ksup[1].k == 2.5);
  CHECK(ksup[0].config.lambda == 0.01);
  CHECK(ksup[2].config.lambda == 0.1);
  CHECK(std::isnan(ksup[0].a));

  const auto box = penalty_cells("box", 6, g, base);
  REQUIRE(box.size() == 8);
  CHECK(box[0].k == 2.0);
  CHECK(box[0].a == 1e-2);  // a descends within fixed k
  CHECK(box[1].k == 2.0);
  CHECK(box[1].a == 1e-3);
  CHECK(box[2].k == 2.5);
  CHECK(box[2].a == 1e-2);
  CHECK(box[4].config.lambda == 0.1);

  CHECK_THROWS_AS(penalty_cells("laplacian", 6, g, base), ParameterError);
  CHECK_THROWS_AS(penalty_cells("trace", 0, g, base), ParameterError);
  ExperimentGrids none = g;
  none.k_grid = {30.0};
  CHECK_THROWS_AS(penalty_cells("ksup", 6, none, base), ParameterError);
}

TEST_CASE("penalty_cells: fractional k matches tight box, integral k exact") {
  ExperimentGrids g = tiny_grids();
  g.lambdas = {0.05};
  g.k_grid = {3.0, 3.5};
  const SolveConfig base;
  const auto cells = penalty_cells("ksup", 8, g, base);
  REQUIRE(cells.size() == 2);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix w(8, 8);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) w(i, j) = gauss(rng);

  const DenseMatrix via_grid = spectral_prox(w, cells[0].config.penalty, 0.3);
  const DenseMatrix exact = spectral_prox(w, PenaltySelector::sq_ksup(3), 0.3);
  CHECK((via_grid - exact).norm() == 0.0);

  const DenseMatrix frac = spectral_prox(w, cells[1].config.penalty, 0.3);
  CHECK((frac - exact).norm() > 1e-8);
}

TEST_CASE("run_completion_trial: selection, determinism and sanity") {
  CompletionProblem prob = gen_lowrank(12, 2, true, 7);
  SplitSpec spec;
  spec.train_frac = 0.5;
  spec.validation_frac = 0.2;
  spec.test_frac = 0.3;
  spec.seed = 3;
  prob = split(prob, spec);

  CompletionRunConfig cfg;
  cfg.grids = tiny_grids();
  cfg.grids.lambdas = {1e-3, 1e-2, 1e-1};
  cfg.max_iter = 400;

  const CompletionTrial trial = run_completion_trial(prob, "box", cfg);
  CHECK(std::isfinite(trial.raw.test_error));
  CHECK(trial.raw.test_error >= 0.0);
  CHECK(trial.raw.test_error < 0.98);  // beats the zero predictor
  CHECK(trial.raw.rank >= 1);
  const bool lambda_on_grid = trial.raw.selected.lambda == 1e-3 ||
                              trial.raw.selected.lambda == 1e-2 ||
                              trial.raw.selected.lambda == 1e-1;
  CHECK(lambda_on_grid);
  CHECK(trial.raw.selected.k == 2.0);
  CHECK(trial.raw.selected.a == 1e-2);
  CHECK(std::isnan(trial.raw.selected.threshold));

  CHECK(trial.thresholded.rank >= 1);
  CHECK(trial.thresholded.rank <= 12);
  CHECK(std::isfinite(trial.thresholded.test_error));
  CHECK(trial.thresholded.selected.threshold >= 0.0);

  const CompletionTrial again = run_completion_trial(prob, "box", cfg);
  CHECK(again.raw.test_error == trial.raw.test_error);
  CHECK(again.raw.rank == trial.raw.rank);
  CHECK(again.thresholded.test_error == trial.thresholded.test_error);

  CompletionRunConfig no_thr = cfg;
  no_thr.with_threshold = false;
  const CompletionTrial bare = run_completion_trial(prob, "trace", no_thr);
  CHECK(bare.thresholded.rank == -1);
  CHECK(std::isnan(bare.thresholded.test_error));
  CHECK(std::isnan(bare.raw.selected.k));
}

TEST_CASE("run_completion_trial: NMAE protocol and input errors") {
  CompletionProblem prob = gen_lowrank(10, 2, true, 5);
  SplitSpec spec;
  spec.train_frac = 0.5;
  spec.validation_frac = 0.2;
  spec.test_frac = 0.3;
  spec.seed = 9;
  prob = split(prob, spec);
  prob.r_min = -10.0;
  prob.r_max = 10.0;

  CompletionRunConfig cfg;
  cfg.grids = tiny_grids();
  cfg.max_iter = 200;
  cfg.use_nmae = true;
  const CompletionTrial trial = run_completion_trial(prob, "ksup", cfg);
  CHECK(std::isfinite(trial.raw.test_error));
  CHECK(trial.raw.test_error > 0.0);

  CompletionProblem no_val = prob;
  no_val.validation.entries.clear();
  CHECK_THROWS_AS(run_completion_trial(no_val, "ksup", cfg), InputError);

  CompletionProblem no_test = prob;
  no_test.test.entries.clear();
  CHECK_THROWS_AS(run_completion_trial(no_test, "ksup", cfg), InputError);

  CompletionProblem no_truth = prob;
  no_truth.w_true.resize(0, 0);
  CompletionRunConfig rel = cfg;
  rel.use_nmae = false;
  CHECK_THROWS_AS(run_completion_trial(no_truth, "ksup", rel), InputError);
}

TEST_CASE("run_completion_experiment: keys, sizes and determinism") {
  CompletionExperimentOptions opt;
  opt.penalties = {"trace", "box"};
  opt.centered_variants = true;
  opt.d = 10;
  opt.rank = 2;
  opt.train_frac = 0.4;
  opt.validation_frac = 0.2;
  opt.trials = 2;
  opt.seed = 21;
  opt.run.grids = tiny_grids();
  opt.run.max_iter = 150;
  opt.run.with_threshold = false;

  const auto table = run_completion_experiment(opt);
  REQUIRE(table.size() == 4);
  for (const auto& key : {"trace", "box", "c-trace", "c-box"}) {
    REQUIRE(table.count(key) == 1);
    REQUIRE(table.at(key).size() == 2);
    for (const auto& trial : table.at(key))
      CHECK(std::isfinite(trial.raw.test_error));
  }

  const auto rerun = run_completion_experiment(opt);
  for (const auto& [key, trials] : table)
    for (size_t i = 0; i < trials.size(); ++i)
      CHECK(rerun.at(key)[i].raw.test_error == trials[i].raw.test_error);

  CompletionExperimentOptions blocks = opt;
  blocks.source = "blocks";
  blocks.d = 10;
  blocks.blocks = 2;
  blocks.block_size = 5;
  blocks.penalties = {"box"};
  blocks.centered_variants = false;
  blocks.trials = 1;
  const auto bt = run_completion_experiment(blocks);
  REQUIRE(bt.count("box") == 1);
  CHECK(std::isfinite(bt.at("box")[0].raw.test_error));

  CompletionExperimentOptions bad = opt;
  bad.source = "chessboard";
  CHECK_THROWS_AS(run_completion_experiment(bad), ParameterError);
  bad = opt;
  bad.trials = 0;
  CHECK_THROWS_AS(run_completion_experiment(bad), ParameterError);
}

TEST_CASE("run_ratings_experiment: per-user NMAE protocol") {
  CompletionProblem base;
  base.train.rows = 8;
  base.train.cols = 8;
  std::mt19937_64 rng(31);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j)
      base.train.entries.push_back({i, j, static_cast<double>(1 + rng() % 5)});
  base.validation.rows = base.test.rows = 8;
  base.validation.cols = base.test.cols = 8;
  base.r_min = 1.0;
  base.r_max = 5.0;

  RatingsExperimentOptions opt;
  opt.penalties = {"trace"};
  opt.trials = 2;
  opt.seed = 13;
  opt.run.grids = tiny_grids();
  opt.run.max_iter = 150;
  opt.run.with_threshold = false;
  opt.run.use_nmae = false;  // forced on by the protocol

  const auto table = run_ratings_experiment(base, opt);
  REQUIRE(table.count("trace") == 1);
  REQUIRE(table.at("trace").size() == 2);
  for (const auto& trial : table.at("trace")) {
    CHECK(std::isfinite(trial.raw.test_error));
    CHECK(trial.raw.test_error > 0.0);
    CHECK(trial.raw.test_error <= 1.0);
  }
  CHECK(table.at("trace")[0].raw.test_error !=
        table.at("trace")[1].raw.test_error);

  const auto rerun = run_ratings_experiment(base, opt);
  CHECK(rerun.at("trace")[0].raw.test_error ==
        table.at("trace")[0].raw.test_error);
}

TEST_CASE("split_tasks: per-task partition with rounded counts") {
  const TaskDataset data = make_task_data(3, 10, 4, 2, 0.1, 17);
  const TaskSplit s = split_tasks(data, 0.5, 0.2, 42);

  CHECK(s.train.tasks() == 3);
  CHECK(s.train.points() == 5);
  CHECK(s.validation.points() == 2);
  CHECK(s.test.points() == 3);
  CHECK(s.train.dim() == 4);

  for (Index t = 0; t < 3; ++t) {
    std::multiset<double> merged = y_values(s.train, t);
    for (double v : y_values(s.validation, t)) merged.insert(v);
    for (double v : y_values(s.test, t)) merged.insert(v);
    CHECK(merged == y_values(data, t));
  }

  // rows keep their features attached
  const auto& x0 = s.train.x[0];
  const auto& y0 = s.train.y[0];
  bool matched = true;
  for (Index i = 0; i < x0.rows(); ++i) {
    bool found = false;
    for (Index j = 0; j < 10; ++j)
      if ((data.x[0].row(j) - x0.row(i)).norm() == 0.0 &&
          data.y[0](j) == y0(i))
        found = true;
    matched = matched && found;
  }
  CHECK(matched);

  const TaskSplit same = split_tasks(data, 0.5, 0.2, 42);
  CHECK((same.train.y[0] - s.train.y[0]).norm() == 0.0);
  const TaskSplit other = split_tasks(data, 0.5, 0.2, 43);
  bool any_diff = false;
  for (Index t = 0; t < 3 && !any_diff; ++t)
    any_diff = y_values(other.train, t) != y_values(s.train, t);
  CHECK(any_diff);

  CHECK_THROWS_AS(split_tasks(data, 0.0, 0.2, 1), ParameterError);
  CHECK_THROWS_AS(split_tasks(data, 0.5, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(split_tasks(data, 0.8, 0.2, 1), ParameterError);
  const TaskDataset tiny = make_task_data(2, 3, 2, 1, 0.0, 1);
  CHECK_THROWS_AS(split_tasks(tiny, 0.5, 0.25, 1), ParameterError);
}

TEST_CASE("run_mtl_experiment: labels, accuracy and determinism") {
  const TaskDataset data = make_task_data(6, 12, 5, 2, 0.0, 23);

  MtlExperimentOptions opt;
  opt.penalties = {"fr", "trace"};
  opt.centered_variants = true;
  opt.trials = 2;
  opt.seed = 4;
  opt.run.grids = tiny_grids();
  opt.run.grids.lambdas = {1e-6, 1e-3};
  opt.run.max_iter = 500;

  const auto table = run_mtl_experiment(data, opt);
  REQUIRE(table.size() == 4);
  for (const auto& key : {"fr", "trace", "c-fr", "c-trace"}) {
    REQUIRE(table.count(key) == 1);
    REQUIRE(table.at(key).size() == 2);
    for (const auto& sel : table.at(key)) {
      CHECK(std::isfinite(sel.test_error));
      CHECK(sel.test_error < 1.0);  // noiseless rank-2 signal, scale ~3
      CHECK(sel.rank >= 1);
      CHECK(sel.rank <= 5);
    }
  }

  const auto rerun = run_mtl_experiment(data, opt);
  for (const auto& [key, sels] : table)
    for (size_t i = 0; i < sels.size(); ++i)
      CHECK(rerun.at(key)[i].test_error == sels[i].test_error);
}

TEST_CASE("run_mtl_experiment: full penalty roster") {
  const TaskDataset data = make_task_data(6, 12, 5, 2, 0.1, 29);
  MtlExperimentOptions opt;
  opt.trials = 1;
  opt.run.grids = tiny_grids();
  opt.run.max_iter = 120;

  const auto table = run_mtl_experiment(data, opt);
  REQUIRE(table.size() == 10);
  for (const auto& key : {"fr", "trace", "el.net", "ksup", "box", "c-fr",
                          "c-trace", "c-el.net", "c-ksup", "c-box"}) {
    REQUIRE(table.count(key) == 1);
    CHECK(std::isfinite(table.at(key)[0].test_error));
  }
}

TEST_CASE("sample statistics") {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  CHECK(sample_mean(v) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(sample_std(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CHECK(sample_std({7.0}) == 0.0);
  CHECK_THROWS_AS(sample_mean({}), MetricError);
  CHECK_THROWS_AS(sample_std({}), MetricError);
}
