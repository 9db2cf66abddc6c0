#pragma once

#include <map>
#include <string>
#include <vector>

#include "boxnorm/data.hpp"
#include "boxnorm/solver.hpp"

namespace boxnorm {

/// Hyperparameter grids for the penalty families. b is fixed to 1 for the
/// box family; the k-support family reuses k_grid, realizing fractional k
/// as a box penalty with a = 1e-6.
struct ExperimentGrids {
  std::vector<double> lambdas = default_lambda_grid();
  std::vector<double> k_grid = {2.0, 3.0, 4.0};
  std::vector<double> a_grid = {1e-3, 1e-2};
  std::vector<double> gamma_grid = {1e-4, 1e-2};
};

/// Builds the grid cells for one penalty family over vectors of length
/// spectral_dim. Families: "fr", "trace", "el.net", "ksup", "box". Cells come
/// out in tie-break order (lambda ascending, then k ascending, then a
/// descending); k values outside [1, spectral_dim] are dropped.
std::vector<GridCell> penalty_cells(const std::string& penalty,
                                    Index spectral_dim,
                                    const ExperimentGrids& grids,
                                    const SolveConfig& base);

struct TrialSelection {
  double test_error = std::numeric_limits<double>::quiet_NaN();
  Index rank = -1;
  SelectedParams selected;
};

struct CompletionTrial {
  TrialSelection raw;
  TrialSelection thresholded;  ///< rank -1 when thresholding is disabled
};

struct CompletionRunConfig {
  ExperimentGrids grids;
  double tol = 1e-5;
  Index max_iter = 1000;
  bool centered = false;
  double eps_mean = 0.0;
  bool with_threshold = true;
  bool use_nmae = false;  ///< validate and test with NMAE instead of the
                          ///< relative error against w_true
};

/// Grid search for one penalty family on an already-split problem. Solves
/// every cell once; the raw and thresholded selections share the sweep, each
/// minimizing the validation error (raw iterate vs validation-thresholded
/// iterate). Test error: relative squared error against w_true on the test
/// cells (over the full matrix when the test mask is empty), or NMAE on the
/// test mask when use_nmae is set.
CompletionTrial run_completion_trial(const CompletionProblem& prob,
                                     const std::string& penalty,
                                     const CompletionRunConfig& cfg);

struct CompletionExperimentOptions {
  std::vector<std::string> penalties = {"trace", "el.net", "ksup", "box"};
  bool centered_variants = false;  ///< also run "c-<name>" rows
  std::string source = "lowrank";  ///< "lowrank" or "blocks"
  Index d = 100;
  Index rank = 5;
  Index blocks = 5;
  Index block_size = 20;
  double train_frac = 0.2;
  double validation_frac = 0.1;
  Index trials = 20;
  std::uint64_t seed = 1;
  CompletionRunConfig run;
};

/// Synthetic completion protocol: per trial one generated problem and split
/// shared by all penalty rows. Keys are penalty names, prefixed with "c-"
/// for the centered variants.
std::map<std::string, std::vector<CompletionTrial>> run_completion_experiment(
    const CompletionExperimentOptions& opt);

/// Real-ratings protocol: the loaded problem is re-split per trial (per-user
/// by default) and validated/tested with NMAE regardless of run.use_nmae.
/// Keys as in run_completion_experiment.
struct RatingsExperimentOptions {
  std::vector<std::string> penalties = {"trace"};
  bool centered_variants = false;
  double train_frac = 0.5;
  double validation_frac = 0.1;
  bool per_user = true;
  Index trials = 1;
  std::uint64_t seed = 1;
  CompletionRunConfig run;
};
std::map<std::string, std::vector<CompletionTrial>> run_ratings_experiment(
    const CompletionProblem& base, const RatingsExperimentOptions& opt);

/// Per-task split into train/validation/test datasets; counts are rounded
/// (llround) with the remainder assigned to test.
struct TaskSplit {
  TaskDataset train;
  TaskDataset validation;
  TaskDataset test;
};
TaskSplit split_tasks(const TaskDataset& data, double train_frac,
                      double validation_frac, std::uint64_t seed);

struct MtlExperimentOptions {
  std::vector<std::string> penalties = {"fr", "trace", "el.net", "ksup", "box"};
  bool centered_variants = true;
  double train_frac = 0.5;
  double validation_frac = 0.25;
  Index trials = 20;
  std::uint64_t seed = 1;
  CompletionRunConfig run;  ///< thresholding is ignored here
};

/// Multitask regression protocol (task-RMSE validation and test). Keys as in
/// run_completion_experiment.
std::map<std::string, std::vector<TrialSelection>> run_mtl_experiment(
    const TaskDataset& data, const MtlExperimentOptions& opt);

double sample_mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

}  // namespace boxnorm
