#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "boxnorm/losses.hpp"
#include "boxnorm/types.hpp"

namespace boxnorm {

/// A matrix-completion instance: observation pools and, for synthetic
/// problems, the noiseless ground truth against which test error is
/// measured. Generators and loaders place every observation in `train`;
/// `split` redistributes into the three disjoint masks.
struct CompletionProblem {
  DenseMatrix w_true;  ///< noiseless truth; empty when unknown
  ObservationMask train;
  ObservationMask validation;
  ObservationMask test;
  double r_min = 0.0;
  double r_max = 0.0;

  Index rows() const { return train.rows; }
  Index cols() const { return train.cols; }
  bool has_truth() const { return w_true.size() > 0; }
  void validate() const;
};

/// Split fractions over the observation pool. Fractions must be positive
/// with sum <= 1; in per_user mode each row keeps ceil(frac * count)
/// training entries and the remainder is divided in the same way.
struct SplitSpec {
  double train_frac = 0.0;
  double validation_frac = 0.0;
  double test_frac = 0.0;
  std::uint64_t seed = 0;
  bool per_user = false;

  void validate() const;
};

/// W = A B^T (+ E when noise), A and B d x r standard Gaussian, E standard
/// Gaussian. The observations carry the noisy entries over the full grid;
/// w_true holds the noiseless product.
CompletionProblem gen_lowrank(Index d, Index r, bool noise, std::uint64_t seed);

/// Block-diagonal clustered matrix: `blocks` diagonal blocks of size
/// block_size x block_size, each constant at an integer drawn uniformly
/// from {1..10}, zero outside, standard Gaussian noise on every observed
/// entry. blocks * block_size <= d.
CompletionProblem gen_block_clustered(Index d, Index blocks, Index block_size,
                                      std::uint64_t seed);

enum class RatingsFormat { movielens_tab, jester_csv };

/// movielens_tab: lines `user<TAB>item<TAB>rating<TAB>timestamp`, 1-based
/// ids remapped to dense 0-based indices by sorted id, ratings in [1, 5].
/// jester_csv: comma-separated rows of 101 fields (count then 100 ratings,
/// 99 = missing), ratings in [-10, 10].
CompletionProblem load_ratings(const std::string& path, RatingsFormat format);

/// Conjoint-analysis table: first line `T n`, then T*n rows of d feature
/// values followed by the target rating, whitespace-delimited, grouped so
/// task t owns rows [t*n, (t+1)*n).
TaskDataset load_lenk(const std::string& path);

/// Redistributes the observation pool (train + validation + test merged)
/// into disjoint masks, uniformly without replacement, deterministic per
/// seed. Cells beyond the requested fractions are dropped.
CompletionProblem split(const CompletionProblem& problem, const SplitSpec& spec);

/// Text round-trip: 2-line header (`rows cols`, `r_min r_max`) followed by
/// one `row col value` line per observation in the train mask. Values are
/// printed with 17 significant digits so doubles survive bit-exactly.
void save_problem(const CompletionProblem& problem, const std::string& path);
CompletionProblem load_problem(const std::string& path);

/// ||pred - truth||_F^2 / ||truth||_F^2 over the full matrix.
double relative_sq_error(const DenseMatrix& pred, const DenseMatrix& truth);

/// Same ratio restricted to the cells of `where`, with both operands read
/// from the matrices (mask values are ignored).
double relative_sq_error(const DenseMatrix& pred, const DenseMatrix& truth,
                         const ObservationMask& where);

/// Mean absolute deviation from the mask values over the rating range.
double nmae(const DenseMatrix& pred, const ObservationMask& observed,
            double r_min, double r_max);

/// Squared-ratio display variant: sum (pred - y)^2 / sum y^2 over the mask.
double nmae_paper_display(const DenseMatrix& pred, const ObservationMask& observed);

/// Per-task RMSE averaged over tasks.
double task_rmse(const DenseMatrix& w, const TaskDataset& data);

/// Fraction of pooled examples whose argmax_t <w_t, x_i> matches the label.
double multiclass_accuracy(const DenseMatrix& w, const DenseMatrix& x,
                           const std::vector<Index>& labels);

}  // namespace boxnorm
