#pragma once

#include <vector>

#include "boxnorm/types.hpp"

namespace boxnorm {

/// One observed cell of a d x T matrix.
struct MaskEntry {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

/// Set of observed cells over a d x T grid. Entries must be in range and
/// hold no duplicate (row, col) pair.
struct ObservationMask {
  Index rows = 0;
  Index cols = 0;
  std::vector<MaskEntry> entries;

  void validate() const;
};

/// Value and gradient of a smooth loss at W.
struct LossEval {
  double value = 0.0;
  DenseMatrix grad;
};

/// Unnormalized masked squared loss sum_{(i,j) observed} (W_ij - y_ij)^2.
/// The gradient is 2(W_ij - y_ij) on observed cells and has Lipschitz
/// constant 2; metrics handle normalization separately.
LossEval masked_sq_loss(const DenseMatrix& w, const ObservationMask& mask);

/// Per-task regression/classification data. Column t of the weight matrix
/// is task t's weight vector; x[t] is n x d and y[t] has length n, with the
/// same n and d for every task. For one-vs-rest classification the tasks
/// share the pooled inputs and y[t] holds +-1 labels; class_labels then
/// carries the true class per pooled example for accuracy evaluation.
struct TaskDataset {
  std::vector<DenseMatrix> x;
  std::vector<DenseVector> y;
  std::vector<Index> class_labels;

  void validate() const;
  Index tasks() const { return static_cast<Index>(x.size()); }
  Index dim() const { return x.empty() ? 0 : x.front().cols(); }
  Index points() const { return x.empty() ? 0 : x.front().rows(); }
};

/// Compound squared loss (1/(Tn)) sum_t sum_i (y_i^t - <w_t, x_i^t>)^2.
LossEval mtl_sq_loss(const DenseMatrix& w, const TaskDataset& data);

/// Logistic loss sum_t sum_i log(1 + exp(-y_{t,i} <w_t, x_i^t>)) with a
/// log1p formulation that is stable for large margins of either sign.
/// Labels must be exactly +-1.
LossEval logistic_mtl_loss(const DenseMatrix& w, const TaskDataset& data);

/// Partition of tasks {0..T-1} into clusters.
struct ConnectivityInfo {
  std::vector<std::vector<Index>> clusters;

  void validate(Index t) const;
  /// Normalized connectivity matrix M with M_st = 1/|J_q| when s and t
  /// share cluster q, 0 otherwise.
  DenseMatrix connectivity(Index t) const;
};

/// The three quadratic seminorms of the task decomposition:
/// omega_m = tr(W U W^T), omega_b = tr(W (M - U) W^T),
/// omega_w = tr(W (I - M) W^T), with U = 11^T / T. They sum to |W|_F^2.
struct ClusterSeminorms {
  double omega_m = 0.0;
  double omega_b = 0.0;
  double omega_w = 0.0;
};

ClusterSeminorms cluster_seminorms(const DenseMatrix& w,
                                   const ConnectivityInfo& info);

/// Smooth mean penalty eps_m * tr(W U W^T) = eps_m * T * |mean column|^2,
/// with gradient 2 eps_m W U; added to the smooth part of solver
/// objectives when eps_m > 0.
LossEval mean_penalty(const DenseMatrix& w, double eps_m);

}  // namespace boxnorm
