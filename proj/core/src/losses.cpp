#include "boxnorm/losses.hpp"

#include <algorithm>
#include <cmath>

namespace boxnorm {

void ObservationMask::validate() const {
  if (rows <= 0 || cols <= 0) throw InputError("mask grid must be nonempty");
  std::vector<std::pair<Index, Index>> seen;
  seen.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
      throw InputError("mask entry out of range");
    if (!std::isfinite(e.value)) throw InputError("mask value not finite");
    seen.emplace_back(e.row, e.col);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw InputError("duplicate mask entry");
}

LossEval masked_sq_loss(const DenseMatrix& w, const ObservationMask& mask) {
  mask.validate();
  if (w.rows() != mask.rows || w.cols() != mask.cols)
    throw InputError("masked_sq_loss: shape mismatch");
  detail::require_finite(w, "W");
  LossEval out;
  out.grad = DenseMatrix::Zero(w.rows(), w.cols());
  for (const auto& e : mask.entries) {
    const double diff = w(e.row, e.col) - e.value;
    out.value += diff * diff;
    out.grad(e.row, e.col) = 2.0 * diff;
  }
  return out;
}

void TaskDataset::validate() const {
  if (x.empty()) throw InputError("task dataset is empty");
  if (x.size() != y.size()) throw InputError("task dataset: x/y count mismatch");
  const Index n = x.front().rows();
  const Index d = x.front().cols();
  if (n == 0 || d == 0) throw InputError("task dataset: empty design matrix");
  for (size_t t = 0; t < x.size(); ++t) {
    if (x[t].rows() != n || x[t].cols() != d)
      throw InputError("task dataset: design shape differs across tasks");
    if (y[t].size() != n) throw InputError("task dataset: target length mismatch");
    detail::require_finite(x[t], "X");
    detail::require_finite(y[t], "y");
  }
  if (!class_labels.empty()) {
    if (static_cast<Index>(class_labels.size()) != n)
      throw InputError("task dataset: class label count mismatch");
    for (Index c : class_labels)
      if (c < 0 || c >= tasks()) throw InputError("task dataset: class label out of range");
  }
}

LossEval mtl_sq_loss(const DenseMatrix& w, const TaskDataset& data) {
  data.validate();
  const Index t_count = data.tasks();
  const Index n = data.points();
  if (w.rows() != data.dim() || w.cols() != t_count)
    throw InputError("mtl_sq_loss: weight shape mismatch");
  detail::require_finite(w, "W");
  const double scale = 1.0 / (static_cast<double>(t_count) * static_cast<double>(n));
  LossEval out;
  out.grad = DenseMatrix::Zero(w.rows(), w.cols());
  for (Index t = 0; t < t_count; ++t) {
    const DenseVector resid = data.x[static_cast<size_t>(t)] * w.col(t) -
                              data.y[static_cast<size_t>(t)];
    out.value += scale * resid.squaredNorm();
    out.grad.col(t) =
        2.0 * scale * (data.x[static_cast<size_t>(t)].transpose() * resid);
  }
  return out;
}

LossEval logistic_mtl_loss(const DenseMatrix& w, const TaskDataset& data) {
  data.validate();
  const Index t_count = data.tasks();
  const Index n = data.points();
  if (w.rows() != data.dim() || w.cols() != t_count)
    throw InputError("logistic_mtl_loss: weight shape mismatch");
  detail::require_finite(w, "W");
  for (Index t = 0; t < t_count; ++t)
    for (Index i = 0; i < n; ++i) {
      const double yi = data.y[static_cast<size_t>(t)][i];
      if (yi != 1.0 && yi != -1.0)
        throw InputError("logistic_mtl_loss: labels must be +-1");
    }
  LossEval out;
  out.grad = DenseMatrix::Zero(w.rows(), w.cols());
  for (Index t = 0; t < t_count; ++t) {
    const DenseMatrix& xt = data.x[static_cast<size_t>(t)];
    const DenseVector margin = xt * w.col(t);
    for (Index i = 0; i < n; ++i) {
      const double m = data.y[static_cast<size_t>(t)][i] * margin[i];
      // log(1 + exp(-m)) without overflow on either tail
      out.value += m >= 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
      const double sig = m >= 0.0 ? std::exp(-m) / (1.0 + std::exp(-m))
                                  : 1.0 / (1.0 + std::exp(m));
      out.grad.col(t) -=
          data.y[static_cast<size_t>(t)][i] * sig * xt.row(i).transpose();
    }
  }
  return out;
}

void ConnectivityInfo::validate(Index t) const {
  if (clusters.empty()) throw ParameterError("connectivity: no clusters");
  std::vector<char> seen(static_cast<size_t>(t), 0);
  for (const auto& cluster : clusters) {
    if (cluster.empty()) throw ParameterError("connectivity: empty cluster");
    for (Index s : cluster) {
      if (s < 0 || s >= t) throw ParameterError("connectivity: task index out of range");
      if (seen[static_cast<size_t>(s)]) throw ParameterError("connectivity: task assigned twice");
      seen[static_cast<size_t>(s)] = 1;
    }
  }
  for (char c : seen)
    if (!c) throw ParameterError("connectivity: partition must cover all tasks");
}

DenseMatrix ConnectivityInfo::connectivity(Index t) const {
  validate(t);
  DenseMatrix m = DenseMatrix::Zero(t, t);
  for (const auto& cluster : clusters) {
    const double inv = 1.0 / static_cast<double>(cluster.size());
    for (Index s : cluster)
      for (Index r : cluster) m(s, r) = inv;
  }
  return m;
}

ClusterSeminorms cluster_seminorms(const DenseMatrix& w,
                                   const ConnectivityInfo& info) {
  const Index t = w.cols();
  if (w.rows() == 0 || t == 0) throw InputError("empty matrix");
  detail::require_finite(w, "W");
  info.validate(t);

  // tr(W M W^T) = sum_q T_q |cluster mean|^2, tr(W U W^T) = T |grand mean|^2
  const DenseVector grand = w.rowwise().sum() / static_cast<double>(t);
  double tr_m = 0.0;
  for (const auto& cluster : info.clusters) {
    DenseVector mean = DenseVector::Zero(w.rows());
    for (Index s : cluster) mean += w.col(s);
    mean /= static_cast<double>(cluster.size());
    tr_m += static_cast<double>(cluster.size()) * mean.squaredNorm();
  }
  ClusterSeminorms out;
  out.omega_m = static_cast<double>(t) * grand.squaredNorm();
  out.omega_b = tr_m - out.omega_m;
  out.omega_w = w.squaredNorm() - tr_m;
  return out;
}

LossEval mean_penalty(const DenseMatrix& w, double eps_m) {
  if (w.rows() == 0 || w.cols() == 0) throw InputError("empty matrix");
  detail::require_finite(w, "W");
  if (!std::isfinite(eps_m) || eps_m < 0.0)
    throw ParameterError("eps_m must be finite and nonnegative");
  const double t = static_cast<double>(w.cols());
  const DenseVector s = w.rowwise().sum();
  LossEval out;
  out.value = eps_m * s.squaredNorm() / t;
  out.grad = (2.0 * eps_m / t) * s * DenseVector::Ones(w.cols()).transpose();
  return out;
}

}  // namespace boxnorm
