#include "boxnorm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace boxnorm {

namespace {

// Deterministic shuffle independent of the standard library's
// uniform_int_distribution implementation.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[static_cast<size_t>(rng() % i)]);
}

ObservationMask full_mask(const DenseMatrix& observed) {
  ObservationMask mask;
  mask.rows = observed.rows();
  mask.cols = observed.cols();
  mask.entries.reserve(static_cast<size_t>(observed.size()));
  for (Index i = 0; i < observed.rows(); ++i)
    for (Index j = 0; j < observed.cols(); ++j)
      mask.entries.push_back({i, j, observed(i, j)});
  return mask;
}

void set_range(CompletionProblem& p) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& e : p.train.entries) {
    lo = std::min(lo, e.value);
    hi = std::max(hi, e.value);
  }
  p.r_min = lo;
  p.r_max = hi;
}

}  // namespace

void CompletionProblem::validate() const {
  train.validate();
  if (validation.rows != 0) validation.validate();
  if (test.rows != 0) test.validate();
  std::vector<std::pair<Index, Index>> cells;
  for (const auto* m : {&train, &validation, &test})
    for (const auto& e : m->entries) cells.emplace_back(e.row, e.col);
  std::sort(cells.begin(), cells.end());
  if (std::adjacent_find(cells.begin(), cells.end()) != cells.end())
    throw InputError("completion problem: masks overlap");
  if (!std::isfinite(r_min) || !std::isfinite(r_max) || r_min > r_max)
    throw InputError("completion problem: bad value range");
  if (has_truth() && (w_true.rows() != rows() || w_true.cols() != cols()))
    throw InputError("completion problem: truth shape mismatch");
}

void SplitSpec::validate() const {
  const double fr[] = {train_frac, validation_frac, test_frac};
  double sum = 0.0;
  for (double f : fr) {
    if (!std::isfinite(f) || f < 0.0) throw ParameterError("split fractions must be nonnegative");
    sum += f;
  }
  if (!(train_frac > 0.0)) throw ParameterError("train fraction must be positive");
  if (sum > 1.0 + 1e-12) throw ParameterError("split fractions must sum to at most 1");
}

CompletionProblem gen_lowrank(Index d, Index r, bool noise, std::uint64_t seed) {
  if (d <= 0) throw ParameterError("gen_lowrank: d must be positive");
  if (r <= 0 || r > d) throw ParameterError("gen_lowrank: r must lie in [1, d]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix a(d, r), b(d, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < d; ++i) a(i, j) = gauss(rng);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < d; ++i) b(i, j) = gauss(rng);
  CompletionProblem p;
  p.w_true = a * b.transpose();
  DenseMatrix observed = p.w_true;
  if (noise)
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i) observed(i, j) += gauss(rng);
  p.train = full_mask(observed);
  set_range(p);
  return p;
}

CompletionProblem gen_block_clustered(Index d, Index blocks, Index block_size,
                                      std::uint64_t seed) {
  if (d <= 0 || blocks <= 0 || block_size <= 0)
    throw ParameterError("gen_block_clustered: sizes must be positive");
  if (blocks * block_size > d)
    throw ParameterError("gen_block_clustered: blocks * block_size exceeds d");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix truth = DenseMatrix::Zero(d, d);
  for (Index q = 0; q < blocks; ++q) {
    const double level = static_cast<double>(1 + rng() % 10);
    const Index off = q * block_size;
    truth.block(off, off, block_size, block_size).setConstant(level);
  }
  CompletionProblem p;
  p.w_true = truth;
  DenseMatrix observed = truth;
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) observed(i, j) += gauss(rng);
  p.train = full_mask(observed);
  set_range(p);
  return p;
}

CompletionProblem load_ratings(const std::string& path, RatingsFormat format) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ratings file: " + path);
  CompletionProblem p;

  if (format == RatingsFormat::movielens_tab) {
    struct Triple {
      long user, item;
      double rating;
    };
    std::vector<Triple> triples;
    std::vector<long> users, items;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ls(line);
      long user = 0, item = 0, timestamp = 0;
      double rating = 0.0;
      if (!(ls >> user >> item >> rating >> timestamp))
        throw ParseError("malformed ratings line", lineno);
      if (user < 1 || item < 1) throw ParseError("ids must be 1-based", lineno);
      if (!(rating >= 1.0 && rating <= 5.0))
        throw InputError("rating outside [1, 5] at line " + std::to_string(lineno));
      triples.push_back({user, item, rating});
      users.push_back(user);
      items.push_back(item);
    }
    if (triples.empty()) throw ParseError("empty ratings file", 1);
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    const auto dense = [](const std::vector<long>& ids, long id) {
      return static_cast<Index>(std::lower_bound(ids.begin(), ids.end(), id) -
                                ids.begin());
    };
    p.train.rows = static_cast<Index>(users.size());
    p.train.cols = static_cast<Index>(items.size());
    for (const auto& t : triples)
      p.train.entries.push_back({dense(users, t.user), dense(items, t.item), t.rating});
    p.r_min = 1.0;
    p.r_max = 5.0;
  } else {
    std::string line;
    long lineno = 0;
    Index row = 0;
    std::vector<MaskEntry> entries;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string field;
      long fieldno = 0;
      while (std::getline(ls, field, ',')) {
        ++fieldno;
        if (fieldno == 1) continue;  // per-row rating count, informational
        if (fieldno > 101) throw ParseError("jester row has more than 101 fields", lineno);
        double v = 0.0;
        try {
          v = std::stod(field);
        } catch (const std::exception&) {
          throw ParseError("non-numeric jester field", lineno);
        }
        if (v == 99.0) continue;
        if (!(v >= -10.0 && v <= 10.0))
          throw InputError("rating outside [-10, 10] at line " + std::to_string(lineno));
        entries.push_back({row, static_cast<Index>(fieldno - 2), v});
      }
      if (fieldno != 101) throw ParseError("jester row must have 101 fields", lineno);
      ++row;
    }
    if (row == 0) throw ParseError("empty ratings file", 1);
    p.train.rows = row;
    p.train.cols = 100;
    p.train.entries = std::move(entries);
    p.r_min = -10.0;
    p.r_max = 10.0;
  }
  p.train.validate();
  return p;
}

TaskDataset load_lenk(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open table file: " + path);
  std::string line;
  long lineno = 0;
  long t = 0, n = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (!(ls >> t >> n) || t < 1 || n < 1)
      throw ParseError("expected header `T n`", lineno);
    break;
  }
  if (t == 0) throw ParseError("missing header", std::max(lineno, 1L));

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v = 0.0;
    while (ls >> v) vals.push_back(v);
    if (vals.size() < 2) throw ParseError("row needs features and a target", lineno);
    if (!rows.empty() && vals.size() != rows.front().size())
      throw ParseError("inconsistent column count", lineno);
    rows.push_back(std::move(vals));
  }
  if (static_cast<long>(rows.size()) != t * n)
    throw ParseError("expected T*n data rows", lineno);

  const Index d = static_cast<Index>(rows.front().size()) - 1;
  TaskDataset data;
  for (long task = 0; task < t; ++task) {
    DenseMatrix x(n, d);
    DenseVector y(n);
    for (long i = 0; i < n; ++i) {
      const auto& row = rows[static_cast<size_t>(task * n + i)];
      for (Index j = 0; j < d; ++j) x(i, j) = row[static_cast<size_t>(j)];
      y(i) = row.back();
    }
    data.x.push_back(std::move(x));
    data.y.push_back(std::move(y));
  }
  data.validate();
  return data;
}

CompletionProblem split(const CompletionProblem& problem, const SplitSpec& spec) {
  problem.validate();
  spec.validate();

  std::vector<MaskEntry> pool = problem.train.entries;
  pool.insert(pool.end(), problem.validation.entries.begin(),
              problem.validation.entries.end());
  pool.insert(pool.end(), problem.test.entries.begin(), problem.test.entries.end());
  if (pool.empty()) throw ParameterError("split: empty observation pool");

  CompletionProblem out;
  out.w_true = problem.w_true;
  out.r_min = problem.r_min;
  out.r_max = problem.r_max;
  for (auto* m : {&out.train, &out.validation, &out.test}) {
    m->rows = problem.rows();
    m->cols = problem.cols();
  }

  std::mt19937_64 rng(spec.seed);
  const bool exhaustive =
      spec.train_frac + spec.validation_frac + spec.test_frac >= 1.0 - 1e-12;

  const auto assign = [&](std::vector<MaskEntry>& cells, bool ceil_mode) {
    const auto m = static_cast<double>(cells.size());
    const auto count = [&](double frac) {
      return ceil_mode ? static_cast<size_t>(std::ceil(frac * m))
                       : static_cast<size_t>(std::llround(frac * m));
    };
    seeded_shuffle(cells, rng);
    size_t n_train = std::min(cells.size(), count(spec.train_frac));
    size_t n_val = std::min(cells.size() - n_train, count(spec.validation_frac));
    size_t n_test = exhaustive ? cells.size() - n_train - n_val
                               : std::min(cells.size() - n_train - n_val,
                                          count(spec.test_frac));
    size_t i = 0;
    for (; i < n_train; ++i) out.train.entries.push_back(cells[i]);
    for (; i < n_train + n_val; ++i) out.validation.entries.push_back(cells[i]);
    for (; i < n_train + n_val + n_test; ++i) out.test.entries.push_back(cells[i]);
  };

  if (spec.per_user) {
    std::vector<std::vector<MaskEntry>> by_row(static_cast<size_t>(problem.rows()));
    for (const auto& e : pool) by_row[static_cast<size_t>(e.row)].push_back(e);
    for (auto& cells : by_row)
      if (!cells.empty()) assign(cells, true);
  } else {
    assign(pool, false);
  }
  out.validate();
  return out;
}

void save_problem(const CompletionProblem& problem, const std::string& path) {
  problem.validate();
  std::ofstream outf(path);
  if (!outf) throw InputError("cannot write file: " + path);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%lld %lld\n",
                static_cast<long long>(problem.rows()),
                static_cast<long long>(problem.cols()));
  outf << buf;
  std::snprintf(buf, sizeof buf, "%.17g %.17g\n", problem.r_min, problem.r_max);
  outf << buf;
  for (const auto& e : problem.train.entries) {
    std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n",
                  static_cast<long long>(e.row), static_cast<long long>(e.col),
                  e.value);
    outf << buf;
  }
  if (!outf) throw InputError("failed writing file: " + path);
}

CompletionProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  CompletionProblem p;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing dimension header", 1);
  {
    std::istringstream ls(line);
    long long rows = 0, cols = 0;
    if (!(ls >> rows >> cols) || rows < 1 || cols < 1)
      throw ParseError("bad dimension header", 1);
    p.train.rows = static_cast<Index>(rows);
    p.train.cols = static_cast<Index>(cols);
  }
  if (!std::getline(in, line)) throw ParseError("missing range header", 2);
  {
    std::istringstream ls(line);
    if (!(ls >> p.r_min >> p.r_max)) throw ParseError("bad range header", 2);
  }
  long lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    long long row = 0, col = 0;
    double value = 0.0;
    if (!(ls >> row >> col >> value)) throw ParseError("bad observation line", lineno);
    p.train.entries.push_back(
        {static_cast<Index>(row), static_cast<Index>(col), value});
  }
  p.validate();
  return p;
}

double relative_sq_error(const DenseMatrix& pred, const DenseMatrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw MetricError("relative_sq_error: shape mismatch");
  const double denom = truth.squaredNorm();
  if (!(denom > 0.0)) throw MetricError("relative_sq_error: zero truth");
  return (pred - truth).squaredNorm() / denom;
}

double relative_sq_error(const DenseMatrix& pred, const DenseMatrix& truth,
                         const ObservationMask& where) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw MetricError("relative_sq_error: shape mismatch");
  if (where.entries.empty()) throw MetricError("relative_sq_error: empty cell set");
  double num = 0.0, denom = 0.0;
  for (const auto& e : where.entries) {
    const double diff = pred(e.row, e.col) - truth(e.row, e.col);
    num += diff * diff;
    denom += truth(e.row, e.col) * truth(e.row, e.col);
  }
  if (!(denom > 0.0)) throw MetricError("relative_sq_error: zero truth on cells");
  return num / denom;
}

double nmae(const DenseMatrix& pred, const ObservationMask& observed,
            double r_min, double r_max) {
  if (observed.entries.empty()) throw MetricError("nmae: empty observation set");
  if (!(r_max > r_min)) throw MetricError("nmae: degenerate rating range");
  if (pred.rows() != observed.rows || pred.cols() != observed.cols)
    throw MetricError("nmae: shape mismatch");
  double acc = 0.0;
  for (const auto& e : observed.entries)
    acc += std::abs(pred(e.row, e.col) - e.value);
  return acc / (static_cast<double>(observed.entries.size()) * (r_max - r_min));
}

double nmae_paper_display(const DenseMatrix& pred, const ObservationMask& observed) {
  if (observed.entries.empty())
    throw MetricError("nmae_paper_display: empty observation set");
  if (pred.rows() != observed.rows || pred.cols() != observed.cols)
    throw MetricError("nmae_paper_display: shape mismatch");
  double num = 0.0, denom = 0.0;
  for (const auto& e : observed.entries) {
    const double diff = pred(e.row, e.col) - e.value;
    num += diff * diff;
    denom += e.value * e.value;
  }
  if (!(denom > 0.0)) throw MetricError("nmae_paper_display: zero observations");
  return num / denom;
}

double task_rmse(const DenseMatrix& w, const TaskDataset& data) {
  data.validate();
  if (w.rows() != data.dim() || w.cols() != data.tasks())
    throw MetricError("task_rmse: shape mismatch");
  double acc = 0.0;
  for (Index t = 0; t < data.tasks(); ++t) {
    const DenseVector resid = data.x[static_cast<size_t>(t)] * w.col(t) -
                              data.y[static_cast<size_t>(t)];
    acc += std::sqrt(resid.squaredNorm() / static_cast<double>(data.points()));
  }
  return acc / static_cast<double>(data.tasks());
}

double multiclass_accuracy(const DenseMatrix& w, const DenseMatrix& x,
                           const std::vector<Index>& labels) {
  if (labels.empty()) throw MetricError("multiclass_accuracy: no labels");
  if (static_cast<Index>(labels.size()) != x.rows())
    throw MetricError("multiclass_accuracy: label count mismatch");
  if (x.cols() != w.rows()) throw MetricError("multiclass_accuracy: shape mismatch");
  const DenseMatrix scores = x * w;  // examples x tasks
  Index hits = 0;
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    scores.row(i).maxCoeff(&best);
    if (labels[static_cast<size_t>(i)] < 0 ||
        labels[static_cast<size_t>(i)] >= w.cols())
      throw MetricError("multiclass_accuracy: label out of range");
    if (best == labels[static_cast<size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

}  // namespace boxnorm
