#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "boxnorm/data.hpp"
#include "boxnorm/spectral.hpp"

using namespace boxnorm;

namespace {

std::string fixture_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string write_fixture(const std::string& name, const std::string& content) {
  const std::string path = fixture_path(name);
  std::ofstream out(path);
  out << content;
  return path;
}

DenseMatrix mask_to_dense(const ObservationMask& mask) {
  DenseMatrix m = DenseMatrix::Zero(mask.rows, mask.cols);
  for (const auto& e : mask.entries) m(e.row, e.col) = e.value;
  return m;
}

bool same_entries(const ObservationMask& a, const ObservationMask& b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  if (a.entries.size() != b.entries.size()) return false;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].row != b.entries[i].row) return false;
    if (a.entries[i].col != b.entries[i].col) return false;
    if (a.entries[i].value != b.entries[i].value) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("lowrank generator: noiseless rank, determinism, chi-square noise") {
  const auto p = gen_lowrank(30, 3, false, 7);
  CHECK(p.rows() == 30);
  CHECK(p.cols() == 30);
  CHECK(p.train.entries.size() == 900);
  CHECK(p.has_truth());

  const DenseVector sv = singular_values(p.w_true);
  CHECK(sv(2) > 1e-8 * sv(0));
  CHECK(sv(3) < 1e-10 * sv(0));

  for (const auto& e : p.train.entries)
    CHECK(e.value == p.w_true(e.row, e.col));
  CHECK(p.r_min == p.w_true.minCoeff());
  CHECK(p.r_max == p.w_true.maxCoeff());

  const auto p2 = gen_lowrank(30, 3, false, 7);
  CHECK(p.w_true == p2.w_true);
  CHECK(same_entries(p.train, p2.train));
  const auto p3 = gen_lowrank(30, 3, false, 8);
  CHECK(p.w_true != p3.w_true);

  const auto noisy = gen_lowrank(100, 5, true, 1);
  double e_sq = 0.0;
  for (const auto& e : noisy.train.entries) {
    const double diff = e.value - noisy.w_true(e.row, e.col);
    e_sq += diff * diff;
  }
  const double ratio = e_sq / (100.0 * 100.0);
  CHECK(ratio > 0.9);
  CHECK(ratio < 1.1);

  CHECK_THROWS_AS(gen_lowrank(5, 6, false, 0), ParameterError);
  CHECK_THROWS_AS(gen_lowrank(0, 1, false, 0), ParameterError);
}

TEST_CASE("block clustered generator: structure, rank, column means") {
  const auto p = gen_block_clustered(20, 4, 5, 3);
  REQUIRE(p.has_truth());
  CHECK(p.rows() == 20);
  CHECK(p.train.entries.size() == 400);

  std::set<double> levels;
  for (Index q = 0; q < 4; ++q) {
    const Index off = q * 5;
    const double level = p.w_true(off, off);
    levels.insert(level);
    CHECK(level >= 1.0);
    CHECK(level <= 10.0);
    CHECK(level == std::floor(level));
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j)
        CHECK(p.w_true(off + i, off + j) == level);
  }
  for (Index i = 0; i < 20; ++i)
    for (Index j = 0; j < 20; ++j)
      if (i / 5 != j / 5) CHECK(p.w_true(i, j) == 0.0);

  const DenseVector sv = singular_values(p.w_true);
  CHECK(sv(3) > 1e-8 * sv(0));
  CHECK(sv(4) < 1e-10 * sv(0));

  const DenseVector col_means = p.w_true.colwise().mean();
  CHECK((col_means.maxCoeff() - col_means.minCoeff()) > 1e-12);

  double noise_sq = 0.0;
  for (const auto& e : p.train.entries) {
    const double diff = e.value - p.w_true(e.row, e.col);
    noise_sq += diff * diff;
  }
  CHECK(noise_sq > 0.0);

  const auto p2 = gen_block_clustered(20, 4, 5, 3);
  CHECK(p.w_true == p2.w_true);
  CHECK_THROWS_AS(gen_block_clustered(10, 3, 4, 0), ParameterError);
}

TEST_CASE("split: global counts, disjointness, determinism") {
  const auto base = gen_lowrank(10, 2, true, 11);
  REQUIRE(base.train.entries.size() == 100);

  SplitSpec spec;
  spec.train_frac = 0.5;
  spec.validation_frac = 0.1;
  spec.test_frac = 0.4;
  spec.seed = 42;
  const auto s = split(base, spec);
  CHECK(s.train.entries.size() == 50);
  CHECK(s.validation.entries.size() == 10);
  CHECK(s.test.entries.size() == 40);
  CHECK(s.r_min == base.r_min);
  CHECK(s.w_true == base.w_true);

  std::set<std::pair<Index, Index>> cells;
  for (const auto* m : {&s.train, &s.validation, &s.test})
    for (const auto& e : m->entries) {
      CHECK(e.row >= 0);
      CHECK(e.row < 10);
      CHECK(e.col >= 0);
      CHECK(e.col < 10);
      CHECK(cells.emplace(e.row, e.col).second);
      CHECK(e.value == base.train.entries[static_cast<size_t>(e.row * 10 + e.col)].value);
    }
  CHECK(cells.size() == 100);

  const auto s2 = split(base, spec);
  CHECK(same_entries(s.train, s2.train));
  CHECK(same_entries(s.validation, s2.validation));
  CHECK(same_entries(s.test, s2.test));
  spec.seed = 43;
  const auto s3 = split(base, spec);
  CHECK_FALSE(same_entries(s.train, s3.train));

  SplitSpec drop;
  drop.train_frac = 0.6;
  drop.validation_frac = 0.2;
  drop.test_frac = 0.1;
  const auto sd = split(base, drop);
  CHECK(sd.train.entries.size() == 60);
  CHECK(sd.validation.entries.size() == 20);
  CHECK(sd.test.entries.size() == 10);

  SplitSpec bad;
  bad.train_frac = 0.0;
  bad.test_frac = 0.5;
  CHECK_THROWS_AS(split(base, bad), ParameterError);
  bad.train_frac = 0.8;
  bad.validation_frac = 0.3;
  CHECK_THROWS_AS(split(base, bad), ParameterError);
}

TEST_CASE("split: per-user ceiling mode") {
  CompletionProblem p;
  p.train.rows = 3;
  p.train.cols = 4;
  p.train.entries = {{0, 0, 1.0}, {0, 1, 2.0}, {0, 2, 3.0}, {0, 3, 4.0},
                     {1, 0, 5.0}, {1, 1, 6.0}, {1, 2, 7.0},
                     {2, 3, 8.0}};
  p.r_min = 1.0;
  p.r_max = 8.0;

  SplitSpec spec;
  spec.train_frac = 0.5;
  spec.validation_frac = 0.0;
  spec.test_frac = 0.5;
  spec.seed = 9;
  spec.per_user = true;
  const auto s = split(p, spec);

  std::vector<int> train_per_row(3, 0), test_per_row(3, 0);
  for (const auto& e : s.train.entries) ++train_per_row[static_cast<size_t>(e.row)];
  for (const auto& e : s.test.entries) ++test_per_row[static_cast<size_t>(e.row)];
  CHECK(train_per_row[0] == 2);
  CHECK(train_per_row[1] == 2);
  CHECK(train_per_row[2] == 1);
  CHECK(test_per_row[0] == 2);
  CHECK(test_per_row[1] == 1);
  CHECK(test_per_row[2] == 0);
  CHECK(s.validation.entries.empty());
  CHECK(s.train.entries.size() + s.test.entries.size() == 8);
}

TEST_CASE("movielens loader: dense remap and line diagnostics") {
  const std::string path = write_fixture(
      "bn_ml.tab", "3\t7\t4\t881250949\n1\t7\t5\t881250950\n3\t2\t1\t881250951\n");
  const auto p = load_ratings(path, RatingsFormat::movielens_tab);
  CHECK(p.rows() == 2);
  CHECK(p.cols() == 2);
  CHECK(p.r_min == 1.0);
  CHECK(p.r_max == 5.0);
  CHECK_FALSE(p.has_truth());
  REQUIRE(p.train.entries.size() == 3);
  CHECK(p.train.entries[0].row == 1);
  CHECK(p.train.entries[0].col == 1);
  CHECK(p.train.entries[0].value == 4.0);
  CHECK(p.train.entries[1].row == 0);
  CHECK(p.train.entries[1].col == 1);
  CHECK(p.train.entries[1].value == 5.0);
  CHECK(p.train.entries[2].row == 1);
  CHECK(p.train.entries[2].col == 0);
  CHECK(p.train.entries[2].value == 1.0);

  const std::string trunc =
      write_fixture("bn_ml_bad.tab", "1\t1\t3\t10\n2\t2\n");
  try {
    load_ratings(trunc, RatingsFormat::movielens_tab);
    CHECK(false);
  } catch (const ParseError& err) {
    CHECK(err.line() == 2);
  }

  const std::string range =
      write_fixture("bn_ml_range.tab", "1\t1\t6\t10\n");
  CHECK_THROWS_AS(load_ratings(range, RatingsFormat::movielens_tab), InputError);
  const std::string zero_id = write_fixture("bn_ml_zero.tab", "0\t1\t3\t10\n");
  CHECK_THROWS_AS(load_ratings(zero_id, RatingsFormat::movielens_tab), ParseError);
  CHECK_THROWS_AS(load_ratings(fixture_path("bn_missing.tab"),
                               RatingsFormat::movielens_tab),
                  InputError);
}

TEST_CASE("jester loader: 99 sentinel and field-count contract") {
  std::string row = "2";
  for (int j = 0; j < 100; ++j) {
    if (j == 0)
      row += ",-3.5";
    else if (j == 49)
      row += ",7.25";
    else
      row += ",99";
  }
  const auto path = write_fixture("bn_jester.csv", row + "\n");
  const auto p = load_ratings(path, RatingsFormat::jester_csv);
  CHECK(p.rows() == 1);
  CHECK(p.cols() == 100);
  CHECK(p.r_min == -10.0);
  CHECK(p.r_max == 10.0);
  REQUIRE(p.train.entries.size() == 2);
  CHECK(p.train.entries[0].col == 0);
  CHECK(p.train.entries[0].value == -3.5);
  CHECK(p.train.entries[1].col == 49);
  CHECK(p.train.entries[1].value == 7.25);

  const auto short_row = write_fixture("bn_jester_short.csv", "1,2.0,99\n");
  CHECK_THROWS_AS(load_ratings(short_row, RatingsFormat::jester_csv), ParseError);
  std::string big = "1";
  for (int j = 0; j < 100; ++j) big += (j == 3) ? ",11" : ",99";
  const auto out_of_range = write_fixture("bn_jester_range.csv", big + "\n");
  CHECK_THROWS_AS(load_ratings(out_of_range, RatingsFormat::jester_csv), InputError);
  std::string junk = "1";
  for (int j = 0; j < 100; ++j) junk += (j == 3) ? ",zzz" : ",99";
  const auto non_numeric = write_fixture("bn_jester_junk.csv", junk + "\n");
  CHECK_THROWS_AS(load_ratings(non_numeric, RatingsFormat::jester_csv), ParseError);
}

TEST_CASE("lenk loader: task grouping") {
  std::ostringstream body;
  body << "2 3\n";
  for (int row = 0; row < 6; ++row) {
    for (int j = 0; j < 14; ++j) body << (row + 0.1 * j) << " ";
    body << (10.0 + row) << "\n";
  }
  const auto path = write_fixture("bn_lenk.txt", body.str());
  const auto data = load_lenk(path);
  CHECK(data.tasks() == 2);
  CHECK(data.points() == 3);
  CHECK(data.dim() == 14);
  CHECK(data.x[0](0, 0) == doctest::Approx(0.0));
  CHECK(data.x[0](2, 13) == doctest::Approx(2.0 + 1.3));
  CHECK(data.x[1](0, 1) == doctest::Approx(3.1));
  CHECK(data.y[0](0) == 10.0);
  CHECK(data.y[1](2) == 15.0);

  const auto missing_rows = write_fixture("bn_lenk_short.txt", "2 3\n1 2 3\n");
  CHECK_THROWS_AS(load_lenk(missing_rows), ParseError);
  const auto ragged = write_fixture("bn_lenk_ragged.txt", "1 2\n1 2 3\n1 2\n");
  CHECK_THROWS_AS(load_lenk(ragged), ParseError);
  const auto no_header = write_fixture("bn_lenk_hdr.txt", "x y\n");
  CHECK_THROWS_AS(load_lenk(no_header), ParseError);
}

TEST_CASE("problem serialization round-trips bit-exactly") {
  const auto p = gen_lowrank(8, 2, true, 5);
  const auto path = fixture_path("bn_roundtrip.txt");
  save_problem(p, path);
  const auto q = load_problem(path);
  CHECK(q.rows() == 8);
  CHECK(q.r_min == p.r_min);
  CHECK(q.r_max == p.r_max);
  CHECK(same_entries(p.train, q.train));
  CHECK_FALSE(q.has_truth());

  save_problem(q, path);
  const auto q2 = load_problem(path);
  CHECK(same_entries(q.train, q2.train));

  const std::string ml = write_fixture(
      "bn_ml_rt.tab", "2\t3\t4.5\t0\n1\t1\t2\t0\n");
  const auto parsed = load_ratings(ml, RatingsFormat::movielens_tab);
  save_problem(parsed, path);
  CHECK(same_entries(parsed.train, load_problem(path).train));

  CHECK_THROWS_AS(load_problem(fixture_path("bn_nofile.txt")), InputError);
  const auto bad_header = write_fixture("bn_bad_header.txt", "4\n0 5\n");
  CHECK_THROWS_AS(load_problem(bad_header), ParseError);
}

TEST_CASE("relative squared error") {
  DenseMatrix truth(2, 2);
  truth << 1.0, 2.0, 3.0, 4.0;
  CHECK(relative_sq_error(truth, truth) == 0.0);
  CHECK(relative_sq_error(DenseMatrix::Zero(2, 2), truth) == doctest::Approx(1.0));

  DenseMatrix pred = truth;
  pred(0, 0) = 2.0;
  CHECK(relative_sq_error(pred, truth) == doctest::Approx(1.0 / 30.0));

  ObservationMask cells;
  cells.rows = 2;
  cells.cols = 2;
  cells.entries = {{0, 0, 0.0}, {1, 1, 0.0}};
  CHECK(relative_sq_error(pred, truth, cells) == doctest::Approx(1.0 / 17.0));

  CHECK_THROWS_AS(relative_sq_error(DenseMatrix::Zero(3, 2), truth), MetricError);
  CHECK_THROWS_AS(relative_sq_error(truth, DenseMatrix::Zero(2, 2)), MetricError);
  ObservationMask empty;
  empty.rows = 2;
  empty.cols = 2;
  CHECK_THROWS_AS(relative_sq_error(pred, truth, empty), MetricError);
}

TEST_CASE("nmae and display variant") {
  ObservationMask obs;
  obs.rows = 1;
  obs.cols = 1;
  obs.entries = {{0, 0, 1.0}};
  DenseMatrix pred(1, 1);
  pred << 5.0;
  CHECK(nmae(pred, obs, 1.0, 5.0) == doctest::Approx(1.0));
  pred << 1.0;
  CHECK(nmae(pred, obs, 1.0, 5.0) == 0.0);

  ObservationMask two;
  two.rows = 2;
  two.cols = 2;
  two.entries = {{0, 0, 2.0}, {1, 1, 5.0}};
  DenseMatrix p2(2, 2);
  p2 << 3.0, 0.0, 0.0, 2.0;
  CHECK(nmae(p2, two, 1.0, 5.0) == doctest::Approx((1.0 + 3.0) / (2.0 * 4.0)));
  CHECK(nmae_paper_display(p2, two) ==
        doctest::Approx((1.0 + 9.0) / (4.0 + 25.0)));
  CHECK(nmae_paper_display(DenseMatrix::Zero(2, 2), two) == doctest::Approx(1.0));

  ObservationMask empty;
  empty.rows = 1;
  empty.cols = 1;
  CHECK_THROWS_AS(nmae(pred, empty, 1.0, 5.0), MetricError);
  CHECK_THROWS_AS(nmae(pred, obs, 5.0, 5.0), MetricError);
  CHECK_THROWS_AS(nmae_paper_display(pred, empty), MetricError);
}

TEST_CASE("task rmse and multiclass accuracy") {
  TaskDataset data;
  DenseMatrix x0(2, 2), x1(2, 2);
  x0 << 1.0, 0.0, 0.0, 1.0;
  x1 << 2.0, 0.0, 0.0, 2.0;
  data.x = {x0, x1};
  DenseVector y0(2), y1(2);
  y0 << 1.0, 2.0;
  y1 << 4.0, 6.0;
  data.y = {y0, y1};

  DenseMatrix w(2, 2);
  w << 1.0, 2.0, 2.0, 3.0;
  CHECK(task_rmse(w, data) == 0.0);
  w(0, 0) = 2.0;
  CHECK(task_rmse(w, data) == doctest::Approx(0.5 * std::sqrt(0.5)));
  CHECK_THROWS_AS(task_rmse(DenseMatrix::Zero(3, 2), data), MetricError);

  DenseMatrix scores_w(2, 2);
  scores_w << 1.0, 0.0, 0.0, 1.0;
  DenseMatrix x(3, 2);
  x << 2.0, 1.0, 1.0, 2.0, 3.0, 0.0;
  CHECK(multiclass_accuracy(scores_w, x, {0, 1, 0}) == 1.0);
  CHECK(multiclass_accuracy(scores_w, x, {1, 1, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(multiclass_accuracy(scores_w, x, {0, 1}), MetricError);
  CHECK_THROWS_AS(multiclass_accuracy(scores_w, x, {0, 1, 5}), MetricError);
  CHECK_THROWS_AS(multiclass_accuracy(scores_w, x, std::vector<Index>{}), MetricError);
}

TEST_CASE("problem validation") {
  CompletionProblem p;
  p.train.rows = 2;
  p.train.cols = 2;
  p.train.entries = {{0, 0, 1.0}};
  p.validation.rows = 2;
  p.validation.cols = 2;
  p.validation.entries = {{0, 0, 2.0}};
  p.r_min = 1.0;
  p.r_max = 2.0;
  CHECK_THROWS_AS(p.validate(), InputError);

  p.validation.entries = {{1, 1, 2.0}};
  CHECK_NOTHROW(p.validate());
  p.w_true = DenseMatrix::Zero(3, 2);
  CHECK_THROWS_AS(p.validate(), InputError);
  p.w_true = DenseMatrix::Zero(2, 2);
  p.r_max = 0.5;
  CHECK_THROWS_AS(p.validate(), InputError);
}
