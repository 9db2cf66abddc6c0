#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "boxnorm/experiments.hpp"
#include "boxnorm/prox.hpp"
#include "boxnorm/prox_reference.hpp"
#include "boxnorm/vecnorm.hpp"

using namespace boxnorm;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Config = std::map<std::string, std::string>;

void apply_pair(Config& cfg, const std::string& token, const std::string& origin) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError(origin + ": expected key=value, got '" + token + "'");
  const std::string key = token.substr(0, eq);
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw UsageError(origin + ": unknown key '" + key + "'");
  it->second = token.substr(eq + 1);
}

void load_config_file(Config& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config file not readable: " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream toks(line);
    std::string tok;
    while (toks >> tok)
      apply_pair(cfg, tok, path + ":" + std::to_string(line_no));
  }
}

void resolve(Config& cfg, const std::string& config_path,
             const std::vector<std::string>& pairs) {
  if (!config_path.empty()) load_config_file(cfg, config_path);
  for (const auto& token : pairs) apply_pair(cfg, token, "argument");
}

double to_double(const Config& cfg, const std::string& key) {
  const std::string& s = cfg.at(key);
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("key " + key + ": not a number: '" + s + "'");
  }
}

Index to_index(const Config& cfg, const std::string& key) {
  const std::string& s = cfg.at(key);
  try {
    size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw UsageError("key " + key + ": not an integer: '" + s + "'");
  }
}

bool to_bool(const Config& cfg, const std::string& key) {
  const std::string& s = cfg.at(key);
  if (s == "0" || s == "false") return false;
  if (s == "1" || s == "true") return true;
  throw UsageError("key " + key + ": expected 0/1, got '" + s + "'");
}

std::vector<double> to_list(const Config& cfg, const std::string& key) {
  const std::string& s = cfg.at(key);
  std::vector<double> out;
  std::istringstream in(s);
  std::string field;
  while (std::getline(in, field, ',')) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(field, &pos));
      if (pos != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw UsageError("key " + key + ": bad list entry '" + field + "'");
    }
  }
  if (out.empty()) throw UsageError("key " + key + ": empty list");
  return out;
}

std::vector<std::string> to_names(const Config& cfg, const std::string& key) {
  std::vector<std::string> out;
  std::istringstream in(cfg.at(key));
  std::string field;
  while (std::getline(in, field, ','))
    if (!field.empty()) out.push_back(field);
  if (out.empty()) throw UsageError("key " + key + ": empty list");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

std::string echo_line(const std::string& command, const Config& cfg) {
  std::string out = "# boxnorm " + command;
  for (const auto& [k, v] : cfg) out += " " + k + "=" + v;
  out += "\n";
  return out;
}

void write_text(const std::string& output, const std::string& content) {
  if (output.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(output);
  if (!out) throw UsageError("cannot open output file: " + output);
  out << content;
}

std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("input file not readable: " + path);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(path + ": non-numeric token '" + tok + "'");
    }
  }
  if (out.empty()) throw UsageError(path + ": no numbers found");
  return out;
}

double resolve_tol(const Config& cfg) {
  const std::string& s = cfg.at("tol");
  if (s == "synthetic" || s == "real") return preset_tol(s);
  return to_double(cfg, "tol");
}

/// Writes the resolved grids back into the config so the echo line is fully
/// explicit (empty list keys mean "library default").
ExperimentGrids resolve_grids(Config& cfg) {
  ExperimentGrids g;
  if (!cfg.at("lambdas").empty()) g.lambdas = to_list(cfg, "lambdas");
  if (!cfg.at("k_grid").empty()) g.k_grid = to_list(cfg, "k_grid");
  if (!cfg.at("a_grid").empty()) g.a_grid = to_list(cfg, "a_grid");
  if (!cfg.at("gamma_grid").empty()) g.gamma_grid = to_list(cfg, "gamma_grid");
  cfg["lambdas"] = join(g.lambdas);
  cfg["k_grid"] = join(g.k_grid);
  cfg["a_grid"] = join(g.a_grid);
  cfg["gamma_grid"] = join(g.gamma_grid);
  return g;
}

std::string selection_row(const std::string& label,
                          const std::vector<TrialSelection>& sels) {
  std::vector<double> err, rank, k, a;
  for (const auto& s : sels) {
    err.push_back(s.test_error);
    rank.push_back(static_cast<double>(s.rank));
    k.push_back(s.selected.k);
    a.push_back(s.selected.a);
  }
  return label + "," + fmt(sample_mean(err)) + "," + fmt(sample_std(err)) +
         "," + fmt(sample_mean(rank)) + "," + fmt(sample_mean(k)) + "," +
         fmt(sample_mean(a)) + "\n";
}

std::vector<TrialSelection> pick(const std::vector<CompletionTrial>& trials,
                                 bool thresholded) {
  std::vector<TrialSelection> out;
  for (const auto& t : trials)
    out.push_back(thresholded ? t.thresholded : t.raw);
  return out;
}

int cmd_norm(const std::string& config_path, const std::vector<std::string>& pairs,
             bool ksup_flag, bool box_flag) {
  Config cfg = {{"input", ""}, {"k", "0"},    {"a", "0"},
                {"b", "0"},    {"c", "0"},    {"rows", "0"},
                {"cols", "0"}};
  resolve(cfg, config_path, pairs);
  if (ksup_flag == box_flag)
    throw UsageError("norm: pass exactly one of --ksup / --box");
  if (cfg.at("input").empty()) throw UsageError("norm: input=FILE is required");

  const std::vector<double> nums = read_numbers(cfg.at("input"));
  const Index rows = to_index(cfg, "rows");
  const Index cols = to_index(cfg, "cols");
  DenseVector v;
  if (rows > 0 && cols > 0) {
    if (rows * cols != static_cast<Index>(nums.size()))
      throw UsageError("norm: rows*cols does not match the number count");
    DenseMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j)
        m(i, j) = nums[static_cast<size_t>(i * cols + j)];
    v = singular_values(m);
  } else {
    v = Eigen::Map<const DenseVector>(nums.data(),
                                      static_cast<Index>(nums.size()));
  }

  std::string out;
  if (ksup_flag) {
    KSupportParams kp;
    kp.k = to_index(cfg, "k");
    const KSupportResult res = k_support_norm(v, kp);
    out += "value=" + fmt(res.value) + "\n";
    out += "dual=" + fmt(dual_k_support_norm(v, kp)) + "\n";
    out += "q=" + std::to_string(res.q) + "\n";
  } else {
    BoxParams p;
    p.a = to_double(cfg, "a");
    p.b = to_double(cfg, "b");
    p.c = to_double(cfg, "c");
    const NormDecomposition nd = box_norm(v, p);
    out += "value=" + fmt(nd.value) + "\n";
    out += "dual=" + fmt(dual_box_norm(v, p)) + "\n";
    out += "q=" + std::to_string(nd.q) + "\n";
    out += "ell=" + std::to_string(nd.ell) + "\n";
    out += "alpha=" + fmt(nd.alpha) + "\n";
  }
  std::cout << out;
  return 0;
}

int cmd_bench_prox(const std::string& config_path,
                   const std::vector<std::string>& pairs) {
  Config cfg = {{"sizes", "1000,2000,4000,8000,16000"},
                {"runs", "11"},
                {"warmups", "3"},
                {"k_frac", "0.05"},
                {"lambda", "1"},
                {"seed", "1"},
                {"output", ""}};
  resolve(cfg, config_path, pairs);
  const std::vector<double> sizes = to_list(cfg, "sizes");
  const Index runs = to_index(cfg, "runs");
  const Index warmups = to_index(cfg, "warmups");
  const double k_frac = to_double(cfg, "k_frac");
  const double lambda = to_double(cfg, "lambda");
  const std::uint64_t seed = static_cast<std::uint64_t>(to_index(cfg, "seed"));
  if (runs < 1 || warmups < 0 || !(k_frac > 0.0) || k_frac > 1.0)
    throw UsageError("bench-prox: need runs >= 1, warmups >= 0, k_frac in (0,1]");

  std::string csv = echo_line("bench-prox", cfg);
  csv += "d,fast_seconds,reference_seconds\n";
  double sink = 0.0;
  for (double size : sizes) {
    const Index d = static_cast<Index>(std::llround(size));
    if (d < 2) throw UsageError("bench-prox: sizes must be >= 2");
    KSupportParams kp;
    kp.k = std::max<Index>(1, static_cast<Index>(std::llround(k_frac *
                                                              static_cast<double>(d))));
    ProxConfig pc;
    pc.lambda = lambda;

    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL *
                                static_cast<std::uint64_t>(d)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseVector w(d);
    for (Index i = 0; i < d; ++i) w(i) = gauss(rng);

    const DenseVector fast = prox_sq_ksup(w, kp, pc).x;
    const DenseVector ref = prox_sq_ksup_reference(w, kp, lambda);
    const double gap = (fast - ref).cwiseAbs().maxCoeff();
    if (gap > 1e-8) {
      std::cerr << "bench-prox: fast and reference disagree at d=" << d
                << " (max gap " << fmt(gap) << ")\n";
      return 3;
    }

    const auto time_median = [&](const std::function<void()>& body) {
      for (Index i = 0; i < warmups; ++i) body();
      std::vector<double> times;
      for (Index i = 0; i < runs; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
      }
      std::sort(times.begin(), times.end());
      return times[times.size() / 2];
    };
    const double fast_s =
        time_median([&] { sink += prox_sq_ksup(w, kp, pc).x.sum(); });
    const double ref_s =
        time_median([&] { sink += prox_sq_ksup_reference(w, kp, lambda).sum(); });
    csv += std::to_string(d) + "," + fmt(fast_s) + "," + fmt(ref_s) + "\n";
  }
  if (!std::isfinite(sink)) return 3;
  write_text(cfg.at("output"), csv);
  return 0;
}

int cmd_complete(const std::string& config_path,
                 const std::vector<std::string>& pairs) {
  Config cfg = {{"d", "100"},
                {"rank", "5"},
                {"source", "lowrank"},
                {"blocks", "5"},
                {"block_size", "20"},
                {"train_frac", "0.2"},
                {"validation_frac", "0.1"},
                {"trials", "20"},
                {"seed", "1"},
                {"tol", "1e-5"},
                {"max_iter", "1000"},
                {"penalties", "trace,el.net,ksup,box"},
                {"lambdas", ""},
                {"k_grid", ""},
                {"a_grid", ""},
                {"gamma_grid", ""},
                {"threshold", "1"},
                {"centered", "0"},
                {"eps_mean", "0"},
                {"data", ""},
                {"format", "movielens"},
                {"per_user", "1"},
                {"output", ""}};
  resolve(cfg, config_path, pairs);

  CompletionRunConfig run;
  run.grids = resolve_grids(cfg);
  run.tol = resolve_tol(cfg);
  run.max_iter = to_index(cfg, "max_iter");
  run.with_threshold = to_bool(cfg, "threshold");
  run.eps_mean = to_double(cfg, "eps_mean");
  const auto penalties = to_names(cfg, "penalties");
  const bool centered = to_bool(cfg, "centered");

  std::map<std::string, std::vector<CompletionTrial>> table;
  if (!cfg.at("data").empty()) {
    const std::string& format = cfg.at("format");
    RatingsFormat rf;
    if (format == "movielens")
      rf = RatingsFormat::movielens_tab;
    else if (format == "jester")
      rf = RatingsFormat::jester_csv;
    else
      throw UsageError("complete: format must be movielens or jester");
    const CompletionProblem base = load_ratings(cfg.at("data"), rf);
    RatingsExperimentOptions opt;
    opt.penalties = penalties;
    opt.centered_variants = centered;
    opt.train_frac = to_double(cfg, "train_frac");
    opt.validation_frac = to_double(cfg, "validation_frac");
    opt.per_user = to_bool(cfg, "per_user");
    opt.trials = to_index(cfg, "trials");
    opt.seed = static_cast<std::uint64_t>(to_index(cfg, "seed"));
    opt.run = run;
    table = run_ratings_experiment(base, opt);
  } else {
    CompletionExperimentOptions opt;
    opt.penalties = penalties;
    opt.centered_variants = centered;
    opt.source = cfg.at("source");
    opt.d = to_index(cfg, "d");
    opt.rank = to_index(cfg, "rank");
    opt.blocks = to_index(cfg, "blocks");
    opt.block_size = to_index(cfg, "block_size");
    opt.train_frac = to_double(cfg, "train_frac");
    opt.validation_frac = to_double(cfg, "validation_frac");
    opt.trials = to_index(cfg, "trials");
    opt.seed = static_cast<std::uint64_t>(to_index(cfg, "seed"));
    opt.run = run;
    table = run_completion_experiment(opt);
  }

  std::string csv = echo_line("complete", cfg);
  csv += "penalty,variant,error_mean,error_std,rank,k,a\n";
  const auto emit = [&](const std::string& label) {
    csv += selection_row(label + ",raw", pick(table.at(label), false));
    if (run.with_threshold)
      csv += selection_row(label + ",thresholded", pick(table.at(label), true));
  };
  for (const auto& name : penalties) emit(name);
  if (centered)
    for (const auto& name : penalties) emit("c-" + name);
  write_text(cfg.at("output"), csv);
  return 0;
}

int cmd_mtl(const std::string& config_path, const std::vector<std::string>& pairs) {
  Config cfg = {{"source", "blocks"},
                {"d", "100"},
                {"blocks", "5"},
                {"block_size", "20"},
                {"train_frac", ""},
                {"validation_frac", ""},
                {"trials", "20"},
                {"seed", "1"},
                {"tol", "1e-5"},
                {"max_iter", "1000"},
                {"penalties", "fr,trace,el.net,ksup,box"},
                {"lambdas", ""},
                {"k_grid", ""},
                {"a_grid", ""},
                {"gamma_grid", ""},
                {"centered", "1"},
                {"eps_mean", "0"},
                {"data", ""},
                {"output", ""}};
  resolve(cfg, config_path, pairs);
  const bool from_file = !cfg.at("data").empty();
  if (cfg.at("train_frac").empty())
    cfg["train_frac"] = from_file ? "0.5" : "0.1";
  if (cfg.at("validation_frac").empty())
    cfg["validation_frac"] = from_file ? "0.25" : "0.1";

  CompletionRunConfig run;
  run.grids = resolve_grids(cfg);
  run.tol = resolve_tol(cfg);
  run.max_iter = to_index(cfg, "max_iter");
  run.with_threshold = false;
  run.eps_mean = to_double(cfg, "eps_mean");
  const auto penalties = to_names(cfg, "penalties");
  const bool centered = to_bool(cfg, "centered");

  std::string csv = echo_line("mtl", cfg);
  csv += "penalty,error_mean,error_std,rank,k,a\n";
  if (from_file) {
    const TaskDataset data = load_lenk(cfg.at("data"));
    MtlExperimentOptions opt;
    opt.penalties = penalties;
    opt.centered_variants = centered;
    opt.train_frac = to_double(cfg, "train_frac");
    opt.validation_frac = to_double(cfg, "validation_frac");
    opt.trials = to_index(cfg, "trials");
    opt.seed = static_cast<std::uint64_t>(to_index(cfg, "seed"));
    opt.run = run;
    const auto table = run_mtl_experiment(data, opt);
    for (const auto& name : penalties) csv += selection_row(name, table.at(name));
    if (centered)
      for (const auto& name : penalties)
        csv += selection_row("c-" + name, table.at("c-" + name));
  } else {
    if (cfg.at("source") != "blocks")
      throw UsageError("mtl: source must be blocks (or pass data=FILE)");
    CompletionExperimentOptions opt;
    opt.penalties = penalties;
    opt.centered_variants = centered;
    opt.source = "blocks";
    opt.d = to_index(cfg, "d");
    opt.blocks = to_index(cfg, "blocks");
    opt.block_size = to_index(cfg, "block_size");
    opt.train_frac = to_double(cfg, "train_frac");
    opt.validation_frac = to_double(cfg, "validation_frac");
    opt.trials = to_index(cfg, "trials");
    opt.seed = static_cast<std::uint64_t>(to_index(cfg, "seed"));
    opt.run = run;
    const auto table = run_completion_experiment(opt);
    for (const auto& name : penalties)
      csv += selection_row(name, pick(table.at(name), false));
    if (centered)
      for (const auto& name : penalties)
        csv += selection_row("c-" + name, pick(table.at("c-" + name), false));
  }
  write_text(cfg.at("output"), csv);
  return 0;
}

int cmd_gen(const std::string& config_path, const std::vector<std::string>& pairs,
            const std::string& source) {
  Config cfg = {{"d", "100"},          {"r", "5"},    {"noise", "1"},
                {"blocks", "5"},       {"block_size", "20"},
                {"seed", "1"},         {"output", "problem.txt"}};
  resolve(cfg, config_path, pairs);
  const std::uint64_t seed = static_cast<std::uint64_t>(to_index(cfg, "seed"));
  CompletionProblem problem;
  if (source == "lowrank")
    problem = gen_lowrank(to_index(cfg, "d"), to_index(cfg, "r"),
                          to_bool(cfg, "noise"), seed);
  else if (source == "blocks")
    problem = gen_block_clustered(to_index(cfg, "d"), to_index(cfg, "blocks"),
                                  to_index(cfg, "block_size"), seed);
  else
    throw UsageError("gen: source must be lowrank or blocks");
  save_problem(problem, cfg.at("output"));
  std::cout << "wrote " << cfg.at("output") << " (" << problem.rows() << "x"
            << problem.cols() << ", " << problem.train.entries.size()
            << " observations)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"box-norm / k-support norm toolkit"};
  app.require_subcommand(1);

  struct SubArgs {
    std::string config;
    std::vector<std::string> pairs;
  };
  const auto wire = [](CLI::App* sub, SubArgs& args) {
    sub->add_option("--config", args.config, "key=value config file");
    sub->add_option("pairs", args.pairs, "key=value overrides");
  };

  SubArgs norm_args, bench_args, complete_args, mtl_args, gen_args;
  bool ksup_flag = false, box_flag = false;
  std::string gen_source;

  CLI::App* norm = app.add_subcommand("norm", "evaluate a norm and its dual");
  norm->add_flag("--ksup", ksup_flag, "k-support norm (k=K)");
  norm->add_flag("--box", box_flag, "box-norm (a=A b=B c=C)");
  wire(norm, norm_args);

  CLI::App* bench =
      app.add_subcommand("bench-prox", "time fast vs reference prox");
  wire(bench, bench_args);

  CLI::App* complete =
      app.add_subcommand("complete", "matrix completion experiment");
  wire(complete, complete_args);

  CLI::App* mtl = app.add_subcommand("mtl", "multitask experiment");
  wire(mtl, mtl_args);

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic problem");
  gen->add_option("source", gen_source, "lowrank or blocks")->required();
  wire(gen, gen_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (norm->parsed())
      return cmd_norm(norm_args.config, norm_args.pairs, ksup_flag, box_flag);
    if (bench->parsed()) return cmd_bench_prox(bench_args.config, bench_args.pairs);
    if (complete->parsed())
      return cmd_complete(complete_args.config, complete_args.pairs);
    if (mtl->parsed()) return cmd_mtl(mtl_args.config, mtl_args.pairs);
    if (gen->parsed())
      return cmd_gen(gen_args.config, gen_args.pairs, gen_source);
    std::cerr << "no command given\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "solve failure: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
