// marginlab command-line driver: seeded experiments with CSV reports.
//
// Exit codes: 0 success, 2 config error, 3 resource limit, 4 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "marginlab/marginlab.hpp"

namespace fs = std::filesystem;
using namespace marginlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;
constexpr int kExitNumerical = 4;

const char* kUsage = R"(usage: marginlab <command> [--config FILE] [--flag value ...]

commands:
  margin        one margin instance: sample A, minimize d_q(A sigma, E)
  concentrate   Monte Carlo margin concentration + bound report
  threshold     feasibility frequencies over a delta grid, window estimate
  disc-scaling  mean/sd of square lq discrepancy over a list of N
  perceptron    margin-vs-K curve, critical K and prefix capacity
  balance       GOE matrix balancing: exact disc over sign vectors
  gradcheck     |margin gradient| vs central finite differences

common flags:
  --config FILE   flat key = value file ([section] headers are cosmetic);
                  command-line flags override file values
  --seed U64      PRNG seed; omitted -> drawn from system entropy
  --out DIR       output directory (default: out)
  --threads K     worker threads (default: hardware); never changes output
  --trials T      Monte Carlo trials

model flags:
  --n N           feasible-set dimension (disc-scaling: comma list)
  --m M           constraint rows
  --q Q           exponent: integer >= 2 or 'inf'
  --set-q KIND    hypercube | sphere | singleton  (singleton = e_1)
  --set-e KIND    zero | halfline | rect | ball | blocks
  --k X           set parameter: halfline [K,inf), rect bound, ball radius
  --blocks LIST   block sizes, e.g. 4,3 -> [K,inf)^4 x (-inf,-K]^3
  --delta-grid G  comma list, lo:hi:count, or 'auto'
  --k-grid G      same syntax, used by perceptron
  --d D           (balance) matrix dimension; GOE convention: offdiag
                  variance 1, diagonal variance 2
  --big-n N       (balance) number of matrices, enumeration cap N <= 24
  --restarts R    sphere solver restarts        --steps S   descent steps
  --h H           finite-difference step (gradcheck)
)";

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: " + key + " expects an unsigned integer, got '" + s + "'");
  }
}

double parse_real(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + s + "'");
  }
}

// --q accepts integers >= 2 and the token "inf"
double parse_q(const std::string& s) {
  if (s == "inf") return kInf;
  const std::uint64_t v = parse_u64("q", s);
  if (v < 2) throw std::invalid_argument("config: q must be an integer >= 2 or 'inf'");
  return static_cast<double>(v);
}

// "1,2,3" or "lo:hi:count"
std::vector<double> parse_grid(const std::string& key, const std::string& s) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::istringstream in(s);
    std::string lo_s, hi_s, n_s;
    if (!std::getline(in, lo_s, ':') || !std::getline(in, hi_s, ':') || !std::getline(in, n_s))
      throw std::invalid_argument("config: " + key + " expects lo:hi:count");
    const double lo = parse_real(key, lo_s);
    const double hi = parse_real(key, hi_s);
    const std::uint64_t n = parse_u64(key, n_s);
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("config: bad range in " + key);
    for (std::uint64_t i = 0; i < n; ++i)
      out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
  }
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_real(key, item));
  if (out.empty()) throw std::invalid_argument("config: empty list in " + key);
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_u64(key, item));
  if (out.empty()) throw std::invalid_argument("config: empty list in " + key);
  return out;
}

struct Run {
  std::string command;
  Config cfg;          // effective, echoed into every CSV
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  fs::path out_dir;

  bool has(const std::string& k) const { return cfg.has(k); }
  std::string str(const std::string& k) const { return cfg.get(k); }
  std::uint64_t u64(const std::string& k) const { return parse_u64(k, cfg.get(k)); }
  double real(const std::string& k) const { return parse_real(k, cfg.get(k)); }

  void require(std::initializer_list<const char*> keys) const {
    for (const char* k : keys)
      if (!cfg.has(k))
        throw std::invalid_argument("config: missing required key '" + std::string(k) +
                                    "' for command " + command);
  }

  CsvWriter csv(const std::string& name) const {
    return CsvWriter((out_dir / name).string(), command, cfg, seed);
  }
};

FeasibleSet build_feasible(const Run& run) {
  run.require({"set-q", "n"});
  const std::string kind = run.str("set-q");
  const std::size_t n = run.u64("n");
  if (kind == "hypercube") return FeasibleSet::scaled_hypercube(n);
  if (kind == "sphere") return FeasibleSet::unit_sphere(n);
  if (kind == "singleton") {
    Vector e1(n, 0.0);
    e1[0] = 1.0;
    return FeasibleSet::singleton(std::move(e1));
  }
  throw std::invalid_argument("config: unknown set-q '" + kind + "'");
}

ConstraintSet build_constraint(const Run& run) {
  run.require({"set-e", "m"});
  const std::string kind = run.str("set-e");
  const std::size_t m = run.u64("m");
  const double k = run.has("k") ? run.real("k") : 0.0;
  if (kind == "zero") return ConstraintSet::singleton_zero(m);
  if (kind == "halfline") return ConstraintSet::half_line_product(m, k);
  if (kind == "rect") return ConstraintSet::rectangle(Vector(m, k));
  if (kind == "ball") return ConstraintSet::euclidean_ball(m, k);
  if (kind == "blocks") {
    run.require({"blocks"});
    const auto sizes = parse_size_list("blocks", run.str("blocks"));
    std::size_t total = 0;
    std::vector<ConstraintSet> factors;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      // alternate [K, inf) and (-inf, -K], the random-labels shape
      if (i % 2 == 0)
        factors.push_back(ConstraintSet::interval_product(sizes[i], {Interval{k, kInf}}));
      else
        factors.push_back(ConstraintSet::interval_product(sizes[i], {Interval{-kInf, -k}}));
      total += sizes[i];
    }
    if (total != m)
      throw std::invalid_argument("config: block sizes sum to " + std::to_string(total) +
                                  " but m = " + std::to_string(m));
    return ConstraintSet::block_product(std::move(factors));
  }
  throw std::invalid_argument("config: unknown set-e '" + kind + "'");
}

ExperimentConfig build_experiment(const Run& run) {
  ExperimentConfig cfg{build_feasible(run), build_constraint(run)};
  run.require({"q", "trials"});
  cfg.q = parse_q(run.str("q"));
  cfg.trials = run.u64("trials");
  cfg.seed = run.seed;
  cfg.threads = run.threads;
  if (run.has("restarts")) cfg.sphere.restarts = run.u64("restarts");
  if (run.has("steps")) cfg.sphere.steps = run.u64("steps");
  return cfg;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t t) {
  return RandomStream(seed).substream(t).seed();
}

void write_concentration_summary(const Run& run, const ConcentrationReport& rep) {
  CsvWriter summary = run.csv("summary.csv");
  summary.header({"config_hash", "mean", "var", "var_ci_lo", "var_ci_hi", "theorem1_bound",
                  "block_bound", "poincare_rhs", "l1l2_rhs", "sum_a2", "sum_b2", "var_se",
                  "mean_over_sd", "var_over_theorem1", "effective_q", "sandwich_max_violation",
                  "failed_trials"});
  summary.row() << config_hash(run.cfg) << rep.mean << rep.variance << rep.variance_ci.lo
                << rep.variance_ci.hi << rep.bounds.theorem1_value << rep.bounds.block_value
                << rep.bounds.poincare_rhs << rep.bounds.l1l2_rhs << rep.bounds.sum_a2
                << rep.bounds.sum_b2 << rep.variance_se << rep.mean_over_sd
                << rep.var_over_theorem1 << rep.effective_q << rep.sandwich_max_violation
                << rep.failed_trials;
}

void write_trials(const Run& run, const std::vector<double>& margins) {
  CsvWriter trials = run.csv("trials.csv");
  trials.header({"trial", "seed", "margin"});
  for (std::size_t t = 0; t < margins.size(); ++t)
    trials.row() << t << trial_seed(run.seed, t) << margins[t];
}

// --- commands --------------------------------------------------------------

int cmd_margin(Run& run) {
  run.require({"q"});
  const double q = parse_q(run.str("q"));
  FeasibleSet q_set = build_feasible(run);
  ConstraintSet e_set = build_constraint(run);
  RandomStream stream = RandomStream(run.seed).substream(0);
  Matrix a = sample_gaussian_matrix(stream, e_set.dim(), q_set.dim());

  MarginResult res = [&] {
    if (q_set.is_sphere()) {
      SphereSolverOptions opts;
      if (run.has("restarts")) opts.restarts = run.u64("restarts");
      if (run.has("steps")) opts.steps = run.u64("steps");
      opts.seed = stream.next_u64();
      return margin_continuous(a, e_set, q, opts);
    }
    return margin_exact(a, q_set, e_set, q);
  }();

  CsvWriter summary = run.csv("summary.csv");
  summary.header({"config_hash", "margin", "exact", "q"});
  summary.row() << config_hash(run.cfg) << res.value << (res.exact ? 1 : 0) << run.str("q");
  CsvWriter trials = run.csv("trials.csv");
  trials.header({"trial", "seed", "margin"});
  trials.row() << 0 << trial_seed(run.seed, 0) << res.value;
  std::cout << "margin = " << format_double(res.value) << (res.exact ? " (exact)" : " (heuristic upper bound)")
            << "\n";
  return kExitOk;
}

int cmd_concentrate(Run& run) {
  ExperimentConfig cfg = build_experiment(run);
  ConcentrationReport rep = run_concentration(cfg);
  write_concentration_summary(run, rep);
  write_trials(run, rep.margins);
  std::cout << "mean = " << format_double(rep.mean) << "  var = " << format_double(rep.variance)
            << "  poincare_rhs = " << format_double(rep.bounds.poincare_rhs) << "\n";
  return kExitOk;
}

int cmd_threshold(Run& run) {
  ExperimentConfig cfg = build_experiment(run);
  std::vector<double> grid;
  if (run.has("delta-grid") && run.str("delta-grid") != "auto")
    grid = parse_grid("delta-grid", run.str("delta-grid"));
  ThresholdReport rep = run_threshold(cfg, std::move(grid));

  CsvWriter summary = run.csv("summary.csv");
  summary.header({"config_hash", "delta_05", "delta_95", "window", "out_of_range_low",
                  "out_of_range_high"});
  summary.row() << config_hash(run.cfg) << rep.delta_05 << rep.delta_95 << rep.window
                << (rep.out_of_range_low ? 1 : 0) << (rep.out_of_range_high ? 1 : 0);
  write_trials(run, rep.margins);
  CsvWriter tcsv = run.csv("threshold.csv");
  tcsv.header({"delta", "freq_raw", "freq_isotonic"});
  for (std::size_t i = 0; i < rep.deltas.size(); ++i)
    tcsv.row() << rep.deltas[i] << rep.freq_raw[i] << rep.freq_isotonic[i];
  std::cout << "window = " << format_double(rep.window) << " [delta_05 = "
            << format_double(rep.delta_05) << ", delta_95 = " << format_double(rep.delta_95)
            << "]\n";
  return kExitOk;
}

int cmd_disc_scaling(Run& run) {
  run.require({"n", "q", "trials"});
  const auto n_list = parse_size_list("n", run.str("n"));
  const double q = parse_q(run.str("q"));
  const std::size_t trials = run.u64("trials");
  auto reports = disc_scaling_reports(n_list, q, trials, run.seed, run.threads);

  CsvWriter summary = run.csv("summary.csv");
  summary.header({"config_hash", "n", "mean", "sd", "mean_over_sd"});
  for (std::size_t i = 0; i < n_list.size(); ++i)
    summary.row() << config_hash(run.cfg) << n_list[i] << reports[i].mean
                  << std::sqrt(reports[i].variance) << reports[i].mean_over_sd;
  CsvWriter trials_csv = run.csv("trials.csv");
  trials_csv.header({"n", "trial", "seed", "margin"});
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const std::uint64_t per_n_seed = hash64(run.seed, n_list[i]);
    for (std::size_t t = 0; t < reports[i].margins.size(); ++t)
      trials_csv.row() << n_list[i] << t << trial_seed(per_n_seed, t) << reports[i].margins[t];
  }
  for (std::size_t i = 0; i < n_list.size(); ++i)
    std::cout << "N = " << n_list[i] << "  mean/sd = " << format_double(reports[i].mean_over_sd)
              << "\n";
  return kExitOk;
}

int cmd_perceptron(Run& run) {
  run.require({"n", "m", "trials"});
  const std::size_t n = run.u64("n");
  const std::size_t m = run.u64("m");
  const std::size_t trials = run.u64("trials");
  if (trials < 2) throw std::invalid_argument("config: trials must be >= 2");
  const double k_at = run.has("k") ? run.real("k") : 0.0;
  FeasibleSet q_set = FeasibleSet::scaled_hypercube(n);

  std::vector<double> kc(trials), alpha(trials), margin_at_k(trials);
  RandomStream root(run.seed);
  detail::parallel_for(trials, run.threads, [&](std::size_t t) {
    RandomStream stream = root.substream(t);
    Matrix a = sample_gaussian_matrix(stream, m, n);
    PerceptronCurve curve = perceptron_margin_curve(a, q_set, {k_at});
    kc[t] = curve.k_c;
    margin_at_k[t] = curve.margins.front();
    std::vector<Vector> rows;
    rows.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      Vector r(n);
      for (std::size_t j = 0; j < n; ++j) r[j] = a(i, j);
      rows.push_back(std::move(r));
    }
    alpha[t] = perceptron_capacity(rows, q_set).value();
  });

  // feasibility in K: margin(K) = 0 iff K <= K_c, i.e. P(feasible at K)
  // = P(K_c >= K); the increasing-threshold machinery runs on -K_c over -K
  std::vector<double> k_grid;
  if (run.has("k-grid") && run.str("k-grid") != "auto")
    k_grid = parse_grid("k-grid", run.str("k-grid"));
  std::vector<double> neg_kc(trials);
  for (std::size_t t = 0; t < trials; ++t) neg_kc[t] = -kc[t];
  std::vector<double> neg_grid;
  for (auto it = k_grid.rbegin(); it != k_grid.rend(); ++it) neg_grid.push_back(-*it);
  ThresholdReport thr = threshold_from_samples(neg_kc, std::move(neg_grid));

  CsvWriter summary = run.csv("summary.csv");
  summary.header({"config_hash", "kc_mean", "kc_sd", "alpha_mean", "k_05", "k_95", "window",
                  "out_of_range_low", "out_of_range_high"});
  {
    const std::span<const double> kcs(kc);
    // feasibility is 0.05 where infeasibility is 0.95: K at feasibility p
    // maps from the -K crossing at 1-p... the transformed curve is
    // P(K_c >= K), so delta_05 on -K is feasibility 0.05 at K = -delta_05
    summary.row() << config_hash(run.cfg) << mean(kcs) << std::sqrt(sample_variance(kcs))
                  << mean(std::span<const double>(alpha)) << -thr.delta_05 << -thr.delta_95
                  << thr.window << (thr.out_of_range_low ? 1 : 0)
                  << (thr.out_of_range_high ? 1 : 0);
  }
  CsvWriter trials_csv = run.csv("trials.csv");
  trials_csv.header({"trial", "seed", "k_c", "alpha_hat", "margin_at_k"});
  for (std::size_t t = 0; t < trials; ++t)
    trials_csv.row() << t << trial_seed(run.seed, t) << kc[t] << alpha[t] << margin_at_k[t];
  CsvWriter tcsv = run.csv("threshold.csv");
  tcsv.header({"k", "freq_feasible_raw", "freq_feasible_isotonic"});
  for (std::size_t i = 0; i < thr.deltas.size(); ++i) {
    const std::size_t r = thr.deltas.size() - 1 - i;  // back to ascending K
    tcsv.row() << -thr.deltas[r] << thr.freq_raw[r] << thr.freq_isotonic[r];
  }
  std::cout << "K_c mean = " << format_double(mean(std::span<const double>(kc)))
            << "  alpha mean = " << format_double(mean(std::span<const double>(alpha))) << "\n";
  return kExitOk;
}

int cmd_balance(Run& run) {
  run.require({"d", "big-n", "trials"});
  const std::size_t d = run.u64("d");
  const std::size_t big_n = run.u64("big-n");
  const std::size_t trials = run.u64("trials");
  BalancingReport rep = balancing_variance_experiment(d, big_n, trials, run.seed, run.threads);

  CsvWriter summary = run.csv("summary.csv");
  summary.header({"config_hash", "d", "big_n", "mean", "var", "var_ci_lo", "var_ci_hi", "var_se",
                  "mean_over_sd", "ratio_mean_sd_sqrtd"});
  summary.row() << config_hash(run.cfg) << rep.d << rep.n << rep.mean << rep.variance
                << rep.variance_ci.lo << rep.variance_ci.hi << rep.variance_se << rep.mean_over_sd
                << rep.ratio_mean_sd_sqrtd;
  CsvWriter trials_csv = run.csv("trials.csv");
  trials_csv.header({"trial", "seed", "margin", "lambda_top"});
  for (std::size_t t = 0; t < trials; ++t)
    trials_csv.row() << t << trial_seed(run.seed, t) << rep.discs[t] << rep.lambda_top[t];
  std::cout << "mean disc = " << format_double(rep.mean) << "  var = "
            << format_double(rep.variance) << " (1/d = " << format_double(1.0 / static_cast<double>(d))
            << ")\n";
  return kExitOk;
}

int cmd_gradcheck(Run& run) {
  run.require({"n", "m", "q"});
  const std::size_t n = run.u64("n");
  const std::size_t m = run.u64("m");
  const double q_req = parse_q(run.str("q"));
  const double h = run.has("h") ? run.real("h") : 1e-5;
  const std::size_t instances = run.has("trials") ? run.u64("trials") : 100;
  if (!(h > 0.0)) throw std::invalid_argument("config: h must be > 0");
  const bool substituted = is_inf_exponent(q_req);
  const double q = substituted ? effective_exponent(m, q_req) : q_req;

  FeasibleSet q_set = FeasibleSet::scaled_hypercube(n);
  ConstraintSet e_set = ConstraintSet::singleton_zero(m);

  std::vector<double> devs(instances, std::numeric_limits<double>::quiet_NaN());
  std::vector<int> unique(instances, 0);
  RandomStream root(run.seed);
  detail::parallel_for(instances, run.threads, [&](std::size_t t) {
    RandomStream stream = root.substream(t);
    Matrix a = sample_gaussian_matrix(stream, m, n);
    if (!unique_minimizer(a, q_set, e_set, q, 10.0 * h)) return;
    unique[t] = 1;
    MarginResult res = margin_exact(a, q_set, e_set, q);
    MarginGradient g = margin_gradient(res, q, substituted);
    Matrix fd = finite_diff_gradient(a, q_set, e_set, q, h);
    double dev = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        dev = std::max(dev, std::abs(g.entries(i, j) - std::abs(fd(i, j))));
    devs[t] = dev;
  });

  std::size_t n_unique = 0;
  double max_dev = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    if (unique[t]) {
      ++n_unique;
      max_dev = std::max(max_dev, devs[t]);
    }
  }
  CsvWriter summary = run.csv("summary.csv");
  summary.header({"config_hash", "instances", "unique_instances", "max_abs_deviation", "q_used", "h"});
  summary.row() << config_hash(run.cfg) << instances << n_unique << max_dev << q << h;
  CsvWriter trials_csv = run.csv("trials.csv");
  trials_csv.header({"trial", "seed", "max_abs_deviation", "unique_minimizer"});
  for (std::size_t t = 0; t < instances; ++t)
    trials_csv.row() << t << trial_seed(run.seed, t) << devs[t] << unique[t];
  std::cout << "max |gradient - |fd|| over " << n_unique << " unique instances = "
            << format_double(max_dev) << "\n";
  return kExitOk;
}

// --- dispatch ---------------------------------------------------------------

const std::set<std::string> kCommands = {"margin",     "concentrate", "threshold", "disc-scaling",
                                         "perceptron", "balance",     "gradcheck"};

// every key any command may consume; unknown keys are config errors
const std::set<std::string> kKnownKeys = {
    "seed", "trials", "n", "m", "q", "set-q", "set-e", "blocks", "k", "k-grid", "delta-grid",
    "d", "big-n", "restarts", "steps", "threads", "out", "h", "cap"};

int run_command(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << kUsage;
    return kExitConfig;
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h" || command == "help") {
    std::cout << kUsage;
    return kExitOk;
  }
  if (!kCommands.count(command)) {
    std::cerr << "unknown command '" << command << "'\n" << kUsage;
    return kExitConfig;
  }

  // flags --key value; --config merged first, flags override
  Config flag_cfg;
  std::string config_path;
  for (int i = 2; i < argc; ++i) {
    std::string key = argv[i];
    if (key.rfind("--", 0) != 0)
      throw std::invalid_argument("config: expected --flag, got '" + key + "'");
    key = key.substr(2);
    if (i + 1 >= argc) throw std::invalid_argument("config: flag --" + key + " needs a value");
    const std::string value = argv[++i];
    if (key == "config") {
      config_path = value;
      continue;
    }
    if (flag_cfg.has(key)) throw std::invalid_argument("config: duplicate flag --" + key);
    flag_cfg.set(key, value);
  }

  Config cfg;
  if (!config_path.empty()) cfg = Config::parse_file(config_path);
  for (const auto& [k, v] : flag_cfg.entries()) cfg.set(k, v);
  for (const auto& [k, v] : cfg.entries())
    if (!kKnownKeys.count(k))
      throw std::invalid_argument("config: unknown key '" + k + "'");

  Run run;
  run.command = command;
  run.seed = cfg.has("seed") ? parse_u64("seed", cfg.get("seed")) : entropy_seed();
  run.threads = cfg.has("threads") ? parse_u64("threads", cfg.get("threads")) : 0;
  run.out_dir = cfg.has("out") ? fs::path(cfg.get("out")) : fs::path("out");
  // runtime knobs stay out of the hashed/echoed config so reruns and thread
  // counts cannot change output bytes
  cfg.set("command", command);
  Config echo;
  for (const auto& [k, v] : cfg.entries())
    if (k != "threads" && k != "out" && k != "seed") echo.set(k, v);
  run.cfg = echo;
  fs::create_directories(run.out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  int rc;
  if (command == "margin") rc = cmd_margin(run);
  else if (command == "concentrate") rc = cmd_concentrate(run);
  else if (command == "threshold") rc = cmd_threshold(run);
  else if (command == "disc-scaling") rc = cmd_disc_scaling(run);
  else if (command == "perceptron") rc = cmd_perceptron(run);
  else if (command == "balance") rc = cmd_balance(run);
  else rc = cmd_gradcheck(run);
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  // duration goes to stdout, never into the CSVs: reruns stay byte-identical
  std::cout << "seed " << run.seed << "; wrote " << run.out_dir.string() << "/*.csv in "
            << format_double(dt.count()) << " s\n";
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_command(argc, argv);
  } catch (const resource_limit_error& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kExitResource;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const degeneracy_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
