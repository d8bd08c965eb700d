// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// quantities underneath. Exit status is nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "nete/json.hpp"
#include "nete/nete.hpp"
#include "oracles.hpp"

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
};

int g_failures = 0;

void run_criterion(int id, const char* name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.pass) ++g_failures;
  std::printf("[%s] criterion %d %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", id, name, out.summary.c_str(), secs);
  std::fflush(stdout);
}

void detail(const char* fmt, auto... args) {
  std::printf("       ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ---------------------------------------------------------------------------
Outcome hill_recovery() {
  bool pass = true;
  std::string summary;
  for (double beta : {1.5, 2.0, 2.5}) {
    int hits = 0;
    int hits_prefix = 0;
    double mean_k = 0.0;
    for (std::uint64_t run = 0; run < 20; ++run) {
      nete::Rng rng(nete::derive_seed(1001, run));
      std::vector<double> x(50000);
      for (auto& v : x) v = nete::sample_pareto(beta, rng);
      const auto h = nete::adaptive_hill(x);
      hits += std::abs(h.gamma_hat - 1.0 / beta) <= 0.06 ? 1 : 0;
      mean_k += static_cast<double>(h.k) / 20.0;
      nete::AdaptiveHillOptions prefix;
      prefix.scan = nete::HillScan::prefix;
      hits_prefix += std::abs(nete::adaptive_hill(x, prefix).gamma_hat - 1.0 / beta) <= 0.06 ? 1 : 0;
    }
    detail("beta=%.1f: %d/20 within 0.06 of %.4f (mean k=%.1f); prefix scan: %d/20", beta, hits, 1.0 / beta, mean_k,
           hits_prefix);
    pass = pass && hits >= 18;
    summary += fmt("%sbeta=%.1f %d/20", summary.empty() ? "" : ", ", beta, hits);
  }
  return {pass, summary + " (need >= 18/20 each)"};
}

// 2 ---------------------------------------------------------------------------
Outcome oracle_agreement() {
  bool pass = true;
  std::string summary;
  constexpr int kReplications = 10;
  for (auto [alpha, beta] : {std::pair{1.0, 2.5}, std::pair{1.0, 1.5}, std::pair{2.0, 2.5}}) {
    const double truth = nete::ground_truth_nete(alpha, beta);
    double mean = 0.0;
    for (int r = 0; r < kReplications; ++r) {
      mean += nete::oracle::counterfactual_nete(alpha, beta, 1000000, 0.999, 1, 1,
                                                nete::derive_seed(2002, static_cast<std::uint64_t>(r))) /
              kReplications;
    }
    const double rel = mean / truth - 1.0;
    pass = pass && std::abs(rel) <= 0.10;
    detail("(alpha,beta)=(%.1f,%.1f): oracle %.4f vs %.4f, rel %+0.4f", alpha, beta, mean, truth, rel);
    summary += fmt("%s(%.0f,%.1f) %+.3f", summary.empty() ? "" : ", ", alpha, beta, rel);

    // Same oracle on the 30-dimensional benchmark noise, single draw, for the record.
    const double wide = nete::oracle::counterfactual_nete(alpha, beta, 1000000, 0.999, 30, 5, 2003);
    detail("  d_z=30, d_u=5 single draw: %.4f (rel %+0.4f)", wide, wide / truth - 1.0);
  }
  return {pass, summary + " relative (need |rel| <= 0.10)"};
}

// 3 ---------------------------------------------------------------------------
Outcome consistency() {
  nete::ExperimentConfig cfg;
  cfg.configs = {nete::DgpSpec{1.0, 2.5, 30, 5, nete::NoiseKind::linear_pareto, 5}};
  cfg.n_grid = {2000, 5000, 10000, 20000};
  cfg.repetitions = 50;
  cfg.seed = 3003;
  cfg.estimators = {nete::Method::evt_dr};
  const auto result = nete::run_mse_benchmark(cfg);
  std::vector<double> abs_err;
  for (const auto& cell : result.cells) {
    detail("n=%-6ld mean %.4f  se %.4f  mse %.5f  bias %+.4f  failures %zu", static_cast<long>(cell.n),
           cell.mean_theta, cell.std_error, cell.mse, cell.bias, cell.failure_count);
    abs_err.push_back(std::abs(cell.bias));
  }
  int shrinking = 0;
  for (std::size_t i = 1; i < abs_err.size(); ++i) shrinking += abs_err[i] < abs_err[i - 1] ? 1 : 0;
  detail("|mean - 5/3| shrinks in %d of %zu grid steps", shrinking, abs_err.size() - 1);

  const auto& small = result.cell(0, 2000, nete::Method::evt_dr);
  const auto& large = result.cell(0, 20000, nete::Method::evt_dr);
  const double z = std::abs(large.mean_theta - large.ground_truth) / large.std_error;
  const bool pass = large.mse < small.mse && z <= 3.0;
  return {pass, fmt("mse %.5f (2k) -> %.5f (20k); mean %.4f is %.2f se from 5/3 (need < and <= 3)", small.mse,
                    large.mse, large.mean_theta, z)};
}

// 4 ---------------------------------------------------------------------------
Outcome dominance() {
  nete::ExperimentConfig cfg;
  cfg.configs = {nete::DgpSpec{1.0, 1.5, 50, 10}, nete::DgpSpec{1.0, 1.5, 30, 5}, nete::DgpSpec{1.0, 2.5, 30, 5},
                 nete::DgpSpec{2.0, 2.5, 30, 5}};
  cfg.n_grid = {20000};
  cfg.repetitions = 50;
  cfg.seed = 4004;
  cfg.estimators = {nete::Method::evt_dr, nete::Method::naive_dr};
  const auto result = nete::run_mse_benchmark(cfg);
  int wins = 0;
  for (std::size_t c = 0; c < cfg.configs.size(); ++c) {
    const auto& evt = result.cell(c, 20000, nete::Method::evt_dr);
    const auto& naive = result.cell(c, 20000, nete::Method::naive_dr);
    const bool win = evt.mse <= naive.mse;
    wins += win ? 1 : 0;
    const auto& s = cfg.configs[c];
    detail("(%.0f,%.1f,%ld,%ld): evt_dr mse %.4g (fail %zu) vs naive_dr mse %.4g (fail %zu)%s", s.alpha, s.beta,
           static_cast<long>(s.d_z), static_cast<long>(s.d_u), evt.mse, evt.failure_count, naive.mse,
           naive.failure_count, win ? "" : "  <- naive better");
  }
  return {wins >= 3, fmt("evt_dr <= naive_dr in %d of 4 configs at n=20000 (need >= 3)", wins)};
}

// 5 ---------------------------------------------------------------------------
Outcome mixture() {
  nete::ExperimentConfig cfg;
  cfg.configs = {nete::DgpSpec{1.0, 1.5, 30, 10, nete::NoiseKind::mixture},
                 nete::DgpSpec{1.0, 1.5, 30, 5, nete::NoiseKind::mixture},
                 nete::DgpSpec{1.0, 2.5, 30, 5, nete::NoiseKind::mixture},
                 nete::DgpSpec{2.0, 2.5, 30, 5, nete::NoiseKind::mixture}};
  cfg.n_grid = {2000, 5000, 10000, 20000};
  cfg.repetitions = 50;
  cfg.seed = 5005;
  const auto result = nete::run_mse_benchmark(cfg);
  double worst = 0.0;
  for (std::size_t c = 0; c < cfg.configs.size(); ++c) {
    std::string line = fmt("(%.0f,%.1f,d_u=%ld) mse by n:", cfg.configs[c].alpha, cfg.configs[c].beta,
                           static_cast<long>(cfg.configs[c].d_u));
    for (nete::Method m : cfg.estimators) {
      line += fmt(" %s[", nete::to_string(m));
      for (auto n : cfg.n_grid) {
        const auto& cell = result.cell(c, n, m);
        worst = std::max(worst, cell.failure_rate());
        line += fmt("%s%.3g", n == cfg.n_grid.front() ? "" : " ", cell.mse);
      }
      line += "]";
    }
    detail("%s", line.c_str());
  }
  return {worst < 0.20, fmt("completed %zu cells; worst repetition failure rate %.1f%% (need < 20%%)",
                            result.cells.size(), 100.0 * worst)};
}

// 6 ---------------------------------------------------------------------------
Outcome table_one() {
  const auto ws = nete::load_wavesurge(std::string(NETE_TEST_DATA_DIR) + "/wavesurge.csv");
  nete::SemiSynOptions opts;
  opts.seed = 6006;
  const auto rows = nete::run_semi_synthetic(ws.raw, nete::default_semi_synthetic_configs(), opts);
  bool pass = true;
  double test_22 = std::nan("");
  for (const auto& r : rows) {
    const bool evt_ok = r.evt_dr >= 0.05 && r.evt_dr <= 0.9 && r.evt_ipw >= 0.05 && r.evt_ipw <= 0.9;
    const bool naive_ok = r.naive_dr > 5.0 && r.naive_ipw > 5.0;
    pass = pass && evt_ok && naive_ok && r.failures == 0;
    if (r.config.alpha1 == 2.0 && r.config.alpha2 == 2.0) test_22 = r.test_set;
    detail("(%.1f,%.1f): evt_dr %.3f  evt_ipw %.3f  naive_dr %.2f  naive_ipw %.2f  test %.3f%s", r.config.alpha1,
           r.config.alpha2, r.evt_dr, r.evt_ipw, r.naive_dr, r.naive_ipw, r.test_set,
           evt_ok && naive_ok ? "" : "  <- out of range");
  }
  pass = pass && std::abs(test_22 - 0.13) <= 0.07;
  return {pass, fmt("EVT in [0.05,0.9], naive > 5 for all rows; test (2,2) = %.3f (need 0.13 +- 0.07)", test_22)};
}

// 7 ---------------------------------------------------------------------------
Outcome exact_arithmetic() {
  int failed = 0;
  int total = 0;
  auto check = [&](const char* what, double got, double want) {
    ++total;
    if (!(std::abs(got - want) <= 1e-12)) {
      ++failed;
      detail("%s: got %.17g want %.17g", what, got, want);
    }
  };
  check("moment_factor(0,0.7)", nete::moment_factor(0.0, 0.7), 1.0);
  check("moment_factor(1,0.4)", nete::moment_factor(1.0, 0.4), 5.0 / 3.0);
  check("ground_truth(0,2)", nete::ground_truth_nete(0.0, 2.0), 1.0);
  check("ground_truth(1,2.5)", nete::ground_truth_nete(1.0, 2.5), 5.0 / 3.0);
  check("ground_truth(1,1.5)", nete::ground_truth_nete(1.0, 1.5), 3.0);
  check("ground_truth(2,2.5)", nete::ground_truth_nete(2.0, 2.5), 5.0);

  auto row = [](double y, double d, double u1, double u2) {
    nete::ObservationTable t;
    t.X = nete::Matrix::Zero(1, 1);
    t.D = nete::Vector::Constant(1, d);
    t.Y = nete::Vector::Constant(1, y);
    t.U = (nete::Matrix(1, 2) << u1, u2).finished();
    return t;
  };
  nete::PropensityModel half;
  half.weights = nete::Vector::Zero(2);
  auto affine = [](double a, double b) {
    nete::Rng rng(1);
    nete::Matrix x(20, 1);
    nete::Matrix s(20, 2);
    nete::Vector d(20);
    nete::Vector y(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      x(i, 0) = rng.uniform();
      s(i, 0) = rng.uniform();
      s(i, 1) = 1.0 - s(i, 0);
      d(i) = static_cast<double>(i % 2);
      y(i) = a + b * d(i);
    }
    nete::OutcomeOptions opts;
    opts.kind = nete::OutcomeKind::linear;
    return nete::OutcomeModel::fit(x, d, s, y, opts);
  };
  check("eta_ipw single row", nete::eta_ipw(row(2.0, 1.0, 1.0, 1.0), half, 1.0), 2.0);
  check("eta_dr single row", nete::eta_dr(row(8.0, 1.0, 1.0, 1.0), half, affine(1.0, 2.0), 1.0), 4.0);

  nete::SyntheticConfig syn;
  syn.n = 500;
  syn.d_u = 2;
  syn.d_x = 1;
  nete::Rng rng(7007);
  const auto table = nete::generate_synthetic(syn, rng).table;
  nete::PropensityModel prop;
  prop.weights = (nete::Vector(2) << 0.3, -0.8).finished();
  const auto zero = affine(0.0, 0.0);
  for (double a : {0.0, 0.7, 1.0}) {
    const double ipw = nete::eta_ipw(table, prop, a);
    check("DR->IPW collapse", nete::eta_dr(table, prop, zero, a), ipw);
  }

  std::vector<double> x(400);
  for (auto& v : x) v = nete::sample_pareto(1.8, rng);
  std::sort(x.begin(), x.end(), std::greater<>());
  for (double c : {1e-3, 3.0, 1e6}) {
    std::vector<double> y = x;
    for (auto& v : y) v *= c;
    for (std::size_t k : {5u, 50u, 399u}) check("Hill scale invariance", nete::hill_gamma(y, k), nete::hill_gamma(x, k));
  }
  return {failed == 0, fmt("%d of %d checks within 1e-12", total - failed, total)};
}

// 8 ---------------------------------------------------------------------------
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "nete_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "bench.json");
    cfg << R"({"configs": [{"alpha": 1.0, "beta": 2.5, "d_z": 30, "d_u": 5},
                            {"alpha": 1.0, "beta": 1.5, "d_u": 5, "noise_kind": "mixture"}],
               "n_grid": [1000, 2000], "repetitions": 6, "seed": 8008, "nuisance": {"n_trees": 20}})";
  }
  auto run = [&](const std::string& prefix, int jobs) {
    const std::string cmd = std::string(NETE_CLI_PATH) + " benchmark --config " + (dir / "bench.json").string() +
                            " --out " + (dir / prefix).string() + " --jobs " + std::to_string(jobs) + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const int a = run("jobs1", 1);
  const int b = run("jobs4", 4);
  bool same = a == 0 && b == 0;
  for (const char* suffix : {".csv", "_reps.csv", ".json"}) {
    const std::string x = slurp(dir / (std::string("jobs1") + suffix));
    const std::string y = slurp(dir / (std::string("jobs4") + suffix));
    detail("%s: %zu bytes, %s", suffix, x.size(), x == y && !x.empty() ? "identical" : "DIFFERENT");
    same = same && !x.empty() && x == y;
  }
  fs::remove_all(dir);
  return {same, fmt("--jobs 1 vs --jobs 4 exit codes %d/%d, outputs %s", a, b, same ? "byte-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional filter: run only the listed criterion numbers.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"hill recovery", hill_recovery},       {"oracle agreement", oracle_agreement},
      {"estimator consistency", consistency}, {"baseline dominance", dominance},
      {"mixture robustness", mixture},        {"semi-synthetic table pattern", table_one},
      {"exact arithmetic", exact_arithmetic}, {"determinism across --jobs", determinism},
  };
  int id = 0;
  for (const auto& [name, fn] : criteria) {
    ++id;
    if (wanted(id)) run_criterion(id, name, fn);
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
