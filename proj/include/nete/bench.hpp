#pragma once

// Monte Carlo MSE benchmark over synthetic DGPs and the semi-synthetic
// wave/surge experiment.

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "nete/datagen.hpp"
#include "nete/error.hpp"
#include "nete/estimators.hpp"
#include "nete/io.hpp"
#include "nete/rng.hpp"

namespace nete {

struct DgpSpec {
  double alpha = 1.0;
  double beta = 2.5;
  Eigen::Index d_z = 30;
  Eigen::Index d_u = 5;
  NoiseKind noise = NoiseKind::linear_pareto;
  Eigen::Index d_x = 5;
};

struct ExperimentConfig {
  std::vector<DgpSpec> configs;
  std::vector<Eigen::Index> n_grid;
  std::size_t repetitions = 50;
  std::uint64_t seed = 0;
  std::vector<Method> estimators{std::begin(kAllMethods), std::end(kAllMethods)};
  NeteConfig nete;
  bool resample_A = true;  ///< draw a fresh mixing matrix for every repetition
  AngleTerm angle_term = AngleTerm::sum;

  void validate() const {
    if (configs.empty()) throw DomainError("experiment needs at least one DGP config");
    if (n_grid.empty()) throw DomainError("experiment needs a nonempty n_grid");
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
      if (n_grid[i] <= n_grid[i - 1]) throw DomainError("n_grid must be strictly increasing");
    }
    if (repetitions < 1) throw DomainError("repetitions must be >= 1");
    if (estimators.empty()) throw DomainError("experiment needs at least one estimator");
    for (const auto& c : configs) {
      if (!(c.alpha >= 0.0 && c.beta > c.alpha)) throw DomainError("each config needs 0 <= alpha < beta");
    }
  }
};

/// One (config, n, method) cell.
struct CellResult {
  std::size_t config_index = 0;
  Eigen::Index n = 0;
  Method method = Method::evt_dr;
  double ground_truth = 0.0;
  std::vector<std::optional<double>> thetas;  ///< per repetition; empty on failure
  std::size_t failure_count = 0;
  double mse = std::nan("");
  double bias = std::nan("");
  double variance = std::nan("");
  double mean_theta = std::nan("");
  double std_error = std::nan("");  ///< sample sd / sqrt(successes)

  std::size_t successes() const noexcept { return thetas.size() - failure_count; }
  bool all_failed() const noexcept { return successes() == 0; }
  double failure_rate() const noexcept {
    return thetas.empty() ? 0.0 : static_cast<double>(failure_count) / static_cast<double>(thetas.size());
  }
  /// More than 20% of the repetitions failed.
  bool flagged() const noexcept { return failure_count * 5 > thetas.size(); }
};

/// Per-repetition record kept for the long output.
struct RepRecord {
  std::size_t config_index = 0;
  Eigen::Index n = 0;
  std::size_t rep = 0;
  MethodOutcome outcome;
};

struct BenchmarkResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;  ///< ordered by (config, n, method)
  std::vector<RepRecord> reps;    ///< ordered by (config, n, rep, method)

  const CellResult& cell(std::size_t config_index, Eigen::Index n, Method m) const {
    for (const auto& c : cells)
      if (c.config_index == config_index && c.n == n && c.method == m) return c;
    throw IndexError("no benchmark cell for the requested key");
  }

  bool all_cells_failed() const {
    for (const auto& c : cells)
      if (!c.all_failed()) return false;
    return true;
  }
};

inline std::uint64_t repetition_seed(std::uint64_t seed, std::size_t config_index, Eigen::Index n, std::size_t rep) {
  return derive_seed(derive_seed(derive_seed(seed, config_index), static_cast<std::uint64_t>(n)), rep);
}

/// Population moments of the successful repetitions; mse = bias^2 + variance.
inline void summarize(CellResult& cell) {
  std::vector<double> ok;
  for (const auto& t : cell.thetas)
    if (t) ok.push_back(*t);
  cell.failure_count = cell.thetas.size() - ok.size();
  if (ok.empty()) return;
  const double m = static_cast<double>(ok.size());
  double mean = 0.0;
  for (double v : ok) mean += v;
  mean /= m;
  double var = 0.0;
  double sq_err = 0.0;
  for (double v : ok) {
    var += (v - mean) * (v - mean);
    sq_err += (v - cell.ground_truth) * (v - cell.ground_truth);
  }
  cell.mean_theta = mean;
  cell.bias = mean - cell.ground_truth;
  cell.variance = var / m;
  cell.mse = sq_err / m;
  cell.std_error = ok.size() > 1 ? std::sqrt(var / (m - 1.0) / m) : std::nan("");
}

/// Runs `count` independent tasks on `jobs` threads; task i writes only slot i.
template <typename Task>
void parallel_for(std::size_t count, std::size_t jobs, Task&& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

inline SyntheticConfig synthetic_config_for(const DgpSpec& spec, Eigen::Index n, AngleTerm angle) {
  SyntheticConfig cfg;
  cfg.alpha = spec.alpha;
  cfg.beta = spec.beta;
  cfg.d_z = spec.d_z;
  cfg.d_u = spec.d_u;
  cfg.d_x = spec.d_x;
  cfg.noise = spec.noise;
  cfg.n = n;
  cfg.angle_term = angle;
  return cfg;
}

/// For every (config, n, rep) the dataset is regenerated from a derived seed
/// and all requested estimators run on it with one shared split and threshold.
/// Output is independent of `jobs`.
inline BenchmarkResult run_mse_benchmark(const ExperimentConfig& cfg, std::size_t jobs = 1) {
  cfg.validate();
  struct Task {
    std::size_t config_index;
    Eigen::Index n;
    std::size_t rep;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cfg.configs.size(); ++c)
    for (Eigen::Index n : cfg.n_grid)
      for (std::size_t r = 0; r < cfg.repetitions; ++r) tasks.push_back({c, n, r});

  std::vector<std::optional<Matrix>> fixed_A(cfg.configs.size());
  if (!cfg.resample_A) {
    for (std::size_t c = 0; c < cfg.configs.size(); ++c) {
      const auto& spec = cfg.configs[c];
      if (spec.noise != NoiseKind::linear_pareto) continue;
      Rng rng = Rng(derive_seed(cfg.seed, c)).split(2);
      fixed_A[c] = sample_matrix_A(spec.d_u, spec.d_z, rng);
    }
  }

  std::vector<std::vector<MethodOutcome>> outcomes(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const Rng root(repetition_seed(cfg.seed, task.config_index, task.n, task.rep));
    Rng data_rng = root.split(0);
    SyntheticConfig syn = synthetic_config_for(cfg.configs[task.config_index], task.n, cfg.angle_term);
    syn.A = fixed_A[task.config_index];
    const SyntheticDraw draw = generate_synthetic(syn, data_rng);
    outcomes[i] = estimate_methods(draw.table, cfg.estimators, cfg.nete, root.split(1));
  });

  BenchmarkResult result;
  result.config = cfg;
  for (std::size_t c = 0; c < cfg.configs.size(); ++c) {
    const double truth = ground_truth_nete(cfg.configs[c].alpha, cfg.configs[c].beta);
    for (Eigen::Index n : cfg.n_grid) {
      for (Method m : cfg.estimators) {
        CellResult cell;
        cell.config_index = c;
        cell.n = n;
        cell.method = m;
        cell.ground_truth = truth;
        result.cells.push_back(std::move(cell));
      }
    }
  }
  const std::size_t n_methods = cfg.estimators.size();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& task = tasks[i];
    std::size_t n_index = 0;
    while (cfg.n_grid[n_index] != task.n) ++n_index;
    const std::size_t base = (task.config_index * cfg.n_grid.size() + n_index) * n_methods;
    for (std::size_t m = 0; m < n_methods; ++m) {
      const MethodOutcome& o = outcomes[i][m];
      result.cells[base + m].thetas.push_back(o.ok() ? std::optional<double>(o.estimate->theta_hat) : std::nullopt);
      result.reps.push_back(RepRecord{task.config_index, task.n, task.rep, o});
    }
  }
  for (auto& cell : result.cells) summarize(cell);
  return result;
}

namespace detail {

inline std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string("nan"); }

}  // namespace detail

/// Long format: one row per config x n x method x metric.
inline void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result) {
  out << "config,alpha,beta,d_z,d_u,noise_kind,n,method,metric,value\n";
  for (const auto& cell : result.cells) {
    const DgpSpec& spec = result.config.configs[cell.config_index];
    const std::string prefix = std::to_string(cell.config_index) + ',' + format_double(spec.alpha) + ',' +
                               format_double(spec.beta) + ',' + std::to_string(spec.d_z) + ',' +
                               std::to_string(spec.d_u) + ',' + to_string(spec.noise) + ',' +
                               std::to_string(cell.n) + ',' + to_string(cell.method) + ',';
    const std::pair<const char*, std::string> metrics[] = {
        {"mse", detail::csv_number(cell.mse)},
        {"bias", detail::csv_number(cell.bias)},
        {"variance", detail::csv_number(cell.variance)},
        {"mean_theta", detail::csv_number(cell.mean_theta)},
        {"std_error", detail::csv_number(cell.std_error)},
        {"ground_truth", detail::csv_number(cell.ground_truth)},
        {"failure_count", std::to_string(cell.failure_count)},
        {"successes", std::to_string(cell.successes())},
    };
    for (const auto& [name, value] : metrics) out << prefix << name << ',' << value << '\n';
  }
}

/// One row per (config, n, rep, method) with the estimate's diagnostics.
inline void write_repetitions_csv(std::ostream& out, const BenchmarkResult& result) {
  out << "config,n,rep,method,theta_hat,eta_hat,mu_hat,threshold_t,n_tail,alpha_hat,gamma_hat,error\n";
  for (const auto& r : result.reps) {
    out << r.config_index << ',' << r.n << ',' << r.rep << ',' << to_string(r.outcome.method) << ',';
    if (r.outcome.ok()) {
      const NeteEstimate& e = *r.outcome.estimate;
      out << detail::csv_number(e.theta_hat) << ',' << detail::csv_number(e.eta_hat) << ','
          << detail::csv_number(e.mu_hat) << ',' << detail::csv_number(e.threshold_t) << ',' << e.n_tail << ','
          << detail::csv_number(e.alpha_hat) << ',' << detail::csv_number(e.gamma_hat) << ",\n";
    } else {
      out << ",,,,,,," << to_string(*r.outcome.error) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Semi-synthetic experiment

struct SemiSynRow {
  SemiSynConfig config;
  double evt_dr = std::nan("");
  double evt_ipw = std::nan("");
  double naive_dr = std::nan("");
  double naive_ipw = std::nan("");
  double test_set = std::nan("");
  std::size_t repetitions = 0;
  std::size_t failures = 0;  ///< method-repetition pairs that failed
  TestSetEstimate test_detail;

  double value(Method m) const {
    switch (m) {
      case Method::evt_dr: return evt_dr;
      case Method::evt_ipw: return evt_ipw;
      case Method::naive_dr: return naive_dr;
      case Method::naive_ipw: return naive_ipw;
    }
    return std::nan("");
  }
};

/// The four exponent pairs of the wave/surge study.
inline std::vector<SemiSynConfig> default_semi_synthetic_configs(Eigen::Index train_size = 1000) {
  std::vector<SemiSynConfig> out;
  for (auto [a1, a2] : {std::pair{2.0, 2.0}, std::pair{1.0, 3.0}, std::pair{2.5, 1.0}, std::pair{1.5, 1.5}}) {
    SemiSynConfig c;
    c.alpha1 = a1;
    c.alpha2 = a2;
    c.train_size = train_size;
    out.push_back(c);
  }
  return out;
}

struct SemiSynOptions {
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;  ///< estimates are averaged over this many generated datasets
  NeteConfig nete;
};

/// Normalizes the raw wave/surge matrix, then for each exponent pair generates
/// (X, D, Y), estimates on the training rows and computes the surrogate
/// ground truth on the test rows. The estimator values are means over the
/// successful repetitions.
inline std::vector<SemiSynRow> run_semi_synthetic(const Matrix& raw, const std::vector<SemiSynConfig>& configs,
                                                  const SemiSynOptions& options) {
  const Matrix u_norm = normalize_extremes(raw);
  std::vector<SemiSynRow> rows;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const SemiSynConfig& cfg = configs[c];
    cfg.validate(u_norm.rows());
    SemiSynRow row;
    row.config = cfg;
    row.repetitions = options.repetitions;
    double sums[4] = {0, 0, 0, 0};
    double test_sum = 0.0;
    std::size_t counts[4] = {0, 0, 0, 0};
    for (std::size_t rep = 0; rep < options.repetitions; ++rep) {
      const Rng root(derive_seed(derive_seed(options.seed, c), rep));
      Rng gen_rng = root.split(0);
      const ObservationTable full = generate_semi_synthetic(u_norm, cfg, gen_rng);

      std::vector<Eigen::Index> order(static_cast<std::size_t>(full.n()));
      for (Eigen::Index i = 0; i < full.n(); ++i) order[static_cast<std::size_t>(i)] = i;
      if (cfg.random_split) {
        Rng split_rng = root.split(2);
        for (std::size_t i = order.size() - 1; i > 0; --i)
          std::swap(order[i], order[static_cast<std::size_t>(split_rng.below(i + 1))]);
      }
      const auto cut = static_cast<std::ptrdiff_t>(cfg.train_size);
      std::vector<Eigen::Index> train_rows(order.begin(), order.begin() + cut);
      std::vector<Eigen::Index> test_rows(order.begin() + cut, order.end());
      if (cfg.random_split) {
        std::sort(train_rows.begin(), train_rows.end());
        std::sort(test_rows.begin(), test_rows.end());
      }
      const ObservationTable train = full.subset(train_rows);
      const ObservationTable test = full.subset(test_rows);

      // Depends on the test rows' noise only, so it is constant across
      // repetitions unless the split is randomized.
      const TestSetEstimate ts = test_set_estimate(test, cfg.alpha1, cfg.alpha2, options.nete.hill);
      if (rep == 0) row.test_detail = ts;
      test_sum += ts.theta;

      const auto outcomes = estimate_methods(train, kAllMethods, options.nete, root.split(1));
      for (const auto& o : outcomes) {
        const auto m = static_cast<std::size_t>(o.method);
        if (o.ok()) {
          sums[m] += o.estimate->theta_hat;
          ++counts[m];
        } else {
          ++row.failures;
        }
      }
    }
    auto mean_of = [&](Method m) {
      const auto i = static_cast<std::size_t>(m);
      return counts[i] ? sums[i] / static_cast<double>(counts[i]) : std::nan("");
    };
    row.test_set = test_sum / static_cast<double>(options.repetitions);
    row.evt_dr = mean_of(Method::evt_dr);
    row.evt_ipw = mean_of(Method::evt_ipw);
    row.naive_dr = mean_of(Method::naive_dr);
    row.naive_ipw = mean_of(Method::naive_ipw);
    rows.push_back(row);
  }
  return rows;
}

inline void write_semi_synthetic_csv(std::ostream& out, const std::vector<SemiSynRow>& rows) {
  out << "alpha1,alpha2,evt_dr,evt_ipw,naive_dr,naive_ipw,test_set\n";
  for (const auto& r : rows) {
    out << format_double(r.config.alpha1) << ',' << format_double(r.config.alpha2) << ','
        << detail::csv_number(r.evt_dr) << ',' << detail::csv_number(r.evt_ipw) << ','
        << detail::csv_number(r.naive_dr) << ',' << detail::csv_number(r.naive_ipw) << ','
        << detail::csv_number(r.test_set) << '\n';
  }
}

}  // namespace nete
