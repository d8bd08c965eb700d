// nete: command-line driver for simulation, estimation and benchmarks.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nete/json.hpp"
#include "nete/nete.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

std::optional<double> parse_auto_or_number(const std::string& text, const char* flag) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw CLI::ValidationError(std::string(flag), "expected 'auto' or a number, got '" + text + "'");
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nete::IoError("cannot open '" + path + "' for writing");
  return out;
}

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::string method = "evt-dr";
  std::string alpha = "auto";
  std::string threshold = "auto";
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string wavesurge;
  std::optional<long> train_size;
  std::size_t repetitions = 1;
  std::size_t l_n = 30;
};

nete::NeteConfig estimator_config(const Options& opt, const CLI::App& sub) {
  nete::NeteConfig cfg;
  if (!opt.config.empty()) cfg = nete::nete_config_from_json(nete::load_json_file(opt.config));
  if (sub.count("--alpha") || opt.config.empty()) cfg.alpha = parse_auto_or_number(opt.alpha, "--alpha");
  if (sub.count("--threshold") || opt.config.empty()) {
    const auto t = parse_auto_or_number(opt.threshold, "--threshold");
    cfg.threshold = t ? nete::ThresholdRule{cfg.threshold.c0, t} : nete::ThresholdRule::automatic(cfg.threshold.c0);
  }
  return cfg;
}

int cmd_simulate(const Options& opt) {
  const nete::Json j = nete::load_json_file(opt.config);
  const nete::SyntheticConfig cfg = nete::synthetic_config_from_json(j);
  const std::uint64_t seed = opt.seed.value_or(j.value("seed", std::uint64_t{0}));
  nete::Rng rng(seed);
  const nete::SyntheticDraw draw = nete::generate_synthetic(cfg, rng);
  nete::write_table_csv(opt.out, draw.table);
  std::cout << nete::Json{{"rows", draw.table.n()}, {"ground_truth", draw.ground_truth}, {"out", opt.out}}.dump()
            << '\n';
  return kExitOk;
}

int cmd_estimate(const Options& opt, const CLI::App& sub) {
  const nete::ObservationTable data = nete::read_table_csv(opt.data);
  const nete::NeteConfig cfg = estimator_config(opt, sub);
  const nete::Method method = nete::parse_method(opt.method);
  const nete::NeteEstimate est = nete::estimate_nete(data, method, cfg, nete::Rng(opt.seed.value_or(0)));
  if (est.alpha_mostly_dropped) {
    std::cerr << "warning: " << est.alpha_rows_dropped << " rows with Y = 0 were dropped from the alpha fit\n";
  }
  std::cout << nete::to_json(est).dump(2) << '\n';
  return kExitOk;
}

int cmd_hill(const Options& opt) {
  const nete::ObservationTable data = nete::read_table_csv(opt.data);
  const nete::Vector norms = data.norms();
  nete::AdaptiveHillOptions hill;
  hill.l_n = opt.l_n;
  const nete::HillEstimate h = nete::adaptive_hill(std::span<const double>(norms.data(), norms.size()), hill);
  std::cout << nete::to_json(h).dump() << '\n';
  return kExitOk;
}

int cmd_benchmark(const Options& opt, const CLI::App& sub) {
  const nete::Json j = nete::load_json_file(opt.config);
  nete::ExperimentConfig cfg = nete::experiment_config_from_json(j);
  if (opt.seed) cfg.seed = *opt.seed;
  if (sub.count("--alpha")) cfg.nete.alpha = parse_auto_or_number(opt.alpha, "--alpha");
  if (sub.count("--threshold")) {
    const auto t = parse_auto_or_number(opt.threshold, "--threshold");
    cfg.nete.threshold = t ? nete::ThresholdRule{cfg.nete.threshold.c0, t}
                           : nete::ThresholdRule::automatic(cfg.nete.threshold.c0);
  }
  const nete::BenchmarkResult result = nete::run_mse_benchmark(cfg, opt.jobs);

  {
    auto out = open_output(opt.out + ".csv");
    nete::write_benchmark_csv(out, result);
  }
  {
    auto out = open_output(opt.out + "_reps.csv");
    nete::write_repetitions_csv(out, result);
  }
  {
    auto out = open_output(opt.out + ".json");
    out << nete::benchmark_summary_json(result).dump(2) << '\n';
  }
  for (const auto& cell : result.cells) {
    if (cell.flagged()) {
      std::cerr << "warning: config " << cell.config_index << " n=" << cell.n << " " << nete::to_string(cell.method)
                << ": " << cell.failure_count << " of " << cell.thetas.size() << " repetitions failed\n";
    }
  }
  if (result.all_cells_failed()) {
    std::cerr << "error: every benchmark cell failed\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_semisyn(const Options& opt, const CLI::App& sub) {
  std::string path = opt.wavesurge;
  if (path.empty()) {
    if (const char* env = std::getenv("NETE_WAVESURGE")) path = env;
  }
  if (path.empty()) throw nete::IoError("no wave/surge file: pass --wavesurge or set NETE_WAVESURGE");
  const nete::WavesurgeData ws = nete::load_wavesurge(path);
  if (!ws.warning.empty()) std::cerr << "warning: " << ws.warning << '\n';

  nete::SemiSynOptions options;
  options.seed = opt.seed.value_or(0);
  options.repetitions = opt.repetitions;
  options.nete = estimator_config(opt, sub);
  const auto configs = nete::default_semi_synthetic_configs(opt.train_size.value_or(1000));
  const auto rows = nete::run_semi_synthetic(ws.raw, configs, options);

  if (!opt.out.empty()) {
    auto out = open_output(opt.out + ".csv");
    nete::write_semi_synthetic_csv(out, rows);
    auto js = open_output(opt.out + ".json");
    js << nete::semi_synthetic_json(rows).dump(2) << '\n';
  }
  nete::write_semi_synthetic_csv(std::cout, rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normalized extreme treatment effect estimation", "nete"};
  app.require_subcommand(1);
  Options opt;

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic observation table");
  simulate->add_option("--config", opt.config, "Synthetic DGP config (JSON)")->required();
  simulate->add_option("--out", opt.out, "Output CSV path")->required();
  simulate->add_option("--seed", opt.seed, "Seed (overrides the config)");

  auto* estimate = app.add_subcommand("estimate", "Estimate NETE on an observation table");
  estimate->add_option("--data", opt.data, "Observation table CSV")->required();
  estimate->add_option("--method", opt.method, "evt-dr | evt-ipw | naive-dr | naive-ipw")->capture_default_str();
  estimate->add_option("--alpha", opt.alpha, "auto or a fixed scaling exponent")->capture_default_str();
  estimate->add_option("--threshold", opt.threshold, "auto or a fixed threshold")->capture_default_str();
  estimate->add_option("--seed", opt.seed, "Seed for splitting and forests");
  estimate->add_option("--config", opt.config, "Estimator options (JSON)");

  auto* benchmark = app.add_subcommand("benchmark", "Monte Carlo MSE benchmark");
  benchmark->add_option("--config", opt.config, "Experiment config (JSON)")->required();
  benchmark->add_option("--out", opt.out, "Output prefix (.csv, _reps.csv, .json)")->required();
  benchmark->add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  benchmark->add_option("--seed", opt.seed, "Seed (overrides the config)");
  benchmark->add_option("--alpha", opt.alpha, "auto or a fixed scaling exponent");
  benchmark->add_option("--threshold", opt.threshold, "auto or a fixed threshold");

  auto* semisyn = app.add_subcommand("semisyn", "Semi-synthetic wave/surge experiment");
  semisyn->add_option("--wavesurge", opt.wavesurge, "Wave/surge CSV (default: $NETE_WAVESURGE)");
  semisyn->add_option("--train-size", opt.train_size, "Training rows (default 1000)");
  semisyn->add_option("--seed", opt.seed, "Seed");
  semisyn->add_option("--repetitions", opt.repetitions, "Datasets averaged per row")->capture_default_str();
  semisyn->add_option("--out", opt.out, "Output prefix (.csv, .json)");
  semisyn->add_option("--config", opt.config, "Estimator options (JSON)");
  semisyn->add_option("--alpha", opt.alpha, "auto or a fixed scaling exponent");
  semisyn->add_option("--threshold", opt.threshold, "auto or a fixed threshold");

  auto* hill = app.add_subcommand("hill", "Adaptive Hill estimate on the l1 norms of U");
  hill->add_option("--data", opt.data, "Observation table CSV")->required();
  hill->add_option("--l-n", opt.l_n, "Smallest order statistic count")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(opt);
    if (*estimate) return cmd_estimate(opt, *estimate);
    if (*benchmark) return cmd_benchmark(opt, *benchmark);
    if (*semisyn) return cmd_semisyn(opt, *semisyn);
    if (*hill) return cmd_hill(opt);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nete::Error& e) {
    std::cerr << "error (" << nete::to_string(e.kind()) << "): " << e.what() << '\n';
    switch (e.kind()) {
      case nete::ErrorKind::io:
      case nete::ErrorKind::parse:
      case nete::ErrorKind::schema:
        return kExitIo;
      case nete::ErrorKind::domain:
        return kExitUsage;
      default:
        return kExitNumerical;
    }
  }
  return kExitUsage;
}
