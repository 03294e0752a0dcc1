// fiberpair: photon-pair counting and biphoton-fringe simulator.
//
//   fiberpair counts  --config run.ini --out dir [--seed N] [--workers N]
//   fiberpair fringes --config run.ini --out dir [--seed N] [--workers N]
//   fiberpair analyze --input table.csv --mode counts|fringes [--out dir]
//
// Exit status: 0 success, 1 config error, 2 I/O error, 3 analysis failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fiberpair/fiberpair.hpp"

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 1, kIoError = 2, kAnalysisError = 3 };

struct SimulateOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
};

fiberpair::ConfigBundle load_bundle(const SimulateOptions& opts) {
  std::string text;
  try {
    text = fiberpair::read_text_file(opts.config_path);
  } catch (const fiberpair::IoError& e) {
    throw fiberpair::ConfigError(std::string("cannot read config: ") + e.what());
  }
  auto bundle = fiberpair::parse_config(text);
  if (opts.seed) bundle.experiment.seed = *opts.seed;
  return bundle;
}

void write_outputs(const std::filesystem::path& dir, const std::string& csv_name, const std::string& csv,
                   const fiberpair::Json& summary) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw fiberpair::IoError("cannot create " + dir.string() + ": " + ec.message());
  fiberpair::write_file_atomic(dir / csv_name, csv);
  fiberpair::write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
}

int run_counts(const SimulateOptions& opts) {
  const auto bundle = load_bundle(opts);
  const auto points = fiberpair::run_counting_experiment(bundle.source, bundle.pump, bundle.detectors,
                                                         bundle.counting_config(), opts.workers);
  const auto rows = fiberpair::make_counts_rows(points, bundle.pump.rep_rate_hz);
  const auto summary = fiberpair::make_summary("counts", fiberpair::summarize_counts(rows), &bundle);
  write_outputs(opts.out_dir, "counts.csv", fiberpair::counts_csv(rows), summary);
  std::cout << "pairs_per_second " << summary["analysis"]["pairs_per_second"]["value"] << "\n";
  return kOk;
}

int run_fringes(const SimulateOptions& opts) {
  const auto bundle = load_bundle(opts);
  const auto scan = fiberpair::run_fringe_scan(bundle.source, bundle.pump, bundle.detectors, bundle.fringe_config(),
                                               opts.workers);
  const auto rows = fiberpair::make_fringe_rows(scan);
  const auto summary = fiberpair::make_summary("fringes", fiberpair::summarize_fringes(rows), &bundle);
  write_outputs(opts.out_dir, "fringes.csv", fiberpair::fringes_csv(rows), summary);
  const auto& a = summary["analysis"];
  std::cout << "visibility_corrected " << a["visibility_corrected"]["value"] << " +/- "
            << a["visibility_corrected"]["error"] << "\nfrequency_ratio " << a["frequency_ratio"] << "\n";
  return kOk;
}

int run_analyze(const std::string& input, const std::string& mode, const std::string& out_dir) {
  const std::string text = fiberpair::read_text_file(input);
  fiberpair::Json analysis;
  if (mode == "counts") {
    analysis = fiberpair::summarize_counts(fiberpair::read_counts_csv(text));
  } else {
    analysis = fiberpair::summarize_fringes(fiberpair::read_fringes_csv(text));
  }
  const auto summary = fiberpair::make_summary(mode, std::move(analysis), nullptr);
  if (out_dir.empty()) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw fiberpair::IoError("cannot create " + out_dir + ": " + ec.message());
    fiberpair::write_file_atomic(std::filesystem::path(out_dir) / "summary.json", summary.dump(2) + "\n");
  }
  return kOk;
}

void add_simulate_flags(CLI::App& cmd, SimulateOptions& opts) {
  cmd.add_option("--config", opts.config_path, "run configuration file")->required()->check(CLI::ExistingFile);
  cmd.add_option("--out", opts.out_dir, "output directory")->required();
  cmd.add_option("--seed", opts.seed, "override the configured seed");
  cmd.add_option("--workers", opts.workers, "worker threads (results do not depend on this)")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiber photon-pair counting and biphoton-fringe simulator"};
  app.set_version_flag("--version", fiberpair::kToolVersion);
  app.require_subcommand(1);

  SimulateOptions counts_opts, fringes_opts;
  auto* counts = app.add_subcommand("counts", "pump-power scan of singles and coincidences");
  add_simulate_flags(*counts, counts_opts);
  auto* fringes = app.add_subcommand("fringes", "pump-phase scan of biphoton interference");
  add_simulate_flags(*fringes, fringes_opts);

  std::string input, mode, analyze_out;
  auto* analyze = app.add_subcommand("analyze", "re-analyze a counts.csv or fringes.csv table");
  analyze->add_option("--input", input, "CSV table")->required()->check(CLI::ExistingFile);
  analyze->add_option("--mode", mode, "table kind")->required()->check(CLI::IsMember({"counts", "fringes"}));
  analyze->add_option("--out", analyze_out, "write summary.json here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*counts) return run_counts(counts_opts);
    if (*fringes) return run_fringes(fringes_opts);
    return run_analyze(input, mode, analyze_out);
  } catch (const fiberpair::ConfigError& e) {
    std::cerr << "config error:\n" << e.what() << "\n";
    return kConfigError;
  } catch (const fiberpair::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fiberpair::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const fiberpair::AnalysisError& e) {
    std::cerr << "analysis failure: " << e.what() << "\n";
    return kAnalysisError;
  }
}
