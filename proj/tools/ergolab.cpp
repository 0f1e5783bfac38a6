#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ergolab/runner.hpp"

namespace {

unsigned defaultThreads() {
  if (const char* env = std::getenv("ERGOLAB_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    std::cerr << "ergolab: ignoring invalid ERGOLAB_THREADS='" << env << "'\n";
  }
  return ergolab::hardwareThreads();
}

int runCommand(const std::string& configPath, const std::string& outPath, std::optional<std::uint64_t> seed,
               std::optional<unsigned> threads, bool noTimestamp) {
  ergolab::ExperimentConfig cfg = ergolab::loadConfig(configPath);
  ergolab::RunOptions opt;
  opt.seed = seed;
  opt.threads = threads.value_or(defaultThreads());
  opt.timestamp = !noTimestamp;
  std::string path = outPath.empty() ? cfg.output : outPath;
  ergolab::RunResult r;
  if (path.empty() || path == "-") {
    r = ergolab::runExperiment(cfg, std::cout, opt);
  } else {
    std::ofstream out(path);
    if (!out) throw ergolab::IoError("cannot write '" + path + "'");
    r = ergolab::runExperiment(cfg, out, opt);
    out.flush();
    if (!out) throw ergolab::IoError("write to '" + path + "' failed");
  }
  if (r.exitCode != 0) std::cerr << "ergolab: " << r.message << "\n";
  return r.exitCode;
}

int reportCommand(const std::vector<std::string>& csvs, bool fit, bool allowMixed, std::optional<double> predicted,
                  const std::string& outPath) {
  ergolab::ReportOptions ro{fit, allowMixed, predicted};
  std::string text = ergolab::emitReport(csvs, ro).dump(2) + "\n";
  if (outPath.empty() || outPath == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream out(outPath);
  if (!out || !(out << text)) throw ergolab::IoError("cannot write '" + outPath + "'");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergolab: rates of equidistribution and mixing on concrete systems"};
  app.require_subcommand(1);

  std::string configPath, outPath;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool noTimestamp = false;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", configPath, "experiment config (JSON)")->required();
  run->add_option("--out", outPath, "output path (default: config 'output', else stdout)");
  run->add_option("--seed", seed, "overrides the config seed");
  run->add_option("--threads", threads, "worker threads (fallback: ERGOLAB_THREADS)")->check(CLI::PositiveNumber);
  run->add_flag("--no-timestamp", noTimestamp, "omit the '# generated' header line");

  std::vector<std::string> csvs;
  bool fit = false, allowMixed = false;
  std::optional<double> predicted;
  std::string reportOut;
  auto* report = app.add_subcommand("report", "merge CSV runs into a JSON summary");
  report->add_option("csv", csvs, "CSV files")->required();
  report->add_flag("--fit", fit, "fit a power law per statistic");
  report->add_flag("--allow-mixed", allowMixed, "accept runs with different config hashes");
  report->add_option("--predicted-exponent", predicted, "decay exponent to compare fitted slopes against");
  report->add_option("--out", reportOut, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return runCommand(configPath, outPath, seed, threads, noTimestamp);
    return reportCommand(csvs, fit, allowMixed, predicted, reportOut);
  } catch (const ergolab::ValidationError& e) {
    std::cerr << "ergolab: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ergolab::NumericError& e) {
    std::cerr << "ergolab: numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "ergolab: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ergolab::IoError& e) {
    std::cerr << "ergolab: I/O error: " << e.what() << "\n";
    return 4;
  }
}
