// Command line front end: seeded experiment runs, randomized verification of
// the per-round exploration certificate, and side-by-side run reports.

#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "squarecb/harness.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
}

int cmd_run(const std::string& config_path, const std::string& output_dir, int threads) {
  squarecb::ExperimentConfig cfg = squarecb::parse_config(read_file(config_path));
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  const squarecb::RunSummary summary = squarecb::run_experiment(cfg, threads);
  std::cout << "experiment: " << summary.name << " (" << summary.algorithm << ")\n"
            << "  horizon " << summary.horizon << ", seeds " << summary.per_seed.size()
            << ", rate parameter " << summary.rate_parameter << "\n"
            << "  regret (" << summary.bound_metric << "): mean " << summary.mean_regret
            << ", median " << summary.median_regret << ", q90 " << summary.q90 << "\n";
  if (summary.bound)
    std::cout << "  theoretical bound " << *summary.bound << ", satisfied in "
              << summary.satisfaction_fraction * 100.0 << "% of seeds\n";
  if (summary.outside_theorem_scope)
    std::cout << "  note: combination outside the covered theorem scope\n";
  std::cout << "  outputs in " << cfg.output_dir << "\n";
  return 0;
}

int cmd_verify_minimax(const squarecb::CertificateConfig& cfg, const std::string& json_path) {
  const squarecb::CertificateReport report = squarecb::verify_certificate(cfg);
  std::cout << "trials " << report.trials << ", max objective " << report.max_objective
            << ", worst margin to 2K/gamma " << report.worst_margin << "\n";
  if (!json_path.empty()) write_file(json_path, squarecb::to_json(report).dump(2) + "\n");
  if (!report.certificate_holds) {
    std::cout << "certificate FALSIFIED on " << report.violations.size() << " recorded instance(s)\n";
    for (const auto& v : report.violations) {
      std::cout << "  K=" << v.instance.yhat.size() << " gamma=" << v.instance.gamma
                << " objective=" << v.objective << " bound=" << v.bound << "\n";
    }
    return 1;
  }
  std::cout << "certificate holds: every sampled instance stayed at or below 2K/gamma\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& summary_paths, const std::string& csv_path) {
  std::vector<squarecb::RunSummary> summaries;
  for (const auto& p : summary_paths)
    summaries.push_back(squarecb::summary_from_json(squarecb::json::parse(read_file(p))));
  const squarecb::CompareReport report = squarecb::compare_report(summaries);
  std::cout << report.render_text();
  if (!csv_path.empty()) write_file(csv_path, report.to_csv());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SquareCB contextual-bandit simulation harness"};
  app.require_subcommand(1);

  // run
  std::string config_path, output_dir;
  int threads = 1;
  CLI::App* run = app.add_subcommand("run", "run a configured experiment across seeds");
  run->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  run->add_option("-o,--output-dir", output_dir, "override the config's output directory");
  run->add_option("-j,--threads", threads, "worker threads for seed-level parallelism")
      ->check(CLI::PositiveNumber);

  // verify-minimax
  squarecb::CertificateConfig vcfg;
  std::string report_json;
  CLI::App* verify = app.add_subcommand(
      "verify-minimax", "randomized check of the per-round 2K/gamma exploration certificate");
  verify->add_option("-n,--trials", vcfg.trials, "number of sampled instances")->check(CLI::PositiveNumber);
  verify->add_option("--k-min", vcfg.k_min, "smallest arm count");
  verify->add_option("--k-max", vcfg.k_max, "largest arm count");
  verify->add_option("--gamma-min", vcfg.gamma_min, "smallest learning rate");
  verify->add_option("--gamma-max", vcfg.gamma_max, "largest learning rate");
  verify->add_option("--mu-factor", vcfg.mu_factor, "mu = mu_factor * K");
  verify->add_option("--tolerance", vcfg.tolerance, "violation tolerance");
  verify->add_option("--seed", vcfg.seed, "sampling seed");
  verify->add_option("--json", report_json, "write the report as JSON to this path");

  // report
  std::vector<std::string> summary_paths;
  std::string csv_path;
  CLI::App* report = app.add_subcommand("report", "side-by-side comparison of run summaries");
  report->add_option("summaries", summary_paths, "summary JSON files")->required()->expected(-1);
  report->add_option("--csv", csv_path, "also write the table as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, output_dir, threads);
    if (verify->parsed()) return cmd_verify_minimax(vcfg, report_json);
    if (report->parsed()) return cmd_report(summary_paths, csv_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
