// arrival: command-line driver for the crossing-probability pipelines.
//
// exit codes: 0 ok, 1 other error, 2 validation error, 3 regime warning under
// --strict, 4 acceptance failure

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "arrival/acceptance.hpp"
#include "arrival/scenario.hpp"

namespace fs = std::filesystem;
using namespace arrival;

namespace {

int run_acceptance(const fs::path& out_dir, const std::vector<int>& only, double sabotage) {
  acceptance::Options o;
  o.hbar_perturbation = sabotage;
  std::vector<acceptance::CriterionResult> rs;
  for (int id : acceptance::criterion_ids()) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    rs.push_back(acceptance::run_criterion(id, o));
    std::cout << acceptance::report_line(rs.back()) << "\n";
    for (const auto& n : rs.back().notes) std::cout << "    note: " << n << "\n";
    std::cout.flush();
  }
  std::size_t pass = 0;
  for (const auto& r : rs) pass += r.pass;
  std::cout << pass << "/" << rs.size() << " criteria passed\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream(out_dir / "acceptance.json") << acceptance::report_json(rs);
  }
  return pass == rs.size() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crossing (arrival) probabilities for free, classical Brownian and quantum "
               "Brownian particles, and for ensembles of N copies."};
  std::string pipeline, config_path, out_dir, format = "csv", plot, name = "result";
  std::vector<std::string> sets;
  std::vector<int> only;
  std::uint64_t seed = 0;
  bool strict = false, acceptance_flag = false;
  double sabotage = 0.0;

  app.add_option("--pipeline", pipeline, "unitary | classical | qbm | ensemble | acceptance");
  app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "override one key (key=value); repeatable");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (u64), required for Monte Carlo runs");
  app.add_option("--out", out_dir, "output directory (default: $ARRIVAL_OUT or .)");
  app.add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--plot", plot,
                 "also write a plotting script: smalltime-scaling | survival-vs-t | "
                 "pn-histogram | epsilon-heatmap");
  app.add_option("--name", name, "base name of the output files");
  app.add_flag("--strict", strict, "treat a failed decoherence-regime check as an error (exit 3)");
  app.add_flag("--acceptance", acceptance_flag, "run the acceptance suite");
  app.add_option("--only", only, "acceptance: run just these criterion ids");
  app.add_option("--sabotage-hbar", sabotage,
                 "acceptance: perturb hbar in the sum-rule check (must make it fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (out_dir.empty()) {
    const char* env = std::getenv("ARRIVAL_OUT");
    out_dir = env ? env : ".";
  }

  try {
    scenario::ScenarioConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    if (!pipeline.empty()) cfg.set("pipeline", pipeline);
    for (const auto& s : sets) cfg.set_assignment(s);
    if (*seed_opt) cfg.set("seed", std::to_string(seed));
    if (strict) cfg.set("strict", "true");

    if (acceptance_flag || cfg.text("pipeline") == "acceptance")
      return run_acceptance(out_dir, only, sabotage);

    auto fmt = scenario::parse_format(format);
    std::optional<scenario::PlotKind> kind;
    if (!plot.empty()) kind = scenario::parse_plot_kind(plot);

    auto table = scenario::run_scenario(cfg);
    fs::create_directories(out_dir);
    fs::path data = fs::path(out_dir) / (name + scenario::extension(fmt));
    scenario::emit(table, fmt, data);
    std::cout << "wrote " << data.string() << " (" << table.rows() << " rows)\n";
    if (kind) {
      // plot scripts read CSV, so make sure one exists next to the script
      fs::path csv = fs::path(out_dir) / (name + ".csv");
      if (fmt != scenario::Format::csv) scenario::emit(table, scenario::Format::csv, csv);
      fs::path script = fs::path(out_dir) / (name + "_" + scenario::plot_kind_name(*kind) + ".py");
      scenario::emit_plot_script(table, *kind, csv.filename().string(), script);
      std::cout << "wrote " << script.string() << "\n";
    }
    if (table.meta_value("regime_warning") == "true")
      std::cerr << "warning: decoherence regime check failed for at least one time\n";
    return 0;
  } catch (const scenario::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const SupportError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const scenario::RegimeWarning& e) {
    std::cerr << "regime warning (strict): " << e.what() << "\n";
    return 3;
  } catch (const RegimeError& e) {
    std::cerr << "regime warning (strict): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
