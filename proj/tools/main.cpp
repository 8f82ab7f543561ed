#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "robustssm/report_io.hpp"
#include "robustssm/scenario_io.hpp"
#include "robustssm/simlab.hpp"

namespace {

using namespace robustssm;

struct Overrides {
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::optional<int> sensors;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> estimators;
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Scenario prepare_scenario(const std::string& path, const Overrides& ov) {
  Scenario sc = load_scenario(path);
  if (ov.lambda) sc.lambda = *ov.lambda;
  if (ov.gamma) sc.gamma = *ov.gamma;
  if (ov.sensors) sc.sensors = *ov.sensors;
  if (ov.runs) sc.mc_runs = *ov.runs;
  if (ov.seed) sc.seed = *ov.seed;
  if (ov.out_dir) sc.out_dir = *ov.out_dir;
  if (ov.estimators) sc.estimators = split_list(*ov.estimators);
  sc.validate();
  return sc;
}

std::filesystem::path ensure_out_dir(const Scenario& sc) {
  const std::filesystem::path dir(sc.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void print_summary(const McReport& report) {
  for (const auto& [method, stats] : report.stats)
    std::cout << method << ": median mse " << format_double(stats.median) << "\n";
  for (const auto& [method, count] : report.failure_counts)
    std::cout << method << ": " << count << " failed run(s)\n";
}

int cmd_run(const std::string& path, const Overrides& ov) {
  const Scenario sc = prepare_scenario(path, ov);
  const McReport report = run_mc(sc);
  const auto dir = ensure_out_dir(sc);
  write_results_csv(report, (dir / "results.csv").string());
  write_report_json(report, (dir / "report.json").string());
  print_summary(report);
  std::cout << "wrote " << (dir / "results.csv").string() << "\n";
  return 0;
}

int cmd_sweep(const std::string& path, const Overrides& ov, const std::string& axis,
              const std::vector<double>& values) {
  if (axis != "lambda" && axis != "sensors")
    throw std::invalid_argument("sweep axis must be lambda or sensors");
  if (values.empty()) throw std::invalid_argument("sweep values must not be empty");
  const Scenario base = prepare_scenario(path, ov);
  const auto dir = ensure_out_dir(base);

  std::string csv = "axis,value,run,method,mse,wall_time_s,bcrb_trace\n";
  nlohmann::json summaries = nlohmann::json::array();
  for (double value : values) {
    Scenario sc = base;
    if (axis == "lambda") {
      sc.lambda = value;
    } else {
      const int sensors = static_cast<int>(value);
      if (static_cast<double>(sensors) != value)
        throw std::invalid_argument("sensor sweep values must be integers");
      sc.sensors = sensors;
    }
    sc.validate();
    const McReport report = run_mc(sc);
    for (const auto& rec : report.records) {
      csv += csv_escape(axis);
      csv.push_back(',');
      csv += format_double(value);
      csv.push_back(',');
      csv += std::to_string(rec.run);
      csv.push_back(',');
      csv += csv_escape(rec.method);
      csv.push_back(',');
      csv += format_double(rec.mse);
      csv.push_back(',');
      csv += format_double(rec.wall_time_s);
      csv.push_back(',');
      csv += format_double(rec.bcrb_trace);
      csv.push_back('\n');
    }
    nlohmann::json entry;
    entry["value"] = value;
    entry["report"] = nlohmann::json::parse(report_json_text(report));
    summaries.push_back(entry);
    std::cout << axis << " = " << format_double(value) << " done\n";
  }

  const auto csv_path = dir / "sweep.csv";
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + csv_path.string());
  out << csv;
  std::ofstream json_out(dir / "sweep_report.json", std::ios::binary);
  if (!json_out) throw std::runtime_error("cannot write sweep_report.json");
  json_out << summaries.dump(2) << "\n";
  std::cout << "wrote " << csv_path.string() << "\n";
  return 0;
}

int cmd_bound(const std::string& path, const Overrides& ov) {
  const Scenario sc = prepare_scenario(path, ov);
  const auto dir = ensure_out_dir(sc);
  std::string csv = "run,k,filter_trace,smoother_trace\n";
  for (int run = 0; run < sc.mc_runs; ++run) {
    const BcrbTraces traces = bound_traces_for_run(sc, run);
    for (size_t k = 0; k < traces.filter_trace.size(); ++k) {
      csv += std::to_string(run);
      csv.push_back(',');
      csv += std::to_string(k + 1);
      csv.push_back(',');
      csv += format_double(traces.filter_trace[k]);
      csv.push_back(',');
      csv += format_double(traces.smoother_trace[k]);
      csv.push_back('\n');
    }
  }
  const auto csv_path = dir / "bounds.csv";
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + csv_path.string());
  out << csv;
  std::cout << "wrote " << csv_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"outlier-robust state estimation experiments"};
  app.require_subcommand(1);

  std::string scenario_path;
  Overrides ov;
  std::string axis;
  std::string value_list;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario_path, "scenario file")->required();
    cmd->add_option("--lambda", ov.lambda, "override contamination probability");
    cmd->add_option("--gamma", ov.gamma, "override outlier variance multiplier");
    cmd->add_option("--sensors", ov.sensors, "override sensor count");
    cmd->add_option("--runs", ov.runs, "override Monte Carlo run count");
    cmd->add_option("--seed", ov.seed, "override RNG seed");
    cmd->add_option("--out", ov.out_dir, "override output directory");
    cmd->add_option("--estimators", ov.estimators, "comma-separated estimator list");
  };

  CLI::App* run = app.add_subcommand("run", "run a Monte Carlo study");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "sweep lambda or sensor count");
  add_common(sweep);
  sweep->add_option("--sweep-axis", axis, "lambda or sensors")->required();
  sweep->add_option("--sweep-values", value_list, "comma-separated values")->required();
  CLI::App* bound = app.add_subcommand("bound", "compute bound traces only");
  add_common(bound);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(scenario_path, ov);
    if (sweep->parsed()) {
      std::vector<double> values;
      for (const auto& tok : split_list(value_list)) values.push_back(std::stod(tok));
      return cmd_sweep(scenario_path, ov, axis, values);
    }
    if (bound->parsed()) return cmd_bound(scenario_path, ov);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
