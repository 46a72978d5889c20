// faultloc: command-line front end for simulation, dataset building,
// evaluation and plotting.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "faultloc/error.hpp"
#include "faultloc/harness.hpp"

using namespace faultloc;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string config;
  std::string out;
};

harness::ExperimentConfig resolve(const Globals& g) {
  auto cfg = g.config.empty() ? harness::ExperimentConfig{} : harness::load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.jobs) cfg.jobs = *g.jobs;
  if (!g.out.empty()) cfg.output_dir = g.out;
  cfg.validate();
  return cfg;
}

void print_summary(const harness::EvalReport& report) {
  for (const auto& mode : report.modes) {
    for (const auto& m : mode.models) {
      std::cout << data::to_string(mode.mode) << '\t' << m.model << '\t';
      if (m.error.empty()) {
        std::cout << "mae_km=" << m.mean_mae << " std=" << m.fold_std << '\n';
      } else {
        std::cout << "error: " << m.error << '\n';
      }
    }
  }
}

int fail(const std::string& code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << std::endl;
  return code == "usage" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault location workbench for a three-terminal HVDC network"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Override the experiment seed");
  app.add_option("--jobs", g.jobs, "Worker threads for simulation")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "Simulate every generated scenario to a waveform directory");
  simulate->add_option("--config", g.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  std::string sim_out;
  simulate->add_option("--out", sim_out, "Output directory")->required();

  auto* build = app.add_subcommand("build-dataset", "Window waveforms into a feature CSV");
  std::string build_in, build_out, channels = "vi", task = "regression";
  std::size_t window = data::kDefaultWindow;
  int folds = data::kDefaultFolds;
  build->add_option("--in", build_in, "Waveform directory")->required()->check(CLI::ExistingDirectory);
  build->add_option("--out", build_out, "Dataset CSV")->required();
  build->add_option("--window", window, "Samples per channel")->check(CLI::PositiveNumber);
  build->add_option("--channels", channels, "v, i or vi")->check(CLI::IsMember({"v", "i", "vi"}));
  build->add_option("--task", task, "regression or classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  build->add_option("--folds", folds, "Fold count (0 leaves rows unassigned)")->check(CLI::NonNegativeNumber);

  auto* evaluate = app.add_subcommand("evaluate", "7-fold comparison of the model roster");
  evaluate->add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  evaluate->add_option("--out", g.out, "Report directory (overrides output_dir)");
  bool timing = false;
  evaluate->add_flag("--timing", timing, "Also write kfold_timing.csv");

  auto* curve = app.add_subcommand("curve", "Learning curve and fit-time scaling for one model");
  std::string curve_model = "boosted";
  curve->add_option("--model", curve_model, "Roster model name")->required();
  curve->add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  curve->add_option("--out", g.out, "Report directory");

  auto* classify = app.add_subcommand("classify", "Fault vs. load-step classification");
  classify->add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  classify->add_option("--out", g.out, "Report directory");

  auto* noise = app.add_subcommand("noise", "Model MAE across measurement SNR levels");
  noise->add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  noise->add_option("--out", g.out, "Report directory");

  auto* locate = app.add_subcommand("locate", "Single-ended impedance locator");
  std::optional<int> scenario;
  double rf_assumed = 0.0;
  bool oracle_if = false;
  std::string locate_in;
  locate->add_option("--scenario", scenario, "Scenario id (omit to write impedance.csv for every fault)");
  locate->add_option("--rf-assumed", rf_assumed, "Assumed fault resistance in ohms")->required();
  locate->add_flag("--oracle-if", oracle_if, "Use the simulated fault current instead of I_S");
  locate->add_option("--in", locate_in, "Waveform directory (default: simulate from the config)")
      ->check(CLI::ExistingDirectory);
  locate->add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  locate->add_option("--out", g.out, "Report directory");

  auto* plot = app.add_subcommand("plot", "Render SVG charts from report CSVs");
  std::string plot_in;
  plot->add_option("--in", plot_in, "Report directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*simulate) {
      auto cfg = resolve(g);
      cfg.waveform_dir.reset();
      const auto records = harness::simulate_records(cfg);
      sim::write_waveform_dir(sim_out, cfg.network, records);
      std::cout << "wrote " << records.size() << " waveforms to " << sim_out << '\n';
    } else if (*build) {
      const auto records = sim::read_waveform_dir(build_in);
      const auto mode = data::parse_channel_mode(channels);
      auto matrix = task == "regression" ? data::build_regression_matrix(records, window, mode)
                                         : data::build_classification_matrix(records, window, mode);
      if (folds > 0) matrix.fold_of_row = data::assign_folds(matrix.rows(), folds, g.seed.value_or(2021));
      data::save_dataset(build_out, matrix);
      std::cout << "wrote " << matrix.rows() << " rows to " << build_out << '\n';
    } else if (*evaluate) {
      const auto cfg = resolve(g);
      const auto records = harness::simulate_records(cfg);
      const auto report = harness::run_kfold(cfg, records);
      harness::emit_report(report, cfg.output_dir, timing);
      print_summary(report);
    } else if (*curve) {
      const auto cfg = resolve(g);
      const auto& spec = cfg.model(curve_model);
      const auto records = harness::simulate_records(cfg);
      const auto curves = harness::learning_curve(cfg, records, spec);
      harness::write_curve_csv(cfg.output_dir / ("curve_" + spec.name + ".csv"), curves);
      for (const auto& c : curves) {
        const auto& last = c.points.back();
        std::cout << data::to_string(c.mode) << '\t' << c.model << "\tn=" << last.n_train
                  << " val_mae_km=" << last.val_mae << '\n';
      }
    } else if (*classify) {
      const auto cfg = resolve(g);
      const auto records = harness::simulate_records(cfg);
      const auto report = harness::classify_events(cfg, records);
      harness::write_classify_csv(cfg.output_dir / "classify.csv", report);
      std::cout << "accuracy=" << report.accuracy << " tp=" << report.true_pos << " tn=" << report.true_neg
                << " fp=" << report.false_pos << " fn=" << report.false_neg << '\n';
    } else if (*noise) {
      const auto cfg = resolve(g);
      const auto records = harness::simulate_records(cfg);
      const auto rows = harness::noise_sweep(cfg, records);
      harness::write_noise_csv(cfg.output_dir / "noise.csv", rows);
      for (const auto& r : rows) {
        std::cout << r.snr_db << "dB\t" << data::to_string(r.mode) << '\t' << r.model << "\tmae_km=" << r.mean_mae
                  << '\n';
      }
    } else if (*locate) {
      auto cfg = resolve(g);
      if (!locate_in.empty()) cfg.waveform_dir = locate_in;
      const auto network = cfg.waveform_dir ? sim::read_waveform_network(*cfg.waveform_dir) : cfg.network;
      const auto state = sim::build_network(network);
      std::vector<sim::WaveformRecord> records;
      if (scenario && !cfg.waveform_dir) {
        const auto scenarios =
            sim::generate_scenarios(cfg.network, cfg.seed, cfg.n_fault, cfg.n_nonfault, cfg.ranges);
        if (*scenario < 0 || *scenario >= static_cast<int>(scenarios.size())) {
          throw Error("invalid_argument", "no scenario with id " + std::to_string(*scenario));
        }
        records.push_back(sim::simulate(state, scenarios[static_cast<std::size_t>(*scenario)], cfg.duration));
      } else {
        records = harness::simulate_records(cfg);
      }
      if (scenario) {
        const auto it = std::find_if(records.begin(), records.end(),
                                     [&](const auto& r) { return r.scenario.id == *scenario; });
        if (it == records.end()) throw Error("invalid_argument", "no scenario with id " + std::to_string(*scenario));
        if (!it->scenario.is_fault()) throw Error("invalid_argument", "scenario is a load step, not a fault");
        const auto in = baselines::impedance_inputs(*it, state, rf_assumed, oracle_if);
        const auto est = baselines::impedance_locate(in);
        std::cout << nlohmann::json{{"scenario", *scenario},
                                    {"true_km", it->scenario.distance_km},
                                    {"estimate_km", est.distance_km},
                                    {"m", est.m},
                                    {"v_s", in.v_s},
                                    {"i_s", in.i_s},
                                    {"i_f", in.i_f},
                                    {"oracle_if", oracle_if}}
                         .dump()
                  << '\n';
      } else {
        const auto rows = harness::impedance_report(state, records, rf_assumed);
        harness::write_impedance_csv(cfg.output_dir / "impedance.csv", rows);
        std::cout << "wrote " << rows.size() << " rows to " << (cfg.output_dir / "impedance.csv").string() << '\n';
      }
    } else if (*plot) {
      for (const auto& p : harness::emit_plots(plot_in)) std::cout << p.string() << '\n';
    }
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
