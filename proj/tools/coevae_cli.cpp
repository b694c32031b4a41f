#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "coevae/config.hpp"
#include "coevae/harness.hpp"
#include "coevae/plot.hpp"
#include "coevae/problem.hpp"
#include "coevae/summary.hpp"

namespace fs = std::filesystem;
using namespace coevae;

namespace {

struct ConfigArgs {
  std::string profile_name = "desk";
  std::string config_path;
  std::vector<std::string> sets;
  std::string trainer, pruner, schedule;
  std::string trials, seed, workers;
};

void add_config_options(CLI::App* app, ConfigArgs& a) {
  app->add_option("--profile", a.profile_name, "base profile (desk, paper, paper-small)");
  app->add_option("--config", a.config_path, "key = value config file");
  app->add_option("--set", a.sets, "override, key=value (repeatable)");
  app->add_option("--trainer", a.trainer, "canonical | lipi");
  app->add_option("--pruner", a.pruner, "none | random | variance | conjunctive");
  app->add_option("--schedule", a.schedule,
                  "fixed | increase | decrease | population | exponential | final_n");
  app->add_option("--trials", a.trials, "number of trials");
  app->add_option("--seed", a.seed, "master seed");
  app->add_option("--workers", a.workers, "worker threads");
}

ExperimentConfig build_config(const ConfigArgs& a) {
  ExperimentConfig cfg = profile(a.profile_name);
  if (!a.config_path.empty()) cfg = load_config(a.config_path, cfg);
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) apply_setting(cfg, key, v);
  };
  set("trainer", a.trainer);
  set("pruner", a.pruner);
  set("schedule", a.schedule);
  set("trials", a.trials);
  set("seed", a.seed);
  set("workers", a.workers);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void print_run_summary(const std::string& label, const ExperimentResult& r) {
  const ConfigSummary s = summarize(label, r.rows);
  const auto corr = s.median_correlation();
  std::printf("%s: trials=%zu median_test=%.6f preserved=%.2f%% (enc %.2f%%, dec %.2f%%) r=%s\n",
              label.c_str(), s.trials, s.median_test(), s.median_preserved_total(),
              s.median_preserved_encoder(), s.median_preserved_decoder(),
              corr ? std::to_string(*corr).c_str() : "NA");
}

int cmd_generate(const ConfigArgs& a, const std::string& out_dir) {
  const ExperimentConfig cfg = build_config(a);
  fs::create_directories(out_dir);
  const TrialData d = make_trial_data(cfg, trial_seed(cfg, 0));
  const fs::path dir(out_dir);
  save_dataset((dir / "train.txt").string(), d.train);
  save_dataset((dir / "test.txt").string(), d.test);
  save_dataset((dir / "heldout.txt").string(), d.heldout);
  save_dataset((dir / "centroids.txt").string(), centroids_as_dataset(d.centroids, d.seed));
  std::printf("wrote %s/{train,test,heldout,centroids}.txt (oracle test loss %.6f)\n",
              out_dir.c_str(), oracle_cluster_loss(d.test, d.centroids));
  return 0;
}

int cmd_train(const ConfigArgs& a, const std::string& out_dir, std::string stem) {
  const ExperimentConfig cfg = build_config(a);
  const std::string label = config_label(cfg);
  if (stem.empty()) stem = label;
  const ExperimentResult r = run_experiment(cfg);
  const std::string path = write_experiment(out_dir, stem, r);
  print_run_summary(label, r);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_sweep(const ConfigArgs& a, const std::string& out_dir, const std::string& which) {
  ExperimentConfig base = build_config(a);
  std::vector<Trainer> trainers;
  if (which == "both" || which == "canonical") trainers.push_back(Trainer::canonical);
  if (which == "both" || which == "lipi") trainers.push_back(Trainer::lipi);
  if (trainers.empty()) throw ConfigError("--trainers must be canonical, lipi or both");
  for (Trainer t : trainers) {
    std::vector<ExperimentConfig> grid;
    ExperimentConfig c = base;
    c.trainer = t;
    c.pruner.kind = PrunerKind::none;
    c.schedule = ScheduleKind::fixed;
    grid.push_back(c);
    for (PrunerKind op : {PrunerKind::random, PrunerKind::variance, PrunerKind::conjunctive}) {
      for (ScheduleKind s : kAllSchedules) {
        c.pruner.kind = op;
        c.schedule = s;
        grid.push_back(c);
      }
    }
    for (const auto& g : grid) {
      g.validate();
      const std::string label = config_label(g);
      const ExperimentResult r = run_experiment(g);
      write_experiment(out_dir, label, r);
      print_run_summary(label, r);
    }
  }
  return 0;
}

int cmd_report(std::vector<std::string> inputs, const std::string& plot_dir) {
  std::vector<std::string> csvs;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto name = e.path().filename().string();
        if (e.path().extension() == ".csv" && name.find(".summary.") == std::string::npos) {
          found.push_back(e.path().string());
        }
      }
      std::sort(found.begin(), found.end());
      csvs.insert(csvs.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      csvs.push_back(in);
    } else {
      throw std::runtime_error("no such file or directory: " + in);
    }
  }
  if (csvs.empty()) throw std::runtime_error("no metrics CSV files found");
  std::vector<ConfigSummary> summaries;
  for (const auto& path : csvs) {
    const auto rows = load_metrics_csv(path);
    const std::string label = fs::path(path).stem().string();
    summaries.push_back(summarize(label, rows));
    if (!plot_dir.empty()) {
      fs::create_directories(plot_dir);
      const auto series = best_series(rows);
      const std::vector<PlotSeries> plot = {{"test (median, IQR)", per_epoch_stats(series, true)},
                                            {"train (median, IQR)", per_epoch_stats(series, false)}};
      std::ofstream out(fs::path(plot_dir) / (label + ".svg"));
      if (!out) throw std::runtime_error("cannot write plot for " + label);
      out << render_loss_svg(label, plot);
    }
  }
  std::cout << format_report(summaries);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coevae: coevolutionary autoencoder training with pruning"};
  app.require_subcommand(1);

  ConfigArgs gen_args, train_args, sweep_args;
  std::string gen_out = "data", train_out = "runs", train_stem, sweep_out = "sweep",
              sweep_trainers = "both", plot_dir;
  std::vector<std::string> report_inputs;

  auto* gen = app.add_subcommand("generate", "write a problem instance to text files");
  add_config_options(gen, gen_args);
  gen->add_option("--out", gen_out, "output directory");

  auto* train = app.add_subcommand("train", "run one configuration over all trials");
  add_config_options(train, train_args);
  train->add_option("--out", train_out, "output directory");
  train->add_option("--name", train_stem, "output file stem (default: config label)");

  auto* sweep = app.add_subcommand("sweep", "operator x schedule grid");
  add_config_options(sweep, sweep_args);
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--trainers", sweep_trainers, "canonical | lipi | both");

  auto* report = app.add_subcommand("report", "rank configurations from metrics CSVs");
  report->add_option("inputs", report_inputs, "CSV files or directories")->required();
  report->add_option("--plot-dir", plot_dir, "write one SVG per configuration here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(gen_args, gen_out);
    if (*train) return cmd_train(train_args, train_out, train_stem);
    if (*sweep) return cmd_sweep(sweep_args, sweep_out, sweep_trainers);
    if (*report) return cmd_report(report_inputs, plot_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
