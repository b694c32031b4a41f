#include "coevae/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "coevae/parallel.hpp"
#include "coevae/summary.hpp"

namespace coevae {

namespace {

std::string fmt(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.trial << ',' << r.epoch << ',' << r.cell << ',' << fmt(r.train_loss) << ','
        << fmt(r.test_loss) << ',' << fmt(r.preserved_total) << ',' << fmt(r.preserved_encoder)
        << ',' << fmt(r.preserved_decoder) << ',' << r.nonzero_params << ','
        << fmt(r.learning_rate) << ',' << (r.prune_event ? 1 : 0) << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw CsvParseError("missing header", line_no);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw CsvParseError("unexpected header '" + line + "'", line_no);
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 11) {
      throw CsvParseError("expected 11 fields, found " + std::to_string(f.size()), line_no);
    }
    auto as_double = [&](std::size_t i) {
      char* end = nullptr;
      const double d = std::strtod(f[i].c_str(), &end);
      if (f[i].empty() || end != f[i].c_str() + f[i].size()) {
        throw CsvParseError("field " + std::to_string(i + 1) + " is not a number: '" + f[i] + "'",
                            line_no);
      }
      return d;
    };
    auto as_long = [&](std::size_t i) {
      char* end = nullptr;
      const long v = std::strtol(f[i].c_str(), &end, 10);
      if (f[i].empty() || end != f[i].c_str() + f[i].size()) {
        throw CsvParseError("field " + std::to_string(i + 1) + " is not an integer: '" + f[i] + "'",
                            line_no);
      }
      return v;
    };
    auto as_count = [&](std::size_t i) {
      const long v = as_long(i);
      if (v < 0) throw CsvParseError("field " + std::to_string(i + 1) + " is negative", line_no);
      return static_cast<std::size_t>(v);
    };
    MetricsRow r;
    r.trial = as_count(0);
    r.epoch = as_count(1);
    r.cell = as_long(2);
    r.train_loss = as_double(3);
    r.test_loss = as_double(4);
    r.preserved_total = as_double(5);
    r.preserved_encoder = as_double(6);
    r.preserved_decoder = as_double(7);
    r.nonzero_params = as_count(8);
    r.learning_rate = as_double(9);
    const long ev = as_long(10);
    if (ev != 0 && ev != 1) throw CsvParseError("prune_event must be 0 or 1", line_no);
    r.prune_event = ev == 1;
    rows.push_back(r);
  }
  return rows;
}

std::vector<MetricsRow> load_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return read_metrics_csv(in);
  } catch (const CsvParseError& e) {
    throw CsvParseError(e.detail(), e.line(), path);
  }
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t trial) {
  return cfg.master_seed + trial;
}

TrialData make_trial_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  TrialData d;
  d.seed = seed;
  d.centroids = generate_centroids(cfg.problem.k, cfg.problem.n, derive_seed(seed, 0, Stream::centroids));
  d.train = generate_dataset(d.centroids, cfg.problem.per, cfg.problem.q,
                             derive_seed(seed, 0, Stream::train_data), Split::train);
  d.test = generate_dataset(d.centroids, cfg.problem.per, cfg.problem.q,
                            derive_seed(seed, 0, Stream::test_data), Split::test);
  d.heldout = generate_heldout(d.centroids, std::max<std::size_t>(1, cfg.pruner.heldout),
                               cfg.problem.q, derive_seed(seed, 0, Stream::heldout_data));
  d.dense.train = to_matrix(d.train.samples);
  d.dense.test = to_matrix(d.test.samples);
  d.dense.heldout = to_matrix(d.heldout.samples);
  return d;
}

TrialOutcome run_trial(const ExperimentConfig& cfg, std::size_t trial, std::size_t cell_workers) {
  TrialOutcome out;
  out.trial = trial;
  out.seed = trial_seed(cfg, trial);
  const TrialData data = make_trial_data(cfg, out.seed);
  out.oracle_train_loss = oracle_cluster_loss(data.train, data.centroids);
  out.oracle_test_loss = oracle_cluster_loss(data.test, data.centroids);
  CoevParams params = cfg.coev_params(out.seed);
  params.workers = cell_workers;
  if (cfg.trainer == Trainer::lipi) {
    Ring ring = build_ring(cfg.cells, cfg.radius, cfg.arch, cfg.learning_rate, out.seed);
    out.run = run_lipi(data.dense, std::move(ring), params);
  } else {
    out.run = run_canonical(data.dense, cfg.arch, cfg.learning_rate, params);
  }
  return out;
}

std::vector<MetricsRow> to_rows(const TrialOutcome& outcome) {
  std::vector<MetricsRow> rows;
  rows.reserve(outcome.run.records.size());
  for (const auto& r : outcome.run.records) {
    MetricsRow m;
    m.trial = outcome.trial;
    m.epoch = r.epoch;
    m.cell = r.cell;
    m.train_loss = r.train_loss;
    m.test_loss = r.test_loss;
    m.preserved_total = r.preserved.total;
    m.preserved_encoder = r.preserved.encoder;
    m.preserved_decoder = r.preserved.decoder;
    m.nonzero_params = r.nonzero_params;
    m.learning_rate = r.learning_rate;
    m.prune_event = r.prune_event;
    rows.push_back(m);
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.trials.resize(cfg.trials);
  const std::size_t trial_workers = std::min(cfg.workers, cfg.trials);
  const std::size_t cell_workers = std::max<std::size_t>(1, cfg.workers / trial_workers);
  parallel_for(cfg.trials, trial_workers,
               [&](std::size_t i) { result.trials[i] = run_trial(cfg, i, cell_workers); });
  for (const auto& t : result.trials) {
    auto rows = to_rows(t);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  result.manifest_json = manifest_json(cfg, result.trials);
  return result;
}

std::string manifest_json(const ExperimentConfig& cfg, const std::vector<TrialOutcome>& trials) {
  using nlohmann::ordered_json;
  ordered_json j;
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : to_settings(cfg)) {
    if (k != "workers") config[k] = v;
  }
  j["label"] = config_label(cfg);
  j["config"] = config;
  j["master_seed"] = cfg.master_seed;
  j["architecture_parameters"] = cfg.arch.parameter_count();
  const std::size_t cells = cfg.trainer == Trainer::lipi ? cfg.cells : 1;
  ordered_json tj = ordered_json::array();
  for (const auto& t : trials) {
    ordered_json e;
    e["trial"] = t.trial;
    e["seed"] = t.seed;
    e["data_seeds"] = {{"centroids", derive_seed(t.seed, 0, Stream::centroids)},
                       {"train", derive_seed(t.seed, 0, Stream::train_data)},
                       {"test", derive_seed(t.seed, 0, Stream::test_data)},
                       {"heldout", derive_seed(t.seed, 0, Stream::heldout_data)}};
    ordered_json cj = ordered_json::array();
    for (std::size_t k = 0; k < cells; ++k) {
      cj.push_back({{"cell", k},
                    {"init", derive_seed(t.seed, k, Stream::init)},
                    {"shuffle", derive_seed(t.seed, k, Stream::shuffle)},
                    {"evaluation", derive_seed(t.seed, k, Stream::evaluation)},
                    {"selection", derive_seed(t.seed, k, Stream::selection)},
                    {"mutation", derive_seed(t.seed, k, Stream::mutation)},
                    {"prune_event", derive_seed(t.seed, k, Stream::prune_event)},
                    {"prune_operator", derive_seed(t.seed, k, Stream::prune_operator)}});
    }
    e["cell_streams"] = cj;
    e["oracle_test_loss"] = t.oracle_test_loss;
    e["best_cell"] = t.run.best_cell;
    e["prune_events"] = t.run.prune_log.empty() ? 0 : [&] {
      std::size_t n = 0;
      std::size_t last_epoch = 0;
      long last_cell = -2;
      for (const auto& p : t.run.prune_log) {
        if (p.epoch != last_epoch || p.cell != last_cell) ++n;
        last_epoch = p.epoch;
        last_cell = p.cell;
      }
      return n;
    }();
    tj.push_back(e);
  }
  j["trials"] = tj;
  return j.dump(2) + "\n";
}

void write_prune_log(std::ostream& out, const std::vector<TrialOutcome>& trials) {
  out << "trial,epoch,cell,operator,layer,zeroed\n";
  for (const auto& t : trials) {
    for (const auto& p : t.run.prune_log) {
      out << t.trial << ',' << p.epoch << ',' << p.cell << ',' << to_string(p.op) << ','
          << p.layer << ',' << p.zeroed << '\n';
    }
  }
}

std::string write_experiment(const std::string& dir, const std::string& stem,
                             const ExperimentResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base = fs::path(dir) / stem;
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
    return out;
  };
  const std::string csv_path = base.string() + ".csv";
  {
    auto out = open(csv_path);
    write_metrics_csv(out, result.rows);
  }
  {
    auto out = open(base.string() + ".manifest.json");
    out << result.manifest_json;
  }
  {
    auto out = open(base.string() + ".prune.log");
    write_prune_log(out, result.trials);
  }
  {
    auto out = open(base.string() + ".summary.csv");
    write_epoch_summary_csv(out, result.rows);
  }
  return csv_path;
}

}  // namespace coevae
