#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "coevae/coevolution.hpp"
#include "coevae/config.hpp"
#include "coevae/problem.hpp"

namespace coevae {

inline constexpr const char* kMetricsHeader =
    "trial,epoch,cell,train_loss,test_loss,preserved_total,preserved_encoder,preserved_decoder,"
    "nonzero_params,learning_rate,prune_event";

struct MetricsRow {
  std::size_t trial = 0;
  std::size_t epoch = 0;
  long cell = -1;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double preserved_total = 100.0;
  double preserved_encoder = 100.0;
  double preserved_decoder = 100.0;
  std::size_t nonzero_params = 0;
  double learning_rate = 0.0;
  bool prune_event = false;

  bool operator==(const MetricsRow&) const = default;
};

class CsvParseError : public std::runtime_error {
 public:
  CsvParseError(const std::string& detail, std::size_t line, const std::string& source = {})
      : std::runtime_error((source.empty() ? "" : source + ": ") + "line " +
                           std::to_string(line) + ": " + detail),
        detail_(detail),
        line_(line) {}
  const std::string& detail() const { return detail_; }
  std::size_t line() const { return line_; }

 private:
  std::string detail_;
  std::size_t line_;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);
std::vector<MetricsRow> load_metrics_csv(const std::string& path);

// Everything one trial needs: the generated corpus and its dense views.
struct TrialData {
  std::uint64_t seed = 0;
  CentroidSet centroids;
  BitDataset train;
  BitDataset test;
  BitDataset heldout;
  TrainingData dense;
};

// Train and test share centroids and use independent flip streams; held-out
// probes come from the test-generation process under their own seed.
TrialData make_trial_data(const ExperimentConfig& cfg, std::uint64_t trial_seed);

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t trial);

struct TrialOutcome {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double oracle_train_loss = 0.0;
  double oracle_test_loss = 0.0;
  RunResult run;
};

TrialOutcome run_trial(const ExperimentConfig& cfg, std::size_t trial, std::size_t cell_workers = 1);

struct ExperimentResult {
  std::vector<MetricsRow> rows;  // sorted by trial, epoch, cell
  std::vector<TrialOutcome> trials;
  std::string manifest_json;
};

// Validates the whole config first (ConfigError), then runs trials
// concurrently on cfg.workers threads. Output does not depend on workers.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::vector<MetricsRow> to_rows(const TrialOutcome& outcome);

// Seed ledger and config echo for re-running any single trial.
std::string manifest_json(const ExperimentConfig& cfg, const std::vector<TrialOutcome>& trials);

// "epoch,cell,operator,layer,zeroed" lines, one per layer touched by an event.
void write_prune_log(std::ostream& out, const std::vector<TrialOutcome>& trials);

// Writes <stem>.csv, <stem>.manifest.json, <stem>.prune.log and
// <stem>.summary.csv into dir. Returns the metrics CSV path.
std::string write_experiment(const std::string& dir, const std::string& stem,
                             const ExperimentResult& result);

}  // namespace coevae
