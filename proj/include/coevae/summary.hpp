#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coevae/harness.hpp"

namespace coevae {

// Per-trial trajectory of the best individual: at every epoch the cell with
// the lowest training loss (ties to the lowest cell index).
struct TrialSeries {
  std::size_t trial = 0;
  std::vector<std::size_t> epochs;
  std::vector<long> cells;
  std::vector<double> train;
  std::vector<double> test;
  std::vector<double> preserved_total;
  std::vector<double> preserved_encoder;
  std::vector<double> preserved_decoder;
};

std::vector<TrialSeries> best_series(const std::vector<MetricsRow>& rows);

// Pearson correlation; nullopt when either series is constant or shorter than 2.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Linear-interpolation quantile (type 7). Throws on empty input.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct EpochStats {
  std::size_t epoch = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

std::vector<EpochStats> per_epoch_stats(const std::vector<TrialSeries>& series, bool test_loss = true);

struct ConfigSummary {
  std::string label;
  std::string trainer;
  std::string pruner;
  std::string schedule;  // empty for pruner none
  bool degenerate = false;  // population schedule under canonical training
  std::size_t trials = 0;
  std::vector<double> final_test;
  std::vector<double> final_train;
  std::vector<double> final_preserved_total;
  std::vector<double> final_preserved_encoder;
  std::vector<double> final_preserved_decoder;
  std::vector<std::optional<double>> correlation;  // train vs test per trial

  double median_test() const { return median(final_test); }
  double median_preserved_total() const { return median(final_preserved_total); }
  double median_preserved_encoder() const { return median(final_preserved_encoder); }
  double median_preserved_decoder() const { return median(final_preserved_decoder); }
  std::optional<double> median_correlation() const;
};

struct LabelParts {
  std::string trainer;
  std::string pruner;
  std::string schedule;
};

// Splits "trainer-pruner[-schedule]"; unknown shapes leave fields empty.
LabelParts parse_label(const std::string& label);

ConfigSummary summarize(const std::string& label, const std::vector<MetricsRow>& rows);

// Table of all configs ranked by median final test loss within each trainer,
// followed by the best (operator, schedule) per trainer.
std::string format_report(const std::vector<ConfigSummary>& summaries);

void write_epoch_summary_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

}  // namespace coevae
