#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coevae/coevolution.hpp"
#include "coevae/nn.hpp"
#include "coevae/pruning.hpp"
#include "coevae/schedules.hpp"

namespace coevae {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Trainer { canonical, lipi };

std::string_view to_string(Trainer t);
Trainer parse_trainer(std::string_view s);

struct ProblemParams {
  std::size_t n = 128;
  std::size_t k = 6;
  std::size_t per = 10;  // samples per centroid, for both train and test
  double q = 0.05;
};

struct ExperimentConfig {
  ProblemParams problem;
  Architecture arch;
  Trainer trainer = Trainer::lipi;
  LossKind loss = LossKind::l1;
  RecordPoint record = RecordPoint::before_prune;
  double learning_rate = 1e-5;
  double lr_min = 1e-8;
  double lr_max = 1e-1;
  std::size_t batch_size = 5;
  std::size_t epochs = 100;
  std::size_t eval_batch = 20;
  std::size_t cells = 5;
  std::size_t radius = 1;
  std::size_t tournament = 2;
  double mutation_prob = 0.5;
  double mutation_sigma = 0.1;
  ScheduleKind schedule = ScheduleKind::fixed;
  double schedule_C = 0.5;
  std::optional<std::size_t> final_window;  // defaults to ceil(0.1 * epochs)
  PrunerSpec pruner;
  std::size_t trials = 10;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;

  std::size_t effective_final_window() const;
  ScheduleSpec schedule_spec() const;
  CoevParams coev_params(std::uint64_t run_seed) const;
  // Throws ConfigError describing the first violated constraint.
  void validate() const;
};

// Named profiles: "desk" (small, fast), "paper" (full-size problem and
// model), "paper-small" (full-size problem, reduced latent layer).
ExperimentConfig profile(std::string_view name);
std::vector<std::string> profile_names();

// Applies one documented key. Unknown keys and malformed values throw ConfigError.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// Flat "key = value" lines; '#' starts a comment. A "profile" key, if
// present, must come first and selects the base profile.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = profile("desk"));
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = profile("desk"));

// Canonical key/value echo; parse_config(to_text(c)) reproduces c.
std::vector<std::pair<std::string, std::string>> to_settings(const ExperimentConfig& cfg);
std::string to_text(const ExperimentConfig& cfg);

// Short label, e.g. "lipi-random-exponential" or "canonical-none".
std::string config_label(const ExperimentConfig& cfg);

}  // namespace coevae
