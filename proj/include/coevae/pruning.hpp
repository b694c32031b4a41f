#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "coevae/nn.hpp"
#include "coevae/rng.hpp"

namespace coevae {

enum class PrunerKind { none, random, variance, conjunctive };
enum class VarianceKey { destination, source };

std::string_view to_string(PrunerKind k);
PrunerKind parse_pruner(std::string_view s);
std::string_view to_string(VarianceKey k);
VarianceKey parse_variance_key(std::string_view s);

// What to prune when a pruning event fires.
struct PrunerSpec {
  PrunerKind kind = PrunerKind::none;
  double p_a = 0.1;           // share of weights removed (random, variance)
  double threshold = 0.1;     // normalized-activation threshold (conjunctive)
  std::size_t heldout = 5;    // held-out probe count (conjunctive)
  VarianceKey variance_key = VarianceKey::destination;

  void validate() const;
};

// Percentage of weights that are non-zero. Biases are not part of the pool.
struct PreservedPercentage {
  double total = 100.0;
  double encoder = 100.0;
  double decoder = 100.0;
};

PreservedPercentage preserved_percentage(const AutoencoderModel& model);

struct LayerPruneCount {
  std::size_t layer = 0;     // index into model.layer(i)
  std::size_t selected = 0;  // weights (or nodes, for conjunctive) chosen
  std::size_t zeroed = 0;    // parameters that went from non-zero to zero
};

struct PruneReport {
  std::vector<LayerPruneCount> layers;

  std::size_t total_zeroed() const;
  std::size_t total_selected() const;
};

// floor(p_a * W) with W the total weight count across encoder and decoder.
std::size_t prune_quota(double p_a, std::size_t weight_count);

// Uniform choice of floor(p_a * W) distinct weights, set to zero.
PruneReport prune_random(AutoencoderModel& model, double p_a, Rng& rng);

// Population variance of every node's post-activation value over a dataset.
struct NodeStats {
  Vector input_variance;         // per input feature
  std::vector<Vector> variances; // per layer, per output node
};

NodeStats collect_node_variance(const AutoencoderModel& model, const Matrix& data);

inline constexpr double kVarianceEpsilon = 1e-8;

// Per-weight selection scores 1 / (variance + eps), keyed on the weight's
// destination (or source) node, flattened layer by layer in row-major order.
std::vector<double> variance_scores(const AutoencoderModel& model, const NodeStats& stats,
                                    VarianceKey key);

// Weighted sampling without replacement of floor(p_a * W) weights with
// probabilities proportional to the inverse-variance scores.
PruneReport prune_variance(AutoencoderModel& model, const NodeStats& stats, double p_a, Rng& rng,
                           VarianceKey key = VarianceKey::destination);

// Row-wise min-max normalization of an h x nodes activation matrix; a
// constant row maps to all zeros.
Matrix normalize_rows(const Matrix& activations);

// Boolean-conjunction node selection for one layer. Rows whose conjunction is
// empty are dropped one at a time (uniformly at random among the remaining
// rows) until some node survives or no rows remain; in the latter case the
// returned mask is all false.
std::vector<bool> conjunctive_select(const Matrix& activations, double threshold, Rng& rng);

// Boolean core of conjunctive_select on an already thresholded matrix.
std::vector<bool> conjunctive_select_mask(std::vector<std::vector<bool>> below, Rng& rng);

// Zeroes incoming weights and bias of every selected node in every layer.
PruneReport prune_conjunctive(AutoencoderModel& model, const Matrix& heldout, double threshold,
                              Rng& rng);

struct PruneContext {
  const Matrix* train = nullptr;    // variance statistics
  const Matrix* heldout = nullptr;  // conjunctive probes
};

PruneReport apply_pruner(const PrunerSpec& spec, AutoencoderModel& model, const PruneContext& ctx,
                         Rng& rng);

}  // namespace coevae
