#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "coevae/nn.hpp"
#include "coevae/pruning.hpp"
#include "coevae/rng.hpp"
#include "coevae/schedules.hpp"

namespace coevae {

// Dense views of the corpus at the network boundary.
struct TrainingData {
  Matrix train;
  Matrix test;
  Matrix heldout;
};

// When an epoch's losses are recorded: right after training (the evaluation
// that feeds replacement), or after that epoch's pruning event. Preserved
// percentages and nonzero counts always describe the network after pruning.
enum class RecordPoint { before_prune, after_prune };

std::string_view to_string(RecordPoint r);
RecordPoint parse_record_point(std::string_view s);

struct CoevParams {
  std::size_t tournament = 2;
  double mutation_prob = 0.5;
  double mutation_sigma = 0.1;
  double lr_min = 1e-8;
  double lr_max = 1e-1;
  std::size_t batch_size = 5;
  std::size_t epochs = 100;
  std::size_t eval_batch = 20;
  LossKind loss = LossKind::l1;
  RecordPoint record = RecordPoint::before_prune;
  ScheduleSpec schedule;
  PrunerSpec pruner;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

// Cells on a wrap-around line; cell k's neighborhood is k-r .. k+r mod Z.
struct Ring {
  std::size_t radius = 1;
  std::vector<AutoencoderModel> centers;

  std::size_t size() const { return centers.size(); }
  std::size_t neighborhood_size() const { return 2 * radius + 1; }
  // Neighbor cell indices, ordered k-r, ..., k, ..., k+r (mod Z).
  std::vector<std::size_t> neighborhood(std::size_t cell) const;
};

Ring build_ring(std::size_t cells, std::size_t radius, const Architecture& arch,
                double learning_rate, std::uint64_t seed);

// Copies of the neighborhood's centers. Encoder i and decoder i are the
// halves of member i.
struct Subpopulation {
  std::vector<AutoencoderModel> members;

  std::size_t size() const { return members.size(); }
};

Subpopulation gather_subpopulation(const Ring& ring, std::size_t cell);

// Entry (i, j): loss of encoder i composed with decoder j on the batch.
using FitnessMatrix = Matrix;

FitnessMatrix evaluate_pairs(const Subpopulation& sub, const Matrix& batch, LossKind kind);

struct PairSelection {
  std::size_t encoder = 0;
  std::size_t decoder = 0;
};

// Encoder fitness is its row minimum, decoder fitness its column minimum
// (lower is better). Tournaments of size tau without replacement, ties to the
// lowest index.
PairSelection tournament_select(const FitnessMatrix& fitness, std::size_t tau, Rng& rng);

// Each member's rate is, with probability beta, multiplied by exp(sigma * N(0,1))
// and clamped to [lr_min, lr_max].
void mutate_learning_rate(Subpopulation& sub, double beta, double sigma, double lr_min,
                          double lr_max, Rng& rng);

AutoencoderModel compose(const Subpopulation& sub, PairSelection pick);

struct CellStreams {
  Rng shuffle;
  Rng evaluation;
  Rng selection;
  Rng mutation;
  Rng prune_event;
  Rng prune_operator;

  static CellStreams make(std::uint64_t seed, std::size_t cell);
};

// One pass of SGD over a freshly shuffled training set.
void train_epoch(AutoencoderModel& model, const Matrix& train, std::size_t batch_size,
                 LossKind kind, Rng& shuffle);

struct PruneLogEntry {
  std::size_t epoch = 0;
  long cell = -1;
  PrunerKind op = PrunerKind::none;
  std::size_t layer = 0;
  std::size_t zeroed = 0;
};

struct PruneStep {
  bool fired = false;
  PruneReport report;
};

// Draws the pruning event for epoch t and applies the operator if it fires.
PruneStep maybe_prune(AutoencoderModel& model, const TrainingData& data, const CoevParams& params,
                      std::size_t t, std::size_t neighborhood_size, CellStreams& streams);

struct EpochRecord {
  std::size_t epoch = 0;
  long cell = -1;  // -1 for canonical
  double train_loss = 0.0;
  double test_loss = 0.0;
  PreservedPercentage preserved;
  std::size_t nonzero_params = 0;
  double learning_rate = 0.0;
  bool prune_event = false;
  double min_selection_loss = 0.0;
};

struct CellOutcome {
  AutoencoderModel center;
  FitnessMatrix fitness;         // before training
  PairSelection selection;
  double min_selection_loss = 0.0;
  double trained_eval_loss = 0.0;  // after training, before pruning
  PruneStep prune;
  EpochRecord record;  // cell index left at -1
};

CellOutcome cell_step(Subpopulation sub, const TrainingData& data, const CoevParams& params,
                      std::size_t t, CellStreams& streams);

struct RunResult {
  AutoencoderModel best;
  long best_cell = -1;
  double initial_train_loss = 0.0;  // L1, best initial individual
  double initial_test_loss = 0.0;
  std::vector<EpochRecord> records;  // epoch-major, then cell
  std::vector<PruneLogEntry> prune_log;
};

// Reported losses are always L1 per bit, whatever the training objective.
EpochRecord measure(const AutoencoderModel& model, const TrainingData& data, std::size_t epoch,
                    long cell);

RunResult run_lipi(const TrainingData& data, Ring ring, const CoevParams& params);

RunResult run_canonical(const TrainingData& data, const Architecture& arch, double learning_rate,
                        const CoevParams& params);

}  // namespace coevae
