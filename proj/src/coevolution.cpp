#include "coevae/coevolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "coevae/parallel.hpp"

namespace coevae {

std::string_view to_string(RecordPoint r) {
  return r == RecordPoint::before_prune ? "before_prune" : "after_prune";
}

RecordPoint parse_record_point(std::string_view s) {
  if (s == "before_prune") return RecordPoint::before_prune;
  if (s == "after_prune") return RecordPoint::after_prune;
  throw std::invalid_argument("unknown record point '" + std::string(s) + "'");
}

void CoevParams::validate() const {
  if (tournament < 1) throw std::invalid_argument("tournament size must be >= 1");
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) {
    throw std::invalid_argument("mutation probability must lie in [0, 1]");
  }
  if (!(mutation_sigma >= 0.0)) throw std::invalid_argument("mutation sigma must be >= 0");
  if (!(lr_min > 0.0 && lr_min <= lr_max)) {
    throw std::invalid_argument("learning-rate bounds must satisfy 0 < lr_min <= lr_max");
  }
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (eval_batch < 1) throw std::invalid_argument("evaluation batch must be >= 1");
  if (schedule.T != epochs) throw std::invalid_argument("schedule horizon must equal epochs");
  schedule.validate();
  pruner.validate();
}

std::vector<std::size_t> Ring::neighborhood(std::size_t cell) const {
  const std::size_t Z = size();
  std::vector<std::size_t> out;
  out.reserve(neighborhood_size());
  for (std::size_t d = 0; d < neighborhood_size(); ++d) {
    // (cell - radius + d) mod Z without going negative.
    out.push_back((cell + Z * (radius + 1) - radius + d) % Z);
  }
  return out;
}

Ring build_ring(std::size_t cells, std::size_t radius, const Architecture& arch,
                double learning_rate, std::uint64_t seed) {
  if (2 * radius + 1 > cells) {
    throw std::invalid_argument("neighborhood size 2r+1 = " + std::to_string(2 * radius + 1) +
                                " exceeds ring size " + std::to_string(cells));
  }
  Ring ring;
  ring.radius = radius;
  ring.centers.reserve(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    ring.centers.push_back(init_model(arch, learning_rate, derive_seed(seed, k, Stream::init)));
  }
  return ring;
}

Subpopulation gather_subpopulation(const Ring& ring, std::size_t cell) {
  Subpopulation sub;
  for (std::size_t k : ring.neighborhood(cell)) sub.members.push_back(ring.centers[k]);
  return sub;
}

FitnessMatrix evaluate_pairs(const Subpopulation& sub, const Matrix& batch, LossKind kind) {
  if (batch.rows() == 0) throw std::invalid_argument("evaluate_pairs: empty batch");
  const auto s = static_cast<Eigen::Index>(sub.size());
  FitnessMatrix phi(s, s);
  std::vector<Matrix> latents;
  latents.reserve(sub.size());
  for (const auto& m : sub.members) {
    if (static_cast<std::size_t>(batch.cols()) != m.input_dim()) {
      throw std::invalid_argument("evaluate_pairs: batch width mismatch");
    }
    latents.push_back(encode(m.encoder, batch));
  }
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) {
      const auto& dec = sub.members[static_cast<std::size_t>(j)].decoder;
      if (dec.front().in_dim() != static_cast<std::size_t>(latents[static_cast<std::size_t>(i)].cols())) {
        throw std::invalid_argument("evaluate_pairs: latent width mismatch");
      }
      phi(i, j) = loss(kind, batch, decode(dec, latents[static_cast<std::size_t>(i)]));
    }
  }
  return phi;
}

namespace {

std::size_t run_tournament(const Vector& fitness, std::size_t tau, Rng& rng) {
  const std::size_t s = static_cast<std::size_t>(fitness.size());
  std::vector<std::size_t> idx(s);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < tau; ++i) {
    std::swap(idx[i], idx[i + uniform_index(rng, s - i)]);
  }
  std::size_t best = idx[0];
  for (std::size_t i = 1; i < tau; ++i) {
    const std::size_t c = idx[i];
    const double fc = fitness[static_cast<Eigen::Index>(c)];
    const double fb = fitness[static_cast<Eigen::Index>(best)];
    if (fc < fb || (fc == fb && c < best)) best = c;
  }
  return best;
}

}  // namespace

PairSelection tournament_select(const FitnessMatrix& fitness, std::size_t tau, Rng& rng) {
  const std::size_t s = static_cast<std::size_t>(fitness.rows());
  if (s == 0 || fitness.cols() != fitness.rows()) {
    throw std::invalid_argument("tournament_select: fitness matrix must be square and non-empty");
  }
  if (tau < 1 || tau > s) {
    throw std::invalid_argument("tournament size " + std::to_string(tau) + " outside [1, " +
                                std::to_string(s) + "]");
  }
  const Vector encoder_fitness = fitness.rowwise().minCoeff();
  const Vector decoder_fitness = fitness.colwise().minCoeff().transpose();
  PairSelection pick;
  pick.encoder = run_tournament(encoder_fitness, tau, rng);
  pick.decoder = run_tournament(decoder_fitness, tau, rng);
  return pick;
}

void mutate_learning_rate(Subpopulation& sub, double beta, double sigma, double lr_min,
                          double lr_max, Rng& rng) {
  for (auto& m : sub.members) {
    // Fixed draw count per member keeps the stream aligned regardless of beta.
    const bool fire = bernoulli(rng, beta);
    const double g = sigma * standard_normal(rng);
    if (fire) m.learning_rate = std::clamp(m.learning_rate * std::exp(g), lr_min, lr_max);
  }
}

AutoencoderModel compose(const Subpopulation& sub, PairSelection pick) {
  const auto& e = sub.members.at(pick.encoder);
  const auto& d = sub.members.at(pick.decoder);
  AutoencoderModel m;
  m.encoder = e.encoder;
  m.decoder = d.decoder;
  m.learning_rate = pick.encoder == pick.decoder
                        ? e.learning_rate
                        : std::sqrt(e.learning_rate * d.learning_rate);
  return m;
}

CellStreams CellStreams::make(std::uint64_t seed, std::size_t cell) {
  return {make_rng(seed, cell, Stream::shuffle),     make_rng(seed, cell, Stream::evaluation),
          make_rng(seed, cell, Stream::selection),   make_rng(seed, cell, Stream::mutation),
          make_rng(seed, cell, Stream::prune_event), make_rng(seed, cell, Stream::prune_operator)};
}

void train_epoch(AutoencoderModel& model, const Matrix& train, std::size_t batch_size,
                 LossKind kind, Rng& shuffle) {
  const std::size_t m = static_cast<std::size_t>(train.rows());
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = m; i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle, i)]);
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < m; start += batch_size) {
    rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                order.begin() + static_cast<std::ptrdiff_t>(std::min(m, start + batch_size)));
    const BackwardResult br = backward(model, select_rows(train, rows), kind);
    sgd_step(model, br.gradients);
  }
}

PruneStep maybe_prune(AutoencoderModel& model, const TrainingData& data, const CoevParams& params,
                      std::size_t t, std::size_t neighborhood_size, CellStreams& streams) {
  PruneStep step;
  const double p = prune_probability(params.schedule, t, neighborhood_size);
  step.fired = bernoulli(streams.prune_event, p) && params.pruner.kind != PrunerKind::none;
  if (step.fired) {
    const PruneContext ctx{&data.train, &data.heldout};
    step.report = apply_pruner(params.pruner, model, ctx, streams.prune_operator);
  }
  return step;
}

namespace {

Matrix draw_eval_batch(const Matrix& train, std::size_t size, Rng& rng) {
  const std::size_t m = static_cast<std::size_t>(train.rows());
  if (size >= m) return train;
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < size; ++i) std::swap(idx[i], idx[i + uniform_index(rng, m - i)]);
  idx.resize(size);
  return select_rows(train, idx);
}

PruneStep measured_prune(AutoencoderModel& model, const TrainingData& data,
                         const CoevParams& params, std::size_t t, std::size_t neighborhood_size,
                         CellStreams& streams, EpochRecord& record) {
  if (params.record == RecordPoint::before_prune) record = measure(model, data, t, -1);
  PruneStep step = maybe_prune(model, data, params, t, neighborhood_size, streams);
  if (params.record == RecordPoint::after_prune) {
    record = measure(model, data, t, -1);
  } else if (step.fired) {
    record.preserved = preserved_percentage(model);
    record.nonzero_params = nonzero_count(model).nonzero();
  }
  record.prune_event = step.fired;
  return step;
}

}  // namespace

CellOutcome cell_step(Subpopulation sub, const TrainingData& data, const CoevParams& params,
                      std::size_t t, CellStreams& streams) {
  mutate_learning_rate(sub, params.mutation_prob, params.mutation_sigma, params.lr_min,
                       params.lr_max, streams.mutation);
  const Matrix eval = draw_eval_batch(data.train, params.eval_batch, streams.evaluation);

  CellOutcome out;
  out.fitness = evaluate_pairs(sub, eval, params.loss);
  out.min_selection_loss = out.fitness.minCoeff();
  out.selection = tournament_select(out.fitness, std::min(params.tournament, sub.size()),
                                    streams.selection);

  AutoencoderModel pair = compose(sub, out.selection);
  train_epoch(pair, data.train, params.batch_size, params.loss, streams.shuffle);
  out.trained_eval_loss = loss(params.loss, eval, forward(pair, eval).reconstruction);

  out.prune = measured_prune(pair, data, params, t, sub.size(), streams, out.record);
  out.center = std::move(pair);
  return out;
}

EpochRecord measure(const AutoencoderModel& model, const TrainingData& data, std::size_t epoch,
                    long cell) {
  EpochRecord r;
  r.epoch = epoch;
  r.cell = cell;
  r.train_loss = l1_loss(data.train, forward(model, data.train).reconstruction);
  r.test_loss = l1_loss(data.test, forward(model, data.test).reconstruction);
  r.preserved = preserved_percentage(model);
  r.nonzero_params = nonzero_count(model).nonzero();
  r.learning_rate = model.learning_rate;
  return r;
}

namespace {

void log_prunes(std::vector<PruneLogEntry>& log, const PruneStep& step, PrunerKind op,
                std::size_t epoch, long cell) {
  if (!step.fired) return;
  for (const auto& l : step.report.layers) log.push_back({epoch, cell, op, l.layer, l.zeroed});
}

}  // namespace

RunResult run_lipi(const TrainingData& data, Ring ring, const CoevParams& params) {
  params.validate();
  const std::size_t Z = ring.size();
  if (Z == 0) throw std::invalid_argument("run_lipi: empty ring");
  if (ring.neighborhood_size() > Z) throw std::invalid_argument("run_lipi: neighborhood exceeds ring");

  std::vector<CellStreams> streams;
  streams.reserve(Z);
  for (std::size_t k = 0; k < Z; ++k) streams.push_back(CellStreams::make(params.seed, k));

  RunResult result;
  std::vector<double> train_loss(Z);
  for (std::size_t k = 0; k < Z; ++k) {
    train_loss[k] = l1_loss(data.train, forward(ring.centers[k], data.train).reconstruction);
  }
  {
    const auto best = static_cast<std::size_t>(
        std::min_element(train_loss.begin(), train_loss.end()) - train_loss.begin());
    result.initial_train_loss = train_loss[best];
    result.initial_test_loss =
        l1_loss(data.test, forward(ring.centers[best], data.test).reconstruction);
  }

  std::vector<CellOutcome> outcomes(Z);
  std::vector<EpochRecord> records(Z);
  for (std::size_t t = 1; t <= params.epochs; ++t) {
    // Every cell reads the generation t-1 ring; new centers land only after the barrier.
    parallel_for(Z, params.workers, [&](std::size_t k) {
      outcomes[k] = cell_step(gather_subpopulation(ring, k), data, params, t, streams[k]);
      records[k] = outcomes[k].record;
      records[k].cell = static_cast<long>(k);
      records[k].min_selection_loss = outcomes[k].min_selection_loss;
    });
    for (std::size_t k = 0; k < Z; ++k) {
      ring.centers[k] = std::move(outcomes[k].center);
      train_loss[k] = records[k].train_loss;
      result.records.push_back(records[k]);
      log_prunes(result.prune_log, outcomes[k].prune, params.pruner.kind, t, static_cast<long>(k));
    }
  }

  const auto best = static_cast<std::size_t>(
      std::min_element(train_loss.begin(), train_loss.end()) - train_loss.begin());
  result.best_cell = static_cast<long>(best);
  result.best = std::move(ring.centers[best]);
  return result;
}

RunResult run_canonical(const TrainingData& data, const Architecture& arch, double learning_rate,
                        const CoevParams& params) {
  params.validate();
  AutoencoderModel model = init_model(arch, learning_rate, derive_seed(params.seed, 0, Stream::init));
  CellStreams streams = CellStreams::make(params.seed, 0);

  RunResult result;
  result.initial_train_loss = l1_loss(data.train, forward(model, data.train).reconstruction);
  result.initial_test_loss = l1_loss(data.test, forward(model, data.test).reconstruction);
  for (std::size_t t = 1; t <= params.epochs; ++t) {
    train_epoch(model, data.train, params.batch_size, params.loss, streams.shuffle);
    // Canonical training has no neighborhood; the population schedule sees size 1.
    EpochRecord r;
    const PruneStep step = measured_prune(model, data, params, t, 1, streams, r);
    r.min_selection_loss = r.train_loss;
    result.records.push_back(r);
    log_prunes(result.prune_log, step, params.pruner.kind, t, -1);
  }
  result.best = std::move(model);
  result.best_cell = -1;
  return result;
}

}  // namespace coevae
