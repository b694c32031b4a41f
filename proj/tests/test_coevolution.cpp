#include <gtest/gtest.h>

#include <cmath>

#include "coevae/coevolution.hpp"
#include "coevae/problem.hpp"
#include "oracles.hpp"

using namespace coevae;

namespace {

Architecture tiny_arch() {
  Architecture a;
  a.input_dim = 16;
  a.latent_dim = 4;
  return a;
}

TrainingData tiny_data(std::uint64_t seed = 3) {
  const auto c = generate_centroids(3, 16, seed);
  TrainingData d;
  d.train = to_matrix(generate_dataset(c, 6, 0.05, seed + 1).samples);
  d.test = to_matrix(generate_dataset(c, 6, 0.05, seed + 2).samples);
  d.heldout = to_matrix(generate_heldout(c, 4, 0.05, seed + 3).samples);
  return d;
}

CoevParams tiny_params(std::size_t epochs = 4) {
  CoevParams p;
  p.epochs = epochs;
  p.schedule.T = epochs;
  p.schedule.t_p = 1;
  p.lr_min = 1e-3;
  p.lr_max = 10.0;
  p.eval_batch = 8;
  p.loss = LossKind::bce;
  p.seed = 17;
  return p;
}

bool same_model(const AutoencoderModel& a, const AutoencoderModel& b) {
  if (a.layer_count() != b.layer_count() || a.learning_rate != b.learning_rate) return false;
  for (std::size_t i = 0; i < a.layer_count(); ++i) {
    if (!(a.layer(i).weights == b.layer(i).weights) || !(a.layer(i).biases == b.layer(i).biases)) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(Ring, NeighborhoodsWrapAround) {
  const auto ring = build_ring(5, 1, tiny_arch(), 0.1, 1);
  EXPECT_EQ(ring.neighborhood(0), (std::vector<std::size_t>{4, 0, 1}));
  EXPECT_EQ(ring.neighborhood(4), (std::vector<std::size_t>{3, 4, 0}));
  EXPECT_EQ(ring.neighborhood_size(), 3u);
  const auto wide = build_ring(5, 2, tiny_arch(), 0.1, 1);
  EXPECT_EQ(wide.neighborhood(1), (std::vector<std::size_t>{4, 0, 1, 2, 3}));
  const auto single = build_ring(1, 0, tiny_arch(), 0.1, 1);
  EXPECT_EQ(single.neighborhood(0), (std::vector<std::size_t>{0}));
  EXPECT_THROW(build_ring(4, 2, tiny_arch(), 0.1, 1), std::invalid_argument);
}

TEST(Ring, CellsStartDifferentAndDeterministic) {
  const auto a = build_ring(3, 1, tiny_arch(), 0.1, 9);
  const auto b = build_ring(3, 1, tiny_arch(), 0.1, 9);
  EXPECT_TRUE(same_model(a.centers[1], b.centers[1]));
  EXPECT_FALSE(same_model(a.centers[0], a.centers[1]));
  const auto sub = gather_subpopulation(a, 0);
  ASSERT_EQ(sub.size(), 3u);
  EXPECT_TRUE(same_model(sub.members[0], a.centers[2]));
}

TEST(Coevolution, PairMatrixMatchesComposedModels) {
  const auto ring = build_ring(3, 1, tiny_arch(), 0.1, 2);
  const auto sub = gather_subpopulation(ring, 1);
  const auto data = tiny_data();
  const auto phi = evaluate_pairs(sub, data.train, LossKind::l1);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const auto m = compose(sub, {i, j});
      EXPECT_NEAR(phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                  oracle::mean_loss(m, data.train, LossKind::l1), 1e-12);
    }
  }
  EXPECT_THROW(evaluate_pairs(sub, Matrix::Zero(0, 16), LossKind::l1), std::invalid_argument);
  EXPECT_THROW(evaluate_pairs(sub, Matrix::Zero(2, 15), LossKind::l1), std::invalid_argument);
}

TEST(Coevolution, TournamentProbabilitiesMatchAnalytic) {
  // Distinct row minima 0.1 < 0.2 < 0.3 (encoder); columns reversed (decoder).
  FitnessMatrix phi(3, 3);
  phi << 0.1, 0.9, 0.9,
         0.9, 0.9, 0.2,
         0.9, 0.9, 0.3;
  // Column minima: 0.1, 0.9, 0.2 -> decoder ranking 0 < 2 < 1.
  Rng rng(5);
  const int n = 30000;
  std::vector<int> enc(3, 0), dec(3, 0);
  for (int i = 0; i < n; ++i) {
    const auto p = tournament_select(phi, 2, rng);
    ++enc[p.encoder];
    ++dec[p.decoder];
  }
  // tau=2 of 3 without replacement: best wins 2/3, middle 1/3, worst never.
  const double sd = std::sqrt(n * (2.0 / 9.0));
  EXPECT_NEAR(enc[0], n * 2.0 / 3.0, 4 * sd);
  EXPECT_NEAR(enc[1], n / 3.0, 4 * sd);
  EXPECT_EQ(enc[2], 0);
  EXPECT_NEAR(dec[0], n * 2.0 / 3.0, 4 * sd);
  EXPECT_NEAR(dec[2], n / 3.0, 4 * sd);
  EXPECT_EQ(dec[1], 0);
}

TEST(Coevolution, TournamentEdgeSizesAndTies) {
  FitnessMatrix phi = FitnessMatrix::Constant(3, 3, 0.5);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto p = tournament_select(phi, 3, rng);
    EXPECT_EQ(p.encoder, 0u);  // all tied, full tournament: lowest index
    EXPECT_EQ(p.decoder, 0u);
  }
  std::vector<int> hits(3, 0);
  for (int i = 0; i < 3000; ++i) ++hits[tournament_select(phi, 1, rng).encoder];
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
  EXPECT_THROW(tournament_select(phi, 4, rng), std::invalid_argument);
  EXPECT_THROW(tournament_select(phi, 0, rng), std::invalid_argument);
  EXPECT_THROW(tournament_select(FitnessMatrix::Zero(2, 3), 1, rng), std::invalid_argument);
}

TEST(Coevolution, LearningRateMutation) {
  const auto ring = build_ring(3, 1, tiny_arch(), 0.1, 2);
  auto sub = gather_subpopulation(ring, 0);
  Rng r1(3);
  mutate_learning_rate(sub, 0.0, 0.5, 1e-3, 1.0, r1);
  for (const auto& m : sub.members) EXPECT_EQ(m.learning_rate, 0.1);
  Rng r2(3);
  mutate_learning_rate(sub, 1.0, 0.5, 1e-3, 1.0, r2);
  EXPECT_EQ(r1(), r2());  // same number of draws whatever beta is
  for (const auto& m : sub.members) EXPECT_NE(m.learning_rate, 0.1);
  mutate_learning_rate(sub, 1.0, 50.0, 0.05, 0.2, r2);
  for (const auto& m : sub.members) {
    EXPECT_GE(m.learning_rate, 0.05);
    EXPECT_LE(m.learning_rate, 0.2);
  }
}

TEST(Coevolution, ComposeTakesHalvesAndGeometricMeanRate) {
  auto ring = build_ring(3, 1, tiny_arch(), 0.1, 2);
  ring.centers[0].learning_rate = 0.04;
  ring.centers[1].learning_rate = 0.01;
  const auto sub = gather_subpopulation(ring, 1);  // members: cells 0, 1, 2
  const auto m = compose(sub, {0, 1});
  EXPECT_TRUE(m.encoder[0].weights == ring.centers[0].encoder[0].weights);
  EXPECT_TRUE(m.decoder[0].weights == ring.centers[1].decoder[0].weights);
  EXPECT_DOUBLE_EQ(m.learning_rate, 0.02);
  EXPECT_EQ(compose(sub, {1, 1}).learning_rate, 0.01);
}

TEST(Coevolution, TrainEpochReducesLoss) {
  auto m = init_model(tiny_arch(), 1.0, 4);
  const auto d = tiny_data();
  Rng rng(1);
  const double before = l1_loss(d.train, forward(m, d.train).reconstruction);
  for (int i = 0; i < 30; ++i) train_epoch(m, d.train, 5, LossKind::bce, rng);
  EXPECT_LT(l1_loss(d.train, forward(m, d.train).reconstruction), before);
}

TEST(Coevolution, MaybePruneFiresAtScheduleRate) {
  const auto d = tiny_data();
  auto p = tiny_params(100);
  p.pruner.kind = PrunerKind::random;
  p.pruner.p_a = 0.01;
  p.schedule.C = 0.3;
  auto streams = CellStreams::make(1, 0);
  auto m = init_model(tiny_arch(), 0.1, 1);
  int fired = 0;
  for (std::size_t t = 1; t <= 100; ++t) {
    for (int rep = 0; rep < 20; ++rep) fired += maybe_prune(m, d, p, t, 1, streams).fired;
  }
  EXPECT_NEAR(fired, 600, 4 * std::sqrt(2000 * 0.3 * 0.7));
  p.pruner.kind = PrunerKind::none;
  p.schedule.C = 1.0;
  EXPECT_FALSE(maybe_prune(m, d, p, 1, 1, streams).fired);
}

TEST(Coevolution, GenerationIsSynchronous) {
  // One generation of run_lipi equals independent cell steps on the initial ring.
  const auto d = tiny_data();
  auto p = tiny_params(1);
  p.pruner.kind = PrunerKind::random;
  p.schedule.C = 1.0;
  const auto ring = build_ring(4, 1, tiny_arch(), 0.5, 8);
  const auto run = run_lipi(d, ring, p);
  ASSERT_EQ(run.records.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    auto streams = CellStreams::make(p.seed, k);
    const auto out = cell_step(gather_subpopulation(ring, k), d, p, 1, streams);
    EXPECT_EQ(run.records[k].train_loss, out.record.train_loss);
    EXPECT_EQ(run.records[k].test_loss, out.record.test_loss);
    EXPECT_EQ(run.records[k].preserved.total, out.record.preserved.total);
    EXPECT_EQ(run.records[k].prune_event, out.prune.fired);
  }
}

TEST(Coevolution, RecordPoint) {
  // Losses come from before or after the epoch's pruning event; network size
  // always from after.
  const auto d = tiny_data();
  auto p = tiny_params(1);
  p.pruner.kind = PrunerKind::random;
  p.pruner.p_a = 0.5;
  p.schedule.C = 1.0;
  const auto ring = build_ring(3, 1, tiny_arch(), 0.5, 8);
  auto streams = CellStreams::make(p.seed, 1);
  const auto before = cell_step(gather_subpopulation(ring, 1), d, p, 1, streams);
  ASSERT_TRUE(before.prune.fired);
  const auto after_prune = measure(before.center, d, 1, -1);
  EXPECT_NE(before.record.train_loss, after_prune.train_loss);
  EXPECT_EQ(before.record.preserved.total, after_prune.preserved.total);
  EXPECT_EQ(before.record.nonzero_params, after_prune.nonzero_params);
  EXPECT_LT(before.record.preserved.total, 100.0);

  p.record = RecordPoint::after_prune;
  streams = CellStreams::make(p.seed, 1);
  const auto after = cell_step(gather_subpopulation(ring, 1), d, p, 1, streams);
  EXPECT_TRUE(same_model(after.center, before.center));
  EXPECT_EQ(after.record.train_loss, after_prune.train_loss);
  EXPECT_EQ(after.record.test_loss, after_prune.test_loss);

  EXPECT_EQ(parse_record_point("after_prune"), RecordPoint::after_prune);
  EXPECT_EQ(to_string(RecordPoint::before_prune), "before_prune");
  EXPECT_THROW(parse_record_point("sometimes"), std::invalid_argument);
}

TEST(Coevolution, WorkersDoNotChangeResults) {
  const auto d = tiny_data();
  auto p = tiny_params(5);
  p.pruner.kind = PrunerKind::variance;
  p.schedule.C = 0.5;
  const auto ring = build_ring(5, 1, tiny_arch(), 0.5, 8);
  const auto a = run_lipi(d, ring, p);
  p.workers = 3;
  const auto b = run_lipi(d, ring, p);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].train_loss, b.records[i].train_loss);
    EXPECT_EQ(a.records[i].learning_rate, b.records[i].learning_rate);
  }
  EXPECT_TRUE(same_model(a.best, b.best));
  EXPECT_EQ(a.best_cell, b.best_cell);
}

TEST(Coevolution, CanonicalEqualsSingleCellLipi) {
  const auto d = tiny_data();
  auto p = tiny_params(6);
  p.tournament = 1;
  p.mutation_prob = 0.0;
  const auto canon = run_canonical(d, tiny_arch(), 0.5, p);
  const auto lipi = run_lipi(d, build_ring(1, 0, tiny_arch(), 0.5, p.seed), p);
  ASSERT_EQ(canon.records.size(), lipi.records.size());
  for (std::size_t i = 0; i < canon.records.size(); ++i) {
    EXPECT_EQ(canon.records[i].train_loss, lipi.records[i].train_loss);
    EXPECT_EQ(canon.records[i].test_loss, lipi.records[i].test_loss);
  }
}

TEST(Coevolution, RecordsAndBestIndividual) {
  const auto d = tiny_data();
  const auto p = tiny_params(3);
  const auto run = run_lipi(d, build_ring(3, 1, tiny_arch(), 0.5, 4), p);
  ASSERT_EQ(run.records.size(), 9u);
  EXPECT_EQ(run.records[4].epoch, 2u);
  EXPECT_EQ(run.records[4].cell, 1);
  double best = 1e9;
  long best_cell = -1;
  for (std::size_t k = 6; k < 9; ++k) {
    if (run.records[k].train_loss < best) {
      best = run.records[k].train_loss;
      best_cell = run.records[k].cell;
    }
  }
  EXPECT_EQ(run.best_cell, best_cell);
  EXPECT_EQ(l1_loss(d.train, forward(run.best, d.train).reconstruction), best);
}

TEST(Coevolution, ParamValidation) {
  auto p = tiny_params(3);
  p.schedule.T = 4;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = tiny_params(3);
  p.lr_min = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = tiny_params(3);
  p.mutation_prob = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = tiny_params(3);
  p.batch_size = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
