// Acceptance checks 1-12. One line per criterion; exit status is the number
// of failed criteria. FLAG marks a directional result that holds on medians
// but is not significant at the chosen alpha.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "coevae/harness.hpp"
#include "coevae/summary.hpp"
#include "oracles.hpp"

using namespace coevae;

namespace {

enum class Verdict { pass, flag, fail };

struct Outcome {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

int failures = 0;

void report(int id, const Outcome& o, double seconds) {
  const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::flag ? "FLAG" : "FAIL";
  if (o.verdict == Verdict::fail) ++failures;
  std::printf("criterion %2d: %s  %s  [%.2fs]\n", id, tag, o.detail.c_str(), seconds);
  std::fflush(stdout);
}

void run(int id, const std::function<Outcome()>& fn, double limit_seconds = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {Verdict::fail, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_seconds > 0.0 && s > limit_seconds && o.verdict != Verdict::fail) {
    o.verdict = Verdict::fail;
    o.detail += " (runtime over " + std::to_string(limit_seconds) + "s)";
  }
  report(id, o, s);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix random_binary(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = bernoulli(rng, 0.5) ? 1.0 : 0.0;
  return m;
}

double norm_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

// ---- 1 -------------------------------------------------------------------

Outcome gradients() {
  Rng rng(1001);
  std::map<LossKind, int> checked;
  std::map<LossKind, double> worst;
  for (LossKind kind : {LossKind::bce, LossKind::l1}) {
    for (int attempt = 0; checked[kind] < 50 && attempt < 1000; ++attempt) {
      Architecture a;
      a.input_dim = 1 + uniform_index(rng, 8);
      a.latent_dim = 1 + uniform_index(rng, 8);
      if (attempt % 4 == 0) a.hidden = {1 + uniform_index(rng, 8)};
      auto m = init_model(a, 0.1, rng());
      for (std::size_t li = 0; li < m.layer_count(); ++li) {
        for (Eigen::Index i = 0; i < m.layer(li).biases.size(); ++i) {
          m.layer(li).biases[i] = 0.2 * (uniform01(rng) - 0.5);
        }
      }
      const Matrix x = random_binary(1 + uniform_index(rng, 8), a.input_dim, rng);
      const auto k = oracle::kink_distance(m, x);
      if (k.relu < 1e-3 || (kind == LossKind::l1 && k.l1 < 1e-6)) continue;
      const auto analytic = oracle::flatten(backward(m, x, kind).gradients);
      const auto numeric = oracle::fd_gradient(m, x, kind, 1e-4);
      worst[kind] = std::max(worst[kind], norm_rel_err(analytic, numeric));
      ++checked[kind];
    }
  }
  const bool ok = checked[LossKind::bce] >= 50 && checked[LossKind::l1] >= 50 &&
                  worst[LossKind::bce] <= 1e-3 && worst[LossKind::l1] <= 1e-2;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("gradients vs central FD: bce %d pairs max rel err %.2e (<=1e-3), l1 %d pairs max "
              "rel err %.2e (<=1e-2)",
              checked[LossKind::bce], worst[LossKind::bce], checked[LossKind::l1],
              worst[LossKind::l1])};
}

// ---- 2 -------------------------------------------------------------------

double closed_form(ScheduleKind k, double C, double T, double t, double s, double t_p) {
  double p = 0.0;
  switch (k) {
    case ScheduleKind::fixed: p = C; break;
    case ScheduleKind::increase: p = C * t / T; break;
    case ScheduleKind::decrease: p = C * (1.0 - t / T); break;
    case ScheduleKind::population: p = C / s; break;
    case ScheduleKind::exponential: p = C * (1.0 - std::exp(-2.0 * t / T)); break;
    case ScheduleKind::final_n: p = t > T - t_p ? C : 0.0; break;
  }
  return std::clamp(p, 0.0, 1.0);
}

Outcome schedules() {
  Rng rng(2002);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    ScheduleSpec spec;
    spec.kind = kAllSchedules[uniform_index(rng, 6)];
    spec.C = uniform01(rng);
    spec.T = 1 + uniform_index(rng, 500);
    spec.t_p = 1 + uniform_index(rng, spec.T);
    const std::size_t t = 1 + uniform_index(rng, spec.T);
    const std::size_t s = 1 + uniform_index(rng, 21);
    const double got = prune_probability(spec, t, s);
    const double want = closed_form(spec.kind, spec.C, static_cast<double>(spec.T),
                                    static_cast<double>(t), static_cast<double>(s),
                                    static_cast<double>(spec.t_p));
    worst = std::max(worst, std::abs(got - want));
  }
  bool exact = true;
  for (double C : {0.1, 0.5, 0.73, 1.0}) {
    for (std::size_t T : {1u, 7u, 100u, 400u}) {
      const double got = prune_probability({ScheduleKind::exponential, C, T, 1}, T, 1);
      const double want = C * (1.0 - std::exp(-2.0));
      exact = exact && std::abs(got - want) <= std::numeric_limits<double>::epsilon() * want;
    }
  }
  return {worst <= 1e-12 && exact ? Verdict::pass : Verdict::fail,
          fmt("1000 tuples max |diff| %.1e; exponential at t=T equals C(1-e^-2): %s", worst,
              exact ? "yes" : "no")};
}

// ---- 3 -------------------------------------------------------------------

Outcome conjunctive() {
  std::size_t boolean_cases = 0, mismatches = 0;
  std::uint64_t seed = 3003;
  for (std::size_t h = 1; h <= 4; ++h) {
    for (std::size_t nodes = 1; nodes <= 4; ++nodes) {
      const std::size_t bits = h * nodes;
      for (std::uint64_t code = 0; code < (1ull << bits); ++code) {
        std::vector<std::vector<bool>> m(h, std::vector<bool>(nodes));
        for (std::size_t b = 0; b < bits; ++b) m[b / nodes][b % nodes] = (code >> b) & 1u;
        Rng a(++seed), r(seed);
        mismatches += conjunctive_select_mask(m, a) != oracle::conjunctive_reference_bool(m, r);
        ++boolean_cases;
      }
    }
  }
  Rng gen(3004);
  std::size_t real_cases = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t h = 1 + uniform_index(gen, 6), nodes = 1 + uniform_index(gen, 8);
    Matrix act(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(nodes));
    std::vector<std::vector<double>> ref(h, std::vector<double>(nodes));
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < nodes; ++c) {
        // Coarse values make ties and constant rows common.
        const double v = i % 3 == 0 ? static_cast<double>(uniform_index(gen, 4)) : standard_normal(gen);
        act(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        ref[r][c] = v;
      }
    }
    const double threshold = uniform01(gen);
    Rng a(gen()), r = a;
    mismatches += conjunctive_select(act, threshold, a) != oracle::conjunctive_reference(ref, threshold, r);
    ++real_cases;
  }
  // Through prune_conjunctive itself: the zeroed rows of each layer must be the
  // reference selection on that layer's held-out activations.
  std::size_t model_cases = 0;
  for (int i = 0; i < 200; ++i) {
    Architecture arch;
    arch.input_dim = 1 + uniform_index(gen, 8);
    arch.latent_dim = 1 + uniform_index(gen, 8);
    auto model = init_model(arch, 0.1, gen());
    for (std::size_t li = 0; li < model.layer_count(); ++li) {
      for (Eigen::Index b = 0; b < model.layer(li).biases.size(); ++b) {
        model.layer(li).biases[b] = 0.1 + uniform01(gen);
      }
    }
    const Matrix heldout = random_binary(1 + uniform_index(gen, 6), arch.input_dim, gen);
    const double threshold = uniform01(gen);
    const auto trace = *forward(model, heldout, true).trace;
    Rng a(gen()), r = a;
    auto pruned = model;
    prune_conjunctive(pruned, heldout, threshold, a);
    for (std::size_t li = 0; li < model.layer_count(); ++li) {
      std::vector<std::vector<double>> ref;
      for (Eigen::Index row = 0; row < trace.layers[li].rows(); ++row) {
        ref.emplace_back(trace.layers[li].row(row).begin(), trace.layers[li].row(row).end());
      }
      const auto want = oracle::conjunctive_reference(ref, threshold, r);
      const Layer& l = pruned.layer(li);
      std::vector<bool> got(l.out_dim());
      for (std::size_t j = 0; j < got.size(); ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        got[j] = l.weights.row(row).isZero(0.0) && l.biases[row] == 0.0;
      }
      mismatches += got != want;
    }
    ++model_cases;
  }
  return {mismatches == 0 ? Verdict::pass : Verdict::fail,
          fmt("%zu boolean matrices (<=4x4), %zu real matrices, %zu pruned models; %zu mismatches",
              boolean_cases, real_cases, model_cases, mismatches)};
}

// ---- 4 -------------------------------------------------------------------

Outcome random_uniformity() {
  Architecture arch;
  arch.input_dim = 20;
  arch.latent_dim = 25;
  const auto base = init_model(arch, 0.1, 4004);
  const std::size_t W = nonzero_count(base).weight_total();
  Rng rng(4005);
  const int reps = 10000;
  const double p = 0.25;
  std::vector<double> hits(W, 0.0);
  for (int r = 0; r < reps; ++r) {
    auto m = base;
    prune_random(m, p, rng);
    std::size_t i = 0;
    for (std::size_t li = 0; li < m.layer_count(); ++li) {
      const auto& w = m.layer(li).weights;
      for (Eigen::Index k = 0; k < w.size(); ++k) hits[i++] += w.data()[k] == 0.0;
    }
  }
  // Each repetition is a fixed-size draw without replacement, so per-position
  // counts carry covariance reps*p(1-p)*W/(W-1)*(I - J/W); scaling by it gives
  // chi-square with W-1 degrees of freedom.
  const double expected = reps * p;
  const double scale = reps * p * (1.0 - p) * static_cast<double>(W) / static_cast<double>(W - 1);
  double stat = 0.0;
  for (double h : hits) stat += (h - expected) * (h - expected) / scale;
  const double pval = oracle::chi_square_p(stat, static_cast<double>(W - 1));
  return {W == 1000 && pval > 0.001 ? Verdict::pass : Verdict::fail,
          fmt("W=%zu, %d draws of p_a=0.25: chi2=%.1f on %zu dof, p=%.3f (>0.001)", W, reps, stat,
              W - 1, pval)};
}

// ---- 5 -------------------------------------------------------------------

Outcome regrowth() {
  const auto cfg = profile("desk");
  const TrialData d = make_trial_data(cfg, 5005);
  auto m = init_model(cfg.arch, cfg.learning_rate, 5006);
  for (auto& l : m.encoder) l.biases.setConstant(0.1);
  Rng rng(5007);
  prune_random(m, 0.5, rng);
  const Matrix batch = d.dense.train.topRows(5);
  const auto g = backward(m, batch, cfg.loss).gradients;
  auto stepped = m;
  sgd_step(stepped, g);
  std::size_t zeroed = 0, with_gradient = 0, regrown = 0;
  for (std::size_t li = 0; li < m.layer_count(); ++li) {
    const auto& before = m.layer(li).weights;
    const auto& after = stepped.layer(li).weights;
    const Matrix& grad = li < m.encoder.size() ? g.encoder[li].weights
                                               : g.decoder[li - m.encoder.size()].weights;
    for (Eigen::Index k = 0; k < before.size(); ++k) {
      if (before.data()[k] != 0.0) continue;
      ++zeroed;
      if (grad.data()[k] == 0.0) continue;
      ++with_gradient;
      regrown += after.data()[k] != 0.0;
    }
  }
  const bool ok = zeroed > 0 && with_gradient > 0 && regrown == with_gradient;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("%zu pruned weights, %zu with nonzero gradient, %zu nonzero after one SGD step",
              zeroed, with_gradient, regrown)};
}

// ---- 6 -------------------------------------------------------------------

Outcome canonical_equivalence() {
  auto c = profile("desk");
  c.epochs = 20;
  c.trials = 1;
  c.pruner.kind = PrunerKind::none;
  auto l = c;
  c.trainer = Trainer::canonical;
  l.trainer = Trainer::lipi;
  l.cells = 1;
  l.radius = 0;
  l.tournament = 1;
  l.mutation_prob = 0.0;
  const auto a = run_experiment(c).rows;
  const auto b = run_experiment(l).rows;
  bool same = a.size() == b.size() && a.size() == 20;
  for (std::size_t i = 0; same && i < a.size(); ++i) {
    same = a[i].train_loss == b[i].train_loss && a[i].test_loss == b[i].test_loss &&
           a[i].learning_rate == b[i].learning_rate && a[i].nonzero_params == b[i].nonzero_params;
  }
  return {same ? Verdict::pass : Verdict::fail,
          fmt("desk, 20 epochs: canonical and lipi(Z=1,r=0,tau=1,beta=0) trajectories %s",
              same ? "bit-identical" : "differ")};
}

// ---- desk sweep shared by 7-11 ------------------------------------------

struct Sweep {
  std::map<std::string, ExperimentResult> results;
  std::map<std::string, ConfigSummary> summaries;
};

ExperimentConfig desk_base() {
  auto c = profile("desk");
  c.workers = std::max(1u, std::thread::hardware_concurrency());
  return c;
}

void add_config(Sweep& sw, const ExperimentConfig& c) {
  const std::string label = config_label(c);
  auto r = run_experiment(c);
  sw.summaries.emplace(label, summarize(label, r.rows));
  sw.results.emplace(label, std::move(r));
}

Sweep run_sweep() {
  Sweep sw;
  for (Trainer t : {Trainer::canonical, Trainer::lipi}) {
    auto c = desk_base();
    c.trainer = t;
    c.pruner.kind = PrunerKind::none;
    if (!sw.results.count(config_label(c))) add_config(sw, c);
    for (PrunerKind op : {PrunerKind::random, PrunerKind::variance, PrunerKind::conjunctive}) {
      for (ScheduleKind s : kAllSchedules) {
        c.pruner.kind = op;
        c.schedule = s;
        add_config(sw, c);
      }
    }
  }
  return sw;
}

std::string label(Trainer t, PrunerKind op, ScheduleKind s) {
  std::string l = std::string(to_string(t)) + "-" + std::string(to_string(op));
  if (op != PrunerKind::none) l += "-" + std::string(to_string(s));
  return l;
}

const ConfigSummary& best_schedule(const Sweep& sw, Trainer t, PrunerKind op) {
  const ConfigSummary* best = nullptr;
  for (ScheduleKind s : kAllSchedules) {
    const auto& c = sw.summaries.at(label(t, op, s));
    if (best == nullptr || c.median_test() < best->median_test()) best = &c;
  }
  return *best;
}

// Final test losses in trial order.
std::vector<double> finals(const Sweep& sw, const std::string& l) {
  std::vector<double> out;
  for (const auto& s : best_series(sw.results.at(l).rows)) out.push_back(s.test.back());
  return out;
}

Outcome training_effectiveness(const ExperimentResult& r) {
  const auto series = best_series(r.rows);
  int ok = 0;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ratio = series[i].test.back() / r.trials[i].oracle_test_loss;
    worst_ratio = std::max(worst_ratio, ratio);
    ok += ratio <= 2.0;
  }
  return {ok >= 8 ? Verdict::pass : Verdict::fail,
          fmt("canonical-none: %d/%zu trials with final test L1 <= 2x oracle floor (worst ratio %.2f)",
              ok, series.size(), worst_ratio)};
}

// One-sided sign test that a beats b trial by trial (lower is better).
std::pair<std::size_t, double> sign_test(const std::vector<double>& a, const std::vector<double>& b,
                                         double b_scale = 1.0) {
  std::size_t wins = 0, n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b_scale * b[i];
    if (d == 0.0) continue;
    ++n;
    wins += d < 0.0;
  }
  return {wins, oracle::sign_test_p(wins, n)};
}

Outcome directional(const Sweep& sw) {
  std::ostringstream detail;
  Verdict v = Verdict::pass;
  auto worsen = [&](Verdict w) {
    if (w == Verdict::fail || (w == Verdict::flag && v == Verdict::pass)) v = w;
  };

  const auto none = finals(sw, "canonical-none");
  const double none_med = median(none);
  {
    const auto lre = finals(sw, "lipi-random-exponential");
    const double med = median(lre);
    const auto [wins, p] = sign_test(lre, none);
    const Verdict a = med > none_med ? Verdict::fail : p < 0.05 ? Verdict::pass : Verdict::flag;
    worsen(a);
    detail << fmt("(a) lipi-random-exponential %.4f vs canonical-none %.4f, wins %zu, p=%.3f %s; ",
                  med, none_med, wins, p,
                  a == Verdict::pass ? "ok" : a == Verdict::flag ? "underpowered" : "no");
  }
  {
    const auto& conj = best_schedule(sw, Trainer::canonical, PrunerKind::conjunctive);
    const auto c = finals(sw, conj.label);
    const double rel = median(c) / none_med - 1.0;
    const auto [wins, p] = sign_test(c, none, 1.10);
    const Verdict b = rel > 0.10 ? Verdict::fail : p < 0.05 ? Verdict::pass : Verdict::flag;
    worsen(b);
    detail << fmt("(b) %s %+.1f%% vs canonical-none, within 10%% in %zu trials, p=%.3f %s; ",
                  conj.label.c_str(), 100.0 * rel, wins, p,
                  b == Verdict::pass ? "ok" : b == Verdict::flag ? "underpowered" : "no");
  }
  {
    std::vector<std::string> offenders;
    for (Trainer t : {Trainer::canonical, Trainer::lipi}) {
      for (PrunerKind op : {PrunerKind::random, PrunerKind::variance, PrunerKind::conjunctive}) {
        const auto& best = best_schedule(sw, t, op);
        if (best.schedule == "decrease") offenders.push_back(best.label);
      }
    }
    if (!offenders.empty()) worsen(Verdict::fail);
    detail << "(c) decrease best for: ";
    if (offenders.empty()) detail << "none";
    for (std::size_t i = 0; i < offenders.size(); ++i) detail << (i ? ", " : "") << offenders[i];
  }
  return {v, detail.str()};
}

Outcome preserved_direction(const Sweep& sw) {
  auto pres = [&](Trainer t, PrunerKind op) {
    return best_schedule(sw, t, op).median_preserved_total();
  };
  const double lr = pres(Trainer::lipi, PrunerKind::random);
  const double lv = pres(Trainer::lipi, PrunerKind::variance);
  const double lc = pres(Trainer::lipi, PrunerKind::conjunctive);
  const double cv = pres(Trainer::canonical, PrunerKind::variance);
  const double cc = pres(Trainer::canonical, PrunerKind::conjunctive);
  const bool lipi_ok = lv > lr && lv > lc;
  const bool canon_ok = cv < cc;
  return {lipi_ok && canon_ok ? Verdict::pass : Verdict::fail,
          fmt("lipi preserved%% variance %.1f vs random %.1f, conjunctive %.1f (%s); canonical "
              "variance %.1f vs conjunctive %.1f (%s)",
              lv, lr, lc, lipi_ok ? "ok" : "no", cv, cc, canon_ok ? "ok" : "no")};
}

Outcome asymmetry(const Sweep& sw) {
  const auto& c = best_schedule(sw, Trainer::canonical, PrunerKind::conjunctive);
  const double enc = c.median_preserved_encoder(), dec = c.median_preserved_decoder();
  return {enc < dec ? Verdict::pass : Verdict::fail,
          fmt("%s median preserved encoder %.1f%% vs decoder %.1f%%", c.label.c_str(), enc, dec)};
}

Outcome coupling(const Sweep& sw) {
  double lowest = 2.0;
  std::string where;
  for (const auto& [l, s] : sw.summaries) {
    const auto r = s.median_correlation();
    const double v = r.value_or(-2.0);
    if (v < lowest) lowest = v, where = l;
  }
  const double desk = sw.summaries.at("lipi-none").median_correlation().value_or(-2.0);
  return {lowest >= 0.9 ? Verdict::pass : Verdict::fail,
          fmt("median train/test Pearson r: lipi-none %.4f; lowest over all %zu configs %.4f (%s)",
              desk, sw.summaries.size(), lowest, where.c_str())};
}

// ---- 12 ------------------------------------------------------------------

Outcome determinism() {
  auto c = profile("desk");
  c.pruner.kind = PrunerKind::random;
  c.schedule = ScheduleKind::exponential;
  c.epochs = 15;
  c.trials = 3;
  auto csv = [](const ExperimentConfig& cfg) {
    std::ostringstream out;
    write_metrics_csv(out, run_experiment(cfg).rows);
    return out.str();
  };
  c.workers = 1;
  const std::string one = csv(c);
  c.workers = 4;
  const std::string four = csv(c);
  c.workers = 1;
  const std::string again = csv(c);
  const bool ok = one == four && one == again;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("lipi-random-exponential CSV (%zu bytes): 1 worker vs 4 workers %s, repeat %s",
              one.size(), one == four ? "identical" : "differ", one == again ? "identical" : "differ")};
}

}  // namespace

int main() {
  run(1, gradients, 10.0);
  run(2, schedules, 1.0);
  run(3, conjunctive, 10.0);
  run(4, random_uniformity, 30.0);
  run(5, regrowth);
  run(6, canonical_equivalence);

  ExperimentResult canonical_none;
  run(7, [&] {
    auto c = desk_base();
    c.trainer = Trainer::canonical;
    c.pruner.kind = PrunerKind::none;
    canonical_none = run_experiment(c);
    return training_effectiveness(canonical_none);
  }, 300.0);

  const auto t0 = std::chrono::steady_clock::now();
  Sweep sw;
  std::string sweep_error;
  try {
    sw = run_sweep();
  } catch (const std::exception& e) {
    sweep_error = e.what();
  }
  std::printf("desk sweep: %zu configurations in %.1fs\n", sw.results.size(),
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  auto from_sweep = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!sweep_error.empty()) return {Verdict::fail, "sweep failed: " + sweep_error};
      return fn(sw);
    };
  };
  run(8, from_sweep(directional));
  run(9, from_sweep(preserved_direction));
  run(10, from_sweep(asymmetry));
  run(11, from_sweep(coupling));
  run(12, determinism);

  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
