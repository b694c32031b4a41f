#include "coevae/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace coevae {

std::string_view to_string(PrunerKind k) {
  switch (k) {
    case PrunerKind::none: return "none";
    case PrunerKind::random: return "random";
    case PrunerKind::variance: return "variance";
    case PrunerKind::conjunctive: return "conjunctive";
  }
  return "?";
}

PrunerKind parse_pruner(std::string_view s) {
  for (auto k : {PrunerKind::none, PrunerKind::random, PrunerKind::variance,
                 PrunerKind::conjunctive}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown pruner '" + std::string(s) + "'");
}

std::string_view to_string(VarianceKey k) {
  return k == VarianceKey::destination ? "destination" : "source";
}

VarianceKey parse_variance_key(std::string_view s) {
  if (s == "destination") return VarianceKey::destination;
  if (s == "source") return VarianceKey::source;
  throw std::invalid_argument("unknown variance key '" + std::string(s) + "'");
}

void PrunerSpec::validate() const {
  if (!(p_a >= 0.0 && p_a <= 1.0)) throw std::invalid_argument("p_a must lie in [0, 1]");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("conjunctive threshold must lie in [0, 1]");
  }
  if (kind == PrunerKind::conjunctive && heldout < 1) {
    throw std::invalid_argument("conjunctive pruning needs at least one held-out sample");
  }
}

PreservedPercentage preserved_percentage(const AutoencoderModel& model) {
  const NonzeroCount c = nonzero_count(model);
  auto pct = [](std::size_t nz, std::size_t total) {
    return total == 0 ? 100.0 : 100.0 * static_cast<double>(nz) / static_cast<double>(total);
  };
  return {pct(c.weight_nonzero(), c.weight_total()), pct(c.encoder_weights, c.encoder_weight_total),
          pct(c.decoder_weights, c.decoder_weight_total)};
}

std::size_t PruneReport::total_zeroed() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.zeroed;
  return n;
}

std::size_t PruneReport::total_selected() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.selected;
  return n;
}

namespace {

void check_p_a(double p_a) {
  if (!(p_a >= 0.0 && p_a <= 1.0)) throw std::invalid_argument("p_a must lie in [0, 1]");
}

std::vector<std::size_t> weight_offsets(const AutoencoderModel& model) {
  std::vector<std::size_t> offsets{0};
  for (std::size_t i = 0; i < model.layer_count(); ++i) {
    offsets.push_back(offsets.back() + static_cast<std::size_t>(model.layer(i).weights.size()));
  }
  return offsets;
}

// Zeroes the given flat weight positions (sorted ascending) and tallies per layer.
PruneReport zero_weights(AutoencoderModel& model, std::vector<std::size_t> positions) {
  std::sort(positions.begin(), positions.end());
  const auto offsets = weight_offsets(model);
  PruneReport report;
  for (std::size_t i = 0; i < model.layer_count(); ++i) report.layers.push_back({i, 0, 0});
  std::size_t layer = 0;
  for (std::size_t pos : positions) {
    while (pos >= offsets[layer + 1]) ++layer;
    double& w = model.layer(layer).weights.data()[pos - offsets[layer]];
    ++report.layers[layer].selected;
    if (w != 0.0) ++report.layers[layer].zeroed;
    w = 0.0;
  }
  return report;
}

}  // namespace

std::size_t prune_quota(double p_a, std::size_t weight_count) {
  check_p_a(p_a);
  // The small slack absorbs representation error such as 0.1 * 30 = 3.0000000000000004.
  const double raw = p_a * static_cast<double>(weight_count);
  return std::min(weight_count, static_cast<std::size_t>(std::floor(raw + 1e-9)));
}

PruneReport prune_random(AutoencoderModel& model, double p_a, Rng& rng) {
  const std::size_t W = weight_offsets(model).back();
  const std::size_t quota = prune_quota(p_a, W);
  std::vector<std::size_t> idx(W);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first `quota` slots become a uniform sample.
  for (std::size_t i = 0; i < quota; ++i) {
    const std::size_t j = i + uniform_index(rng, W - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(quota);
  return zero_weights(model, std::move(idx));
}

NodeStats collect_node_variance(const AutoencoderModel& model, const Matrix& data) {
  if (data.rows() == 0) throw std::invalid_argument("collect_node_variance: empty data");
  auto column_variance = [](const Matrix& m) {
    const Eigen::RowVectorXd mean = m.colwise().mean();
    Matrix centered = m.rowwise() - mean;
    return Vector(centered.array().square().colwise().mean().transpose());
  };
  const ForwardResult fr = forward(model, data, true);
  NodeStats stats;
  stats.input_variance = column_variance(data);
  for (const auto& a : fr.trace->layers) stats.variances.push_back(column_variance(a));
  return stats;
}

std::vector<double> variance_scores(const AutoencoderModel& model, const NodeStats& stats,
                                    VarianceKey key) {
  if (stats.variances.size() != model.layer_count()) {
    throw std::invalid_argument("node statistics do not match model depth");
  }
  std::vector<double> scores;
  for (std::size_t li = 0; li < model.layer_count(); ++li) {
    const Layer& l = model.layer(li);
    const Vector& dest = stats.variances[li];
    const Vector& src = li == 0 ? stats.input_variance : stats.variances[li - 1];
    if (static_cast<std::size_t>(dest.size()) != l.out_dim() ||
        static_cast<std::size_t>(src.size()) != l.in_dim()) {
      throw std::invalid_argument("node statistics shape mismatch at layer " + std::to_string(li));
    }
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
      for (std::size_t c = 0; c < l.in_dim(); ++c) {
        const double v = key == VarianceKey::destination ? dest[static_cast<Eigen::Index>(r)]
                                                         : src[static_cast<Eigen::Index>(c)];
        scores.push_back(1.0 / (v + kVarianceEpsilon));
      }
    }
  }
  // Normalize to a distribution; sampling below is invariant to the scale
  // but callers inspect the scores directly.
  const double sum = std::accumulate(scores.begin(), scores.end(), 0.0);
  for (auto& s : scores) s /= sum;
  return scores;
}

PruneReport prune_variance(AutoencoderModel& model, const NodeStats& stats, double p_a, Rng& rng,
                           VarianceKey key) {
  check_p_a(p_a);
  const std::vector<double> scores = variance_scores(model, stats, key);
  const std::size_t W = scores.size();
  const std::size_t quota = prune_quota(p_a, W);
  // Efraimidis-Spirakis: the quota largest keys log(u)/w form a sample drawn
  // successively with probability proportional to w.
  std::vector<std::pair<double, std::size_t>> keys(W);
  for (std::size_t i = 0; i < W; ++i) {
    double u = uniform01(rng);
    if (u <= 0.0) u = 0x1.0p-53;
    keys[i] = {std::log(u) / scores[i], i};
  }
  auto larger = [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(quota), keys.end(),
                    larger);
  std::vector<std::size_t> chosen(quota);
  for (std::size_t i = 0; i < quota; ++i) chosen[i] = keys[i].second;
  return zero_weights(model, std::move(chosen));
}

Matrix normalize_rows(const Matrix& activations) {
  Matrix out(activations.rows(), activations.cols());
  for (Eigen::Index r = 0; r < activations.rows(); ++r) {
    const double lo = activations.row(r).minCoeff();
    const double hi = activations.row(r).maxCoeff();
    if (hi > lo) {
      out.row(r) = (activations.row(r).array() - lo) / (hi - lo);
    } else {
      out.row(r).setZero();
    }
  }
  return out;
}

std::vector<bool> conjunctive_select_mask(std::vector<std::vector<bool>> below, Rng& rng) {
  const std::size_t nodes = below.empty() ? 0 : below.front().size();
  auto conjunction = [&] {
    std::vector<bool> s(nodes, !below.empty());
    for (const auto& row : below) {
      for (std::size_t j = 0; j < nodes; ++j) s[j] = s[j] && row[j];
    }
    return s;
  };
  auto count = [](const std::vector<bool>& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), true));
  };
  std::vector<bool> s = conjunction();
  while (count(s) < 1 && !below.empty()) {
    const std::size_t r = uniform_index(rng, below.size());
    below.erase(below.begin() + static_cast<std::ptrdiff_t>(r));
    s = conjunction();
  }
  return s;
}

std::vector<bool> conjunctive_select(const Matrix& activations, double threshold, Rng& rng) {
  const Matrix norm = normalize_rows(activations);
  std::vector<std::vector<bool>> below(static_cast<std::size_t>(norm.rows()),
                                       std::vector<bool>(static_cast<std::size_t>(norm.cols())));
  for (Eigen::Index r = 0; r < norm.rows(); ++r) {
    for (Eigen::Index c = 0; c < norm.cols(); ++c) {
      below[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = norm(r, c) < threshold;
    }
  }
  return conjunctive_select_mask(std::move(below), rng);
}

PruneReport prune_conjunctive(AutoencoderModel& model, const Matrix& heldout, double threshold,
                              Rng& rng) {
  if (heldout.rows() == 0) throw std::invalid_argument("prune_conjunctive: empty held-out set");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("conjunctive threshold must lie in [0, 1]");
  }
  // All layers are probed on the unpruned model before any node is removed.
  const ForwardResult fr = forward(model, heldout, true);
  PruneReport report;
  for (std::size_t li = 0; li < model.layer_count(); ++li) {
    const std::vector<bool> s = conjunctive_select(fr.trace->layers[li], threshold, rng);
    Layer& l = model.layer(li);
    LayerPruneCount lc{li, 0, 0};
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!s[j]) continue;
      ++lc.selected;
      const auto row = static_cast<Eigen::Index>(j);
      lc.zeroed += static_cast<std::size_t>((l.weights.row(row).array() != 0.0).count());
      lc.zeroed += l.biases[row] != 0.0 ? 1 : 0;
      l.weights.row(row).setZero();
      l.biases[row] = 0.0;
    }
    report.layers.push_back(lc);
  }
  return report;
}

PruneReport apply_pruner(const PrunerSpec& spec, AutoencoderModel& model, const PruneContext& ctx,
                         Rng& rng) {
  switch (spec.kind) {
    case PrunerKind::none: return {};
    case PrunerKind::random: return prune_random(model, spec.p_a, rng);
    case PrunerKind::variance: {
      if (ctx.train == nullptr) throw std::invalid_argument("variance pruning needs training data");
      return prune_variance(model, collect_node_variance(model, *ctx.train), spec.p_a, rng,
                            spec.variance_key);
    }
    case PrunerKind::conjunctive: {
      if (ctx.heldout == nullptr) throw std::invalid_argument("conjunctive pruning needs held-out data");
      return prune_conjunctive(model, *ctx.heldout, spec.threshold, rng);
    }
  }
  return {};
}

}  // namespace coevae
