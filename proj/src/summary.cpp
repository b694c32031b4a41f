#include "coevae/summary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace coevae {

std::vector<TrialSeries> best_series(const std::vector<MetricsRow>& rows) {
  // trial -> epoch -> best row
  std::map<std::size_t, std::map<std::size_t, const MetricsRow*>> best;
  for (const auto& r : rows) {
    const MetricsRow*& slot = best[r.trial][r.epoch];
    if (slot == nullptr || r.train_loss < slot->train_loss ||
        (r.train_loss == slot->train_loss && r.cell < slot->cell)) {
      slot = &r;
    }
  }
  std::vector<TrialSeries> out;
  for (const auto& [trial, epochs] : best) {
    TrialSeries s;
    s.trial = trial;
    for (const auto& [epoch, r] : epochs) {
      s.epochs.push_back(epoch);
      s.cells.push_back(r->cell);
      s.train.push_back(r->train_loss);
      s.test.push_back(r->test_loss);
      s.preserved_total.push_back(r->preserved_total);
      s.preserved_encoder.push_back(r->preserved_encoder);
      s.preserved_decoder.push_back(r->preserved_decoder);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double d) { return d == v.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<EpochStats> per_epoch_stats(const std::vector<TrialSeries>& series, bool test_loss) {
  std::map<std::size_t, std::vector<double>> by_epoch;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.epochs.size(); ++i) {
      by_epoch[s.epochs[i]].push_back(test_loss ? s.test[i] : s.train[i]);
    }
  }
  std::vector<EpochStats> out;
  for (const auto& [epoch, v] : by_epoch) {
    EpochStats e;
    e.epoch = epoch;
    e.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    e.median = median(v);
    e.q1 = quantile(v, 0.25);
    e.q3 = quantile(v, 0.75);
    out.push_back(e);
  }
  return out;
}

std::optional<double> ConfigSummary::median_correlation() const {
  std::vector<double> v;
  for (const auto& c : correlation) {
    if (c) v.push_back(*c);
  }
  if (v.empty()) return std::nullopt;
  return median(v);
}

LabelParts parse_label(const std::string& label) {
  LabelParts p;
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : label) {
    if (ch == '-') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  if (parts.size() >= 2) {
    p.trainer = parts[0];
    p.pruner = parts[1];
  }
  if (parts.size() >= 3) p.schedule = parts[2];
  return p;
}

ConfigSummary summarize(const std::string& label, const std::vector<MetricsRow>& rows) {
  ConfigSummary s;
  s.label = label;
  const LabelParts parts = parse_label(label);
  s.trainer = parts.trainer;
  s.pruner = parts.pruner;
  s.schedule = parts.schedule;
  s.degenerate = s.trainer == "canonical" && s.schedule == "population";
  for (const auto& t : best_series(rows)) {
    if (t.epochs.empty()) continue;
    ++s.trials;
    s.final_test.push_back(t.test.back());
    s.final_train.push_back(t.train.back());
    s.final_preserved_total.push_back(t.preserved_total.back());
    s.final_preserved_encoder.push_back(t.preserved_encoder.back());
    s.final_preserved_decoder.push_back(t.preserved_decoder.back());
    s.correlation.push_back(pearson(t.train, t.test));
  }
  return s;
}

namespace {

std::string num(double v, int prec = 5) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

}  // namespace

std::string format_report(const std::vector<ConfigSummary>& summaries) {
  std::map<std::string, std::vector<const ConfigSummary*>> by_trainer;
  for (const auto& s : summaries) by_trainer[s.trainer].push_back(&s);
  std::ostringstream out;
  char line[256];
  for (auto& [trainer, list] : by_trainer) {
    std::stable_sort(list.begin(), list.end(), [](const auto* a, const auto* b) {
      return a->median_test() < b->median_test();
    });
    out << "== trainer: " << (trainer.empty() ? "?" : trainer) << " ==\n";
    std::snprintf(line, sizeof line, "%-4s %-36s %6s %11s %9s %9s %9s %8s\n", "rank", "config",
                  "trials", "test_med", "pres_tot", "pres_enc", "pres_dec", "r_med");
    out << line;
    std::size_t rank = 1;
    for (const auto* s : list) {
      const auto r = s->median_correlation();
      std::string name = s->label + (s->degenerate ? " (degenerate)" : "");
      std::snprintf(line, sizeof line, "%-4zu %-36s %6zu %11s %9s %9s %9s %8s\n", rank++,
                    name.c_str(), s->trials, num(s->median_test()).c_str(),
                    num(s->median_preserved_total(), 2).c_str(),
                    num(s->median_preserved_encoder(), 2).c_str(),
                    num(s->median_preserved_decoder(), 2).c_str(),
                    r ? num(*r, 3).c_str() : "NA");
      out << line;
    }
    // Best schedule per operator, and the overall best pruned configuration.
    std::map<std::string, const ConfigSummary*> best_per_op;
    for (const auto* s : list) {
      if (!best_per_op.count(s->pruner)) best_per_op[s->pruner] = s;
    }
    out << "best schedule per operator:\n";
    for (const auto& [op, s] : best_per_op) {
      out << "  " << op << ": " << (s->schedule.empty() ? "-" : s->schedule) << " (median test "
          << num(s->median_test()) << ")\n";
    }
    for (const auto* s : list) {
      if (s->pruner != "none") {
        out << "best (operator, schedule): (" << s->pruner << ", " << s->schedule << ")\n";
        break;
      }
    }
    out << '\n';
  }
  return out.str();
}

void write_epoch_summary_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  const auto series = best_series(rows);
  const auto test = per_epoch_stats(series, true);
  const auto train = per_epoch_stats(series, false);
  out << "epoch,test_mean,test_median,test_q1,test_q3,train_mean,train_median,train_q1,train_q3\n";
  for (std::size_t i = 0; i < test.size(); ++i) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  test[i].epoch, test[i].mean, test[i].median, test[i].q1, test[i].q3,
                  train[i].mean, train[i].median, train[i].q1, train[i].q3);
    out << buf;
  }
}

}  // namespace coevae
