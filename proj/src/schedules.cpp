#include "coevae/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace coevae {

std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::fixed: return "fixed";
    case ScheduleKind::increase: return "increase";
    case ScheduleKind::decrease: return "decrease";
    case ScheduleKind::population: return "population";
    case ScheduleKind::exponential: return "exponential";
    case ScheduleKind::final_n: return "final_n";
  }
  return "?";
}

ScheduleKind parse_schedule(std::string_view s) {
  for (auto k : kAllSchedules) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown schedule '" + std::string(s) + "'");
}

void ScheduleSpec::validate() const {
  if (!(C >= 0.0 && C <= 1.0)) throw std::invalid_argument("schedule C must lie in [0, 1]");
  if (kind == ScheduleKind::final_n && (t_p < 1 || t_p > T)) {
    throw std::invalid_argument("final_n window t_p must satisfy 1 <= t_p <= T");
  }
}

std::size_t default_final_window(std::size_t T) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(T))));
}

double prune_probability(const ScheduleSpec& spec, std::size_t t, std::size_t neighborhood_size) {
  if (t > spec.T) {
    throw std::invalid_argument("epoch " + std::to_string(t) + " outside [0, " +
                                std::to_string(spec.T) + "]");
  }
  if (neighborhood_size == 0) throw std::invalid_argument("neighborhood size must be >= 1");
  const double C = spec.C;
  const double frac = spec.T == 0 ? 0.0 : static_cast<double>(t) / static_cast<double>(spec.T);
  double p = 0.0;
  switch (spec.kind) {
    case ScheduleKind::fixed: p = C; break;
    case ScheduleKind::increase: p = C * frac; break;
    case ScheduleKind::decrease: p = C * (1.0 - frac); break;
    case ScheduleKind::population: p = C / static_cast<double>(neighborhood_size); break;
    case ScheduleKind::exponential: p = C * (1.0 - std::exp(-2.0 * frac)); break;
    case ScheduleKind::final_n: p = (t + spec.t_p > spec.T) ? C : 0.0; break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace coevae
