#pragma once

#include <cstddef>
#include <string_view>

namespace coevae {

enum class ScheduleKind { fixed, increase, decrease, population, exponential, final_n };

std::string_view to_string(ScheduleKind k);
ScheduleKind parse_schedule(std::string_view s);

inline constexpr ScheduleKind kAllSchedules[] = {
    ScheduleKind::fixed,      ScheduleKind::increase,    ScheduleKind::decrease,
    ScheduleKind::population, ScheduleKind::exponential, ScheduleKind::final_n};

// When to prune: the probability that a pruning event fires at epoch t.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::fixed;
  double C = 0.5;
  std::size_t T = 100;
  std::size_t t_p = 10;  // final_n window length

  void validate() const;
};

// Default final-window length, ceil(0.1 * T) (at least 1).
std::size_t default_final_window(std::size_t T);

// Closed-form p_p(t) clamped to [0, 1]. Throws std::invalid_argument when
// t > T or neighborhood_size == 0.
double prune_probability(const ScheduleSpec& spec, std::size_t t, std::size_t neighborhood_size);

}  // namespace coevae
