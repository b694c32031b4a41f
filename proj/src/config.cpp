#include "coevae/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace coevae {

std::string_view to_string(Trainer t) { return t == Trainer::lipi ? "lipi" : "canonical"; }

Trainer parse_trainer(std::string_view s) {
  if (s == "lipi") return Trainer::lipi;
  if (s == "canonical") return Trainer::canonical;
  throw std::invalid_argument("unknown trainer '" + std::string(s) + "'");
}

std::size_t ExperimentConfig::effective_final_window() const {
  return final_window.value_or(default_final_window(epochs));
}

ScheduleSpec ExperimentConfig::schedule_spec() const {
  return {schedule, schedule_C, epochs, effective_final_window()};
}

CoevParams ExperimentConfig::coev_params(std::uint64_t run_seed) const {
  CoevParams p;
  p.tournament = tournament;
  p.mutation_prob = mutation_prob;
  p.mutation_sigma = mutation_sigma;
  p.lr_min = lr_min;
  p.lr_max = lr_max;
  p.batch_size = batch_size;
  p.epochs = epochs;
  p.eval_batch = eval_batch;
  p.loss = loss;
  p.record = record;
  p.schedule = schedule_spec();
  p.pruner = pruner;
  p.seed = run_seed;
  p.workers = 1;
  return p;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (problem.n < 1 || problem.k < 1) fail("n and k must be >= 1");
  if (problem.per < 1) fail("per must be >= 1");
  if (!(problem.q >= 0.0 && problem.q <= 1.0)) fail("q must lie in [0, 1]");
  if (arch.latent_dim < 1) fail("latent must be >= 1");
  for (auto h : arch.hidden) {
    if (h < 1) fail("hidden widths must be >= 1");
  }
  if (arch.input_dim != problem.n) fail("architecture input must equal n");
  if (!(learning_rate > 0.0)) fail("lr must be positive");
  if (!(lr_min > 0.0 && lr_min <= lr_max)) fail("lr bounds must satisfy 0 < lr_min <= lr_max");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (eval_batch < 1) fail("eval_batch must be >= 1");
  if (cells < 1) fail("cells must be >= 1");
  if (2 * radius + 1 > cells) fail("neighborhood 2*radius+1 exceeds cells");
  if (tournament < 1 || tournament > 2 * radius + 1) {
    fail("tournament must lie in [1, 2*radius+1]");
  }
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) fail("mutation_prob must lie in [0, 1]");
  if (!(mutation_sigma >= 0.0)) fail("mutation_sigma must be >= 0");
  if (trials < 1) fail("trials must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
  try {
    schedule_spec().validate();
    pruner.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

ExperimentConfig profile(std::string_view name) {
  ExperimentConfig c;
  if (name == "desk") {
    c.problem = {128, 6, 10, 0.05};
    c.arch.input_dim = 128;
    c.arch.latent_dim = 12;
    c.epochs = 100;
    c.trials = 10;
    c.loss = LossKind::bce;
    c.learning_rate = 1.0;
    c.lr_min = 1e-2;
    c.lr_max = 1e2;
    return c;
  }
  if (name == "paper" || name == "paper-small") {
    c.problem = {1000, 10, 10, 0.05};
    c.arch.input_dim = 1000;
    c.arch.latent_dim = name == "paper" ? 30 : 29;
    c.epochs = 400;
    c.trials = 30;
    c.learning_rate = 1e-5;
    c.lr_min = 1e-8;
    c.lr_max = 1e-1;
    return c;
  }
  throw ConfigError("unknown profile '" + std::string(name) + "'");
}

std::vector<std::string> profile_names() { return {"desk", "paper", "paper-small"}; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(d)) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + s + "'");
  }
  return d;
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

template <typename Fn>
auto enum_value(std::string_view key, Fn&& parse) {
  try {
    return parse();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + std::string(key) + "': " + e.what());
  }
}

}  // namespace

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "n") {
    c.problem.n = to_size(key, v);
    c.arch.input_dim = c.problem.n;
  } else if (key == "k") {
    c.problem.k = to_size(key, v);
  } else if (key == "per") {
    c.problem.per = to_size(key, v);
  } else if (key == "q") {
    c.problem.q = to_double(key, v);
  } else if (key == "latent") {
    c.arch.latent_dim = to_size(key, v);
  } else if (key == "hidden") {
    c.arch.hidden.clear();
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) c.arch.hidden.push_back(to_size(key, item));
    }
  } else if (key == "hidden_activation") {
    c.arch.hidden_activation = enum_value(key, [&] { return parse_activation(v); });
  } else if (key == "output_activation") {
    c.arch.output_activation = enum_value(key, [&] { return parse_activation(v); });
  } else if (key == "trainer") {
    c.trainer = enum_value(key, [&] { return parse_trainer(v); });
  } else if (key == "loss") {
    c.loss = enum_value(key, [&] { return parse_loss(v); });
  } else if (key == "record") {
    c.record = enum_value(key, [&] { return parse_record_point(v); });
  } else if (key == "lr") {
    c.learning_rate = to_double(key, v);
  } else if (key == "lr_min") {
    c.lr_min = to_double(key, v);
  } else if (key == "lr_max") {
    c.lr_max = to_double(key, v);
  } else if (key == "batch_size") {
    c.batch_size = to_size(key, v);
  } else if (key == "epochs") {
    c.epochs = to_size(key, v);
  } else if (key == "eval_batch") {
    c.eval_batch = to_size(key, v);
  } else if (key == "cells") {
    c.cells = to_size(key, v);
  } else if (key == "radius") {
    c.radius = to_size(key, v);
  } else if (key == "tournament") {
    c.tournament = to_size(key, v);
  } else if (key == "mutation_prob") {
    c.mutation_prob = to_double(key, v);
  } else if (key == "mutation_sigma") {
    c.mutation_sigma = to_double(key, v);
  } else if (key == "schedule") {
    c.schedule = enum_value(key, [&] { return parse_schedule(v); });
  } else if (key == "C") {
    c.schedule_C = to_double(key, v);
  } else if (key == "t_p") {
    if (v == "auto") {
      c.final_window.reset();
    } else {
      c.final_window = to_size(key, v);
    }
  } else if (key == "pruner") {
    c.pruner.kind = enum_value(key, [&] { return parse_pruner(v); });
  } else if (key == "p_a") {
    c.pruner.p_a = to_double(key, v);
  } else if (key == "threshold") {
    c.pruner.threshold = to_double(key, v);
  } else if (key == "heldout") {
    c.pruner.heldout = to_size(key, v);
  } else if (key == "variance_key") {
    c.pruner.variance_key = enum_value(key, [&] { return parse_variance_key(v); });
  } else if (key == "trials") {
    c.trials = to_size(key, v);
  } else if (key == "seed") {
    c.master_seed = to_size(key, v);
  } else if (key == "workers") {
    c.workers = to_size(key, v);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  ExperimentConfig c = std::move(base);
  std::string line;
  std::size_t line_no = 0;
  bool seen_setting = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    try {
      if (key == "profile") {
        if (seen_setting) throw ConfigError("'profile' must precede all other keys");
        c = profile(value);
      } else {
        apply_setting(c, key, value);
      }
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
    seen_setting = true;
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, std::move(base));
}

std::vector<std::pair<std::string, std::string>> to_settings(const ExperimentConfig& c) {
  std::string hidden;
  for (std::size_t i = 0; i < c.arch.hidden.size(); ++i) {
    if (i) hidden += ",";
    hidden += std::to_string(c.arch.hidden[i]);
  }
  return {
      {"n", std::to_string(c.problem.n)},
      {"k", std::to_string(c.problem.k)},
      {"per", std::to_string(c.problem.per)},
      {"q", fmt_double(c.problem.q)},
      {"hidden", hidden},
      {"latent", std::to_string(c.arch.latent_dim)},
      {"hidden_activation", std::string(to_string(c.arch.hidden_activation))},
      {"output_activation", std::string(to_string(c.arch.output_activation))},
      {"trainer", std::string(to_string(c.trainer))},
      {"loss", std::string(to_string(c.loss))},
      {"record", std::string(to_string(c.record))},
      {"lr", fmt_double(c.learning_rate)},
      {"lr_min", fmt_double(c.lr_min)},
      {"lr_max", fmt_double(c.lr_max)},
      {"batch_size", std::to_string(c.batch_size)},
      {"epochs", std::to_string(c.epochs)},
      {"eval_batch", std::to_string(c.eval_batch)},
      {"cells", std::to_string(c.cells)},
      {"radius", std::to_string(c.radius)},
      {"tournament", std::to_string(c.tournament)},
      {"mutation_prob", fmt_double(c.mutation_prob)},
      {"mutation_sigma", fmt_double(c.mutation_sigma)},
      {"schedule", std::string(to_string(c.schedule))},
      {"C", fmt_double(c.schedule_C)},
      {"t_p", c.final_window ? std::to_string(*c.final_window) : std::string("auto")},
      {"pruner", std::string(to_string(c.pruner.kind))},
      {"p_a", fmt_double(c.pruner.p_a)},
      {"threshold", fmt_double(c.pruner.threshold)},
      {"heldout", std::to_string(c.pruner.heldout)},
      {"variance_key", std::string(to_string(c.pruner.variance_key))},
      {"trials", std::to_string(c.trials)},
      {"seed", std::to_string(c.master_seed)},
      {"workers", std::to_string(c.workers)},
  };
}

std::string to_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : to_settings(c)) out += k + " = " + v + "\n";
  return out;
}

std::string config_label(const ExperimentConfig& c) {
  std::string label = std::string(to_string(c.trainer)) + "-" + std::string(to_string(c.pruner.kind));
  if (c.pruner.kind != PrunerKind::none) label += "-" + std::string(to_string(c.schedule));
  return label;
}

}  // namespace coevae
