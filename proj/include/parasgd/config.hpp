#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "parasgd/schemes.hpp"

namespace parasgd {

/// Configuration failure that names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error("config field '" + field + "': " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Flat `section.key = value` text, one assignment per line. Blank lines and
/// `#` comments are ignored. Typed accessors record which keys were read so
/// leftover (misspelled) keys can be rejected afterwards.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = trim(line.substr(0, line.find('#')));
      if (stripped.empty()) continue;
      const std::size_t eq = stripped.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(line_no), "expected key = value");
      }
      const std::string key = trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
      if (!kv.values_.emplace(key, value).second) {
        throw ConfigError(key, "assigned more than once");
      }
    }
    return kv;
  }

  static KeyValues parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::optional<std::string> get_optional(const std::string& key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  long get_long(const std::string& key, long fallback) const {
    const auto raw = get_optional(key);
    return raw ? parse_long(key, *raw) : fallback;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto raw = get_optional(key);
    if (!raw) return fallback;
    try {
      return std::stoull(*raw);
    } catch (const std::exception&) {
      throw ConfigError(key, "expected an unsigned integer, got '" + *raw + "'");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    const auto raw = get_optional(key);
    return raw ? parse_double(key, *raw) : fallback;
  }

  std::optional<double> get_optional_double(const std::string& key) const {
    const auto raw = get_optional(key);
    if (!raw) return std::nullopt;
    return parse_double(key, *raw);
  }

  std::optional<long> get_optional_long(const std::string& key) const {
    const auto raw = get_optional(key);
    if (!raw) return std::nullopt;
    return parse_long(key, *raw);
  }

  std::vector<long> get_long_list(const std::string& key, std::vector<long> fallback) const {
    const auto raw = get_optional(key);
    if (!raw) return fallback;
    std::vector<long> out;
    for (const std::string& item : split_list(*raw)) out.push_back(parse_long(key, item));
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const {
    const auto raw = get_optional(key);
    if (!raw) return fallback;
    std::vector<double> out;
    for (const std::string& item : split_list(*raw)) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  /// Fails when any key was never read by a typed accessor; catches typos.
  void reject_unknown_keys() const {
    for (const auto& [key, value] : values_) {
      if (!used_.contains(key)) throw ConfigError(key, "unknown key");
    }
  }

  const std::map<std::string, std::string>& raw() const noexcept { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  static long parse_long(const std::string& key, const std::string& raw) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key, "expected an integer, got '" + raw + "'");
    }
  }

  static double parse_double(const std::string& key, const std::string& raw) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a number, got '" + raw + "'");
    }
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

enum class SchemeKind { Serial, Naive, Sparknet };
enum class SweepKind { Heatmap, Overhead, Tau };
enum class DataSource { Synthetic, Idx, Csv };

inline const char* scheme_kind_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::Serial: return "serial";
    case SchemeKind::Naive: return "naive";
    case SchemeKind::Sparknet: return "sparknet";
  }
  return "?";
}

/// Everything one experiment needs, parsed and range-checked. Symbol names
/// from the analytical model map onto keys as: b = sgd.batch, eta =
/// sgd.learning_rate, K = scheme.workers, tau = scheme.tau, C(b) =
/// cost.compute, S = cost.sync, a = target.accuracy.
struct ExperimentConfig {
  // net
  std::string net_preset = "mlp";  // mlp | lenet-small; empty when net.spec given
  std::string net_inline;          // inline layer list, see parse_layer_list
  int hidden = 64;

  // data
  DataSource source = DataSource::Synthetic;
  int classes = 10;
  std::size_t channels = 1, height = 16, width = 16;
  std::size_t per_class = 550, val_per_class = 100;
  double separation = 4.0;
  std::uint64_t data_seed = 12345;
  std::string train_images, train_labels, test_images, test_labels;  // idx
  std::string train_csv, test_csv;                                   // csv

  // optimization
  std::size_t batch = 50;
  double learning_rate = 0.01;
  double momentum = 0.0;
  long warm_start = 50;
  std::uint64_t seed = 1;

  // scheme selection (train command)
  std::optional<SchemeKind> scheme;
  int workers = 1;
  int tau = 50;

  // cost model
  CostModel cost;

  // target
  std::optional<double> target_accuracy;
  std::optional<long> target_serial_iters;

  // budgets
  long budget_iters = 10000;
  std::optional<long> budget_rounds;
  std::optional<long> budget_parallel_iters;

  // evaluation cadence
  long eval_every = 10;
  long eval_steps = 10;

  // sweep axes
  std::optional<SweepKind> sweep_kind;
  std::vector<int> sweep_workers;
  std::vector<int> sweep_taus;
  std::vector<std::uint64_t> sweep_seeds;
  std::vector<double> sweep_sync;

  // output
  std::string out_dir;
  int threads = 0;  // 0 = hardware concurrency
  bool svg = false;

  static ExperimentConfig from_text(const std::string& text) {
    return from_key_values(KeyValues::parse(text));
  }

  static ExperimentConfig load(const std::string& path) {
    return from_key_values(KeyValues::parse_file(path));
  }

  static ExperimentConfig from_key_values(const KeyValues& kv) {
    ExperimentConfig c;

    if (const auto raw = kv.get_optional("scheme")) {
      if (*raw == "serial") {
        c.scheme = SchemeKind::Serial;
      } else if (*raw == "naive") {
        c.scheme = SchemeKind::Naive;
      } else if (*raw == "sparknet") {
        c.scheme = SchemeKind::Sparknet;
      } else {
        throw ConfigError("scheme", "unknown scheme '" + *raw +
                                        "'; valid schemes: serial, naive, sparknet");
      }
    }
    if (const auto raw = kv.get_optional("sweep.kind")) {
      if (*raw == "heatmap") {
        c.sweep_kind = SweepKind::Heatmap;
      } else if (*raw == "overhead") {
        c.sweep_kind = SweepKind::Overhead;
      } else if (*raw == "tau") {
        c.sweep_kind = SweepKind::Tau;
      } else {
        throw ConfigError("sweep.kind",
                          "unknown sweep '" + *raw + "'; valid sweeps: heatmap, overhead, tau");
      }
    }

    c.net_preset = kv.get_string("net.preset", "mlp");
    c.net_inline = kv.get_string("net.spec", "");
    if (!c.net_inline.empty()) c.net_preset.clear();
    if (c.net_inline.empty() && c.net_preset != "mlp" && c.net_preset != "lenet-small") {
      throw ConfigError("net.preset",
                        "unknown preset '" + c.net_preset + "'; valid: mlp, lenet-small");
    }
    c.hidden = static_cast<int>(kv.get_long("net.hidden", 64));
    if (c.hidden < 1) throw ConfigError("net.hidden", "must be >= 1");

    const std::string source = kv.get_string("data.source", "synthetic");
    if (source == "synthetic") {
      c.source = DataSource::Synthetic;
    } else if (source == "idx") {
      c.source = DataSource::Idx;
    } else if (source == "csv") {
      c.source = DataSource::Csv;
    } else {
      throw ConfigError("data.source", "unknown source '" + source +
                                           "'; valid sources: synthetic, idx, csv");
    }
    c.classes = static_cast<int>(kv.get_long("data.classes", 10));
    c.channels = static_cast<std::size_t>(kv.get_long("data.channels", 1));
    c.height = static_cast<std::size_t>(kv.get_long("data.height", 16));
    c.width = static_cast<std::size_t>(kv.get_long("data.width", 16));
    c.per_class = static_cast<std::size_t>(kv.get_long("data.per_class", 550));
    c.val_per_class = static_cast<std::size_t>(kv.get_long("data.val_per_class", 100));
    c.separation = kv.get_double("data.separation", 4.0);
    c.data_seed = kv.get_u64("data.seed", 12345);
    c.train_images = kv.get_string("data.train_images", "");
    c.train_labels = kv.get_string("data.train_labels", "");
    c.test_images = kv.get_string("data.test_images", "");
    c.test_labels = kv.get_string("data.test_labels", "");
    c.train_csv = kv.get_string("data.train_csv", "");
    c.test_csv = kv.get_string("data.test_csv", "");
    if (c.classes < 1) throw ConfigError("data.classes", "must be >= 1");
    if (c.channels < 1 || c.height < 1 || c.width < 1) {
      throw ConfigError("data.shape", "channels/height/width must be >= 1");
    }
    if (c.per_class < 1 || c.val_per_class < 1) {
      throw ConfigError("data.per_class", "per-class counts must be >= 1");
    }
    if (c.separation < 0.0) throw ConfigError("data.separation", "must be >= 0");
    if (c.source == DataSource::Idx) {
      for (const auto& [key, path] :
           {std::pair{"data.train_images", c.train_images},
            std::pair{"data.train_labels", c.train_labels},
            std::pair{"data.test_images", c.test_images},
            std::pair{"data.test_labels", c.test_labels}}) {
        if (path.empty()) throw ConfigError(key, "required for data.source = idx");
        if (!std::filesystem::exists(path)) throw ConfigError(key, "file not found: " + path);
      }
    }
    if (c.source == DataSource::Csv) {
      for (const auto& [key, path] : {std::pair{"data.train_csv", c.train_csv},
                                      std::pair{"data.test_csv", c.test_csv}}) {
        if (path.empty()) throw ConfigError(key, "required for data.source = csv");
        if (!std::filesystem::exists(path)) throw ConfigError(key, "file not found: " + path);
      }
    }

    c.batch = static_cast<std::size_t>(kv.get_long("sgd.batch", 50));
    if (c.batch < 1) throw ConfigError("sgd.batch", "must be >= 1");
    c.learning_rate = kv.get_double("sgd.learning_rate", 0.01);
    if (!(c.learning_rate > 0.0)) throw ConfigError("sgd.learning_rate", "must be > 0");
    c.momentum = kv.get_double("sgd.momentum", 0.0);
    if (c.momentum < 0.0 || c.momentum >= 1.0) throw ConfigError("sgd.momentum", "must be in [0,1)");
    c.warm_start = kv.get_long("sgd.warm_start", 50);
    if (c.warm_start < 0) throw ConfigError("sgd.warm_start", "must be >= 0");
    c.seed = kv.get_u64("seed", 1);

    c.workers = static_cast<int>(kv.get_long("scheme.workers", 1));
    if (c.workers < 1) throw ConfigError("scheme.workers", "must be >= 1");
    c.tau = static_cast<int>(kv.get_long("scheme.tau", 50));
    if (c.tau < 1) throw ConfigError("scheme.tau", "must be >= 1");

    c.cost.compute_seconds = kv.get_double("cost.compute", 1.0);
    c.cost.sync_seconds = kv.get_double("cost.sync", 0.0);
    c.cost.sublinearity = kv.get_double("cost.sublinearity", 1.0);
    try {
      c.cost.validate();
    } catch (const std::exception& e) {
      throw ConfigError("cost", e.what());
    }

    c.target_accuracy = kv.get_optional_double("target.accuracy");
    if (c.target_accuracy && (*c.target_accuracy <= 0.0 || *c.target_accuracy > 1.0)) {
      throw ConfigError("target.accuracy", "must be in (0,1]");
    }
    c.target_serial_iters = kv.get_optional_long("target.serial_iters");
    if (c.target_serial_iters && *c.target_serial_iters < 1) {
      throw ConfigError("target.serial_iters", "must be >= 1");
    }
    if (c.target_accuracy && c.target_serial_iters) {
      throw ConfigError("target.serial_iters", "set either target.accuracy or "
                                               "target.serial_iters, not both");
    }

    c.budget_iters = kv.get_long("budget.iters", 10000);
    if (c.budget_iters < 0) throw ConfigError("budget.iters", "must be >= 0");
    c.budget_rounds = kv.get_optional_long("budget.rounds");
    if (c.budget_rounds && *c.budget_rounds < 0) throw ConfigError("budget.rounds", "must be >= 0");
    c.budget_parallel_iters = kv.get_optional_long("budget.parallel_iters");
    if (c.budget_parallel_iters && *c.budget_parallel_iters < 1) {
      throw ConfigError("budget.parallel_iters", "must be >= 1");
    }

    c.eval_every = kv.get_long("eval.every", 10);
    if (c.eval_every < 1) throw ConfigError("eval.every", "must be >= 1");
    c.eval_steps = kv.get_long("eval.steps", 10);
    if (c.eval_steps < 1) throw ConfigError("eval.steps", "must be >= 1");

    for (long k : kv.get_long_list("sweep.workers", {})) {
      if (k < 1) throw ConfigError("sweep.workers", "workers must be >= 1");
      c.sweep_workers.push_back(static_cast<int>(k));
    }
    for (long t : kv.get_long_list("sweep.taus", {})) {
      if (t < 1) throw ConfigError("sweep.taus", "tau must be >= 1");
      c.sweep_taus.push_back(static_cast<int>(t));
    }
    for (long s : kv.get_long_list("sweep.seeds", {})) {
      c.sweep_seeds.push_back(static_cast<std::uint64_t>(s));
    }
    for (double s : kv.get_double_list("sweep.sync", {})) {
      if (s < 0.0) throw ConfigError("sweep.sync", "S must be >= 0");
      c.sweep_sync.push_back(s);
    }

    c.out_dir = kv.get_string("out.dir", "");
    c.threads = static_cast<int>(kv.get_long("threads", 0));
    if (c.threads < 0) throw ConfigError("threads", "must be >= 0");

    kv.reject_unknown_keys();
    return c;
  }
};

}  // namespace parasgd
