#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spatchgan/discriminator.hpp"
#include "spatchgan/errors.hpp"
#include "spatchgan/feature_stats.hpp"
#include "spatchgan/generators.hpp"
#include "spatchgan/losses.hpp"

namespace spatchgan {

enum class AugmentKind { Anime, Celeba, None };

inline const char* augment_name(AugmentKind k) {
  switch (k) {
    case AugmentKind::Anime: return "anime";
    case AugmentKind::Celeba: return "celeba";
    default: return "none";
  }
}

/// Whole-run configuration, read from `key = value` lines. Unknown keys are
/// rejected with the list of valid ones; `#` starts a comment.
struct RunConfig {
  // model
  int image_size = 256;
  int image_channels = 3;
  int num_scales = 4;
  int disc_base_channels = 64;
  int disc_channel_cap = 512;
  int mlp_layers = 3;
  int sn_power_iters = 1;
  std::vector<StatKind> stats{StatKind::Mean, StatKind::Max, StatKind::Stddev};
  DiscVariant variant = DiscVariant::SPatchGAN;
  bool disc_instance_norm = false;
  int gen_base_channels = 64;
  int gen_residual_blocks = 6;
  int gen_downsample_steps = 3;
  bool backward_layer_norm = false;
  // losses
  double lambda_adv = 4.0;
  double lambda_cyc = 20.0;
  double lambda_id = 10.0;
  // optimization
  uint64_t total_iters = 500000;
  uint64_t warmup_iters = 100000;
  double lr_start = 1e-4;
  double lr_end = 1e-5;
  int batch_size = 4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double weight_decay = 1e-4;
  int d_updates_per_g = 1;
  uint64_t scale_down = 1;  // divides every iteration count, schedule shape kept
  uint64_t seed = 1;
  // data
  std::string source_dir;
  std::string target_dir;
  AugmentKind augmentation = AugmentKind::None;
  // reporting
  uint64_t log_interval = 100;
  uint64_t checkpoint_interval = 10000;
  uint64_t eval_interval = 0;  // 0 disables periodic metric evaluation
  uint64_t sample_interval = 0;  // 0 disables periodic sample dumps
  int eval_sample_count = 64;
  std::string embedder = "toy-conv64";

  void validate() const {
    if (image_size < 8) throw ConfigError("image_size must be >= 8");
    if (lr_end > lr_start) throw ConfigError("lr_end must be <= lr_start");
    if (warmup_iters > total_iters) throw ConfigError("warmup_iters must be <= total_iters");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (scale_down < 1) throw ConfigError("scale_down must be >= 1");
    if (d_updates_per_g < 1) throw ConfigError("d_updates_per_g must be >= 1");
    if (lambda_adv < 0 || lambda_cyc < 0 || lambda_id < 0)
      throw ConfigError("loss weights must be non-negative");
    if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
    if (eval_sample_count < 2) throw ConfigError("eval_sample_count must be >= 2");
    discriminator().validate();
  }

  DiscriminatorConfig discriminator() const {
    DiscriminatorConfig d;
    d.num_scales = num_scales;
    d.base_channels = disc_base_channels;
    d.channel_cap = disc_channel_cap;
    d.mlp_layers = mlp_layers;
    d.sn_power_iters = sn_power_iters;
    d.enabled_stats = stats;
    d.variant = variant;
    d.image_channels = image_channels;
    d.use_instance_norm = disc_instance_norm;
    return d;
  }

  GeneratorConfig generator() const {
    GeneratorConfig g;
    g.base_channels = gen_base_channels;
    g.num_residual_blocks = gen_residual_blocks;
    g.downsample_steps = gen_downsample_steps;
    g.image_channels = image_channels;
    g.backward_layer_norm = backward_layer_norm;
    return g;
  }

  template <typename T>
  LossWeights<T> loss_weights() const {
    LossWeights<T> w;
    w.lambda_adv = static_cast<T>(lambda_adv);
    w.lambda_cyc = static_cast<T>(lambda_cyc);
    w.lambda_id = static_cast<T>(lambda_id);
    return w;
  }

  // Schedule values after the desk-scale factor. Nonzero intervals stay >= 1.
  uint64_t eff_total_iters() const { return total_iters / scale_down; }
  uint64_t eff_warmup_iters() const { return warmup_iters / scale_down; }
  uint64_t eff_interval(uint64_t raw) const {
    return raw == 0 ? 0 : std::max<uint64_t>(1, raw / scale_down);
  }
};

namespace detail {

inline std::string stats_to_string(const std::vector<StatKind>& stats) {
  std::string s;
  for (size_t i = 0; i < stats.size(); ++i) {
    if (i) s += ",";
    s += stat_name(stats[i]);
  }
  return s;
}

inline std::vector<StatKind> parse_stats(const std::string& text) {
  std::vector<StatKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item == "mean")
      out.push_back(StatKind::Mean);
    else if (item == "max")
      out.push_back(StatKind::Max);
    else if (item == "stddev")
      out.push_back(StatKind::Stddev);
    else
      throw ConfigError("unknown statistic '" + item + "' (valid: mean, max, stddev)");
  }
  if (out.empty()) throw ConfigError("stats list is empty");
  return out;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Canonical text form: every key in fixed order. Feeds the config hash and
/// the run-directory snapshot.
inline std::string config_to_string(const RunConfig& c) {
  std::ostringstream os;
  os << "image_size = " << c.image_size << "\n";
  os << "image_channels = " << c.image_channels << "\n";
  os << "num_scales = " << c.num_scales << "\n";
  os << "disc_base_channels = " << c.disc_base_channels << "\n";
  os << "disc_channel_cap = " << c.disc_channel_cap << "\n";
  os << "mlp_layers = " << c.mlp_layers << "\n";
  os << "sn_power_iters = " << c.sn_power_iters << "\n";
  os << "stats = " << detail::stats_to_string(c.stats) << "\n";
  os << "variant = " << variant_name(c.variant) << "\n";
  os << "disc_instance_norm = " << (c.disc_instance_norm ? "true" : "false") << "\n";
  os << "gen_base_channels = " << c.gen_base_channels << "\n";
  os << "gen_residual_blocks = " << c.gen_residual_blocks << "\n";
  os << "gen_downsample_steps = " << c.gen_downsample_steps << "\n";
  os << "backward_layer_norm = " << (c.backward_layer_norm ? "true" : "false") << "\n";
  os << "lambda_adv = " << detail::fmt_double(c.lambda_adv) << "\n";
  os << "lambda_cyc = " << detail::fmt_double(c.lambda_cyc) << "\n";
  os << "lambda_id = " << detail::fmt_double(c.lambda_id) << "\n";
  os << "total_iters = " << c.total_iters << "\n";
  os << "warmup_iters = " << c.warmup_iters << "\n";
  os << "lr_start = " << detail::fmt_double(c.lr_start) << "\n";
  os << "lr_end = " << detail::fmt_double(c.lr_end) << "\n";
  os << "batch_size = " << c.batch_size << "\n";
  os << "adam_beta1 = " << detail::fmt_double(c.adam_beta1) << "\n";
  os << "adam_beta2 = " << detail::fmt_double(c.adam_beta2) << "\n";
  os << "weight_decay = " << detail::fmt_double(c.weight_decay) << "\n";
  os << "d_updates_per_g = " << c.d_updates_per_g << "\n";
  os << "scale_down = " << c.scale_down << "\n";
  os << "seed = " << c.seed << "\n";
  os << "source_dir = " << c.source_dir << "\n";
  os << "target_dir = " << c.target_dir << "\n";
  os << "augmentation = " << augment_name(c.augmentation) << "\n";
  os << "log_interval = " << c.log_interval << "\n";
  os << "checkpoint_interval = " << c.checkpoint_interval << "\n";
  os << "eval_interval = " << c.eval_interval << "\n";
  os << "sample_interval = " << c.sample_interval << "\n";
  os << "eval_sample_count = " << c.eval_sample_count << "\n";
  os << "embedder = " << c.embedder << "\n";
  return os.str();
}

inline uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline uint64_t config_hash(const RunConfig& c) { return fnv1a64(config_to_string(c)); }

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, received '" + v + "'");
}

inline int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, received '" + v + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, received '" + v + "'");
  }
}

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "image_size",       "image_channels",      "num_scales",
      "disc_base_channels", "disc_channel_cap",  "mlp_layers",
      "sn_power_iters",   "stats",               "variant",
      "disc_instance_norm", "gen_base_channels", "gen_residual_blocks",
      "gen_downsample_steps", "backward_layer_norm", "lambda_adv",
      "lambda_cyc",       "lambda_id",           "total_iters",
      "warmup_iters",     "lr_start",            "lr_end",
      "batch_size",       "adam_beta1",          "adam_beta2",
      "weight_decay",     "d_updates_per_g",     "scale_down",
      "seed",             "source_dir",          "target_dir",
      "augmentation",     "log_interval",        "checkpoint_interval",
      "eval_interval",    "sample_interval",     "eval_sample_count",
      "embedder"};
  return keys;
}

}  // namespace detail

inline void config_set(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  if (key == "image_size") c.image_size = static_cast<int>(parse_int(key, value));
  else if (key == "image_channels") c.image_channels = static_cast<int>(parse_int(key, value));
  else if (key == "num_scales") c.num_scales = static_cast<int>(parse_int(key, value));
  else if (key == "disc_base_channels") c.disc_base_channels = static_cast<int>(parse_int(key, value));
  else if (key == "disc_channel_cap") c.disc_channel_cap = static_cast<int>(parse_int(key, value));
  else if (key == "mlp_layers") c.mlp_layers = static_cast<int>(parse_int(key, value));
  else if (key == "sn_power_iters") c.sn_power_iters = static_cast<int>(parse_int(key, value));
  else if (key == "stats") c.stats = detail::parse_stats(value);
  else if (key == "variant") {
    if (value == "spatchgan") c.variant = DiscVariant::SPatchGAN;
    else if (value == "patchgan") c.variant = DiscVariant::MultiscalePatchGAN;
    else throw ConfigError("variant must be 'spatchgan' or 'patchgan', received '" + value + "'");
  } else if (key == "disc_instance_norm") c.disc_instance_norm = parse_bool(key, value);
  else if (key == "gen_base_channels") c.gen_base_channels = static_cast<int>(parse_int(key, value));
  else if (key == "gen_residual_blocks") c.gen_residual_blocks = static_cast<int>(parse_int(key, value));
  else if (key == "gen_downsample_steps") c.gen_downsample_steps = static_cast<int>(parse_int(key, value));
  else if (key == "backward_layer_norm") c.backward_layer_norm = parse_bool(key, value);
  else if (key == "lambda_adv") c.lambda_adv = parse_double(key, value);
  else if (key == "lambda_cyc") c.lambda_cyc = parse_double(key, value);
  else if (key == "lambda_id") c.lambda_id = parse_double(key, value);
  else if (key == "total_iters") c.total_iters = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "warmup_iters") c.warmup_iters = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "lr_start") c.lr_start = parse_double(key, value);
  else if (key == "lr_end") c.lr_end = parse_double(key, value);
  else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "adam_beta1") c.adam_beta1 = parse_double(key, value);
  else if (key == "adam_beta2") c.adam_beta2 = parse_double(key, value);
  else if (key == "weight_decay") c.weight_decay = parse_double(key, value);
  else if (key == "d_updates_per_g") c.d_updates_per_g = static_cast<int>(parse_int(key, value));
  else if (key == "scale_down") c.scale_down = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "seed") c.seed = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "source_dir") c.source_dir = value;
  else if (key == "target_dir") c.target_dir = value;
  else if (key == "augmentation") {
    if (value == "anime") c.augmentation = AugmentKind::Anime;
    else if (value == "celeba") c.augmentation = AugmentKind::Celeba;
    else if (value == "none") c.augmentation = AugmentKind::None;
    else throw ConfigError("augmentation must be anime/celeba/none, received '" + value + "'");
  } else if (key == "log_interval") c.log_interval = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "checkpoint_interval") c.checkpoint_interval = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "eval_interval") c.eval_interval = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "sample_interval") c.sample_interval = static_cast<uint64_t>(parse_int(key, value));
  else if (key == "eval_sample_count") c.eval_sample_count = static_cast<int>(parse_int(key, value));
  else if (key == "embedder") c.embedder = value;
  else {
    std::string keys;
    for (const auto& k : detail::config_keys()) {
      if (!keys.empty()) keys += ", ";
      keys += k;
    }
    throw ConfigError("unknown config key '" + key + "' (valid keys: " + keys + ")");
  }
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      const bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (blank) continue;
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": missing key");
    config_set(c, key, value);
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Piecewise schedule over the effective (scale-down adjusted) iteration
/// range: constant lr_start through warmup, then linear to lr_end at the end.
inline double lr_at(uint64_t iter, const RunConfig& c) {
  const uint64_t total = c.eff_total_iters();
  const uint64_t warmup = c.eff_warmup_iters();
  if (iter > total)
    throw ConfigError("lr_at: iteration " + std::to_string(iter) + " outside [0, " +
                      std::to_string(total) + "]");
  if (iter < warmup || total == warmup) return c.lr_start;
  const double t = static_cast<double>(iter - warmup) / static_cast<double>(total - warmup);
  return c.lr_start + (c.lr_end - c.lr_start) * t;
}

}  // namespace spatchgan
