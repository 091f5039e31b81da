// cleanadapt/config.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cleanadapt/adapt.hpp"
#include "cleanadapt/data.hpp"

namespace cleanadapt {

// Experiment configuration: plain `key = value` lines, `#` starts a comment.
// Unknown keys, duplicate keys and malformed values are errors that name the
// offending key.

inline const std::set<std::string> &KnownConfigKeys() {
  static const std::set<std::string> keys = {
      // randomness
      "seed",
      // synthetic shift
      "num_classes", "source_per_class", "target_per_class", "latent_dim", "dim_a", "dim_m",
      "rotation", "translation", "noise_std", "view_noise_std", "mirror_probability",
      // artifact paths
      "source_data", "target_data", "target_val_data", "source_checkpoint",
      "retrieval_checkpoint",
      // model and pre-training
      "hidden_dim", "pretrain_epochs", "pretrain_batch_size", "pretrain_lr",
      "pretrain_decay_epochs", "pretrain_decay_factor", "pretrain_momentum",
      // adaptation
      "mode", "stream_mode", "tau", "epsilon", "epochs", "batch_size", "lr", "decay_epochs",
      "decay_factor", "momentum", "weak_noise_std", "flip_probability", "strong_noise_std",
      "dropout_fraction", "scale_lo", "scale_hi", "strong_transforms",
      // sweeps and evaluation
      "tau_list", "eval_retrieval", "retrieval_ks",
  };
  return keys;
}

inline const std::vector<std::string> &ShiftRequiredKeys() {
  static const std::vector<std::string> keys = {
      "num_classes", "source_per_class", "target_per_class", "latent_dim",
      "dim_a",       "dim_m",            "noise_std"};
  return keys;
}

class ConfigMap {
 public:
  static ConfigMap Parse(std::string_view text) {
    ConfigMap cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string trimmed = Trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        Fail(ErrorCode::kParse, "config line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = Trim(trimmed.substr(0, eq));
      const std::string value = Trim(trimmed.substr(eq + 1));
      if (!KnownConfigKeys().count(key))
        Fail(ErrorCode::kParse, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      if (cfg.values_.count(key))
        Fail(ErrorCode::kParse, "config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static ConfigMap Load(const std::string &path) {
    std::ifstream in(path);
    if (!in) Fail(ErrorCode::kIo, "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return Parse(ss.str());
  }

  bool Has(const std::string &key) const { return values_.count(key) > 0; }
  void Set(const std::string &key, const std::string &value) { values_[key] = value; }
  const std::map<std::string, std::string> &values() const { return values_; }

  void Require(const std::vector<std::string> &keys) const {
    for (const auto &k : keys)
      if (!Has(k)) Fail(ErrorCode::kParse, "missing required key: " + k);
  }

  std::string String(const std::string &key, const std::string &fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double Real(const std::string &key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : ParseReal(key, it->second);
  }

  std::uint64_t Unsigned(const std::string &key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : ParseUnsigned(key, it->second);
  }

  bool Bool(const std::string &key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    Fail(ErrorCode::kParse, "config key '" + key + "': expected true/false, got '" + it->second + "'");
  }

  std::vector<double> RealList(const std::string &key, std::vector<double> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const auto &item : SplitList(it->second)) out.push_back(ParseReal(key, item));
    return out;
  }

  std::vector<std::size_t> UnsignedList(const std::string &key, std::vector<std::size_t> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::size_t> out;
    for (const auto &item : SplitList(it->second))
      out.push_back(static_cast<std::size_t>(ParseUnsigned(key, item)));
    return out;
  }

 private:
  static std::string Trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> SplitList(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = Trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  static double ParseReal(const std::string &key, const std::string &v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size() && std::isfinite(d)) return d;
    } catch (const std::exception &) {
    }
    Fail(ErrorCode::kParse, "config key '" + key + "': expected a real number, got '" + v + "'");
  }

  static std::uint64_t ParseUnsigned(const std::string &key, const std::string &v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
      Fail(ErrorCode::kParse, "config key '" + key + "': expected an unsigned integer, got '" + v + "'");
    return out;
  }

  std::map<std::string, std::string> values_;
};

inline AdaptMode ParseAdaptMode(const std::string &s) {
  if (s == "cleanadapt") return AdaptMode::kCleanAdapt;
  if (s == "cleanadapt_ts") return AdaptMode::kCleanAdaptTs;
  if (s == "finetune_all") return AdaptMode::kFinetuneAll;
  if (s == "highloss_ablation") return AdaptMode::kHighLossAblation;
  Fail(ErrorCode::kParse, "config key 'mode': unknown mode '" + s + "'");
}

inline const char *AdaptModeName(AdaptMode m) {
  switch (m) {
    case AdaptMode::kCleanAdapt: return "cleanadapt";
    case AdaptMode::kCleanAdaptTs: return "cleanadapt_ts";
    case AdaptMode::kFinetuneAll: return "finetune_all";
    case AdaptMode::kHighLossAblation: return "highloss_ablation";
  }
  return "?";
}

inline StreamMode ParseStreamMode(const std::string &s) {
  if (s == "two_stream") return StreamMode::kTwoStream;
  if (s == "appearance_only") return StreamMode::kAppearanceOnly;
  if (s == "motion_only") return StreamMode::kMotionOnly;
  Fail(ErrorCode::kParse, "config key 'stream_mode': unknown stream mode '" + s + "'");
}

inline ShiftSpec ShiftSpecFrom(const ConfigMap &c) {
  c.Require(ShiftRequiredKeys());
  ShiftSpec s;
  s.num_classes = c.Unsigned("num_classes", s.num_classes);
  s.source_per_class = c.Unsigned("source_per_class", s.source_per_class);
  s.target_per_class = c.Unsigned("target_per_class", s.target_per_class);
  s.latent_dim = c.Unsigned("latent_dim", s.latent_dim);
  s.dim_a = c.Unsigned("dim_a", s.dim_a);
  s.dim_m = c.Unsigned("dim_m", s.dim_m);
  s.rotation = c.Real("rotation", 0.0);
  s.translation = c.RealList("translation", {});
  s.noise_std = c.Real("noise_std", s.noise_std);
  s.view_noise_std = c.Real("view_noise_std", s.view_noise_std);
  s.mirror_probability = c.Real("mirror_probability", s.mirror_probability);
  s.seed = c.Unsigned("seed", 0);
  s.Validate();
  return s;
}

/// Schedule used for source pre-training (epochs, optimizer and hidden width).
inline AdaptConfig PretrainConfigFrom(const ConfigMap &c) {
  AdaptConfig p;
  p.seed = c.Unsigned("seed", 0);
  p.hidden_dim = c.Unsigned("hidden_dim", p.hidden_dim);
  p.epochs = c.Unsigned("pretrain_epochs", 30);
  p.batch_size = c.Unsigned("pretrain_batch_size", 32);
  p.lr_schedule.base_lr = c.Real("pretrain_lr", 1e-2);
  p.lr_schedule.decay_epochs = c.UnsignedList("pretrain_decay_epochs", {10, 20});
  p.lr_schedule.decay_factor = c.Real("pretrain_decay_factor", 0.1);
  p.momentum = c.Real("pretrain_momentum", 0.9);
  p.stream_mode = ParseStreamMode(c.String("stream_mode", "two_stream"));
  p.Validate();
  return p;
}

inline AdaptConfig AdaptConfigFrom(const ConfigMap &c) {
  AdaptConfig a;
  a.seed = c.Unsigned("seed", 0);
  a.hidden_dim = c.Unsigned("hidden_dim", a.hidden_dim);
  a.mode = ParseAdaptMode(c.String("mode", "cleanadapt"));
  a.stream_mode = ParseStreamMode(c.String("stream_mode", "two_stream"));
  a.tau = c.Real("tau", a.tau);
  a.epsilon = c.Real("epsilon", a.epsilon);
  a.epochs = c.Unsigned("epochs", a.epochs);
  a.batch_size = c.Unsigned("batch_size", a.batch_size);
  a.lr_schedule.base_lr = c.Real("lr", a.lr_schedule.base_lr);
  a.lr_schedule.decay_epochs = c.UnsignedList("decay_epochs", a.lr_schedule.decay_epochs);
  a.lr_schedule.decay_factor = c.Real("decay_factor", a.lr_schedule.decay_factor);
  a.momentum = c.Real("momentum", a.momentum);
  auto &g = a.augmentation;
  g.weak_noise_std = c.Real("weak_noise_std", g.weak_noise_std);
  g.flip_probability = c.Real("flip_probability", g.flip_probability);
  g.strong_noise_std = c.Real("strong_noise_std", g.strong_noise_std);
  g.dropout_fraction = c.Real("dropout_fraction", g.dropout_fraction);
  g.scale_lo = c.Real("scale_lo", g.scale_lo);
  g.scale_hi = c.Real("scale_hi", g.scale_hi);
  g.strong_transforms = c.Unsigned("strong_transforms", g.strong_transforms);
  a.Validate();
  return a;
}

}  // namespace cleanadapt
