#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "tap/backbone.hpp"
#include "tap/decoder2d.hpp"
#include "tap/objective.hpp"
#include "tap/photograph.hpp"

namespace tap {

// Flat key=value store. Later assignments win; '#' starts a comment line.
class KvConfig {
public:
  static KvConfig from_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  // Parses "key=value" (as passed on the command line).
  void set_pair(const std::string& pair);
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;

  void merge(const KvConfig& overrides);
  const std::map<std::string, std::string>& items() const { return kv_; }

private:
  std::map<std::string, std::string> kv_;
};

struct TrainConfig {
  double lr0 = 5e-4;
  double weight_decay = 5e-2;
  double lr_min = 5e-6;  // lr0 / 100
  int epochs = 100;
  int batch = 32;
  int warmup_epochs = 0;  // finetune overrides to 10
  std::int64_t max_steps = 0;  // 0 = epochs * steps_per_epoch
  std::uint64_t seed = 0;
  int precision = 32;  // 32 or 64
  bool continuous_poses = false;
  bool train_split_only = true;
};

// Everything a run needs, assembled from defaults, a preset, a config file
// and command-line overrides (in that order).
struct RunConfig {
  std::string preset = "desk";
  TrainConfig train;
  EncoderConfig encoder;
  PhotoConfig photo;
  DecoderConfig decoder = DecoderConfig::desk_preset();
  LossWeights loss;
  TapLossOptions loss_opts;
  int image_size = 32;

  // Canonical key=value serialization; feeds the checkpoint digest.
  std::string canonical() const;
  std::uint64_t digest() const;
};

// Applies the preset, then every explicit key. Unknown keys raise
// ConfigError so typos cannot silently train the wrong model.
RunConfig make_run_config(const KvConfig& kv);

}  // namespace tap
