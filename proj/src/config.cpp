#include "tap/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "tap/rng.hpp"

namespace tap {

KvConfig KvConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  KvConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

void KvConfig::set_pair(const std::string& pair) {
  const std::size_t eq = pair.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got: " + pair);
  set(pair.substr(0, eq), pair.substr(eq + 1));
}

std::string KvConfig::get_str(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double KvConfig::get_real(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " has non-numeric value '" + it->second + "'");
  }
}

std::int64_t KvConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " has non-integer value '" + it->second + "'");
  }
}

void KvConfig::merge(const KvConfig& overrides) {
  for (const auto& [k, v] : overrides.kv_) kv_[k] = v;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "decoder.preset=" << (decoder.stages.size() == 4 ? "paper" : "desk") << "\n";
  os << "encoder.c3d=" << encoder.c3d << "\n";
  os << "encoder.centers=" << encoder.n_centers << "\n";
  os << "encoder.fps_start=" << encoder.fps_start << "\n";
  os << "encoder.knn=" << encoder.knn << "\n";
  os << "image_size=" << image_size << "\n";
  os << "loss.per_region_norm=" << (loss_opts.per_region_norm ? 1 : 0) << "\n";
  os << "loss.w_bg=" << loss.w_bg << "\n";
  os << "loss.w_fg=" << loss.w_fg << "\n";
  os << "photo.channels=" << photo.channels << "\n";
  os << "photo.drop_path=" << photo.drop_path << "\n";
  os << "photo.grid=" << photo.grid_h << "\n";
  os << "photo.heads=" << photo.heads << "\n";
  os << "photo.layers=" << photo.layers << "\n";
  os << "photo.mode=" << photo_mode_name(photo.mode) << "\n";
  os << "train.batch=" << train.batch << "\n";
  os << "train.continuous_poses=" << (train.continuous_poses ? 1 : 0) << "\n";
  os << "train.epochs=" << train.epochs << "\n";
  os << "train.lr0=" << train.lr0 << "\n";
  os << "train.lr_min=" << train.lr_min << "\n";
  os << "train.max_steps=" << train.max_steps << "\n";
  os << "train.precision=" << train.precision << "\n";
  os << "train.seed=" << train.seed << "\n";
  os << "train.split=" << (train.train_split_only ? "train" : "all") << "\n";
  os << "train.warmup_epochs=" << train.warmup_epochs << "\n";
  os << "train.weight_decay=" << train.weight_decay << "\n";
  return os.str();
}

std::uint64_t RunConfig::digest() const { return fnv1a64(canonical()); }

RunConfig make_run_config(const KvConfig& kv) {
  static const std::set<std::string> known = {
      "preset",          "train.lr0",        "train.weight_decay", "train.lr_min",
      "train.epochs",    "train.batch",      "train.warmup_epochs", "train.max_steps",
      "train.seed",      "train.precision",  "train.continuous_poses", "train.split",
      "photo.layers",    "photo.channels",   "photo.heads",        "photo.drop_path",
      "photo.mode",      "photo.grid",       "encoder.centers",    "encoder.knn",
      "encoder.c3d",     "encoder.fps_start", "decoder.preset",    "loss.w_fg",
      "loss.w_bg",       "loss.per_region_norm", "image_size",
  };
  for (const auto& [k, v] : kv.items())
    if (known.count(k) == 0) throw ConfigError("unknown config key: " + k);

  RunConfig cfg;
  cfg.preset = kv.get_str("preset", "desk");
  if (cfg.preset == "desk") {
    cfg.photo.grid_h = cfg.photo.grid_w = 4;
    cfg.photo.channels = 128;
    cfg.photo.layers = 2;
    cfg.encoder.n_centers = 32;
    cfg.decoder = DecoderConfig::desk_preset();
    cfg.image_size = 32;
  } else if (cfg.preset == "paper") {
    cfg.photo.grid_h = cfg.photo.grid_w = 7;
    cfg.photo.channels = 256;
    cfg.photo.layers = 6;
    cfg.encoder.n_centers = 64;
    cfg.decoder = DecoderConfig::paper_preset();
    cfg.image_size = 224;
  } else {
    throw ConfigError("unknown preset: " + cfg.preset);
  }

  cfg.train.lr0 = kv.get_real("train.lr0", cfg.train.lr0);
  cfg.train.weight_decay = kv.get_real("train.weight_decay", cfg.train.weight_decay);
  cfg.train.lr_min = kv.get_real("train.lr_min", cfg.train.lr0 / 100.0);
  cfg.train.epochs = static_cast<int>(kv.get_int("train.epochs", cfg.train.epochs));
  cfg.train.batch = static_cast<int>(kv.get_int("train.batch", cfg.train.batch));
  cfg.train.warmup_epochs = static_cast<int>(kv.get_int("train.warmup_epochs", cfg.train.warmup_epochs));
  cfg.train.max_steps = kv.get_int("train.max_steps", cfg.train.max_steps);
  cfg.train.seed = static_cast<std::uint64_t>(kv.get_int("train.seed", 0));
  cfg.train.precision = static_cast<int>(kv.get_int("train.precision", 32));
  cfg.train.continuous_poses = kv.get_int("train.continuous_poses", 0) != 0;
  cfg.train.train_split_only = kv.get_str("train.split", "train") == "train";
  if (cfg.train.precision != 32 && cfg.train.precision != 64)
    throw ConfigError("train.precision must be 32 or 64");
  if (cfg.train.lr0 <= 0.0) throw ConfigError("train.lr0 must be > 0");
  if (cfg.train.batch < 1) throw ConfigError("train.batch must be >= 1");
  const std::string split = kv.get_str("train.split", "train");
  if (split != "train" && split != "all") throw ConfigError("train.split must be train or all");

  cfg.photo.layers = static_cast<int>(kv.get_int("photo.layers", cfg.photo.layers));
  cfg.photo.channels = kv.get_int("photo.channels", cfg.photo.channels);
  cfg.photo.heads = static_cast<int>(kv.get_int("photo.heads", cfg.photo.heads));
  cfg.photo.drop_path = kv.get_real("photo.drop_path", cfg.photo.drop_path);
  cfg.photo.mode = photo_mode_from_name(kv.get_str("photo.mode", "cross_attention"));
  const Index grid = kv.get_int("photo.grid", cfg.photo.grid_h);
  cfg.photo.grid_h = cfg.photo.grid_w = grid;

  cfg.encoder.n_centers = kv.get_int("encoder.centers", cfg.encoder.n_centers);
  cfg.encoder.knn = kv.get_int("encoder.knn", cfg.encoder.knn);
  cfg.encoder.c3d = kv.get_int("encoder.c3d", cfg.encoder.c3d);
  cfg.encoder.fps_start = kv.get_int("encoder.fps_start", cfg.encoder.fps_start);
  cfg.photo.c3d = cfg.encoder.c3d;

  const std::string dec = kv.get_str("decoder.preset", "");
  if (dec == "paper")
    cfg.decoder = DecoderConfig::paper_preset();
  else if (dec == "desk")
    cfg.decoder = DecoderConfig::desk_preset();
  else if (!dec.empty())
    throw ConfigError("decoder.preset must be desk or paper");

  cfg.loss.w_fg = kv.get_real("loss.w_fg", cfg.loss.w_fg);
  cfg.loss.w_bg = kv.get_real("loss.w_bg", cfg.loss.w_bg);
  cfg.loss_opts.per_region_norm = kv.get_int("loss.per_region_norm", 0) != 0;
  cfg.image_size = static_cast<int>(kv.get_int("image_size", cfg.image_size));

  cfg.photo.validate();
  cfg.decoder.validate();
  if (cfg.decoder.stages.front().c_in != cfg.photo.channels)
    throw ConfigError("decoder first stage expects " +
                      std::to_string(cfg.decoder.stages.front().c_in) +
                      " channels but photo.channels=" + std::to_string(cfg.photo.channels));
  return cfg;
}

}  // namespace tap
