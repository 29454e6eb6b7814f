#include "tap/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tap {

namespace {

constexpr std::uint64_t kInitSeedSalt = 0x1a2b3c4d5e6f7788ULL;
constexpr double kPi = 3.141592653589793238462643383279502884;

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct LoadedEntry {
  PointCloud cloud;
  std::vector<ViewImage> views;
  int label = -1;
  std::string id;
};

std::vector<LoadedEntry> load_entries(const DatasetManifest& data, bool with_views,
                                      bool train_split_only, bool test_split_only = false) {
  std::vector<LoadedEntry> out;
  for (const ManifestEntry& e : data.entries) {
    const bool test = is_test_id(e.id);
    if (train_split_only && test) continue;
    if (test_split_only && !test) continue;
    LoadedEntry le;
    le.cloud = load_cloud(data.cloud_file(e));
    le.cloud.label = e.label;
    le.cloud.id = e.id;
    le.label = e.label;
    le.id = e.id;
    if (with_views) {
      le.views.reserve(e.image_paths.size());
      for (int v = 0; v < data.views; ++v) le.views.push_back(load_image(data.image_file(e, v)));
    }
    out.push_back(std::move(le));
  }
  return out;
}

template <typename T>
std::string worst_grad_param(const ParamSet<T>& params) {
  std::string worst = "-";
  double best = -1.0;
  for (const auto& [name, t] : params) {
    for (T g : t.grad()) {
      const double a = std::abs(static_cast<double>(g));
      if (!std::isfinite(a)) return name;
      if (a > best) {
        best = a;
        worst = name;
      }
    }
  }
  return worst;
}

}  // namespace

std::string AccuracyReport::str() const {
  std::ostringstream os;
  os << "train_accuracy=" << fmt_g9(train_accuracy) << " (" << train_count << " samples)\n"
     << "test_accuracy=" << fmt_g9(test_accuracy) << " (" << test_count << " samples)\n";
  return os.str();
}

template <typename T>
void init_params(ParamSet<T>& params, Rng& rng) {
  for (auto& [name, t] : params) {
    if (ends_with(name, ".weight")) {
      const Index fan_in = t.shape()[0], fan_out = t.shape()[1];
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (T& v : t.value()) v = static_cast<T>(static_cast<float>(rng.uniform(-a, a)));
    } else if (ends_with(name, ".kernel")) {
      const Index k = t.shape()[0];
      const Index fan_in = k * k * t.shape()[2], fan_out = k * k * t.shape()[3];
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (T& v : t.value()) v = static_cast<T>(static_cast<float>(rng.uniform(-a, a)));
    } else if (name == "photo.pad") {
      for (T& v : t.value()) v = static_cast<T>(static_cast<float>(0.02 * rng.normal()));
    }
    // .bias stays zero, .gain stays one (set at registration).
  }
}

template <typename T>
PretrainModel<T> build_pretrain_model(const RunConfig& cfg, std::uint64_t init_seed) {
  PretrainModel<T> m;
  m.enc = cfg.encoder;
  m.photo = cfg.photo;
  m.photo.c3d = cfg.encoder.c3d;
  m.dec = cfg.decoder;
  EncoderParamInit<T>::register_params(m.params, m.enc);
  register_photo_params(m.params, m.photo);
  register_decoder_params(m.params, m.dec);
  Rng rng(init_seed);
  init_params(m.params, rng);
  return m;
}

template <typename T>
TapLossTerms<T> sample_loss_terms(PretrainModel<T>& model, const PointCloud& cloud,
                                  const Pose& pose, const ViewImage& gt, const LossWeights& w,
                                  const TapLossOptions& opts, PhotoForwardCtx<T>* ctx) {
  const std::vector<Vec3> rotated = rotate_points(cloud.points, pose);
  const ProjectionParams pp =
      fit_projection(rotated, static_cast<int>(model.photo.grid_h),
                     static_cast<int>(model.photo.grid_w), kRenderMargin);
  EncodedCloud<T> enc = encode(cloud, model.params, model.enc);
  Tensor<T> fmap = photograph_forward(enc, pose, pp, model.params, model.photo, ctx);
  Tensor<T> gen = decode(fmap, model.params, model.dec);
  return tap_loss_terms(gen, gt, w, opts);
}

namespace {

template <typename T>
PretrainResult pretrain_impl(const DatasetManifest& data, const RunConfig& cfg,
                             const std::filesystem::path& out_dir,
                             const std::filesystem::path& resume, int ckpt_every_epochs) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir))
    throw IoError("pretrain: cannot create output directory " + out_dir.string());

  const std::vector<LoadedEntry> entries =
      load_entries(data, /*with_views=*/true, cfg.train.train_split_only);
  if (entries.empty()) throw DataError("pretrain: no training entries in manifest");
  const std::vector<Pose> poses = sample_poses(data.views, data.elevation_deg);

  PretrainModel<T> model = build_pretrain_model<T>(cfg, cfg.train.seed ^ kInitSeedSalt);
  AdamState<T> adam;
  adam.init(model.params);
  Rng rng(cfg.train.seed);

  const std::int64_t samples =
      static_cast<std::int64_t>(entries.size()) * static_cast<std::int64_t>(data.views);
  const std::int64_t steps_per_epoch =
      std::max<std::int64_t>(1, (samples + cfg.train.batch - 1) / cfg.train.batch);
  const std::int64_t total_steps = cfg.train.max_steps > 0
                                       ? cfg.train.max_steps
                                       : steps_per_epoch * static_cast<std::int64_t>(cfg.train.epochs);
  const std::int64_t warmup_steps = steps_per_epoch * static_cast<std::int64_t>(cfg.train.warmup_epochs);

  std::int64_t start_step = 0;
  if (!resume.empty()) {
    const CheckpointMeta meta = load_checkpoint(resume, model.params, &adam);
    if (meta.config_digest != cfg.digest())
      throw ConfigError("resume checkpoint was written under a different config");
    rng.set_state(meta.rng_state);
    start_step = meta.step;
    if (start_step >= total_steps)
      throw ContractError("resume checkpoint is already at or past total_steps");
  }

  const std::filesystem::path metrics_path = out_dir / "metrics.csv";
  std::ofstream metrics(metrics_path, std::ios::binary);
  if (!metrics) throw IoError("cannot open " + metrics_path.string() + " for writing");
  metrics << "epoch,step,loss_fg,loss_bg,loss_total,lr\n";

  const int splat = default_splat_radius(data.image_size, data.image_size);

  PretrainResult result;
  result.metrics_csv = metrics_path;
  std::vector<double> head_losses, tail_losses;

  auto save_epoch_ckpt = [&](std::int64_t completed_steps, const std::filesystem::path& path) {
    CheckpointMeta meta;
    meta.config_digest = cfg.digest();
    meta.step = completed_steps;
    meta.rng_state = rng.state();
    save_checkpoint(path, model.params, &adam, meta);
  };

  for (std::int64_t step = start_step; step < total_steps; ++step) {
    const double lr = cosine_lr(step, total_steps, cfg.train.lr0, cfg.train.lr_min, warmup_steps);

    model.params.zero_grad();
    Tensor<T> batch_total;
    double fg_sum = 0.0, bg_sum = 0.0;
    try {
      for (int b = 0; b < cfg.train.batch; ++b) {
        const auto ei = static_cast<std::size_t>(rng.below(entries.size()));
        PhotoForwardCtx<T> ctx;
        ctx.training = true;
        ctx.rng = &rng;
        ctx.drop_path = cfg.photo.drop_path;

        TapLossTerms<T> terms;
        if (cfg.train.continuous_poses) {
          const double azim = rng.uniform(0.0, 2.0 * kPi);
          const Pose pose(Mat3::rot_x(-data.elevation_deg * kPi / 180.0).mul(Mat3::rot_z(azim)));
          const ViewImage gt =
              render(entries[ei].cloud, pose, data.image_size, data.image_size, splat);
          terms = sample_loss_terms(model, entries[ei].cloud, pose, gt, cfg.loss, cfg.loss_opts, &ctx);
        } else {
          const auto vi = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(data.views)));
          terms = sample_loss_terms(model, entries[ei].cloud, poses[vi], entries[ei].views[vi],
                                    cfg.loss, cfg.loss_opts, &ctx);
        }
        fg_sum += static_cast<double>(terms.fg.item());
        bg_sum += static_cast<double>(terms.bg.item());
        batch_total = b == 0 ? reshape(terms.total, Shape{1}) : add(batch_total, reshape(terms.total, Shape{1}));
      }
    } catch (const NumericError& e) {
      throw NumericError("pretrain: aborted at step " + std::to_string(step) + " (lr=" +
                         fmt_g9(lr) + ", worst-grad param " + worst_grad_param(model.params) +
                         "): " + e.what());
    }
    batch_total = scale(batch_total, static_cast<T>(1.0 / cfg.train.batch));

    const double loss_total = static_cast<double>(batch_total.item());
    const double loss_fg = fg_sum / cfg.train.batch;
    const double loss_bg = bg_sum / cfg.train.batch;
    if (!std::isfinite(loss_total)) {
      backward(batch_total);
      throw NumericError("pretrain: non-finite loss at step " + std::to_string(step) + " (lr=" +
                         fmt_g9(lr) + ", worst-grad param " + worst_grad_param(model.params) +
                         ")");
    }

    backward(batch_total);
    adamw_step(model.params, adam, lr, cfg.train.weight_decay);

    const std::int64_t epoch = step / steps_per_epoch;
    metrics << epoch << "," << step << "," << fmt_g9(loss_fg) << "," << fmt_g9(loss_bg) << ","
            << fmt_g9(loss_total) << "," << fmt_g9(lr) << "\n";

    if (step - start_step < 10) head_losses.push_back(loss_total);
    tail_losses.push_back(loss_total);
    if (tail_losses.size() > 10) tail_losses.erase(tail_losses.begin());

    const bool epoch_end = (step + 1) % steps_per_epoch == 0;
    if (epoch_end && ckpt_every_epochs > 0 && (epoch + 1) % ckpt_every_epochs == 0) {
      char name[48];
      std::snprintf(name, sizeof(name), "ckpt_epoch_%05lld.tapk", static_cast<long long>(epoch));
      save_epoch_ckpt(step + 1, out_dir / name);
    }
  }
  metrics.flush();
  if (!metrics) throw IoError("write failed for " + metrics_path.string());

  result.final_checkpoint = out_dir / "ckpt_final.tapk";
  save_epoch_ckpt(total_steps, result.final_checkpoint);
  result.steps = total_steps - start_step;
  result.first10_avg = head_losses.empty()
                           ? 0.0
                           : std::accumulate(head_losses.begin(), head_losses.end(), 0.0) /
                                 static_cast<double>(head_losses.size());
  result.last10_avg = tail_losses.empty()
                          ? 0.0
                          : std::accumulate(tail_losses.begin(), tail_losses.end(), 0.0) /
                                static_cast<double>(tail_losses.size());
  return result;
}

// ---- classification helpers ----

template <typename T>
struct ClassifierModel {
  ParamSet<T> params;
  EncoderConfig enc;
  Index head_hidden = 256;
  Index classes = kNumShapeKinds;
};

template <typename T>
ClassifierModel<T> build_classifier_model(const RunConfig& cfg, std::uint64_t init_seed) {
  ClassifierModel<T> m;
  m.enc = cfg.encoder;
  EncoderParamInit<T>::register_params(m.params, m.enc);
  m.params.add("head.mlp.l0.weight", Tensor<T>::zeros(Shape{2 * m.enc.c3d, m.head_hidden}));
  m.params.add("head.mlp.l0.bias", Tensor<T>::zeros(Shape{1, m.head_hidden}));
  m.params.add("head.mlp.l1.weight", Tensor<T>::zeros(Shape{m.head_hidden, m.classes}));
  m.params.add("head.mlp.l1.bias", Tensor<T>::zeros(Shape{1, m.classes}));
  Rng rng(init_seed);
  init_params(m.params, rng);
  return m;
}

template <typename T>
Tensor<T> pooled_features(const PointCloud& cloud, ParamSet<T>& params, const EncoderConfig& enc_cfg) {
  EncodedCloud<T> enc = encode(cloud, params, enc_cfg);
  return concat_cols(col_max(enc.features), col_mean(enc.features));
}

template <typename T>
Tensor<T> class_logits(ClassifierModel<T>& m, const PointCloud& cloud) {
  Tensor<T> pooled = pooled_features(cloud, m.params, m.enc);
  return mlp_forward(pooled, m.params, "head.mlp", {2 * m.enc.c3d, m.head_hidden, m.classes});
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, int label) {
  Tensor<T> probs = softmax_rows(logits);
  Tensor<T> picked = slice_cols(probs, label, label + 1);
  return scale(log_elem(picked), T(-1));
}

template <typename T>
int argmax_row(const Tensor<T>& logits) {
  int best = 0;
  for (Index j = 1; j < logits.shape()[1]; ++j)
    if (logits.value()[static_cast<std::size_t>(j)] >
        logits.value()[static_cast<std::size_t>(best)])
      best = static_cast<int>(j);
  return best;
}

void check_labels(const std::vector<LoadedEntry>& entries, Index classes) {
  for (const LoadedEntry& e : entries)
    if (e.label < 0 || e.label >= classes)
      throw DataError("entry " + e.id + " has label " + std::to_string(e.label) +
                      " outside the " + std::to_string(classes) + "-way task");
}

template <typename T>
AccuracyReport finetune_impl(const DatasetManifest& data, const DatasetManifest* eval_data,
                             const RunConfig& cfg, const std::filesystem::path& init_checkpoint) {
  const std::vector<LoadedEntry> train_set =
      load_entries(data, false, /*train_split_only=*/eval_data == nullptr);
  const std::vector<LoadedEntry> test_set =
      eval_data != nullptr ? load_entries(*eval_data, false, false)
                           : load_entries(data, false, false, /*test_split_only=*/true);
  if (train_set.empty()) throw DataError("finetune: empty training set");

  ClassifierModel<T> model = build_classifier_model<T>(cfg, cfg.train.seed ^ kInitSeedSalt);
  check_labels(train_set, model.classes);
  check_labels(test_set, model.classes);
  if (!init_checkpoint.empty()) {
    const std::size_t restored = load_params_matching(init_checkpoint, model.params, "encoder.");
    if (restored == 0)
      throw ConfigError("checkpoint " + init_checkpoint.string() + " holds no encoder tensors");
  }

  AdamState<T> adam;
  adam.init(model.params);
  Rng rng(cfg.train.seed);

  const std::int64_t steps_per_epoch = std::max<std::int64_t>(
      1, (static_cast<std::int64_t>(train_set.size()) + cfg.train.batch - 1) / cfg.train.batch);
  const std::int64_t total_steps = steps_per_epoch * cfg.train.epochs;
  const std::int64_t warmup_steps = steps_per_epoch * cfg.train.warmup_epochs;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.train.batch)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.train.batch));
      const double lr = cosine_lr(std::min(step, total_steps), total_steps, cfg.train.lr0,
                                  cfg.train.lr_min, warmup_steps);
      model.params.zero_grad();
      Tensor<T> total;
      for (std::size_t i = begin; i < end; ++i) {
        const LoadedEntry& e = train_set[order[i]];
        Tensor<T> loss = cross_entropy(class_logits(model, e.cloud), e.label);
        total = i == begin ? reshape(loss, Shape{1}) : add(total, reshape(loss, Shape{1}));
      }
      total = scale(total, static_cast<T>(1.0 / static_cast<double>(end - begin)));
      if (!std::isfinite(static_cast<double>(total.item())))
        throw NumericError("finetune: non-finite loss at step " + std::to_string(step));
      backward(total);
      adamw_step(model.params, adam, lr, cfg.train.weight_decay);
      ++step;
    }
  }

  auto accuracy = [&](const std::vector<LoadedEntry>& set) {
    if (set.empty()) return 0.0;
    int hit = 0;
    for (const LoadedEntry& e : set)
      if (argmax_row(class_logits(model, e.cloud)) == e.label) ++hit;
    return static_cast<double>(hit) / static_cast<double>(set.size());
  };

  AccuracyReport report;
  report.train_count = static_cast<int>(train_set.size());
  report.test_count = static_cast<int>(test_set.size());
  report.train_accuracy = accuracy(train_set);
  report.test_accuracy = accuracy(test_set);
  return report;
}

template <typename T>
AccuracyReport probe_impl(const DatasetManifest& data, const DatasetManifest* eval_data,
                          const RunConfig& cfg, const std::filesystem::path& init_checkpoint) {
  const std::vector<LoadedEntry> train_set =
      load_entries(data, false, /*train_split_only=*/eval_data == nullptr);
  const std::vector<LoadedEntry> test_set =
      eval_data != nullptr ? load_entries(*eval_data, false, false)
                           : load_entries(data, false, false, /*test_split_only=*/true);
  if (train_set.empty()) throw DataError("linear_probe: empty training set");

  ParamSet<T> encoder_params;
  EncoderParamInit<T>::register_params(encoder_params, cfg.encoder);
  Rng init_rng(cfg.train.seed ^ kInitSeedSalt);
  init_params(encoder_params, init_rng);
  if (!init_checkpoint.empty()) {
    const std::size_t restored = load_params_matching(init_checkpoint, encoder_params, "encoder.");
    if (restored == 0)
      throw ConfigError("checkpoint " + init_checkpoint.string() + " holds no encoder tensors");
  }

  const Index classes = kNumShapeKinds;
  const Index feat_dim = 2 * cfg.encoder.c3d;
  auto freeze = [&](const std::vector<LoadedEntry>& set) {
    std::vector<Tensor<T>> feats;
    feats.reserve(set.size());
    for (const LoadedEntry& e : set) {
      Tensor<T> f = pooled_features(e.cloud, encoder_params, cfg.encoder);
      feats.push_back(Tensor<T>::from_data(f.shape(), f.value()));  // detach
    }
    return feats;
  };
  check_labels(train_set, classes);
  check_labels(test_set, classes);
  const std::vector<Tensor<T>> train_feats = freeze(train_set);
  const std::vector<Tensor<T>> test_feats = freeze(test_set);

  ParamSet<T> head;
  head.add("probe.l0.weight", Tensor<T>::zeros(Shape{feat_dim, classes}));
  head.add("probe.l0.bias", Tensor<T>::zeros(Shape{1, classes}));
  Rng head_rng(cfg.train.seed ^ 0x9e37ULL);
  init_params(head, head_rng);

  AdamState<T> adam;
  adam.init(head);
  Rng rng(cfg.train.seed);
  const std::int64_t steps_per_epoch = std::max<std::int64_t>(
      1, (static_cast<std::int64_t>(train_set.size()) + cfg.train.batch - 1) / cfg.train.batch);
  const std::int64_t total_steps = steps_per_epoch * cfg.train.epochs;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.train.batch)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.train.batch));
      const double lr = cosine_lr(std::min(step, total_steps), total_steps, cfg.train.lr0,
                                  cfg.train.lr_min, 0);
      head.zero_grad();
      Tensor<T> total;
      for (std::size_t i = begin; i < end; ++i) {
        Tensor<T> logits = mlp_forward(train_feats[order[i]], head, "probe", {feat_dim, classes});
        Tensor<T> loss = cross_entropy(logits, train_set[order[i]].label);
        total = i == begin ? reshape(loss, Shape{1}) : add(total, reshape(loss, Shape{1}));
      }
      total = scale(total, static_cast<T>(1.0 / static_cast<double>(end - begin)));
      backward(total);
      adamw_step(head, adam, lr, cfg.train.weight_decay);
      ++step;
    }
  }

  auto accuracy = [&](const std::vector<Tensor<T>>& feats, const std::vector<LoadedEntry>& set) {
    if (set.empty()) return 0.0;
    int hit = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      Tensor<T> logits =
          mlp_forward(const_cast<Tensor<T>&>(feats[i]), head, "probe", {feat_dim, classes});
      if (argmax_row(logits) == set[i].label) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(set.size());
  };

  AccuracyReport report;
  report.train_count = static_cast<int>(train_set.size());
  report.test_count = static_cast<int>(test_set.size());
  report.train_accuracy = accuracy(train_feats, train_set);
  report.test_accuracy = accuracy(test_feats, test_set);
  return report;
}

template <typename T>
void export_embeddings_impl(const DatasetManifest& data, const RunConfig& cfg,
                            const std::filesystem::path& init_checkpoint,
                            const std::filesystem::path& out_path) {
  const std::vector<LoadedEntry> entries = load_entries(data, false, false);
  ParamSet<T> encoder_params;
  EncoderParamInit<T>::register_params(encoder_params, cfg.encoder);
  Rng init_rng(cfg.train.seed ^ kInitSeedSalt);
  init_params(encoder_params, init_rng);
  if (!init_checkpoint.empty()) {
    const std::size_t restored = load_params_matching(init_checkpoint, encoder_params, "encoder.");
    if (restored == 0)
      throw ConfigError("checkpoint " + init_checkpoint.string() + " holds no encoder tensors");
  }

  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw IoError("cannot open " + out_path.string() + " for writing");
  for (const LoadedEntry& e : entries) {
    // c3d-wide global max-pool row per cloud
    EncodedCloud<T> enc = encode(e.cloud, encoder_params, cfg.encoder);
    Tensor<T> f = col_max(enc.features);
    os << e.id << "\t" << e.label;
    for (T v : f.value()) os << "\t" << fmt_g9(static_cast<double>(v));
    os << "\n";
  }
  if (!os) throw IoError("write failed for " + out_path.string());
}

}  // namespace

PretrainResult pretrain(const DatasetManifest& data, const RunConfig& cfg,
                        const std::filesystem::path& out_dir, const std::filesystem::path& resume,
                        int ckpt_every_epochs) {
  return cfg.train.precision == 64 ? pretrain_impl<double>(data, cfg, out_dir, resume, ckpt_every_epochs)
                                   : pretrain_impl<float>(data, cfg, out_dir, resume, ckpt_every_epochs);
}

AccuracyReport finetune(const DatasetManifest& data, const DatasetManifest* eval_data,
                        const RunConfig& cfg, const std::filesystem::path& init_checkpoint,
                        const std::filesystem::path& report_out) {
  const AccuracyReport report = cfg.train.precision == 64
                                    ? finetune_impl<double>(data, eval_data, cfg, init_checkpoint)
                                    : finetune_impl<float>(data, eval_data, cfg, init_checkpoint);
  if (!report_out.empty()) {
    std::ofstream os(report_out, std::ios::binary);
    if (!os) throw IoError("cannot open " + report_out.string() + " for writing");
    os << report.str();
  }
  return report;
}

AccuracyReport linear_probe(const DatasetManifest& data, const DatasetManifest* eval_data,
                            const RunConfig& cfg, const std::filesystem::path& init_checkpoint) {
  return cfg.train.precision == 64 ? probe_impl<double>(data, eval_data, cfg, init_checkpoint)
                                   : probe_impl<float>(data, eval_data, cfg, init_checkpoint);
}

std::vector<std::string> finetune_init_diff(const RunConfig& cfg,
                                            const std::filesystem::path& init_checkpoint) {
  ClassifierModel<float> scratch = build_classifier_model<float>(cfg, cfg.train.seed ^ kInitSeedSalt);
  ClassifierModel<float> loaded = build_classifier_model<float>(cfg, cfg.train.seed ^ kInitSeedSalt);
  const std::size_t restored = load_params_matching(init_checkpoint, loaded.params, "encoder.");
  if (restored == 0)
    throw ConfigError("checkpoint " + init_checkpoint.string() + " holds no encoder tensors");
  std::vector<std::string> diff;
  for (auto& [name, t] : scratch.params)
    if (t.value() != loaded.params.at(name).value()) diff.push_back(name);
  return diff;
}

void export_embeddings(const DatasetManifest& data, const RunConfig& cfg,
                       const std::filesystem::path& init_checkpoint,
                       const std::filesystem::path& out_path) {
  if (cfg.train.precision == 64)
    export_embeddings_impl<double>(data, cfg, init_checkpoint, out_path);
  else
    export_embeddings_impl<float>(data, cfg, init_checkpoint, out_path);
}

#define TAP_INSTANTIATE_TRAINER(T)                                                          \
  template void init_params(ParamSet<T>&, Rng&);                                            \
  template PretrainModel<T> build_pretrain_model(const RunConfig&, std::uint64_t);          \
  template TapLossTerms<T> sample_loss_terms(PretrainModel<T>&, const PointCloud&,          \
                                             const Pose&, const ViewImage&,                 \
                                             const LossWeights&, const TapLossOptions&,     \
                                             PhotoForwardCtx<T>*);

TAP_INSTANTIATE_TRAINER(float)
TAP_INSTANTIATE_TRAINER(double)

#undef TAP_INSTANTIATE_TRAINER

}  // namespace tap
