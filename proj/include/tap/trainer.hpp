#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "tap/checkpoint.hpp"
#include "tap/config.hpp"
#include "tap/dataset.hpp"
#include "tap/renderer.hpp"

namespace tap {

struct PretrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path metrics_csv;
  std::int64_t steps = 0;
  double first10_avg = 0.0;  // mean total loss of this run's first 10 steps
  double last10_avg = 0.0;   // mean total loss of this run's last 10 steps
};

struct AccuracyReport {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  int train_count = 0;
  int test_count = 0;
  std::string str() const;
};

// Generative pre-training over (cloud, pose, ground-truth view) samples.
// Writes metrics.csv plus per-epoch and final checkpoints under out_dir.
// Fully deterministic for a fixed (config, seed).
PretrainResult pretrain(const DatasetManifest& data, const RunConfig& cfg,
                        const std::filesystem::path& out_dir,
                        const std::filesystem::path& resume = {}, int ckpt_every_epochs = 1);

// Supervised classification with the encoder plus a pooled MLP head. When
// `eval_data` is null the manifest's hash split provides the test set;
// otherwise all of `data` trains and all of `eval_data` evaluates. An empty
// `init_checkpoint` trains from scratch.
AccuracyReport finetune(const DatasetManifest& data, const DatasetManifest* eval_data,
                        const RunConfig& cfg, const std::filesystem::path& init_checkpoint,
                        const std::filesystem::path& report_out = {});

// Affine classifier on frozen pooled encoder features.
AccuracyReport linear_probe(const DatasetManifest& data, const DatasetManifest* eval_data,
                            const RunConfig& cfg, const std::filesystem::path& init_checkpoint);

// Parameter diff report: names whose initial values differ between a
// scratch classifier and one initialized from `init_checkpoint`, under the
// same seed. Loading a pre-trained encoder must only ever touch encoder.*.
std::vector<std::string> finetune_init_diff(const RunConfig& cfg,
                                            const std::filesystem::path& init_checkpoint);

// One row per cloud: id, label, pooled feature vector (tab separated).
void export_embeddings(const DatasetManifest& data, const RunConfig& cfg,
                       const std::filesystem::path& init_checkpoint,
                       const std::filesystem::path& out_path);

// ---- shared model assembly (used by tests and the acceptance suite) ----

template <typename T>
struct PretrainModel {
  ParamSet<T> params;
  EncoderConfig enc;
  PhotoConfig photo;
  DecoderConfig dec;
};

// Name-driven initialization: Xavier-uniform weights/kernels, zero biases,
// unit norm gains, small-normal pad token. Values are drawn in 64-bit and
// rounded through float so 32- and 64-bit runs start identically.
template <typename T>
void init_params(ParamSet<T>& params, Rng& rng);

template <typename T>
PretrainModel<T> build_pretrain_model(const RunConfig& cfg, std::uint64_t init_seed);

// encoder -> photograph -> decoder -> weighted fg/bg loss for one sample.
template <typename T>
TapLossTerms<T> sample_loss_terms(PretrainModel<T>& model, const PointCloud& cloud,
                                  const Pose& pose, const ViewImage& gt, const LossWeights& w,
                                  const TapLossOptions& opts, PhotoForwardCtx<T>* ctx = nullptr);

}  // namespace tap
