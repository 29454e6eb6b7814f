#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "tap/gradcheck.hpp"
#include "tap/objective.hpp"
#include "tap/trainer.hpp"

namespace fs = std::filesystem;

namespace {

tap::RunConfig assemble_config(const std::string& config_path,
                               const std::vector<std::string>& overrides,
                               const std::vector<std::pair<std::string, std::string>>& presets = {}) {
  tap::KvConfig kv;
  for (const auto& [k, v] : presets) kv.set(k, v);
  if (!config_path.empty()) kv.merge(tap::KvConfig::from_file(config_path));
  for (const std::string& pair : overrides) kv.set_pair(pair);
  return tap::make_run_config(kv);
}

int run_gradcheck(const std::string& config_path, const std::vector<std::string>& overrides) {
  tap::RunConfig cfg = assemble_config(config_path, overrides, {{"train.precision", "64"}});
  cfg.train.precision = 64;

  tap::PretrainModel<double> model = tap::build_pretrain_model<double>(cfg, cfg.train.seed ^ 0x5eedULL);
  std::vector<tap::PointCloud> clouds;
  std::vector<tap::Pose> poses = tap::sample_poses(2, 30.0);
  std::vector<tap::ViewImage> gts;
  for (int i = 0; i < 2; ++i) {
    clouds.push_back(tap::gen_shape(i == 0 ? tap::ShapeKind::torus : tap::ShapeKind::capsule, 128,
                                    cfg.train.seed + static_cast<std::uint64_t>(i)));
    gts.push_back(tap::render(clouds.back(), poses[static_cast<std::size_t>(i)], cfg.image_size,
                              cfg.image_size, tap::default_splat_radius(cfg.image_size, cfg.image_size)));
  }

  tap::TapLossOptions opts;
  opts.clamp_gen = false;  // keep the map smooth for finite differences
  auto f = [&](tap::ParamSet<double>&) {
    tap::Tensor<double> total;
    for (int i = 0; i < 2; ++i) {
      tap::TapLossTerms<double> terms = tap::sample_loss_terms<double>(
          model, clouds[static_cast<std::size_t>(i)], poses[static_cast<std::size_t>(i)],
          gts[static_cast<std::size_t>(i)], cfg.loss, opts, nullptr);
      total = i == 0 ? tap::reshape(terms.total, tap::Shape{1})
                     : tap::add(total, tap::reshape(terms.total, tap::Shape{1}));
    }
    return tap::scale(total, 0.5);
  };

  // step 1e-7: the pipeline is piecewise linear, and a wider step straddles
  // rectifier kinks (the smooth-region FD agrees with analytic to ~1e-9)
  tap::GradCheckOptions opts_gc;
  opts_gc.eps = 1e-7;
  const tap::GradCheckReport report = tap::grad_check<double>(f, model.params, opts_gc);
  std::cout << report.str() << "\n";
  const bool ok = report.max_rel_err < 1e-5;
  std::cout << (ok ? "PASS" : "FAIL") << " (threshold 1e-5, step 1e-7)\n";
  return ok ? 0 : 1;
}

int run_selftest() {
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "PASS " : "FAIL ") << what << "\n";
    if (!ok) ++failures;
  };

  // Optical-line round trip on a handful of random poses.
  {
    tap::Rng rng(7);
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
      const tap::Pose pose(tap::Mat3::rot_x(rng.uniform(-1.5, 1.5))
                               .mul(tap::Mat3::rot_y(rng.uniform(-1.5, 1.5)))
                               .mul(tap::Mat3::rot_z(rng.uniform(-3.0, 3.0))));
      tap::PointCloud cloud = tap::gen_shape(tap::ShapeKind::cube, 64, trial);
      const auto rotated = tap::rotate_points(cloud.points, pose);
      const auto pp = tap::fit_projection(rotated, 8, 8, 0.1);
      const int u = static_cast<int>(rng.below(8)), v = static_cast<int>(rng.below(8));
      const tap::OpticalLine line = tap::optical_line(pose, pp, u, v);
      const double t = rng.uniform(-2.0, 2.0);
      const tap::Vec3 p = {line.origin[0] + t * line.direction[0],
                           line.origin[1] + t * line.direction[1],
                           line.origin[2] + t * line.direction[2]};
      const auto rp = tap::rotate_points({p}, pose);
      const auto gp = tap::project_to_grid(rp, pp);
      ok = std::abs(gp[0].u - u) < 1e-9 && std::abs(gp[0].v - v) < 1e-9;
    }
    check(ok, "optical line round-trip");
  }

  // Softmax rows sum to one.
  {
    tap::Rng rng(11);
    std::vector<double> vals(64);
    for (double& v : vals) v = rng.uniform(-20.0, 20.0);
    auto sm = tap::softmax_rows(tap::Tensor<double>::from_data(tap::Shape{8, 8}, vals));
    bool ok = true;
    for (int r = 0; r < 8; ++r) {
      double s = 0.0;
      for (int c = 0; c < 8; ++c) s += sm.value()[static_cast<std::size_t>(r * 8 + c)];
      ok = ok && std::abs(s - 1.0) < 1e-12;
    }
    check(ok, "softmax row sums");
  }

  // AdamW decay-only step.
  {
    tap::ParamSet<double> ps;
    ps.add("w", tap::Tensor<double>::filled(tap::Shape{1}, 2.0));
    ps.at("w").zero_grad();
    tap::AdamState<double> st;
    st.init(ps);
    tap::adamw_step(ps, st, 0.1, 0.05);
    check(std::abs(ps.at("w").value()[0] - 2.0 * (1.0 - 0.005)) < 1e-12, "adamw decoupled decay");
  }

  // Renderer determinism.
  {
    tap::PointCloud cloud = tap::gen_shape(tap::ShapeKind::torus, 256, 3);
    const tap::Pose pose = tap::sample_poses(12, 30.0)[4];
    const tap::ViewImage a = tap::render(cloud, pose, 32, 32, 1);
    const tap::ViewImage b = tap::render(cloud, pose, 32, 32, 1);
    check(a.pixels == b.pixels && a.fg_mask == b.fg_mask, "renderer determinism");
  }

  std::cout << (failures == 0 ? "selftest OK\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D-to-2D generative pre-training for point cloud encoders"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic multi-view dataset");
  int shapes = 1, views = 12, points = 1024, image_size = 32, splat = -1;
  double elevation = 30.0;
  std::uint64_t seed = 0;
  std::string out_dir;
  gen->add_option("--shapes", shapes, "clouds per category");
  gen->add_option("--views", views, "viewpoints per cloud");
  gen->add_option("--points", points, "points per cloud");
  gen->add_option("--image-size", image_size, "rendered image resolution");
  gen->add_option("--elevation", elevation, "camera elevation in degrees");
  gen->add_option("--splat-radius", splat, "splat radius in pixels (-1 = auto)");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", out_dir, "output directory")->required();

  // render
  auto* rend = app.add_subcommand("render", "render one view of a stored cloud");
  std::string cloud_path, render_out;
  int pose_index = 0, render_views = 12, render_size = 224, render_splat = -1;
  double render_elev = 30.0;
  rend->add_option("--cloud", cloud_path, "path to a .tapc cloud")->required();
  rend->add_option("--pose-index", pose_index, "viewpoint index");
  rend->add_option("--views", render_views, "total viewpoints the index refers to");
  rend->add_option("--elevation", render_elev, "camera elevation in degrees");
  rend->add_option("--size", render_size, "output resolution");
  rend->add_option("--splat-radius", render_splat, "splat radius (-1 = auto)");
  rend->add_option("--out", render_out, "output .ppm path")->required();

  // shared train-ish options
  std::string data_dir, eval_dir, config_path, out_path, init_ckpt, resume_ckpt;
  std::vector<std::string> overrides;
  int ckpt_every = 1;

  auto* pre = app.add_subcommand("pretrain", "run generative pre-training");
  pre->add_option("--data", data_dir, "dataset directory (with manifest.tsv)")->required();
  pre->add_option("--config", config_path, "key=value config file");
  pre->add_option("--out", out_path, "output directory")->required();
  pre->add_option("--resume", resume_ckpt, "checkpoint to resume from");
  pre->add_option("--ckpt-every", ckpt_every, "epoch interval between checkpoints (0 = final only)");
  pre->add_option("--set", overrides, "config override key=value")->take_all();

  auto* fin = app.add_subcommand("finetune", "fine-tune the encoder for classification");
  fin->add_option("--data", data_dir, "labeled dataset directory")->required();
  fin->add_option("--eval-data", eval_dir, "separate evaluation dataset directory");
  fin->add_option("--init", init_ckpt, "pre-trained checkpoint (omit for scratch)");
  fin->add_option("--config", config_path, "key=value config file");
  fin->add_option("--out", out_path, "report output path");
  fin->add_option("--set", overrides, "config override key=value")->take_all();

  auto* prb = app.add_subcommand("probe", "linear probe on frozen encoder features");
  prb->add_option("--data", data_dir, "labeled dataset directory")->required();
  prb->add_option("--eval-data", eval_dir, "separate evaluation dataset directory");
  prb->add_option("--init", init_ckpt, "encoder checkpoint (omit for random encoder)");
  prb->add_option("--config", config_path, "key=value config file");
  prb->add_option("--set", overrides, "config override key=value")->take_all();

  auto* exp = app.add_subcommand("export-emb", "export pooled encoder embeddings");
  exp->add_option("--data", data_dir, "dataset directory")->required();
  exp->add_option("--init", init_ckpt, "encoder checkpoint (omit for random encoder)");
  exp->add_option("--out", out_path, "output .tsv path")->required();
  exp->add_option("--config", config_path, "key=value config file");
  exp->add_option("--set", overrides, "config override key=value")->take_all();

  auto* gck = app.add_subcommand("gradcheck", "finite-difference gate over the full pipeline");
  gck->add_option("--config", config_path, "key=value config file");
  gck->add_option("--set", overrides, "config override key=value")->take_all();

  app.add_subcommand("selftest", "quick built-in sanity checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      tap::DatasetConfig cfg;
      cfg.shapes_per_kind = shapes;
      cfg.views = views;
      cfg.n_points = points;
      cfg.image_size = image_size;
      cfg.elevation_deg = elevation;
      cfg.splat_radius = splat;
      cfg.seed = seed;
      const tap::DatasetManifest m = tap::build_dataset(cfg, out_dir);
      std::cout << "wrote " << m.entries.size() << " clouds x " << m.views << " views to "
                << out_dir << "\n";
    } else if (rend->parsed()) {
      const tap::PointCloud cloud = tap::load_cloud(cloud_path);
      if (pose_index < 0 || pose_index >= render_views)
        throw tap::ContractError("pose index outside [0, views)");
      const auto poses = tap::sample_poses(render_views, render_elev);
      const int r = render_splat >= 0 ? render_splat
                                      : tap::default_splat_radius(render_size, render_size);
      tap::save_image(tap::render(cloud, poses[static_cast<std::size_t>(pose_index)], render_size,
                                  render_size, r),
                      render_out);
      std::cout << "wrote " << render_out << "\n";
    } else if (pre->parsed()) {
      const tap::RunConfig cfg = assemble_config(config_path, overrides);
      const tap::DatasetManifest m = tap::load_manifest(fs::path(data_dir) / "manifest.tsv");
      const tap::PretrainResult r = tap::pretrain(m, cfg, out_path, resume_ckpt, ckpt_every);
      std::cout << "steps=" << r.steps << " first10_avg=" << r.first10_avg
                << " last10_avg=" << r.last10_avg
                << "\ncheckpoint: " << r.final_checkpoint.string()
                << "\nmetrics: " << r.metrics_csv.string() << "\n";
    } else if (fin->parsed()) {
      const tap::RunConfig cfg =
          assemble_config(config_path, overrides, {{"train.warmup_epochs", "10"}});
      const tap::DatasetManifest m = tap::load_manifest(fs::path(data_dir) / "manifest.tsv");
      std::optional<tap::DatasetManifest> eval_m;
      if (!eval_dir.empty()) eval_m = tap::load_manifest(fs::path(eval_dir) / "manifest.tsv");
      const tap::AccuracyReport report =
          tap::finetune(m, eval_m ? &*eval_m : nullptr, cfg, init_ckpt, out_path);
      std::cout << report.str();
    } else if (prb->parsed()) {
      const tap::RunConfig cfg = assemble_config(config_path, overrides);
      const tap::DatasetManifest m = tap::load_manifest(fs::path(data_dir) / "manifest.tsv");
      std::optional<tap::DatasetManifest> eval_m;
      if (!eval_dir.empty()) eval_m = tap::load_manifest(fs::path(eval_dir) / "manifest.tsv");
      const tap::AccuracyReport report =
          tap::linear_probe(m, eval_m ? &*eval_m : nullptr, cfg, init_ckpt);
      std::cout << report.str();
    } else if (exp->parsed()) {
      const tap::RunConfig cfg = assemble_config(config_path, overrides);
      const tap::DatasetManifest m = tap::load_manifest(fs::path(data_dir) / "manifest.tsv");
      tap::export_embeddings(m, cfg, init_ckpt, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (gck->parsed()) {
      return run_gradcheck(config_path, overrides);
    } else {
      return run_selftest();
    }
  } catch (const tap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
