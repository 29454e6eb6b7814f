#include "tap/dataset.hpp"

#include <fstream>
#include <sstream>

#include "tap/renderer.hpp"
#include "tap/rng.hpp"

namespace tap {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string header_field(const std::vector<std::string>& fields, const std::string& key) {
  const std::string prefix = key + "=";
  for (const std::string& f : fields)
    if (f.rfind(prefix, 0) == 0) return f.substr(prefix.size());
  throw FormatError("manifest header missing field " + key, 0);
}

}  // namespace

bool is_test_id(const std::string& id) { return fnv1a64(id) % 10 == 0; }

DatasetManifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.shapes_per_kind < 1) throw ConfigError("build_dataset: shapes_per_kind must be >= 1");
  if (cfg.views < 1) throw ConfigError("build_dataset: views must be >= 1");

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "clouds", ec);
  std::filesystem::create_directories(out_dir / "images", ec);
  if (!std::filesystem::is_directory(out_dir / "clouds") ||
      !std::filesystem::is_directory(out_dir / "images"))
    throw IoError("build_dataset: cannot create output directories under " + out_dir.string());

  const int splat =
      cfg.splat_radius >= 0 ? cfg.splat_radius : default_splat_radius(cfg.image_size, cfg.image_size);
  const std::vector<Pose> poses = sample_poses(cfg.views, cfg.elevation_deg);

  DatasetManifest m;
  m.seed = cfg.seed;
  m.views = cfg.views;
  m.image_size = cfg.image_size;
  m.elevation_deg = cfg.elevation_deg;
  m.root = out_dir;

  for (int k = 0; k < kNumShapeKinds; ++k) {
    const auto kind = static_cast<ShapeKind>(k);
    for (int i = 0; i < cfg.shapes_per_kind; ++i) {
      char idx[16];
      std::snprintf(idx, sizeof(idx), "%03d", i);
      const std::string id = std::string(shape_kind_name(kind)) + "_" + idx;
      const std::uint64_t cloud_seed = fnv1a64(id) ^ (cfg.seed * 0x9e3779b97f4a7c15ULL);

      PointCloud cloud = gen_shape(kind, cfg.n_points, cloud_seed);
      cloud.id = id;

      ManifestEntry entry;
      entry.id = id;
      entry.category = shape_kind_name(kind);
      entry.label = k;
      entry.cloud_path = "clouds/" + id + ".tapc";
      save_cloud(cloud, out_dir / entry.cloud_path);

      for (int v = 0; v < cfg.views; ++v) {
        const ViewImage img =
            render(cloud, poses[static_cast<std::size_t>(v)], cfg.image_size, cfg.image_size, splat);
        const std::string rel = "images/" + id + "_v" + std::to_string(v) + ".ppm";
        save_image(img, out_dir / rel);
        entry.image_paths.push_back(rel);
      }
      m.entries.push_back(std::move(entry));
    }
  }

  save_manifest(m, out_dir / "manifest.tsv");
  return m;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "#tap-manifest\tv1\tseed=" << m.seed << "\tviews=" << m.views
     << "\timage_size=" << m.image_size << "\televation=" << m.elevation_deg
     << "\tgenver=" << m.generator_version << "\n";
  for (const ManifestEntry& e : m.entries) {
    os << e.id << "\t" << e.category << "\t" << e.cloud_path;
    for (std::size_t v = 0; v < e.image_paths.size(); ++v) os << "\t" << v << ":" << e.image_paths[v];
    os << "\n";
  }
  if (!os) throw IoError("write failed for " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");

  DatasetManifest m;
  m.root = path.parent_path();

  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty manifest " + path.string(), 0);
  const std::vector<std::string> head = split_tabs(line);
  if (head.empty() || head[0] != "#tap-manifest" || head.size() < 2 || head[1] != "v1")
    throw FormatError("bad manifest header in " + path.string(), 0);
  m.seed = std::stoull(header_field(head, "seed"));
  m.views = std::stoi(header_field(head, "views"));
  m.image_size = std::stoi(header_field(head, "image_size"));
  m.elevation_deg = std::stod(header_field(head, "elevation"));
  m.generator_version = std::stoi(header_field(head, "genver"));

  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_tabs(line);
    if (f.size() < 3)
      throw FormatError("manifest line " + std::to_string(line_no) + " has too few fields", 0);
    ManifestEntry e;
    e.id = f[0];
    e.category = f[1];
    e.label = static_cast<int>(shape_kind_from_name(e.category));
    e.cloud_path = f[2];
    for (std::size_t i = 3; i < f.size(); ++i) {
      const std::size_t colon = f[i].find(':');
      if (colon == std::string::npos)
        throw FormatError("manifest line " + std::to_string(line_no) + ": bad pose field", 0);
      const int pose_idx = std::stoi(f[i].substr(0, colon));
      if (pose_idx != static_cast<int>(i - 3))
        throw FormatError("manifest line " + std::to_string(line_no) + ": pose indices not dense", 0);
      e.image_paths.push_back(f[i].substr(colon + 1));
    }
    if (static_cast<int>(e.image_paths.size()) != m.views)
      throw FormatError("manifest line " + std::to_string(line_no) + ": expected " +
                            std::to_string(m.views) + " views",
                        0);
    if (!std::filesystem::exists(m.root / e.cloud_path))
      throw DataError("manifest references missing cloud " + e.cloud_path);
    for (const std::string& ip : e.image_paths)
      if (!std::filesystem::exists(m.root / ip))
        throw DataError("manifest references missing image " + ip);
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace tap
