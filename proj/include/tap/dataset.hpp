#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tap/pointcloud.hpp"
#include "tap/shapes.hpp"

namespace tap {

struct ManifestEntry {
  std::string id;
  std::string category;
  int label = -1;
  std::string cloud_path;                // relative to the manifest directory
  std::vector<std::string> image_paths;  // index = pose index, dense 0..V-1
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
  int generator_version = 1;
  int views = 0;
  int image_size = 0;
  double elevation_deg = 0.0;
  std::filesystem::path root;

  std::filesystem::path cloud_file(const ManifestEntry& e) const { return root / e.cloud_path; }
  std::filesystem::path image_file(const ManifestEntry& e, int pose_index) const {
    return root / e.image_paths[static_cast<std::size_t>(pose_index)];
  }
};

struct DatasetConfig {
  int shapes_per_kind = 1;
  int n_points = 1024;
  int views = 12;
  int image_size = 32;
  double elevation_deg = 30.0;
  int splat_radius = -1;  // -1 = default_splat_radius(image_size)
  std::uint64_t seed = 0;
};

// Assignment is a pure function of the cloud id, so regenerating a dataset
// can never move a cloud across the split.
bool is_test_id(const std::string& id);

// Generates clouds, renders `views` ground-truth images per cloud and
// writes manifest.tsv plus all payload files under out_dir.
DatasetManifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
// Loads and validates; every referenced file must exist.
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace tap
