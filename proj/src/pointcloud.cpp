#include "tap/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace tap {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'P', 'C'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

PointCloud normalize_cloud(const PointCloud& p) {
  if (p.points.empty()) throw DataError("normalize_cloud: empty point cloud");
  Vec3 centroid = {0.0, 0.0, 0.0};
  for (const Vec3& q : p.points)
    for (int c = 0; c < 3; ++c) centroid[static_cast<std::size_t>(c)] += q[static_cast<std::size_t>(c)];
  const double n = static_cast<double>(p.points.size());
  for (int c = 0; c < 3; ++c) centroid[static_cast<std::size_t>(c)] /= n;

  PointCloud out = p;
  double max_r = 0.0;
  for (Vec3& q : out.points) {
    for (int c = 0; c < 3; ++c) q[static_cast<std::size_t>(c)] -= centroid[static_cast<std::size_t>(c)];
    max_r = std::max(max_r, std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]));
  }
  if (max_r > 0.0) {
    for (Vec3& q : out.points)
      for (int c = 0; c < 3; ++c) q[static_cast<std::size_t>(c)] /= max_r;
  }
  return out;
}

PointCloud snap_to_float(const PointCloud& p) {
  PointCloud out = p;
  for (Vec3& q : out.points)
    for (int c = 0; c < 3; ++c)
      q[static_cast<std::size_t>(c)] = static_cast<double>(static_cast<float>(q[static_cast<std::size_t>(c)]));
  return out;
}

void save_cloud(const PointCloud& p, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put_u16(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(p.points.size()));
  for (const Vec3& q : p.points)
    for (int c = 0; c < 3; ++c) put_f32(os, static_cast<float>(q[static_cast<std::size_t>(c)]));
  if (!os) throw IoError("write failed for " + path.string());
}

PointCloud load_cloud(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("bad point cloud magic in " + path.string(), 0);
  if (bytes.size() < 6) throw FormatError("truncated version field in " + path.string(), 4);
  const std::uint16_t version = get_u16(bytes.data() + 4);
  if (version != kVersion)
    throw FormatError("unsupported point cloud version " + std::to_string(version), 4);
  if (bytes.size() < 10) throw FormatError("truncated point count in " + path.string(), 6);
  const std::uint32_t n = get_u32(bytes.data() + 6);
  const std::size_t expected = 10 + static_cast<std::size_t>(n) * 12;
  if (bytes.size() != expected)
    throw FormatError("point count " + std::to_string(n) + " disagrees with payload size " +
                          std::to_string(bytes.size()) + " in " + path.string(),
                      std::min(bytes.size(), expected));

  PointCloud p;
  p.id = path.stem().string();
  p.points.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const unsigned char* base = bytes.data() + 10 + static_cast<std::size_t>(i) * 12;
    for (int c = 0; c < 3; ++c)
      p.points[i][static_cast<std::size_t>(c)] = static_cast<double>(get_f32(base + 4 * c));
  }
  return p;
}

}  // namespace tap
