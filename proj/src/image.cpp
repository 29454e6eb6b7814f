#include "tap/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace tap {

ViewImage ViewImage::white(int h, int w) {
  ViewImage img;
  img.height = h;
  img.width = w;
  img.pixels.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * 3, 1.0);
  img.fg_mask.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0);
  return img;
}

void ViewImage::recompute_mask() {
  fg_mask.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c)
        if (at(y, x, c) < kBackgroundThreshold) {
          fg_mask[static_cast<std::size_t>(y * width + x)] = 1;
          break;
        }
}

std::size_t ViewImage::foreground_count() const {
  std::size_t n = 0;
  for (std::uint8_t m : fg_mask) n += m;
  return n;
}

void save_image(const ViewImage& img, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
        row[static_cast<std::size_t>(x * 3 + c)] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw IoError("write failed for " + path.string());
}

ViewImage load_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());

  // Header: "P6" <ws> width <ws> height <ws> maxval <single ws> payload.
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> FormatError {
    return FormatError(msg + " in " + path.string(), pos);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw fail("bad PPM magic");
  pos = 2;
  auto skip_ws = [&]() {
    while (pos < bytes.size() &&
           (bytes[pos] == ' ' || bytes[pos] == '\n' || bytes[pos] == '\t' || bytes[pos] == '\r'))
      ++pos;
  };
  auto read_int = [&]() -> long {
    skip_ws();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
      throw fail("expected integer in PPM header");
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
    }
    return v;
  };
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (w < 1 || h < 1) throw fail("non-positive PPM dimensions");
  if (maxval != 255) throw fail("unsupported PPM maxval " + std::to_string(maxval));
  if (pos >= bytes.size()) throw fail("missing PPM payload");
  ++pos;  // single whitespace byte after maxval

  const std::size_t expected = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() - pos != expected)
    throw FormatError("PPM payload size " + std::to_string(bytes.size() - pos) +
                          " does not match " + std::to_string(w) + "x" + std::to_string(h) +
                          " header in " + path.string(),
                      pos);

  ViewImage img;
  img.height = static_cast<int>(h);
  img.width = static_cast<int>(w);
  img.pixels.resize(expected);
  for (std::size_t i = 0; i < expected; ++i)
    img.pixels[i] = static_cast<double>(bytes[pos + i]) / 255.0;
  img.recompute_mask();
  return img;
}

}  // namespace tap
