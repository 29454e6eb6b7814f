#include "tap/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace tap {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'P', 'K'};
constexpr std::uint16_t kVersion = 1;

class Writer {
public:
  explicit Writer(const std::filesystem::path& path) : os_(path, std::ios::binary) {
    if (!os_) throw IoError("cannot open " + path.string() + " for writing");
  }
  void bytes(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v)); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    le(bits);
  }
  void str(const std::string& s) {
    u16(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void check(const std::filesystem::path& path) {
    if (!os_) throw IoError("write failed for " + path.string());
  }

private:
  template <typename U>
  void le(U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    bytes(b, sizeof(U));
  }
  std::ofstream os_;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path_ + " for reading");
    bytes_.assign((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  }
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("truncated checkpoint " + path_, pos_);
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint16_t u16() { return le<std::uint16_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(le<std::uint64_t>()); }
  float f32() {
    const std::uint32_t bits = le<std::uint32_t>();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    const std::uint16_t n = u16();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }
  const std::string& path() const { return path_; }

private:
  template <typename U>
  U le() {
    unsigned char b[sizeof(U)];
    bytes(b, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }
  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
  std::string path_;
};

template <typename T>
void write_blob(Writer& w, const std::vector<T>& data) {
  for (T v : data) w.f32(static_cast<float>(v));
}

template <typename T>
void read_blob(Reader& r, std::vector<T>& data) {
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<T>(r.f32());
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamSet<T>& params,
                     const AdamState<T>* state, const CheckpointMeta& meta) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  w.u64(meta.config_digest);
  w.i64(meta.step);
  for (std::uint64_t s : meta.rng_state) w.u64(s);
  w.i64(state != nullptr ? state->step : 0);

  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.str(name);
    w.u16(static_cast<std::uint16_t>(t.shape().rank()));
    for (Index d : t.shape().dims) w.u32(static_cast<std::uint32_t>(d));
    write_blob(w, t.value());
  }

  w.u16(state != nullptr ? 1 : 0);
  if (state != nullptr) {
    for (const auto& [name, t] : params) {
      write_blob(w, state->m.at(name));
      write_blob(w, state->v.at(name));
    }
  }
  w.check(path);
}

template <typename T>
CheckpointMeta load_checkpoint(const std::filesystem::path& path, ParamSet<T>& params,
                               AdamState<T>* state) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad checkpoint magic in " + r.path(), 0);
  const std::uint16_t version = r.u16();
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);

  CheckpointMeta meta;
  meta.config_digest = r.u64();
  meta.step = r.i64();
  for (std::uint64_t& s : meta.rng_state) s = r.u64();
  const std::int64_t adam_step = r.i64();

  const std::uint32_t count = r.u32();
  if (count != params.size())
    throw ConfigError("checkpoint stores " + std::to_string(count) + " tensors, model has " +
                      std::to_string(params.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    if (!params.contains(name)) throw ConfigError("checkpoint tensor " + name + " not in model");
    Tensor<T>& t = params.at(name);
    const std::uint16_t rank = r.u16();
    Shape s;
    for (std::uint16_t d = 0; d < rank; ++d) s.dims.push_back(static_cast<Index>(r.u32()));
    if (s != t.shape())
      throw ConfigError("checkpoint tensor " + name + " has shape " + s.str() + ", model expects " +
                        t.shape().str());
    read_blob(r, t.value());
  }

  const std::uint16_t has_state = r.u16();
  if (state != nullptr) {
    if (has_state == 0) throw ConfigError("checkpoint has no optimizer state to restore");
    state->init(params);
    state->step = adam_step;
    for (auto& [name, t] : params) {
      read_blob(r, state->m.at(name));
      read_blob(r, state->v.at(name));
    }
  }
  return meta;
}

template <typename T>
std::size_t load_params_matching(const std::filesystem::path& path, ParamSet<T>& params,
                                 const std::string& prefix) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad checkpoint magic in " + r.path(), 0);
  const std::uint16_t version = r.u16();
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  r.u64();  // digest
  r.i64();  // step
  for (int i = 0; i < 4; ++i) r.u64();
  r.i64();  // adam step

  std::size_t restored = 0;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const std::uint16_t rank = r.u16();
    Shape s;
    for (std::uint16_t d = 0; d < rank; ++d) s.dims.push_back(static_cast<Index>(r.u32()));
    const bool wanted = name.rfind(prefix, 0) == 0 && params.contains(name);
    if (wanted) {
      Tensor<T>& t = params.at(name);
      if (s != t.shape())
        throw ConfigError("checkpoint tensor " + name + " has shape " + s.str() +
                          ", model expects " + t.shape().str());
      read_blob(r, t.value());
      ++restored;
    } else {
      for (Index e = 0; e < s.numel(); ++e) r.f32();
    }
  }
  return restored;
}

#define TAP_INSTANTIATE_CKPT(T)                                                                \
  template void save_checkpoint(const std::filesystem::path&, const ParamSet<T>&,              \
                                const AdamState<T>*, const CheckpointMeta&);                   \
  template CheckpointMeta load_checkpoint(const std::filesystem::path&, ParamSet<T>&,          \
                                          AdamState<T>*);                                      \
  template std::size_t load_params_matching(const std::filesystem::path&, ParamSet<T>&,       \
                                            const std::string&);

TAP_INSTANTIATE_CKPT(float)
TAP_INSTANTIATE_CKPT(double)

#undef TAP_INSTANTIATE_CKPT

}  // namespace tap
