#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "tap/optimizer.hpp"
#include "tap/tensor.hpp"

namespace tap {

// Training-state snapshot. Parameter and moment blobs are stored as
// little-endian float32 regardless of the in-memory precision, so 64-bit
// runs lose the extra bits on save.
struct CheckpointMeta {
  std::uint64_t config_digest = 0;
  std::int64_t step = 0;
  std::array<std::uint64_t, 4> rng_state{};
};

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamSet<T>& params,
                     const AdamState<T>* state, const CheckpointMeta& meta);

// Loads into a pre-registered ParamSet; names and shapes must match exactly.
// `state` may be null to skip optimizer restoration.
template <typename T>
CheckpointMeta load_checkpoint(const std::filesystem::path& path, ParamSet<T>& params,
                               AdamState<T>* state);

// Copies stored parameters whose names start with `prefix` into matching
// entries of `params`; other stored names are ignored. Returns the number
// of tensors restored. Used to transfer the encoder into a new head.
template <typename T>
std::size_t load_params_matching(const std::filesystem::path& path, ParamSet<T>& params,
                                 const std::string& prefix);

}  // namespace tap
