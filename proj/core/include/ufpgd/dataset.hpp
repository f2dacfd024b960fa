#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ufpgd/types.hpp"

namespace ufpgd {

// In-memory channel dataset with optional per-channel precoder labels.
struct Dataset {
  int num_users = 0;
  int num_antennas = 0;
  std::uint64_t seed = 0;
  std::vector<ChannelMatrix> channels;
  std::vector<PrecoderMatrix> labels;  // empty or same length as channels

  bool has_labels() const { return !labels.empty(); }
  std::size_t size() const { return channels.size(); }
};

// Binary file layout (all integers and floats little-endian):
//   bytes 0..3    magic "UFPD"
//   bytes 4..7    u32 format version (currently 1)
//   bytes 8..11   u32 K
//   bytes 12..15  u32 M
//   bytes 16..23  u64 sample count N
//   bytes 24..31  u64 RNG seed
//   bytes 32..35  u32 flags, bit 0 = labels present
//   payload       N channel matrices, row-major, each entry as
//                 interleaved (re, im) f64; then N label matrices in
//                 the same encoding when the flag is set.
inline constexpr std::uint32_t kDatasetMagic = 0x44504655;  // "UFPD"
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 36;

// Atomic write: the file appears under `path` only complete.
void write_dataset(const Dataset& data, const std::string& path);

// Throws DataFormatError on bad magic/version, inconsistent sizes or
// truncation.
Dataset read_dataset(const std::string& path);

}  // namespace ufpgd
