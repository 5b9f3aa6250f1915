#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deeptarget/model.hpp"

namespace deeptarget {

inline constexpr char kCheckpointMagic[9] = "DPTGT001";
inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Layout: magic, u16 version, u32-length JSON header (architecture plus
/// training metadata), u32 tensor count, then per tensor a u32-length name,
/// u32 rank, u64 dims and little-endian f64 data; a trailing CRC-32 covers
/// every preceding byte. All integers are little-endian.
/// zlib CRC-32 of a byte range.
std::uint32_t crc32_checksum(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_checkpoint(const DeepTargetModel& model);

/// Throws FormatError on any magic, version, checksum, truncation or shape
/// table problem. When `expected` is given, a different embedded
/// architecture is refused as well.
DeepTargetModel decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                                  const std::optional<ArchitectureSpec>& expected = std::nullopt);

/// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const DeepTargetModel& model, const std::string& path);
DeepTargetModel load_checkpoint(const std::string& path,
                                const std::optional<ArchitectureSpec>& expected = std::nullopt);

}  // namespace deeptarget
