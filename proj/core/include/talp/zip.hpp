#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace talp {

struct ZipEntry {
  std::string name;  // "/" separated; a trailing "/" marks a directory
  std::string data;
};

/// Decodes a classic (non-ZIP64, unencrypted) archive with stored or
/// deflated members and verifies every CRC. Throws ArchiveError.
std::vector<ZipEntry> read_zip(std::string_view bytes);

/// Encodes `entries` with deflate (or stored when `compress` is false).
/// Output is deterministic: timestamps are pinned to 1980-01-01.
std::string write_zip(std::span<const ZipEntry> entries, bool compress = true);

}  // namespace talp
