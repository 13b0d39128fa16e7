#include "talp/zip.hpp"

#include <cstdint>
#include <cstring>

#include <fmt/format.h>
#include <zlib.h>

#include "talp/errors.hpp"

namespace talp {
namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralDirSig = 0x06054b50;
constexpr std::size_t kEndOfCentralDirSize = 22;
constexpr std::uint16_t kDosDate1980 = (0 << 9) | (1 << 5) | 1;

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint16_t u16(std::size_t at) const {
    check(at, 2);
    return static_cast<std::uint16_t>(byte(at) | byte(at + 1) << 8);
  }
  std::uint32_t u32(std::size_t at) const {
    check(at, 4);
    return static_cast<std::uint32_t>(byte(at)) | static_cast<std::uint32_t>(byte(at + 1)) << 8 |
           static_cast<std::uint32_t>(byte(at + 2)) << 16 |
           static_cast<std::uint32_t>(byte(at + 3)) << 24;
  }
  std::string_view slice(std::size_t at, std::size_t n) const {
    check(at, n);
    return bytes_.substr(at, n);
  }
  std::size_t size() const { return bytes_.size(); }

 private:
  unsigned byte(std::size_t at) const { return static_cast<unsigned char>(bytes_[at]); }
  void check(std::size_t at, std::size_t n) const {
    if (at > bytes_.size() || n > bytes_.size() - at) {
      throw ArchiveError("truncated zip archive");
    }
  }
  std::string_view bytes_;
};

std::string inflate_raw(std::string_view in, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ArchiveError("zlib initialisation failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) {
    throw ArchiveError("corrupt deflate stream in zip member");
  }
  return out;
}

std::string deflate_raw(std::string_view in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) !=
      Z_OK) {
    throw ArchiveError("zlib initialisation failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(in.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw ArchiveError("deflate failed");
  return out;
}

std::uint32_t crc_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(data.data()),
            static_cast<uInt>(data.size())));
}

void put16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xff);
  out += static_cast<char>(v >> 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

}  // namespace

std::vector<ZipEntry> read_zip(std::string_view bytes) {
  const Reader r(bytes);
  if (r.size() < kEndOfCentralDirSize) throw ArchiveError("not a zip archive (too short)");

  // The end-of-central-directory record sits within the last 64 KiB + 22 bytes.
  std::size_t eocd = std::string_view::npos;
  const std::size_t lowest = r.size() > 0xFFFF + kEndOfCentralDirSize
                                 ? r.size() - 0xFFFF - kEndOfCentralDirSize
                                 : 0;
  for (std::size_t at = r.size() - kEndOfCentralDirSize + 1; at-- > lowest;) {
    if (r.u32(at) == kEndOfCentralDirSig) {
      eocd = at;
      break;
    }
  }
  if (eocd == std::string_view::npos) throw ArchiveError("not a zip archive (no directory)");

  const std::uint16_t count = r.u16(eocd + 10);
  const std::uint32_t cd_offset = r.u32(eocd + 16);
  if (count == 0xFFFF || cd_offset == 0xFFFFFFFF) throw ArchiveError("ZIP64 archives are not supported");

  std::vector<ZipEntry> entries;
  std::size_t at = cd_offset;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (r.u32(at) != kCentralHeaderSig) throw ArchiveError("corrupt central directory");
    const std::uint16_t flags = r.u16(at + 8);
    const std::uint16_t method = r.u16(at + 10);
    const std::uint32_t crc = r.u32(at + 16);
    const std::uint32_t compressed = r.u32(at + 20);
    const std::uint32_t uncompressed = r.u32(at + 24);
    const std::uint16_t name_len = r.u16(at + 28);
    const std::uint16_t extra_len = r.u16(at + 30);
    const std::uint16_t comment_len = r.u16(at + 32);
    const std::uint32_t local = r.u32(at + 42);
    std::string name(r.slice(at + 46, name_len));
    at += 46 + name_len + extra_len + comment_len;

    if (flags & 0x1) throw ArchiveError(fmt::format("'{}' is encrypted", name));
    if (compressed == 0xFFFFFFFF || uncompressed == 0xFFFFFFFF || local == 0xFFFFFFFF) {
      throw ArchiveError("ZIP64 archives are not supported");
    }
    if (r.u32(local) != kLocalHeaderSig) throw ArchiveError(fmt::format("corrupt header of '{}'", name));
    const std::size_t data_at = local + 30 + r.u16(local + 26) + r.u16(local + 28);
    const std::string_view raw = r.slice(data_at, compressed);

    std::string data;
    if (method == 0) {
      if (compressed != uncompressed) throw ArchiveError(fmt::format("size mismatch in '{}'", name));
      data = std::string(raw);
    } else if (method == 8) {
      data = inflate_raw(raw, uncompressed);
    } else {
      throw ArchiveError(fmt::format("'{}' uses unsupported compression method {}", name, method));
    }
    if (crc_of(data) != crc) throw ArchiveError(fmt::format("CRC mismatch in '{}'", name));
    entries.push_back({std::move(name), std::move(data)});
  }
  return entries;
}

std::string write_zip(std::span<const ZipEntry> entries, bool compress) {
  std::string out;
  std::string central;
  for (const ZipEntry& e : entries) {
    const bool is_dir = !e.name.empty() && e.name.back() == '/';
    const bool deflated = compress && !is_dir && !e.data.empty();
    const std::string payload = deflated ? deflate_raw(e.data) : e.data;
    const std::uint32_t crc = crc_of(e.data);
    const auto offset = static_cast<std::uint32_t>(out.size());
    const std::uint16_t method = deflated ? 8 : 0;

    put32(out, kLocalHeaderSig);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, method);
    put16(out, 0);  // time
    put16(out, kDosDate1980);
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(payload.size()));
    put32(out, static_cast<std::uint32_t>(e.data.size()));
    put16(out, static_cast<std::uint16_t>(e.name.size()));
    put16(out, 0);
    out += e.name;
    out += payload;

    put32(central, kCentralHeaderSig);
    put16(central, 20);  // version made by
    put16(central, 20);
    put16(central, 0);
    put16(central, method);
    put16(central, 0);
    put16(central, kDosDate1980);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(payload.size()));
    put32(central, static_cast<std::uint32_t>(e.data.size()));
    put16(central, static_cast<std::uint16_t>(e.name.size()));
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attributes
    put32(central, is_dir ? 0x10 : 0);
    put32(central, offset);
    central += e.name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndOfCentralDirSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

}  // namespace talp
