#include <zlib.h>

#include "kenburns/service.hpp"

namespace kb::service {

namespace {

// Fixed timestamp (1980-01-01 00:00) keeps archives reproducible.
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;

void put16(io::Bytes& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put32(io::Bytes& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint16_t get16(const io::Bytes& b, std::size_t at) {
  if (at + 2 > b.size()) throw ParseError("zip: truncated", at);
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
std::uint32_t get32(const io::Bytes& b, std::size_t at) {
  if (at + 4 > b.size()) throw ParseError("zip: truncated", at);
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

}  // namespace

void ZipWriter::add(const std::string& name, const io::Bytes& data) {
  if (out_.size() + data.size() + name.size() + 64 > 0xFFFFFFF0u) throw Error("zip: archive exceeds 4 GiB");
  Entry e;
  e.name = name;
  e.size = static_cast<std::uint32_t>(data.size());
  e.crc = static_cast<std::uint32_t>(crc32(0L, data.data(), static_cast<uInt>(data.size())));
  e.offset = static_cast<std::uint32_t>(out_.size());

  put32(out_, 0x04034b50);
  put16(out_, 20);  // version needed
  put16(out_, 0);   // flags
  put16(out_, 0);   // stored
  put16(out_, kDosTime);
  put16(out_, kDosDate);
  put32(out_, e.crc);
  put32(out_, e.size);
  put32(out_, e.size);
  put16(out_, static_cast<std::uint16_t>(name.size()));
  put16(out_, 0);
  out_.insert(out_.end(), name.begin(), name.end());
  out_.insert(out_.end(), data.begin(), data.end());
  entries_.push_back(std::move(e));
}

io::Bytes ZipWriter::finish() {
  const auto cd_start = static_cast<std::uint32_t>(out_.size());
  for (const Entry& e : entries_) {
    put32(out_, 0x02014b50);
    put16(out_, 20);  // version made by
    put16(out_, 20);
    put16(out_, 0);
    put16(out_, 0);
    put16(out_, kDosTime);
    put16(out_, kDosDate);
    put32(out_, e.crc);
    put32(out_, e.size);
    put32(out_, e.size);
    put16(out_, static_cast<std::uint16_t>(e.name.size()));
    put16(out_, 0);  // extra
    put16(out_, 0);  // comment
    put16(out_, 0);  // disk
    put16(out_, 0);  // internal attrs
    put32(out_, 0);  // external attrs
    put32(out_, e.offset);
    out_.insert(out_.end(), e.name.begin(), e.name.end());
  }
  const auto cd_size = static_cast<std::uint32_t>(out_.size()) - cd_start;
  put32(out_, 0x06054b50);
  put16(out_, 0);
  put16(out_, 0);
  put16(out_, static_cast<std::uint16_t>(entries_.size()));
  put16(out_, static_cast<std::uint16_t>(entries_.size()));
  put32(out_, cd_size);
  put32(out_, cd_start);
  put16(out_, 0);
  entries_.clear();
  return std::move(out_);
}

std::vector<std::pair<std::string, io::Bytes>> read_zip(const io::Bytes& b) {
  if (b.size() < 22) throw ParseError("zip: too short", 0);
  const std::size_t eocd = b.size() - 22;
  if (get32(b, eocd) != 0x06054b50) throw ParseError("zip: missing end of central directory", eocd);
  const std::uint16_t count = get16(b, eocd + 10);
  std::size_t at = get32(b, eocd + 16);

  std::vector<std::pair<std::string, io::Bytes>> out;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (get32(b, at) != 0x02014b50) throw ParseError("zip: bad central directory entry", at);
    if (get16(b, at + 10) != 0) throw ParseError("zip: only stored entries are supported", at + 10);
    const std::uint32_t crc = get32(b, at + 16);
    const std::uint32_t size = get32(b, at + 20);
    const std::uint16_t name_len = get16(b, at + 28);
    const std::uint16_t extra = get16(b, at + 30), comment = get16(b, at + 32);
    const std::uint32_t local = get32(b, at + 42);
    if (at + 46 + name_len > b.size()) throw ParseError("zip: truncated name", at + 46);
    std::string name(b.begin() + static_cast<std::ptrdiff_t>(at + 46),
                     b.begin() + static_cast<std::ptrdiff_t>(at + 46 + name_len));
    const std::size_t data = local + 30 + get16(b, local + 26) + get16(b, local + 28);
    if (data + size > b.size()) throw ParseError("zip: truncated entry " + name, data);
    io::Bytes payload(b.begin() + static_cast<std::ptrdiff_t>(data),
                      b.begin() + static_cast<std::ptrdiff_t>(data + size));
    if (static_cast<std::uint32_t>(crc32(0L, payload.data(), static_cast<uInt>(payload.size()))) != crc)
      throw ParseError("zip: CRC mismatch in " + name, data);
    out.emplace_back(std::move(name), std::move(payload));
    at += 46 + name_len + extra + comment;
  }
  return out;
}

}  // namespace kb::service
