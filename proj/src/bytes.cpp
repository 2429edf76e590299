#include "tsnn/bytes.hpp"

#include <array>
#include <bit>

namespace tsnn {

namespace {

std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> table{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

const std::array<uint32_t, 256> kCrcTable = make_crc_table();

}  // namespace

uint32_t crc32(std::span<const uint8_t> data, uint32_t crc) {
  uint32_t c = crc ^ 0xFFFFFFFFu;
  for (uint8_t b : data) c = kCrcTable[(c ^ b) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void ByteWriter::u32(uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  raw(b, 4);
}

void ByteWriter::u64(uint64_t v) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
  raw(b, 8);
}

void ByteWriter::f64(double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  u64(bits);
}

void ByteReader::raw(uint8_t* p, size_t n) {
  is_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is_.gcount()) != n)
    throw std::runtime_error("truncated file: expected " + std::to_string(n) + " more bytes");
}

uint8_t ByteReader::u8() {
  uint8_t v;
  raw(&v, 1);
  return v;
}

uint32_t ByteReader::u32() {
  uint8_t b[4];
  raw(b, 4);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

uint64_t ByteReader::u64() {
  uint64_t v = 0;
  uint8_t b[8];
  raw(b, 8);
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double ByteReader::f64() {
  const uint64_t bits = u64();
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void ByteReader::bytes(std::span<uint8_t> out) { raw(out.data(), out.size()); }

void ByteReader::expect_magic(const char tag[4], const std::string& what) {
  uint8_t b[4];
  raw(b, 4);
  if (std::memcmp(b, tag, 4) != 0) throw std::runtime_error(what + ": bad magic");
}

}  // namespace tsnn
