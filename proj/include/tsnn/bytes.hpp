#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsnn {

// CRC-32 (IEEE 802.3, reflected, init/final xor 0xFFFFFFFF), as used by zlib.
// Pass the previous return value as `crc` to checksum a stream in chunks.
uint32_t crc32(std::span<const uint8_t> data, uint32_t crc = 0);

// Little-endian primitive IO, independent of host byte order.
class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& os) : os_(os) {}

  void u8(uint8_t v) { raw(&v, 1); }
  void u32(uint32_t v);
  void u64(uint64_t v);
  void f64(double v);
  void bytes(std::span<const uint8_t> data) { raw(data.data(), data.size()); }
  void magic(const char tag[4]) { raw(reinterpret_cast<const uint8_t*>(tag), 4); }

 private:
  void raw(const uint8_t* p, size_t n) { os_.write(reinterpret_cast<const char*>(p), n); }
  std::ostream& os_;
};

class ByteReader {
 public:
  explicit ByteReader(std::istream& is) : is_(is) {}

  uint8_t u8();
  uint32_t u32();
  uint64_t u64();
  double f64();
  void bytes(std::span<uint8_t> out);
  void expect_magic(const char tag[4], const std::string& what);

 private:
  void raw(uint8_t* p, size_t n);
  std::istream& is_;
};

}  // namespace tsnn
