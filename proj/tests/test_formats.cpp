#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "tsnn/bytes.hpp"
#include "tsnn/checkpoint.hpp"
#include "tsnn/dataset.hpp"
#include "tsnn/network.hpp"
#include "tsnn/optim.hpp"
#include "tsnn/rng.hpp"

using namespace tsnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tsnn_test_" + std::to_string(Rng(::getpid()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(is),
                              std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("crc32 matches the standard check vector") {
  const char* s = "123456789";
  CHECK(crc32({reinterpret_cast<const uint8_t*>(s), 9}) == 0xCBF43926u);
  CHECK(crc32({}) == 0u);
  // streaming in chunks equals one shot
  const uint32_t once = crc32({reinterpret_cast<const uint8_t*>(s), 9});
  uint32_t chunked = crc32({reinterpret_cast<const uint8_t*>(s), 4});
  chunked = crc32({reinterpret_cast<const uint8_t*>(s) + 4, 5}, chunked);
  CHECK(chunked == once);
}

TEST_CASE("little-endian primitives round trip") {
  std::stringstream ss;
  ByteWriter w(ss);
  w.u8(0xAB);
  w.u32(0xDEADBEEFu);
  w.u64(0x0123456789ABCDEFull);
  w.f64(-1234.5678e-9);
  ByteReader r(ss);
  CHECK(r.u8() == 0xAB);
  CHECK(r.u32() == 0xDEADBEEFu);
  CHECK(r.u64() == 0x0123456789ABCDEFull);
  CHECK(r.f64() == -1234.5678e-9);
  // byte layout is little-endian on disk
  std::stringstream ss2;
  ByteWriter w2(ss2);
  w2.u32(0x11223344u);
  const std::string bytes = ss2.str();
  CHECK(static_cast<uint8_t>(bytes[0]) == 0x44);
  CHECK(static_cast<uint8_t>(bytes[3]) == 0x11);
}

TEST_CASE("cache round trip is bit exact for both label modes") {
  TempDir tmp;

  SUBCASE("per-window dataset (synthetic XOR)") {
    MtsXorConfig cfg;
    const auto ds = mtsxor_generate(cfg, 16, 5);
    write_cache(ds, tmp.file("xor.tsnc"));
    const auto back = read_cache(tmp.file("xor.tsnc"));
    CHECK(back.data == ds.data);
    CHECK(back.n_samples == ds.n_samples);
    CHECK(back.channels == ds.channels);
    CHECK(back.grid.steps == ds.grid.steps);
    CHECK(back.per_window);
    REQUIRE(back.windows.size() == ds.windows.size());
    for (size_t i = 0; i < ds.windows.size(); ++i)
      for (size_t k = 0; k < ds.windows[i].size(); ++k) {
        CHECK(back.windows[i][k].start == ds.windows[i][k].start);
        CHECK(back.windows[i][k].end == ds.windows[i][k].end);
        CHECK(back.windows[i][k].label == ds.windows[i][k].label);
      }
    // two writes of the same dataset produce identical bytes
    write_cache(ds, tmp.file("xor2.tsnc"));
    CHECK(slurp(tmp.file("xor.tsnc")) == slurp(tmp.file("xor2.tsnc")));
  }

  SUBCASE("per-sample dataset") {
    SpikeDataset ds;
    ds.grid = {0.01, 8};
    ds.channels = 3;
    ds.n_samples = 4;
    ds.n_classes = 3;
    ds.per_window = false;
    Rng rng(7);
    ds.data.resize(4 * 8 * 3);
    for (auto& x : ds.data) x = static_cast<uint8_t>(rng.uniform_int(4));
    ds.labels = {0, 2, 1, 2};
    write_cache(ds, tmp.file("s.tsnc"));
    const auto back = read_cache(tmp.file("s.tsnc"));
    CHECK(back.data == ds.data);
    CHECK(back.labels == ds.labels);
    CHECK_FALSE(back.per_window);
    CHECK(back.n_classes == 3);
  }
}

TEST_CASE("cache header and integrity failures") {
  TempDir tmp;
  MtsXorConfig cfg;
  const auto ds = mtsxor_generate(cfg, 4, 9);
  const std::string path = tmp.file("c.tsnc");
  write_cache(ds, path);
  auto bytes = slurp(path);

  SUBCASE("corrupting one payload byte trips the checksum") {
    auto bad = bytes;
    bad[bad.size() / 2] ^= 0x01;
    std::ofstream os(tmp.file("bad.tsnc"), std::ios::binary);
    os.write(reinterpret_cast<const char*>(bad.data()), bad.size());
    os.close();
    CHECK_THROWS_WITH_AS(read_cache(tmp.file("bad.tsnc")), doctest::Contains("checksum"),
                         std::runtime_error);
  }
  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    std::ofstream os(tmp.file("badmagic.tsnc"), std::ios::binary);
    os.write(reinterpret_cast<const char*>(bad.data()), bad.size());
    os.close();
    CHECK_THROWS_WITH_AS(read_cache(tmp.file("badmagic.tsnc")), doctest::Contains("magic"),
                         std::runtime_error);
  }
  SUBCASE("bad version") {
    auto bad = bytes;
    bad[4] = 9;
    std::ofstream os(tmp.file("badver.tsnc"), std::ios::binary);
    os.write(reinterpret_cast<const char*>(bad.data()), bad.size());
    os.close();
    CHECK_THROWS_WITH_AS(read_cache(tmp.file("badver.tsnc")), doctest::Contains("version"),
                         std::runtime_error);
  }
  SUBCASE("truncation") {
    auto bad = bytes;
    bad.resize(bad.size() - 7);
    std::ofstream os(tmp.file("short.tsnc"), std::ios::binary);
    os.write(reinterpret_cast<const char*>(bad.data()), bad.size());
    os.close();
    CHECK_THROWS_WITH_AS(read_cache(tmp.file("short.tsnc")), doctest::Contains("truncated"),
                         std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_cache(tmp.file("nope.tsnc")), std::runtime_error);
  }
}

TEST_CASE("checkpoint round trip is bit exact, with and without optimizer state") {
  TempDir tmp;
  NetworkSpec spec;
  spec.grid = {0.005, 37};
  spec.input_size = 9;
  spec.hidden = {{7, LayerKind::conv, 3, 2}, {5, LayerKind::dense}};
  spec.output_size = 4;
  spec.tau_out = 0.17;
  Rng rng(3);
  auto params = init_params(spec, {0.11, 0.23}, 0.2, rng);

  Checkpoint ck;
  ck.spec = spec;
  ck.params = params;

  SUBCASE("parameters only") {
    save_checkpoint(ck, tmp.file("a.tsnn"));
    const auto back = load_checkpoint(tmp.file("a.tsnn"));
    CHECK_FALSE(back.has_optim);
    REQUIRE(back.params.size() == params.size());
    for (size_t l = 0; l < params.size(); ++l) {
      CHECK(back.params[l].weights == params[l].weights);  // bitwise (vector ==)
      CHECK(back.params[l].tau == params[l].tau);
      CHECK(back.params[l].kind == params[l].kind);
      CHECK(back.params[l].kernel_size == params[l].kernel_size);
      CHECK(back.params[l].dilation == params[l].dilation);
    }
    CHECK(back.spec.grid.dt == spec.grid.dt);
    CHECK(back.spec.tau_out == spec.tau_out);
  }

  SUBCASE("with optimizer moments") {
    ck.has_optim = true;
    ck.optim.resize_like(params);
    ck.optim.step = 1234;
    Rng noise(8);
    for (auto& v : ck.optim.m_w)
      for (auto& x : v) x = noise.normal();
    for (auto& v : ck.optim.v_w)
      for (auto& x : v) x = std::abs(noise.normal());
    save_checkpoint(ck, tmp.file("b.tsnn"));
    const auto back = load_checkpoint(tmp.file("b.tsnn"));
    REQUIRE(back.has_optim);
    CHECK(back.optim.step == 1234);
    CHECK(back.optim.m_w == ck.optim.m_w);
    CHECK(back.optim.v_w == ck.optim.v_w);
    CHECK(back.optim.m_tau == ck.optim.m_tau);
    CHECK(back.optim.v_tau == ck.optim.v_tau);
    // same checkpoint saved twice is byte-identical
    save_checkpoint(ck, tmp.file("c.tsnn"));
    CHECK(slurp(tmp.file("b.tsnn")) == slurp(tmp.file("c.tsnn")));
  }

  SUBCASE("corrupted magic rejected") {
    save_checkpoint(ck, tmp.file("d.tsnn"));
    auto bytes = slurp(tmp.file("d.tsnn"));
    bytes[1] = 'x';
    std::ofstream os(tmp.file("dbad.tsnn"), std::ios::binary);
    os.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    os.close();
    CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("dbad.tsnn")), doctest::Contains("magic"),
                         std::runtime_error);
  }
}
