#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <hdf5.h>
#include <unistd.h>

#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "tsnn/rng.hpp"
#include "tsnn/shd.hpp"

using namespace tsnn;
namespace fs = std::filesystem;

namespace {

struct Sample {
  std::vector<double> times;
  std::vector<int> units;
  int label;
};

// Writes a file with the published layout: ragged vlen datasets
// spikes/times (float64 seconds) and spikes/units (int), plus labels.
void write_event_file(const std::string& path, const std::vector<Sample>& samples) {
  const hid_t file = H5Fcreate(path.c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT);
  REQUIRE(file >= 0);
  const hid_t group = H5Gcreate2(file, "spikes", H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT);
  REQUIRE(group >= 0);

  const hsize_t n = samples.size();
  const hid_t space = H5Screate_simple(1, &n, nullptr);
  const hid_t vlen_f64 = H5Tvlen_create(H5T_NATIVE_DOUBLE);
  const hid_t vlen_i32 = H5Tvlen_create(H5T_NATIVE_INT);

  std::vector<hvl_t> times(n), units(n);
  std::vector<int> labels(n);
  for (size_t i = 0; i < n; ++i) {
    times[i].len = samples[i].times.size();
    times[i].p = const_cast<double*>(samples[i].times.data());
    units[i].len = samples[i].units.size();
    units[i].p = const_cast<int*>(samples[i].units.data());
    labels[i] = samples[i].label;
  }

  const hid_t d_times =
      H5Dcreate2(file, "spikes/times", vlen_f64, space, H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT);
  REQUIRE(H5Dwrite(d_times, vlen_f64, H5S_ALL, H5S_ALL, H5P_DEFAULT, times.data()) >= 0);
  const hid_t d_units =
      H5Dcreate2(file, "spikes/units", vlen_i32, space, H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT);
  REQUIRE(H5Dwrite(d_units, vlen_i32, H5S_ALL, H5S_ALL, H5P_DEFAULT, units.data()) >= 0);
  const hid_t d_labels =
      H5Dcreate2(file, "labels", H5T_NATIVE_INT, space, H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT);
  REQUIRE(H5Dwrite(d_labels, H5T_NATIVE_INT, H5S_ALL, H5S_ALL, H5P_DEFAULT, labels.data()) >= 0);

  H5Dclose(d_times);
  H5Dclose(d_units);
  H5Dclose(d_labels);
  H5Tclose(vlen_f64);
  H5Tclose(vlen_i32);
  H5Sclose(space);
  H5Gclose(group);
  H5Fclose(file);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tsnn_shd_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<Sample> random_samples(int n, int channels, uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> samples(n);
  for (auto& s : samples) {
    const int n_events = 50 + static_cast<int>(rng.uniform_int(200));
    s.times.resize(n_events);
    s.units.resize(n_events);
    for (int e = 0; e < n_events; ++e) {
      s.times[e] = rng.uniform(0.0, 1.2);  // some events beyond the 1 s grid
      s.units[e] = static_cast<int>(rng.uniform_int(channels));
    }
    s.label = static_cast<int>(rng.uniform_int(20));
  }
  return samples;
}

}  // namespace

TEST_CASE("load_shd bins the published layout onto the grid") {
  TempDir tmp;
  const int channels = 700;
  const auto samples = random_samples(12, channels, 21);
  write_event_file(tmp.file("train.h5"), samples);

  const SimGrid grid{0.01, 100};
  const auto ds = load_shd(tmp.file("train.h5"), grid, channels, 20);
  CHECK(ds.n_samples == 12);
  CHECK(ds.channels == channels);
  CHECK(ds.grid.steps == 100);
  CHECK_FALSE(ds.per_window);

  SUBCASE("labels survive") {
    for (int i = 0; i < 12; ++i) CHECK(ds.labels[i] == static_cast<uint32_t>(samples[i].label));
  }

  SUBCASE("binned event counts reconcile with the raw stream minus out-of-grid events") {
    long raw_in_grid = 0, raw_total = 0;
    for (const auto& s : samples) {
      raw_total += static_cast<long>(s.times.size());
      for (double t : s.times) raw_in_grid += t < 1.0 ? 1 : 0;
    }
    const long binned = std::accumulate(ds.data.begin(), ds.data.end(), 0L);
    CHECK(binned == raw_in_grid);
    CHECK(binned < raw_total);  // the > 1 s tail was dropped
  }

  SUBCASE("per-sample histogram matches bin_events directly") {
    for (int i = 0; i < 12; ++i) {
      const auto want = bin_events(samples[i].times, samples[i].units, grid, channels);
      const auto got = ds.sample(i);
      REQUIRE(got.size() == want.size());
      for (size_t k = 0; k < want.size(); ++k) CHECK(got[k] == want[k]);
    }
  }

  SUBCASE("class histogram matches a direct recount") {
    std::vector<int> want(20, 0), got(20, 0);
    for (const auto& s : samples) ++want[s.label];
    for (uint32_t l : ds.labels) ++got[l];
    CHECK(want == got);
  }

  SUBCASE("loading twice is idempotent") {
    const auto again = load_shd(tmp.file("train.h5"), grid, channels, 20);
    CHECK(again.data == ds.data);
    CHECK(again.labels == ds.labels);
  }
}

TEST_CASE("load_shd error paths") {
  TempDir tmp;

  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_shd(tmp.file("absent.h5"), {0.01, 100}), doctest::Contains("open"),
                         std::runtime_error);
  }

  SUBCASE("channel out of range") {
    std::vector<Sample> bad = {{{0.1, 0.2}, {3, 750}, 1}};
    write_event_file(tmp.file("badchan.h5"), bad);
    CHECK_THROWS_WITH_AS(load_shd(tmp.file("badchan.h5"), {0.01, 100}, 700, 20),
                         doctest::Contains("channel"), std::runtime_error);
  }

  SUBCASE("label out of range") {
    std::vector<Sample> bad = {{{0.1}, {3}, 25}};
    write_event_file(tmp.file("badlabel.h5"), bad);
    CHECK_THROWS_WITH_AS(load_shd(tmp.file("badlabel.h5"), {0.01, 100}, 700, 20),
                         doctest::Contains("label"), std::runtime_error);
  }

  SUBCASE("missing dataset") {
    const hid_t file =
        H5Fcreate(tmp.file("empty.h5").c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT);
    H5Fclose(file);
    CHECK_THROWS_WITH_AS(load_shd(tmp.file("empty.h5"), {0.01, 100}),
                         doctest::Contains("missing dataset"), std::runtime_error);
  }
}
