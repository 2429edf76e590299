#include "tsnn/shd.hpp"

#include <hdf5.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace tsnn {

namespace {

struct HidCloser {
  hid_t id;
  herr_t (*close)(hid_t);
  ~HidCloser() {
    if (id >= 0) close(id);
  }
};

hid_t open_dataset(hid_t file, const char* name, const std::string& path) {
  const hid_t ds = H5Dopen2(file, name, H5P_DEFAULT);
  if (ds < 0)
    throw std::runtime_error("load_shd: missing dataset '" + std::string(name) + "' in " + path);
  return ds;
}

hsize_t dataset_length(hid_t ds) {
  const hid_t space = H5Dget_space(ds);
  HidCloser space_c{space, H5Sclose};
  hsize_t dims[1] = {0};
  if (H5Sget_simple_extent_ndims(space) != 1 ||
      H5Sget_simple_extent_dims(space, dims, nullptr) < 0)
    throw std::runtime_error("load_shd: expected a 1-d dataset");
  return dims[0];
}

}  // namespace

SpikeDataset load_shd(const std::string& path, const SimGrid& grid, int n_channels,
                      int n_classes) {
  grid.validate();
  H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);  // report through exceptions, not stderr

  const hid_t file = H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT);
  if (file < 0) throw std::runtime_error("load_shd: cannot open " + path);
  HidCloser file_c{file, H5Fclose};

  const hid_t d_times = open_dataset(file, "spikes/times", path);
  HidCloser times_c{d_times, H5Dclose};
  const hid_t d_units = open_dataset(file, "spikes/units", path);
  HidCloser units_c{d_units, H5Dclose};
  const hid_t d_labels = open_dataset(file, "labels", path);
  HidCloser labels_c{d_labels, H5Dclose};

  const hsize_t n = dataset_length(d_times);
  if (dataset_length(d_units) != n || dataset_length(d_labels) != n)
    throw std::runtime_error("load_shd: times/units/labels lengths disagree in " + path);

  std::vector<int> labels(n);
  if (H5Dread(d_labels, H5T_NATIVE_INT, H5S_ALL, H5S_ALL, H5P_DEFAULT, labels.data()) < 0)
    throw std::runtime_error("load_shd: failed to read labels from " + path);

  const hid_t vlen_f64 = H5Tvlen_create(H5T_NATIVE_DOUBLE);
  HidCloser vf_c{vlen_f64, H5Tclose};
  const hid_t vlen_i32 = H5Tvlen_create(H5T_NATIVE_INT);
  HidCloser vi_c{vlen_i32, H5Tclose};

  std::vector<hvl_t> times(n), units(n);
  if (H5Dread(d_times, vlen_f64, H5S_ALL, H5S_ALL, H5P_DEFAULT, times.data()) < 0)
    throw std::runtime_error("load_shd: failed to read spikes/times from " + path);
  if (H5Dread(d_units, vlen_i32, H5S_ALL, H5S_ALL, H5P_DEFAULT, units.data()) < 0) {
    H5Dvlen_reclaim(vlen_f64, H5Dget_space(d_times), H5P_DEFAULT, times.data());
    throw std::runtime_error("load_shd: failed to read spikes/units from " + path);
  }

  SpikeDataset ds;
  ds.grid = grid;
  ds.channels = n_channels;
  ds.n_samples = static_cast<int>(n);
  ds.n_classes = n_classes;
  ds.per_window = false;
  ds.data.resize(static_cast<size_t>(ds.n_samples) * grid.steps * n_channels);
  ds.labels.resize(ds.n_samples);

  std::string error;
  const size_t stride = static_cast<size_t>(grid.steps) * n_channels;
  for (hsize_t i = 0; i < n && error.empty(); ++i) {
    if (times[i].len != units[i].len) {
      error = "load_shd: sample " + std::to_string(i) + " has mismatched times/units lengths";
      break;
    }
    if (labels[i] < 0 || labels[i] >= n_classes) {
      error = "load_shd: sample " + std::to_string(i) + " label out of range";
      break;
    }
    ds.labels[i] = static_cast<uint32_t>(labels[i]);
    try {
      const auto counts =
          bin_events({static_cast<const double*>(times[i].p), times[i].len},
                     {static_cast<const int*>(units[i].p), units[i].len}, grid, n_channels);
      std::copy(counts.begin(), counts.end(), ds.data.begin() + stride * i);
    } catch (const std::exception& e) {
      error = "load_shd: sample " + std::to_string(i) + ": " + e.what();
    }
  }

  const hid_t times_space = H5Dget_space(d_times);
  const hid_t units_space = H5Dget_space(d_units);
  H5Dvlen_reclaim(vlen_f64, times_space, H5P_DEFAULT, times.data());
  H5Dvlen_reclaim(vlen_i32, units_space, H5P_DEFAULT, units.data());
  H5Sclose(times_space);
  H5Sclose(units_space);

  if (!error.empty()) throw std::runtime_error(error);
  ds.validate();
  return ds;
}

}  // namespace tsnn
