#pragma once

#include <string>

#include "tsnn/dataset.hpp"

namespace tsnn {

// Loads one split of the published spike-audio containers (HDF5 with ragged
// "spikes/times" in seconds, "spikes/units" channel ids, and "labels"), binned
// onto the given grid. 700 channels and 20 classes for the digits set, 35
// classes for the speech-commands variant.
SpikeDataset load_shd(const std::string& path, const SimGrid& grid, int n_channels = 700,
                      int n_classes = 20);

}  // namespace tsnn
