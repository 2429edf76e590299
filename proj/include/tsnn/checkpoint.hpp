#pragma once

#include <string>
#include <vector>

#include "tsnn/network.hpp"
#include "tsnn/optim.hpp"

namespace tsnn {

// Versioned binary container ("TSNN"): network spec, parameter arrays as
// little-endian float64, and optionally the optimizer moments. Round trips
// are bit exact.
struct Checkpoint {
  NetworkSpec spec;
  std::vector<LayerParams> params;
  bool has_optim = false;
  AdamState optim;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tsnn
