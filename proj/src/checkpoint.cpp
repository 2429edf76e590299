#include "tsnn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "tsnn/bytes.hpp"
#include "tsnn/sim.hpp"

namespace tsnn {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'N', 'N'};
constexpr uint32_t kVersion = 1;

void write_f64_array(ByteWriter& w, const std::vector<double>& v) {
  w.u64(v.size());
  for (double x : v) w.f64(x);
}

std::vector<double> read_f64_array(ByteReader& r, size_t expected, const char* what) {
  const uint64_t n = r.u64();
  if (n != expected)
    throw std::runtime_error(std::string("checkpoint: ") + what + " count mismatch");
  std::vector<double> v(n);
  for (auto& x : v) x = r.f64();
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  check_params_match(ck.spec, ck.params);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  ByteWriter w(os);
  w.magic(kMagic);
  w.u32(kVersion);

  w.f64(ck.spec.grid.dt);
  w.u32(static_cast<uint32_t>(ck.spec.grid.steps));
  w.u32(static_cast<uint32_t>(ck.spec.input_size));
  w.u32(static_cast<uint32_t>(ck.spec.hidden.size()));
  for (const auto& h : ck.spec.hidden) {
    w.u32(static_cast<uint32_t>(h.size));
    w.u8(h.kind == LayerKind::conv ? 1 : 0);
    w.u32(static_cast<uint32_t>(h.kernel_size));
    w.u32(static_cast<uint32_t>(h.dilation));
  }
  w.u32(static_cast<uint32_t>(ck.spec.output_size));
  w.f64(ck.spec.tau_out);

  for (const auto& p : ck.params) {
    write_f64_array(w, p.weights);
    write_f64_array(w, p.tau);
    w.f64(p.lr_scale);
  }

  w.u8(ck.has_optim ? 1 : 0);
  if (ck.has_optim) {
    if (ck.optim.m_w.size() != ck.params.size())
      throw std::invalid_argument("save_checkpoint: optimizer state layer count mismatch");
    w.u64(ck.optim.step);
    for (size_t l = 0; l < ck.params.size(); ++l) {
      write_f64_array(w, ck.optim.m_w[l]);
      write_f64_array(w, ck.optim.v_w[l]);
      write_f64_array(w, ck.optim.m_tau[l]);
      write_f64_array(w, ck.optim.v_tau[l]);
    }
  }
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  ByteReader r(is);
  r.expect_magic(kMagic, "load_checkpoint");
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));

  Checkpoint ck;
  ck.spec.grid.dt = r.f64();
  ck.spec.grid.steps = static_cast<int>(r.u32());
  ck.spec.input_size = static_cast<int>(r.u32());
  const uint32_t n_hidden = r.u32();
  if (n_hidden == 0 || n_hidden > 1u << 16)
    throw std::runtime_error("load_checkpoint: implausible hidden layer count");
  ck.spec.hidden.resize(n_hidden);
  for (auto& h : ck.spec.hidden) {
    h.size = static_cast<int>(r.u32());
    h.kind = r.u8() == 1 ? LayerKind::conv : LayerKind::dense;
    h.kernel_size = static_cast<int>(r.u32());
    h.dilation = static_cast<int>(r.u32());
  }
  ck.spec.output_size = static_cast<int>(r.u32());
  ck.spec.tau_out = r.f64();
  ck.spec.validate();

  int in_size = ck.spec.input_size;
  for (uint32_t l = 0; l <= n_hidden; ++l) {
    LayerParams p;
    if (l < n_hidden) {
      const auto& h = ck.spec.hidden[l];
      p.kind = h.kind;
      p.in_size = in_size;
      p.out_size = h.size;
      p.kernel_size = h.kind == LayerKind::conv ? h.kernel_size : 1;
      p.dilation = h.kind == LayerKind::conv ? h.dilation : 1;
      p.spiking = true;
      in_size = h.size;
    } else {
      p.kind = LayerKind::dense;
      p.in_size = in_size;
      p.out_size = ck.spec.output_size;
      p.spiking = false;
    }
    p.weights = read_f64_array(r, p.weight_count(), "weights");
    p.tau = read_f64_array(r, p.out_size, "tau");
    p.lr_scale = r.f64();
    ck.params.push_back(std::move(p));
  }

  ck.has_optim = r.u8() == 1;
  if (ck.has_optim) {
    ck.optim.step = r.u64();
    const size_t n_layers = ck.params.size();
    ck.optim.m_w.resize(n_layers);
    ck.optim.v_w.resize(n_layers);
    ck.optim.m_tau.resize(n_layers);
    ck.optim.v_tau.resize(n_layers);
    for (size_t l = 0; l < n_layers; ++l) {
      const size_t wc = ck.params[l].weight_count();
      const size_t tc = ck.params[l].tau.size();
      ck.optim.m_w[l] = read_f64_array(r, wc, "optimizer m_w");
      ck.optim.v_w[l] = read_f64_array(r, wc, "optimizer v_w");
      ck.optim.m_tau[l] = read_f64_array(r, tc, "optimizer m_tau");
      ck.optim.v_tau[l] = read_f64_array(r, tc, "optimizer v_tau");
    }
  }
  check_params_match(ck.spec, ck.params);
  return ck;
}

}  // namespace tsnn
