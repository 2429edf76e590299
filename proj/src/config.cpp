#include "tsnn/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tsnn {

using nlohmann::json;

namespace {

std::string line_col(const std::string& text, size_t byte_pos) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < byte_pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string decay_mode_name(DecayMode m) { return m == DecayMode::step ? "step" : "linear"; }

DecayMode parse_decay_mode(const std::string& name) {
  if (name == "linear") return DecayMode::linear;
  if (name == "step") return DecayMode::step;
  throw std::invalid_argument("config: unknown decay mode '" + name + "'");
}

json to_json(const RunConfig& c) {
  return json{
      {"task", c.task},
      {"n_trials", c.n_trials},
      {"out_dir", c.out_dir},
      {"network",
       {{"dt", c.network.dt},
        {"steps", c.network.steps},
        {"hidden_layers", c.network.hidden_layers},
        {"hidden_size", c.network.hidden_size},
        {"layer_kind", c.network.layer_kind},
        {"tau_out", c.network.tau_out}}},
      {"hierarchy",
       {{"tau_shape", c.hierarchy.tau_shape},
        {"tau_mean", c.hierarchy.tau_mean},
        {"delta_tau", c.hierarchy.delta_tau},
        {"steepness", c.hierarchy.steepness},
        {"centering", c.hierarchy.centering},
        {"tau_std_frac", c.hierarchy.tau_std_frac},
        {"mean_kernel", c.hierarchy.mean_kernel},
        {"delta_kernel", c.hierarchy.delta_kernel},
        {"mean_dilation", c.hierarchy.mean_dilation},
        {"delta_dilation", c.hierarchy.delta_dilation}}},
      {"optim",
       {{"lr", c.optim.lr0},
        {"decay_start_epoch", c.optim.decay_start_epoch},
        {"decay_factor", c.optim.decay_factor},
        {"decay_mode", decay_mode_name(c.optim.decay_mode)},
        {"epochs", c.optim.epochs},
        {"batch_size", c.optim.batch_size},
        {"dropout", c.optim.dropout_p},
        {"l2", c.optim.l2_coeff},
        {"tau_reg", c.optim.tau_reg_coeff},
        {"train_tau", c.optim.train_tau},
        {"reset_grad", c.optim.reset_grad},
        {"surrogate_beta", c.optim.surrogate_beta},
        {"loss", c.loss},
        {"seed", c.optim.seed}}},
      {"data",
       {{"path", c.data.path},
        {"test_path", c.data.test_path},
        {"augment", c.data.augment},
        {"valid_fraction", c.data.valid_fraction},
        {"test_as_valid", c.data.test_as_valid},
        {"mtsxor",
         {{"neurons_per_channel", c.data.neurons_per_channel},
          {"cue_duration", c.data.cue_duration},
          {"gap", c.data.gap},
          {"n_cues", c.data.n_cues},
          {"rate_active", c.data.rate_active},
          {"rate_inactive", c.data.rate_inactive},
          {"background_rate", c.data.background_rate},
          {"train_samples", c.data.train_samples},
          {"test_samples", c.data.test_samples},
          {"seed", c.data.data_seed}}}}},
  };
}

RunConfig task_defaults(const std::string& task, const std::string& layer_kind) {
  RunConfig c;
  c.task = task;
  c.network.layer_kind = layer_kind;
  if (task == "mtsxor") {
    c.network.hidden_layers = 2;
    c.network.hidden_size = 10;
    c.hierarchy.tau_mean = 0.3;
    c.optim.batch_size = 512;
    c.optim.epochs = 60;
    c.optim.dropout_p = 0.1;
    c.loss = "max_over_windows";
  } else if (task == "shd" || task == "ssc" || task == "custom-cache") {
    c.network.hidden_layers = 3;
    c.network.hidden_size = 32;
    c.hierarchy.tau_mean = 0.2;
    c.optim.batch_size = 256;
    c.optim.epochs = 60;
    c.optim.dropout_p = 0.1;
    c.loss = "sum_softmax";
    if (layer_kind == "conv") {
      c.optim.epochs = 100;
      c.optim.dropout_p = 0.4;
      c.optim.l2_coeff = 1e-4;
    }
  } else {
    throw std::invalid_argument("config: unknown task '" + task + "'");
  }
  return c;
}

void merge_checked(json& dst, const json& src, const std::string& prefix) {
  if (!src.is_object())
    throw std::invalid_argument("config: expected an object at '" +
                                (prefix.empty() ? "<root>" : prefix) + "'");
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!dst.contains(it.key()))
      throw std::invalid_argument("config: unknown key '" + path + "'");
    json& slot = dst[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), path);
    } else {
      if (it.value().is_object() || it.value().is_array())
        throw std::invalid_argument("config: expected a scalar at '" + path + "'");
      const bool num_ok = slot.is_number() && it.value().is_number();
      if (!num_ok && slot.type() != it.value().type() &&
          !(slot.is_string() && it.value().is_string()))
        throw std::invalid_argument("config: wrong value type at '" + path + "'");
      slot = it.value();
    }
  }
}

template <typename T>
T get_field(const json& j, const std::string& path) {
  const json* cur = &j;
  std::istringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) cur = &cur->at(part);
  try {
    return cur->get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: wrong value type at '" + path + "'");
  }
}

RunConfig extract(const json& j) {
  RunConfig c;
  c.task = get_field<std::string>(j, "task");
  c.n_trials = get_field<int>(j, "n_trials");
  c.out_dir = get_field<std::string>(j, "out_dir");

  c.network.dt = get_field<double>(j, "network.dt");
  c.network.steps = get_field<int>(j, "network.steps");
  c.network.hidden_layers = get_field<int>(j, "network.hidden_layers");
  c.network.hidden_size = get_field<int>(j, "network.hidden_size");
  c.network.layer_kind = get_field<std::string>(j, "network.layer_kind");
  c.network.tau_out = get_field<double>(j, "network.tau_out");
  if (c.network.layer_kind != "dense" && c.network.layer_kind != "conv")
    throw std::invalid_argument("config: layer_kind must be 'dense' or 'conv'");

  c.hierarchy.tau_shape = get_field<std::string>(j, "hierarchy.tau_shape");
  parse_tau_shape(c.hierarchy.tau_shape);
  c.hierarchy.tau_mean = get_field<double>(j, "hierarchy.tau_mean");
  c.hierarchy.delta_tau = get_field<double>(j, "hierarchy.delta_tau");
  c.hierarchy.steepness = get_field<double>(j, "hierarchy.steepness");
  c.hierarchy.centering = get_field<double>(j, "hierarchy.centering");
  c.hierarchy.tau_std_frac = get_field<double>(j, "hierarchy.tau_std_frac");
  c.hierarchy.mean_kernel = get_field<int>(j, "hierarchy.mean_kernel");
  c.hierarchy.delta_kernel = get_field<int>(j, "hierarchy.delta_kernel");
  c.hierarchy.mean_dilation = get_field<int>(j, "hierarchy.mean_dilation");
  c.hierarchy.delta_dilation = get_field<int>(j, "hierarchy.delta_dilation");

  c.optim.lr0 = get_field<double>(j, "optim.lr");
  c.optim.decay_start_epoch = get_field<int>(j, "optim.decay_start_epoch");
  c.optim.decay_factor = get_field<double>(j, "optim.decay_factor");
  c.optim.decay_mode = parse_decay_mode(get_field<std::string>(j, "optim.decay_mode"));
  c.optim.epochs = get_field<int>(j, "optim.epochs");
  c.optim.batch_size = get_field<int>(j, "optim.batch_size");
  c.optim.dropout_p = get_field<double>(j, "optim.dropout");
  c.optim.l2_coeff = get_field<double>(j, "optim.l2");
  c.optim.tau_reg_coeff = get_field<double>(j, "optim.tau_reg");
  c.optim.train_tau = get_field<bool>(j, "optim.train_tau");
  c.optim.reset_grad = get_field<bool>(j, "optim.reset_grad");
  c.optim.surrogate_beta = get_field<double>(j, "optim.surrogate_beta");
  c.loss = get_field<std::string>(j, "optim.loss");
  parse_loss_kind(c.loss);
  c.optim.seed = get_field<uint64_t>(j, "optim.seed");

  c.data.path = get_field<std::string>(j, "data.path");
  c.data.test_path = get_field<std::string>(j, "data.test_path");
  c.data.augment = get_field<bool>(j, "data.augment");
  c.data.valid_fraction = get_field<double>(j, "data.valid_fraction");
  c.data.test_as_valid = get_field<bool>(j, "data.test_as_valid");
  c.data.neurons_per_channel = get_field<int>(j, "data.mtsxor.neurons_per_channel");
  c.data.cue_duration = get_field<double>(j, "data.mtsxor.cue_duration");
  c.data.gap = get_field<double>(j, "data.mtsxor.gap");
  c.data.n_cues = get_field<int>(j, "data.mtsxor.n_cues");
  c.data.rate_active = get_field<double>(j, "data.mtsxor.rate_active");
  c.data.rate_inactive = get_field<double>(j, "data.mtsxor.rate_inactive");
  c.data.background_rate = get_field<double>(j, "data.mtsxor.background_rate");
  c.data.train_samples = get_field<int>(j, "data.mtsxor.train_samples");
  c.data.test_samples = get_field<int>(j, "data.mtsxor.test_samples");
  c.data.data_seed = get_field<int64_t>(j, "data.mtsxor.seed");

  c.optim.validate();
  if (c.n_trials < 1) throw std::invalid_argument("config: n_trials must be >= 1");
  if (!(c.data.valid_fraction >= 0.0 && c.data.valid_fraction < 1.0))
    throw std::invalid_argument("config: valid_fraction must be in [0, 1)");
  return c;
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error in " + origin + " at " +
                                line_col(json_text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");

  const std::string task = doc.contains("task") ? doc["task"].get<std::string>() : "mtsxor";
  std::string kind = "dense";
  if (doc.contains("network") && doc["network"].is_object() &&
      doc["network"].contains("layer_kind"))
    kind = doc["network"]["layer_kind"].get<std::string>();

  json merged = to_json(task_defaults(task, kind));
  merge_checked(merged, doc, "");
  return extract(merged);
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

std::string dump_config(const RunConfig& config) { return to_json(config).dump(2); }

void set_config_key(RunConfig& config, const std::string& dotted_key,
                    const std::string& json_value) {
  json value;
  try {
    value = json::parse(json_value);
  } catch (const json::parse_error&) {
    value = json(json_value);  // bare strings are taken literally
  }
  json overlay;
  json* cur = &overlay;
  std::istringstream ss(dotted_key);
  std::string part, last;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw std::invalid_argument("config: empty key");
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    (*cur)[parts[i]] = json::object();
    cur = &(*cur)[parts[i]];
  }
  (*cur)[parts.back()] = value;

  json merged = to_json(config);
  merge_checked(merged, overlay, "");
  config = extract(merged);
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "sum_softmax") return LossKind::sum_softmax;
  if (name == "max_over_windows") return LossKind::max_over_windows;
  if (name == "double_softmax") return LossKind::double_softmax;
  throw std::invalid_argument("config: unknown loss '" + name + "'");
}

TauShape parse_tau_shape(const std::string& name) {
  if (name == "homogeneous") return TauShape::homogeneous;
  if (name == "linear") return TauShape::linear;
  if (name == "tanh") return TauShape::tanh_shape;
  if (name == "paper_literal_linear") return TauShape::paper_literal_linear;
  throw std::invalid_argument("config: unknown tau shape '" + name + "'");
}

MtsXorConfig mtsxor_from_config(const RunConfig& config) {
  MtsXorConfig m;
  m.dt = config.network.dt;
  m.duration = config.network.dt * config.network.steps;
  m.neurons_per_channel = config.data.neurons_per_channel;
  m.cue_duration = config.data.cue_duration;
  m.gap = config.data.gap;
  m.n_cues_b = config.data.n_cues;
  m.rate_active = config.data.rate_active;
  m.rate_inactive = config.data.rate_inactive;
  m.background_rate = config.data.background_rate;
  m.validate();
  return m;
}

NetworkSpec network_spec_from_config(const RunConfig& config, int input_size, int output_size) {
  NetworkSpec spec;
  spec.grid = {config.network.dt, config.network.steps};
  spec.input_size = input_size;
  spec.output_size = output_size;
  spec.tau_out = config.network.tau_out;
  const bool conv = config.network.layer_kind == "conv";
  std::vector<int> kernels(config.network.hidden_layers, 1);
  std::vector<int> dilations(config.network.hidden_layers, 1);
  if (conv) {
    ConvSchedule cs;
    cs.mean_kernel = config.hierarchy.mean_kernel;
    cs.delta_kernel = config.hierarchy.delta_kernel;
    cs.mean_dilation = config.hierarchy.mean_dilation;
    cs.delta_dilation = config.hierarchy.delta_dilation;
    cs.layers = config.network.hidden_layers;
    std::tie(kernels, dilations) = conv_schedules(cs);
  }
  for (int l = 0; l < config.network.hidden_layers; ++l) {
    LayerSpec ls;
    ls.size = config.network.hidden_size;
    ls.kind = conv ? LayerKind::conv : LayerKind::dense;
    ls.kernel_size = kernels[l];
    ls.dilation = dilations[l];
    spec.hidden.push_back(ls);
  }
  spec.validate();
  return spec;
}

std::vector<double> hidden_tau_means_from_config(const RunConfig& config) {
  TauSchedule sched;
  sched.shape = parse_tau_shape(config.hierarchy.tau_shape);
  sched.tau_mu = config.hierarchy.tau_mean;
  sched.delta_tau = config.hierarchy.delta_tau;
  sched.steepness = config.hierarchy.steepness;
  sched.centering = config.hierarchy.centering;
  sched.layers = config.network.hidden_layers;
  const double floor = 1.5 * config.network.dt;
  return tau_layer_means(sched, floor);
}

}  // namespace tsnn
