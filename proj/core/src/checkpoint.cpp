#include "cisnet/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>

#include "cisnet/rng.hpp"

namespace cisnet {

namespace {
std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

Checkpoint make_checkpoint(const CisNet& net, const TrainConfig& cfg, const TrainState& state) {
  Checkpoint ckpt;
  ckpt.config = net.config();
  ckpt.epoch = state.completed_epochs;
  ckpt.learning_rates = current_rates(cfg, state.completed_epochs);
  ckpt.rng_seed = state.seed;
  ckpt.rng_counter = state.rng_counter;
  ckpt.adam_step = state.adam.step;

  auto push = [&ckpt](const std::string& name, const Shape& shape,
                      const std::vector<double>& values) {
    ckpt.tensors.push_back({name, shape, values});
  };
  for (const Param& p : net.params())
    push(p.name, p.tensor.shape(), p.tensor.impl()->value);
  if (state.adam.initialized()) {
    const auto& params = net.params();
    for (size_t i = 0; i < params.size(); ++i)
      push("adam.m." + params[i].name, params[i].tensor.shape(), state.adam.m[i]);
    for (size_t i = 0; i < params.size(); ++i)
      push("adam.v." + params[i].name, params[i].tensor.shape(), state.adam.v[i]);
  }
  return ckpt;
}

void restore_checkpoint(const Checkpoint& ckpt, CisNet& net, TrainState& state) {
  if (ckpt.config.fingerprint() != net.config().fingerprint())
    throw Error("checkpoint config fingerprint does not match the network");
  state.completed_epochs = ckpt.epoch;
  state.seed = ckpt.rng_seed;
  state.rng_counter = ckpt.rng_counter;
  state.adam.init_like(net);
  state.adam.step = ckpt.adam_step;

  auto find = [&ckpt](const std::string& name) -> const NamedValues* {
    for (const NamedValues& t : ckpt.tensors)
      if (t.name == name) return &t;
    return nullptr;
  };

  auto& params = net.params();
  for (size_t i = 0; i < params.size(); ++i) {
    const NamedValues* t = find(params[i].name);
    if (!t) throw Error("checkpoint is missing tensor " + params[i].name);
    if (t->shape != params[i].tensor.shape())
      throw Error("checkpoint tensor " + params[i].name + " has shape " + shape_str(t->shape) +
                  ", expected " + shape_str(params[i].tensor.shape()));
    std::copy(t->values.begin(), t->values.end(), params[i].tensor.data());
    if (const NamedValues* m = find("adam.m." + params[i].name)) state.adam.m[i] = m->values;
    if (const NamedValues* v = find("adam.v." + params[i].name)) state.adam.v[i] = v->values;
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ostringstream out;
  out << "cisnet-checkpoint v1\n";
  out << "fingerprint " << to_hex(ckpt.config.fingerprint()) << "\n";
  out << "epoch " << ckpt.epoch << "\n";
  out << "adam_step " << ckpt.adam_step << "\n";
  out << "rng_seed " << ckpt.rng_seed << "\n";
  out << "rng_counter " << ckpt.rng_counter << "\n";
  for (const auto& [group, rate] : ckpt.learning_rates)
    out << "lr " << group << " " << fmt_double(rate) << "\n";
  out << "config_begin\n" << ckpt.config.serialize() << "config_end\n";
  out << "tensors " << ckpt.tensors.size() << "\n";
  size_t blob_doubles = 0;
  for (const NamedValues& t : ckpt.tensors) {
    out << t.name << " " << t.shape.size();
    for (int64_t d : t.shape) out << " " << d;
    out << "\n";
    blob_doubles += t.values.size();
  }
  out << "blob " << blob_doubles * sizeof(double) << "\n";
  std::string text = out.str();
  const size_t header = text.size();
  text.resize(header + blob_doubles * sizeof(double));
  size_t offset = header;
  for (const NamedValues& t : ckpt.tensors) {
    std::memcpy(text.data() + offset, t.values.data(), t.values.size() * sizeof(double));
    offset += t.values.size() * sizeof(double);
  }
  write_file_atomic(path, text);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string data = read_file(path);
  std::istringstream in(data);
  std::string line;
  if (!std::getline(in, line) || line != "cisnet-checkpoint v1")
    throw Error("not a cisnet checkpoint: " + path);

  Checkpoint ckpt;
  std::string fingerprint_hex;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string key;
    row >> key;
    if (key == "fingerprint") row >> fingerprint_hex;
    else if (key == "epoch") row >> ckpt.epoch;
    else if (key == "adam_step") row >> ckpt.adam_step;
    else if (key == "rng_seed") row >> ckpt.rng_seed;
    else if (key == "rng_counter") row >> ckpt.rng_counter;
    else if (key == "lr") {
      std::string group;
      double rate;
      row >> group >> rate;
      ckpt.learning_rates.emplace_back(group, rate);
    } else if (key == "config_begin") {
      std::string cfg_text;
      while (std::getline(in, line) && line != "config_end") cfg_text += line + "\n";
      ckpt.config = NetworkConfig::parse(cfg_text);
    } else if (key == "tensors") {
      size_t count = 0;
      row >> count;
      for (size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw Error("checkpoint: truncated tensor table");
        std::istringstream trow(line);
        NamedValues t;
        size_t rank = 0;
        trow >> t.name >> rank;
        for (size_t r = 0; r < rank; ++r) {
          int64_t d = 0;
          trow >> d;
          t.shape.push_back(d);
        }
        ckpt.tensors.push_back(std::move(t));
      }
    } else if (key == "blob") {
      size_t bytes = 0;
      row >> bytes;
      const size_t offset = static_cast<size_t>(in.tellg());
      if (data.size() - offset < bytes) throw Error("checkpoint: truncated blob");
      size_t cursor = offset;
      for (NamedValues& t : ckpt.tensors) {
        const size_t n = static_cast<size_t>(shape_numel(t.shape));
        t.values.resize(n);
        std::memcpy(t.values.data(), data.data() + cursor, n * sizeof(double));
        cursor += n * sizeof(double);
      }
      if (cursor - offset != bytes) throw Error("checkpoint: blob size mismatch");
      break;
    } else if (!key.empty()) {
      throw Error("checkpoint: unknown manifest key '" + key + "'");
    }
  }
  if (to_hex(ckpt.config.fingerprint()) != fingerprint_hex)
    throw Error("checkpoint: fingerprint does not match embedded config");
  return ckpt;
}

std::vector<Checkpoint> train_curriculum(const NetworkConfig& net_cfg, const TrainConfig& cfg,
                                         const std::vector<double>& payloads,
                                         const std::vector<std::vector<CoverStegoPair>>& stages,
                                         uint64_t seed,
                                         std::vector<std::vector<EpochLog>>* logs) {
  if (payloads.empty() || payloads.size() != stages.size())
    throw Error("train_curriculum: need one dataset per payload");
  for (size_t i = 1; i < payloads.size(); ++i)
    if (!(payloads[i] < payloads[i - 1]))
      throw Error("train_curriculum: payloads must be strictly decreasing");
  // All stages must train on the same covers.
  for (size_t i = 1; i < stages.size(); ++i) {
    if (stages[i].size() != stages[0].size())
      throw Error("train_curriculum: cover split mismatch between payload stages");
    for (size_t j = 0; j < stages[i].size(); ++j) {
      const Tensor& a = stages[0][j].cover;
      const Tensor& b = stages[i][j].cover;
      if (a.shape() != b.shape() ||
          std::memcmp(a.data(), b.data(), static_cast<size_t>(a.numel()) * sizeof(double)) != 0)
        throw Error("train_curriculum: cover split mismatch between payload stages");
    }
  }

  CisNet net = CisNet::build(net_cfg);
  std::vector<Checkpoint> checkpoints;
  for (size_t stage = 0; stage < payloads.size(); ++stage) {
    TrainState state;
    state.seed = seed;
    if (stage == 0) {
      net.init_weights(seed);
      const auto& data = stages[0];
      const int64_t init_pairs =
          std::min<int64_t>(cfg.bias_init_pairs, static_cast<int64_t>(data.size()));
      const int64_t h = net.config().input_h, w = net.config().input_w;
      Tensor init_set(Shape{2 * init_pairs, 1, h, w});
      for (int64_t i = 0; i < init_pairs; ++i) {
        std::copy(data[static_cast<size_t>(i)].cover.data(),
                  data[static_cast<size_t>(i)].cover.data() + h * w,
                  init_set.data() + 2 * i * h * w);
        std::copy(data[static_cast<size_t>(i)].stego.data(),
                  data[static_cast<size_t>(i)].stego.data() + h * w,
                  init_set.data() + (2 * i + 1) * h * w);
      }
      net.calibrate_biases(init_set);
    }
    // Later stages keep the previous stage's weights; optimizer and schedule
    // restart per stage.
    std::vector<EpochLog> stage_logs = train(net, stages[stage], cfg, state);
    if (logs) logs->push_back(std::move(stage_logs));
    checkpoints.push_back(make_checkpoint(net, cfg, state));
  }
  return checkpoints;
}

}  // namespace cisnet
