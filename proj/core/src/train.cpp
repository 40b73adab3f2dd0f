#include "cisnet/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "cisnet/config.hpp"
#include "cisnet/ops.hpp"
#include "cisnet/rng.hpp"

namespace cisnet {

namespace {
std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

double TrainConfig::group_rate(const std::string& group) const {
  if (group == "hpf") return lr_hpf;
  if (group == "fusion") return lr_fusion;
  if (group == "type1") return lr_type1;
  if (group == "type2") return lr_type2;
  if (group == "fc") return lr_fc;
  throw Error("unknown parameter group '" + group + "'");
}

std::string TrainConfig::serialize() const {
  std::ostringstream out;
  out << "batch_pairs = " << batch_pairs << "\n";
  out << "epochs = " << epochs << "\n";
  out << "lr_hpf = " << fmt_double(lr_hpf) << "\n";
  out << "lr_fusion = " << fmt_double(lr_fusion) << "\n";
  out << "lr_type1 = " << fmt_double(lr_type1) << "\n";
  out << "lr_type2 = " << fmt_double(lr_type2) << "\n";
  out << "lr_fc = " << fmt_double(lr_fc) << "\n";
  out << "decay = " << fmt_double(decay) << "\n";
  out << "beta1 = " << fmt_double(beta1) << "\n";
  out << "beta2 = " << fmt_double(beta2) << "\n";
  out << "epsilon = " << fmt_double(epsilon) << "\n";
  out << "bias_init_pairs = " << bias_init_pairs << "\n";
  out << "augment = " << (augment ? "true" : "false") << "\n";
  return out.str();
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  const KeyValueConfig kv = KeyValueConfig::parse(text);
  for (const auto& [key, value] : kv.entries("")) {
    if (key == "batch_pairs") cfg.batch_pairs = std::stoll(value);
    else if (key == "epochs") cfg.epochs = std::stoll(value);
    else if (key == "lr_hpf") cfg.lr_hpf = std::strtod(value.c_str(), nullptr);
    else if (key == "lr_fusion") cfg.lr_fusion = std::strtod(value.c_str(), nullptr);
    else if (key == "lr_type1") cfg.lr_type1 = std::strtod(value.c_str(), nullptr);
    else if (key == "lr_type2") cfg.lr_type2 = std::strtod(value.c_str(), nullptr);
    else if (key == "lr_fc") cfg.lr_fc = std::strtod(value.c_str(), nullptr);
    else if (key == "decay") cfg.decay = std::strtod(value.c_str(), nullptr);
    else if (key == "beta1") cfg.beta1 = std::strtod(value.c_str(), nullptr);
    else if (key == "beta2") cfg.beta2 = std::strtod(value.c_str(), nullptr);
    else if (key == "epsilon") cfg.epsilon = std::strtod(value.c_str(), nullptr);
    else if (key == "bias_init_pairs") cfg.bias_init_pairs = std::stoll(value);
    else if (key == "augment") cfg.augment = (value == "true" || value == "1");
    else throw Error("unknown train config key '" + key + "'");
  }
  return cfg;
}

const std::vector<std::string>& param_groups() {
  static const std::vector<std::string> groups{"hpf", "fusion", "type1", "type2", "fc"};
  return groups;
}

std::vector<std::pair<std::string, double>> current_rates(const TrainConfig& cfg,
                                                          int64_t epochs_completed) {
  std::vector<std::pair<std::string, double>> rates;
  const double factor = std::pow(cfg.decay, static_cast<double>(epochs_completed));
  for (const std::string& g : param_groups()) rates.emplace_back(g, cfg.group_rate(g) * factor);
  return rates;
}

void AdamState::init_like(const CisNet& net) {
  step = 0;
  m.clear();
  v.clear();
  for (const Param& p : net.params()) {
    m.emplace_back(static_cast<size_t>(p.tensor.numel()), 0.0);
    v.emplace_back(static_cast<size_t>(p.tensor.numel()), 0.0);
  }
}

std::vector<PairBatch> make_paired_batches(const std::vector<CoverStegoPair>& data,
                                           int64_t batch_pairs, uint64_t seed, int64_t epoch) {
  if (data.empty()) throw Error("make_paired_batches: empty dataset");
  if (batch_pairs < 1) throw Error("make_paired_batches: batch_pairs must be positive");
  const int64_t h = data[0].cover.dim(1), w = data[0].cover.dim(2);

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::stream(seed, "shuffle", static_cast<uint64_t>(epoch));
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<size_t>(rng.below(i))]);

  std::vector<PairBatch> batches;
  const size_t bp = static_cast<size_t>(batch_pairs);
  for (size_t start = 0; start + bp <= order.size(); start += bp) {
    PairBatch batch;
    batch.images = Tensor(Shape{2 * batch_pairs, 1, h, w});
    batch.labels.resize(static_cast<size_t>(2 * batch_pairs));
    for (size_t i = 0; i < bp; ++i) {
      const CoverStegoPair& pair = data[order[start + i]];
      if (pair.cover.dim(1) != h || pair.cover.dim(2) != w)
        throw Error("make_paired_batches: inconsistent image extents");
      std::copy(pair.cover.data(), pair.cover.data() + h * w,
                batch.images.data() + static_cast<int64_t>(i) * h * w);
      std::copy(pair.stego.data(), pair.stego.data() + h * w,
                batch.images.data() + (batch_pairs + static_cast<int64_t>(i)) * h * w);
      batch.labels[i] = 0;
      batch.labels[bp + i] = 1;
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

namespace {

void adam_update(CisNet& net, const TrainConfig& cfg, TrainState& state) {
  AdamState& adam = state.adam;
  if (!adam.initialized()) adam.init_like(net);
  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const double corr1 = 1.0 - std::pow(cfg.beta1, t);
  const double corr2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay_factor = std::pow(cfg.decay, static_cast<double>(state.completed_epochs));

  auto& params = net.params();
  for (size_t i = 0; i < params.size(); ++i) {
    Param& p = params[i];
    double lr = cfg.group_rate(p.group) * decay_factor;
    if (p.group == "hpf") {
      if (!net.hpf_learnable()) continue;
      lr *= net.hpf_lr_scale();
    }
    if (!p.tensor.has_grad()) continue;
    const std::vector<double>& g = p.tensor.grad();
    std::vector<double>& m = adam.m[i];
    std::vector<double>& v = adam.v[i];
    double* value = p.tensor.data();
    for (size_t j = 0; j < g.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = m[j] / corr1;
      const double vhat = v[j] / corr2;
      value[j] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

}  // namespace

double train_step(CisNet& net, const Tensor& images, const std::vector<int64_t>& labels,
                  const TrainConfig& cfg, TrainState& state) {
  for (Param& p : net.params()) p.tensor.zero_grad();
  Tensor logits = net.forward(images);
  Tensor loss = softmax_cross_entropy(logits, labels);
  const double loss_value = loss.item();
  if (!std::isfinite(loss_value))
    throw Error("train_step: non-finite loss at adam step " +
                std::to_string(state.adam.step + 1) + " (epoch " +
                std::to_string(state.completed_epochs + 1) + ")");
  loss.backward();
  adam_update(net, cfg, state);
  return loss_value;
}

EpochLog train_epoch(CisNet& net, const std::vector<CoverStegoPair>& data,
                     const TrainConfig& cfg, TrainState& state) {
  const std::vector<PairBatch> batches =
      make_paired_batches(data, cfg.batch_pairs, state.seed, state.completed_epochs);
  if (batches.empty())
    throw Error("train_epoch: dataset smaller than one batch (" +
                std::to_string(data.size()) + " pairs)");
  double total = 0.0;
  for (const PairBatch& batch : batches)
    total += train_step(net, batch.images, batch.labels, cfg, state);
  ++state.completed_epochs;

  EpochLog log;
  log.epoch = state.completed_epochs;
  log.mean_loss = total / static_cast<double>(batches.size());
  log.rates = current_rates(cfg, state.completed_epochs);
  return log;
}

std::vector<EpochLog> train(CisNet& net, const std::vector<CoverStegoPair>& data,
                            const TrainConfig& cfg, TrainState& state) {
  std::vector<EpochLog> logs;
  while (state.completed_epochs < cfg.epochs) logs.push_back(train_epoch(net, data, cfg, state));
  return logs;
}

Tensor rotate90_ccw(const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 1)
    throw Error("rotate90_ccw: expected [1,H,W]");
  const int64_t h = image.dim(1), w = image.dim(2);
  if (h != w) throw Error("rotate90_ccw: rotation augmentation needs square images");
  Tensor out(Shape{1, w, h});
  // (y, x) -> (w-1-x, y)
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      out.data()[(w - 1 - x) * h + y] = image.data()[y * w + x];
  return out;
}

std::vector<Tensor> augment_rotations(const std::vector<Tensor>& covers) {
  std::vector<Tensor> out;
  out.reserve(covers.size() * 4);
  for (const Tensor& cover : covers) {
    Tensor r90 = rotate90_ccw(cover);
    Tensor r180 = rotate90_ccw(r90);
    Tensor r270 = rotate90_ccw(r180);
    out.push_back(cover.clone_detached());
    out.push_back(std::move(r90));
    out.push_back(std::move(r180));
    out.push_back(std::move(r270));
  }
  return out;
}

}  // namespace cisnet
