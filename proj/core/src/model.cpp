#include "cisnet/model.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cisnet/config.hpp"
#include "cisnet/ops.hpp"
#include "cisnet/rng.hpp"

namespace cisnet {

namespace {

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_channels(const std::vector<int64_t>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<int64_t> split_channels(const std::string& s) {
  std::vector<int64_t> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stoll(tok));
  return out;
}

}  // namespace

std::string NetworkConfig::serialize() const {
  std::ostringstream out;
  out << "input_h = " << input_h << "\n";
  out << "input_w = " << input_w << "\n";
  out << "truncation_t = " << fmt_double(truncation.threshold) << "\n";
  out << "truncation_mode = "
      << (truncation.mode == TruncationMode::kSingleValued ? "single_valued" : "bi_valued")
      << "\n";
  out << "gamma1 = " << fmt_double(spl.gamma1) << "\n";
  out << "gamma2 = " << fmt_double(spl.gamma2) << "\n";
  out << "spl_window = " << spl.window << "\n";
  out << "fusion_channels = " << fusion_channels << "\n";
  out << "type1_channels = " << join_channels(type1_channels) << "\n";
  out << "type2_channels = " << join_channels(type2_channels) << "\n";
  out << "dilation_type2 = " << dilation_type2 << "\n";
  out << "hpf_count = " << hpf_count << "\n";
  out << "seed = " << seed << "\n";
  return out.str();
}

NetworkConfig NetworkConfig::parse(const std::string& text) {
  NetworkConfig cfg;
  const KeyValueConfig kv = KeyValueConfig::parse(text);
  for (const auto& [key, value] : kv.entries("")) {
    if (key == "input_h") cfg.input_h = std::stoll(value);
    else if (key == "input_w") cfg.input_w = std::stoll(value);
    else if (key == "truncation_t") cfg.truncation.threshold = std::strtod(value.c_str(), nullptr);
    else if (key == "truncation_mode") {
      if (value == "single_valued") cfg.truncation.mode = TruncationMode::kSingleValued;
      else if (value == "bi_valued") cfg.truncation.mode = TruncationMode::kBiValued;
      else throw Error("unknown truncation_mode '" + value + "'");
    } else if (key == "gamma1") cfg.spl.gamma1 = std::strtod(value.c_str(), nullptr);
    else if (key == "gamma2") cfg.spl.gamma2 = std::strtod(value.c_str(), nullptr);
    else if (key == "spl_window") cfg.spl.window = std::stoll(value);
    else if (key == "fusion_channels") cfg.fusion_channels = std::stoll(value);
    else if (key == "type1_channels") cfg.type1_channels = split_channels(value);
    else if (key == "type2_channels") cfg.type2_channels = split_channels(value);
    else if (key == "dilation_type2") cfg.dilation_type2 = std::stoll(value);
    else if (key == "hpf_count") cfg.hpf_count = std::stoll(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else throw Error("unknown network config key '" + key + "'");
  }
  return cfg;
}

uint64_t NetworkConfig::fingerprint() const { return fnv1a64(serialize()); }

CisNet CisNet::build(const NetworkConfig& cfg) { return build(cfg, build_bank()); }

CisNet CisNet::build(const NetworkConfig& cfg, const FilterBank& bank) {
  if (cfg.hpf_count < 1 || cfg.hpf_count > bank.count())
    throw Error("hpf_count must be in [1, " + std::to_string(bank.count()) + "]");
  if (cfg.type1_channels.empty() || cfg.type2_channels.empty())
    throw Error("need at least one Type-1 and one Type-2 block");
  if (!(cfg.truncation.threshold > 0.0))
    throw Error("truncation threshold must be positive (inf disables truncation)");
  if (!(cfg.spl.gamma1 > 0.0 && cfg.spl.gamma1 <= 1.0 && cfg.spl.gamma2 > 0.0 &&
        cfg.spl.gamma2 <= 1.0))
    throw Error("spl gammas must be in (0, 1]");

  // Walk the spatial chain up front so a bad configuration fails loudly.
  int64_t h = cfg.input_h, w = cfg.input_w;
  for (size_t i = 0; i < cfg.type1_channels.size(); ++i) {
    if (h < 2 || w < 2 || h % 2 || w % 2)
      throw Error("spatial extent exhausted at Type-1 block " + std::to_string(i) +
                  " (reached " + std::to_string(h) + "x" + std::to_string(w) + ")");
    h /= 2;
    w /= 2;
  }
  for (size_t i = 0; i + 1 < cfg.type2_channels.size(); ++i) {
    const int64_t win = cfg.spl.window;
    if (win < 1 || h % win || w % win)
      throw Error("spatial extent exhausted at Type-2 block " + std::to_string(i) +
                  " (window " + std::to_string(win) + " on " + std::to_string(h) + "x" +
                  std::to_string(w) + ")");
    h /= win;
    w /= win;
  }
  if (h < 1 || w < 1) throw Error("spatial extent exhausted before the final block");

  CisNet net;
  net.cfg_ = cfg;
  net.hpf_learnable_ = bank.learnable;
  net.hpf_lr_scale_ = bank.learning_rate_scale;

  auto add = [&net](const std::string& name, const std::string& group, Tensor t) {
    t.set_requires_grad(true);
    net.params_.push_back({name, group, std::move(t)});
  };

  Tensor hpf(Shape{cfg.hpf_count, 1, 5, 5});
  for (int64_t i = 0; i < cfg.hpf_count * 25; ++i)
    hpf.data()[i] = bank.kernels.data()[i];
  add("hpf.weight", "hpf", std::move(hpf));

  add("fusion.weight", "fusion", Tensor(Shape{cfg.fusion_channels, cfg.hpf_count, 3, 3}));
  add("fusion.bias", "fusion", Tensor(Shape{cfg.fusion_channels}));
  add("fusion.prelu", "fusion", Tensor(Shape{cfg.fusion_channels}, 0.25));

  int64_t in_ch = cfg.fusion_channels;
  for (size_t i = 0; i < cfg.type1_channels.size(); ++i) {
    const int64_t out_ch = cfg.type1_channels[i];
    const std::string base = "type1." + std::to_string(i);
    add(base + ".weight", "type1", Tensor(Shape{out_ch, in_ch, 3, 3}));
    add(base + ".bias", "type1", Tensor(Shape{out_ch}));
    in_ch = out_ch;
  }
  for (size_t i = 0; i < cfg.type2_channels.size(); ++i) {
    const int64_t out_ch = cfg.type2_channels[i];
    const std::string base = "type2." + std::to_string(i);
    add(base + ".weight", "type2", Tensor(Shape{out_ch, in_ch, 3, 3}));
    add(base + ".bias", "type2", Tensor(Shape{out_ch}));
    in_ch = out_ch;
  }
  add("fc.weight", "fc", Tensor(Shape{2, in_ch}));
  add("fc.bias", "fc", Tensor(Shape{2}));
  return net;
}

Tensor CisNet::param(const std::string& name) const {
  for (const Param& p : params_)
    if (p.name == name) return p.tensor;
  throw Error("no parameter named " + name);
}

int64_t CisNet::param_count() const {
  int64_t n = 0;
  for (const Param& p : params_) n += p.tensor.numel();
  return n;
}

void CisNet::init_weights(uint64_t seed) {
  for (Param& p : params_) {
    if (p.name == "hpf.weight") continue;  // keeps its bank values
    if (p.name == "fusion.prelu") {
      for (int64_t i = 0; i < p.tensor.numel(); ++i) p.tensor.data()[i] = 0.25;
      continue;
    }
    if (p.name.ends_with(".bias")) {
      for (int64_t i = 0; i < p.tensor.numel(); ++i) p.tensor.data()[i] = 0.0;
      continue;
    }
    // fc: fixed variance 0.01; convs: 2 / out_channels.
    const double sigma = p.name == "fc.weight"
                             ? 0.1
                             : std::sqrt(2.0 / static_cast<double>(p.tensor.dim(0)));
    Rng rng = Rng::stream(seed, "init:" + p.name);
    for (int64_t i = 0; i < p.tensor.numel(); ++i) p.tensor.data()[i] = sigma * rng.normal();
  }
}

Tensor CisNet::run_backbone(const Tensor& images, Tensor* cam_pre_features) const {
  if (images.ndim() != 4 || images.dim(1) != 1)
    throw Error("forward: expected [N,1,H,W], got " + shape_str(images.shape()));
  if (images.dim(2) != cfg_.input_h || images.dim(3) != cfg_.input_w)
    throw Error("forward: configured for " + std::to_string(cfg_.input_h) + "x" +
                std::to_string(cfg_.input_w) + " inputs, got " + shape_str(images.shape()));

  Tensor t = conv2d(images, param("hpf.weight"), Tensor(), 1, 1, 2);
  if (std::isfinite(cfg_.truncation.threshold)) {
    t = cfg_.truncation.mode == TruncationMode::kSingleValued
            ? stl(t, cfg_.truncation.threshold)
            : btl(t, cfg_.truncation.threshold);
  }
  t = prelu(conv2d(t, param("fusion.weight"), param("fusion.bias"), 1, 1, 1),
            param("fusion.prelu"));

  for (size_t i = 0; i < cfg_.type1_channels.size(); ++i) {
    const std::string base = "type1." + std::to_string(i);
    t = avg_pool(relu(conv2d(t, param(base + ".weight"), param(base + ".bias"), 1, 1, 1)), 2,
                 2);
  }

  const int64_t dil = cfg_.dilation_type2;
  for (size_t i = 0; i + 1 < cfg_.type2_channels.size(); ++i) {
    const std::string base = "type2." + std::to_string(i);
    Tensor c = relu(conv2d(t, param(base + ".weight"), param(base + ".bias"), 1, dil, dil));
    SublinearConfig inner = cfg_.spl;
    t = spl(c, inner);
  }
  const std::string last = "type2." + std::to_string(cfg_.type2_channels.size() - 1);
  Tensor c = relu(conv2d(t, param(last + ".weight"), param(last + ".bias"), 1, dil, dil));
  Tensor pre = sublinear_map(c, cfg_.spl.gamma1);
  if (cam_pre_features) *cam_pre_features = pre;
  return sublinear_map(global_avg_pool(pre), cfg_.spl.gamma2);
}

Tensor CisNet::forward(const Tensor& images) const {
  Tensor pooled = run_backbone(images, nullptr);
  Tensor flat = reshape(pooled, Shape{pooled.dim(0), pooled.dim(1)});
  return fully_connected(flat, param("fc.weight"), param("fc.bias"));
}

Tensor CisNet::cam_features(const Tensor& images, bool apply_post_map) const {
  autodiff::NoGradGuard no_grad;
  Tensor pre;
  run_backbone(images, &pre);
  return apply_post_map ? sublinear_map(pre, cfg_.spl.gamma2) : pre;
}

namespace {

// Sets `bias` so the per-channel mean of (pre + bias) over batch and space is
// zero, then returns pre + bias.
Tensor apply_calibrated_bias(const Tensor& pre, Tensor& bias, bool update,
                             double* max_abs_mean) {
  const int64_t n = pre.dim(0), c = pre.dim(1), area = pre.numel() / (n * c);
  Tensor out(pre.shape());
  for (int64_t ch = 0; ch < c; ++ch) {
    double mean = 0.0;
    for (int64_t b = 0; b < n; ++b) {
      const double* row = pre.data() + (b * c + ch) * area;
      for (int64_t i = 0; i < area; ++i) mean += row[i];
    }
    mean /= static_cast<double>(n * area);
    if (update) bias.data()[ch] = -mean;
    const double bv = bias.data()[ch];
    double out_mean = 0.0;
    for (int64_t b = 0; b < n; ++b) {
      const double* row = pre.data() + (b * c + ch) * area;
      double* orow = out.data() + (b * c + ch) * area;
      for (int64_t i = 0; i < area; ++i) {
        orow[i] = row[i] + bv;
        out_mean += orow[i];
      }
    }
    out_mean /= static_cast<double>(n * area);
    if (max_abs_mean) *max_abs_mean = std::max(*max_abs_mean, std::fabs(out_mean));
  }
  return out;
}

}  // namespace

std::vector<double> run_calibration(CisNet& net, const Tensor& images, bool update) {
  autodiff::NoGradGuard no_grad;
  if (images.ndim() != 4 || images.dim(0) < 1)
    throw Error("calibrate_biases: init set must be a non-empty [N,1,H,W] batch");
  const NetworkConfig& cfg = net.config();
  std::vector<double> residuals;

  auto biased_layer = [&](const Tensor& input, const std::string& base, int64_t dilation,
                          int64_t padding) {
    Tensor pre = conv2d(input, net.param(base + ".weight"), Tensor(), 1, dilation, padding);
    double resid = 0.0;
    Tensor z;
    for (Param& p : net.params())
      if (p.name == base + ".bias") {
        z = apply_calibrated_bias(pre, p.tensor, update, &resid);
        break;
      }
    residuals.push_back(resid);
    return z;
  };

  Tensor t = conv2d(images, net.param("hpf.weight"), Tensor(), 1, 1, 2);
  if (std::isfinite(cfg.truncation.threshold)) {
    t = cfg.truncation.mode == TruncationMode::kSingleValued
            ? stl(t, cfg.truncation.threshold)
            : btl(t, cfg.truncation.threshold);
  }
  t = prelu(biased_layer(t, "fusion", 1, 1), net.param("fusion.prelu"));
  for (size_t i = 0; i < cfg.type1_channels.size(); ++i)
    t = avg_pool(relu(biased_layer(t, "type1." + std::to_string(i), 1, 1)), 2, 2);
  const int64_t dil = cfg.dilation_type2;
  for (size_t i = 0; i < cfg.type2_channels.size(); ++i) {
    Tensor z = biased_layer(t, "type2." + std::to_string(i), dil, dil);
    Tensor c = relu(z);
    if (i + 1 < cfg.type2_channels.size()) {
      t = spl(c, cfg.spl);
    } else {
      t = sublinear_map(global_avg_pool(sublinear_map(c, cfg.spl.gamma1)), cfg.spl.gamma2);
    }
  }

  // Fully connected layer, same mean-zero rule on the logits.
  Tensor flat = reshape(t, Shape{t.dim(0), t.dim(1)});
  Tensor zero_bias(Shape{2});
  Tensor pre = fully_connected(flat, net.param("fc.weight"), zero_bias);
  double resid = 0.0;
  for (Param& p : net.params())
    if (p.name == "fc.bias")
      apply_calibrated_bias(reshape(pre, Shape{pre.dim(0), 2, 1, 1}), p.tensor, update,
                            &resid);
  residuals.push_back(resid);
  return residuals;
}

void CisNet::calibrate_biases(const Tensor& init_images) {
  run_calibration(*this, init_images, true);
}

std::vector<double> CisNet::calibration_residuals(const Tensor& init_images) const {
  return run_calibration(const_cast<CisNet&>(*this), init_images, false);
}

std::string CisNet::describe() const {
  std::ostringstream out;
  out << "hpf: conv 5x5 pad 2, 1 -> " << cfg_.hpf_count << "\n";
  if (std::isfinite(cfg_.truncation.threshold))
    out << "truncation: "
        << (cfg_.truncation.mode == TruncationMode::kSingleValued ? "single_valued"
                                                                  : "bi_valued")
        << " T = " << cfg_.truncation.threshold << "\n";
  out << "fusion: conv 3x3 + PReLU, " << cfg_.hpf_count << " -> " << cfg_.fusion_channels
      << "\n";
  int64_t in_ch = cfg_.fusion_channels;
  for (size_t i = 0; i < cfg_.type1_channels.size(); ++i) {
    out << "type1." << i << ": conv 3x3 + ReLU + avg_pool 2, " << in_ch << " -> "
        << cfg_.type1_channels[i] << "\n";
    in_ch = cfg_.type1_channels[i];
  }
  for (size_t i = 0; i < cfg_.type2_channels.size(); ++i) {
    const bool last = i + 1 == cfg_.type2_channels.size();
    out << "type2." << i << ": dilated conv 3x3 (d=" << cfg_.dilation_type2
        << ") + ReLU + SPL(" << cfg_.spl.gamma1 << "," << cfg_.spl.gamma2 << ","
        << (last ? std::string("global") : std::to_string(cfg_.spl.window)) << "), " << in_ch
        << " -> " << cfg_.type2_channels[i] << "\n";
    in_ch = cfg_.type2_channels[i];
  }
  out << "fc: " << in_ch << " -> 2\n";
  return out.str();
}

std::vector<double> stego_scores(const CisNet& net, const std::vector<Tensor>& images,
                                 int64_t batch_size) {
  autodiff::NoGradGuard no_grad;
  std::vector<double> scores;
  scores.reserve(images.size());
  const int64_t h = net.config().input_h, w = net.config().input_w;
  for (size_t start = 0; start < images.size(); start += static_cast<size_t>(batch_size)) {
    const int64_t count =
        std::min<int64_t>(batch_size, static_cast<int64_t>(images.size() - start));
    Tensor batch(Shape{count, 1, h, w});
    for (int64_t i = 0; i < count; ++i) {
      const Tensor& img = images[start + static_cast<size_t>(i)];
      if (img.numel() != h * w)
        throw Error("stego_scores: image extent mismatch " + shape_str(img.shape()));
      std::copy(img.data(), img.data() + h * w, batch.data() + i * h * w);
    }
    Tensor logits = net.forward(batch);
    std::vector<double> probs = softmax_rows(logits);
    for (int64_t i = 0; i < count; ++i) scores.push_back(probs[i * 2 + 1]);
  }
  return scores;
}

}  // namespace cisnet
