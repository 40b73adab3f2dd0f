#ifndef CISNET_MODEL_HPP
#define CISNET_MODEL_HPP

#include <string>
#include <vector>

#include "cisnet/srm.hpp"
#include "cisnet/suppression.hpp"
#include "cisnet/tensor.hpp"

namespace cisnet {

/// Architecture description. The stack is
///   HPF -> truncation -> fusion conv (PReLU)
///   -> [conv + ReLU + avg_pool(2)] per type1 channel entry
///   -> [dilated conv + ReLU + SPL] per type2 channel entry
///   -> fully connected to 2 logits,
/// with the last SPL always pooling the whole remaining map.
struct NetworkConfig {
  int64_t input_h = 64;
  int64_t input_w = 64;
  TruncationConfig truncation;  // threshold = infinity disables truncation
  SublinearConfig spl{1.0, 0.9, 2};  // window applies to the non-final SPLs
  int64_t fusion_channels = 32;
  std::vector<int64_t> type1_channels{32, 64};
  std::vector<int64_t> type2_channels{64, 128};
  int64_t dilation_type2 = 2;
  int64_t hpf_count = 20;  // leading kernels taken from the bank
  uint64_t seed = 0;

  std::string serialize() const;
  static NetworkConfig parse(const std::string& text);
  uint64_t fingerprint() const;
};

struct Param {
  std::string name;
  std::string group;  // hpf | fusion | type1 | type2 | fc
  Tensor tensor;
};

class CisNet {
public:
  static CisNet build(const NetworkConfig& cfg);
  static CisNet build(const NetworkConfig& cfg, const FilterBank& bank);

  const NetworkConfig& config() const { return cfg_; }

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  Tensor param(const std::string& name) const;
  int64_t param_count() const;

  bool hpf_learnable() const { return hpf_learnable_; }
  double hpf_lr_scale() const { return hpf_lr_scale_; }

  /// He-style init: conv weights Normal(0, 2/out_channels), fully connected
  /// Normal(0, 0.01), biases zero, PReLU slopes 0.25. The HPF kernels keep
  /// their bank values. Deterministic per seed.
  void init_weights(uint64_t seed);

  /// images [N,1,H,W] -> logits [N,2]
  Tensor forward(const Tensor& images) const;

  /// Feature maps feeding the final global pool (after the pre-map when
  /// apply_post_map is false, after the post-map as well when true).
  Tensor cam_features(const Tensor& images, bool apply_post_map) const;

  /// Mean-only shared-normalization: walking the stack in order, set each
  /// conv/fc bias so the mean pre-activation over the init set is zero.
  /// Later layers see earlier calibrated outputs. Idempotent.
  void calibrate_biases(const Tensor& init_images);

  /// Max |per-channel mean| of each calibrated layer's post-bias output over
  /// the given set, in calibration order. All ~0 after calibrate_biases.
  std::vector<double> calibration_residuals(const Tensor& init_images) const;

  /// One line per block: name, operation, tensor shapes.
  std::string describe() const;

private:
  struct StageOutputs;
  Tensor run_backbone(const Tensor& images, Tensor* cam_pre_features) const;

  NetworkConfig cfg_;
  std::vector<Param> params_;
  bool hpf_learnable_ = true;
  double hpf_lr_scale_ = 1.0;
};

/// Softmax probability of the stego class (index 1) per image.
std::vector<double> stego_scores(const CisNet& net, const std::vector<Tensor>& images,
                                 int64_t batch_size = 16);

}  // namespace cisnet

#endif
