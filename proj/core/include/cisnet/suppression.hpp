#ifndef CISNET_SUPPRESSION_HPP
#define CISNET_SUPPRESSION_HPP

#include "cisnet/ops.hpp"
#include "cisnet/tensor.hpp"

namespace cisnet {

enum class TruncationMode { kSingleValued, kBiValued };

struct TruncationConfig {
  double threshold = 5.0;
  TruncationMode mode = TruncationMode::kSingleValued;
};

/// Window value meaning "pool the whole remaining spatial map".
inline constexpr int64_t kGlobalWindow = 0;

struct SublinearConfig {
  double gamma1 = 1.0;
  double gamma2 = 0.9;
  int64_t window = kGlobalWindow;
};

/// Bi-valued truncation: clamp to [-T, T].
/// Local derivative is 1 strictly inside the interval and 0 at or beyond |x| = T.
Tensor btl(const Tensor& x, double threshold);

/// Single-valued truncation: values in [-T, T] pass through, everything with
/// |x| > T maps to +T. Same subgradient convention as btl.
Tensor stl(const Tensor& x, double threshold);

/// |x|^gamma * sgn(x) elementwise, 0 < gamma <= 1. gamma == 1 is an exact
/// identity. The derivative gamma*|x|^(gamma-1) is 0 at x == 0 and clamped to
/// 1e6 in magnitude elsewhere.
Tensor sublinear_map(const Tensor& x, double gamma);

/// Sublinear pooling: post-map(avg_pool(pre-map(x))).
Tensor spl(const Tensor& x, const SublinearConfig& cfg);

/// Parametric ReLU with one learnable slope per channel; input [N,C,H,W],
/// slope [C]. Both x and the slope receive gradients.
Tensor prelu(const Tensor& x, const Tensor& slope);

}  // namespace cisnet

#endif
