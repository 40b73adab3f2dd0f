#ifndef CISNET_SRM_HPP
#define CISNET_SRM_HPP

#include <string>
#include <vector>

#include "cisnet/tensor.hpp"

namespace cisnet {

/// Fixed-but-fine-tunable high-pass front end: twenty 5x5 kernels drawn from
/// the SRM residual families (second order, third order, KB, KV, EDGE).
struct FilterBank {
  Tensor kernels;  // [20,1,5,5]
  std::vector<std::string> names;
  bool learnable = true;
  double learning_rate_scale = 1.0;

  int64_t count() const { return kernels.defined() ? kernels.dim(0) : 0; }
};

/// The canonical bank: 4 second-order stencils ([1,-2,1]/2 in four
/// orientations), 8 third-order ([1,-3,3,-1]/4, four orientations, both
/// directions), KB (3x3, /4), KV (5x5, /16) and six EDGE predictors (three
/// orientations each of the 3x3 and 5x5 edge families). Everything is
/// embedded centered in 5x5 with zeros. All divisors are powers of two so
/// every kernel is exactly representable and sums to exactly zero.
FilterBank build_bank();

/// Plain-text asset: "srm-bank v1 count=N" header, then per kernel a name
/// line followed by 5 rows of 5 space-separated decimal values.
void save_filter_bank(const FilterBank& bank, const std::string& path);
FilterBank load_filter_bank(const std::string& path);

/// 20-channel residual extraction: conv2d with padding 2, no bias.
/// image [N,1,H,W] -> [N,20,H,W].
Tensor hpf_forward(const Tensor& image, const FilterBank& bank);

}  // namespace cisnet

#endif
