#ifndef CISNET_OPS_HPP
#define CISNET_OPS_HPP

#include <cstdint>
#include <vector>

#include "cisnet/tensor.hpp"

namespace cisnet {

struct ConvSpec {
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int64_t kernel_size = 0;
  int64_t stride = 1;
  int64_t dilation = 1;
  int64_t padding = 0;
  bool has_bias = false;
};

/// floor((extent + 2*padding - dilation*(kernel-1) - 1) / stride) + 1
int64_t conv_output_extent(int64_t extent, int64_t padding, int64_t dilation,
                           int64_t kernel, int64_t stride);

/// 2-D cross-correlation with zero padding.
/// input [N,Cin,H,W], weight [Cout,Cin,k,k], bias [Cout] or undefined.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              const ConvSpec& spec);
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int64_t stride = 1, int64_t dilation = 1, int64_t padding = 0);

/// Exact average pooling: stride must equal window and extents must divide.
Tensor avg_pool(const Tensor& input, int64_t window, int64_t stride);
/// Pools the whole spatial map to 1x1.
Tensor global_avg_pool(const Tensor& input);

/// input [N,D], weight [K,D], bias [K] -> [N,K]
Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& x);

/// Elementwise map with a caller-supplied local derivative,
/// deriv(x, y) evaluated at the forward input/output pair.
Tensor map_unary(const Tensor& x, double (*f)(double), double (*deriv)(double, double));

Tensor reshape(const Tensor& x, Shape new_shape);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Mean softmax cross-entropy over the batch; logits [N,K], labels in [0,K).
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int64_t>& labels);

/// Softmax probabilities per row (no graph participation needed by callers).
std::vector<double> softmax_rows(const Tensor& logits);

namespace detail {
/// C[M,N] += A[M,K] * B[K,N], row-major, fixed blocked accumulation order.
void gemm_accum(int64_t m, int64_t k, int64_t n, const double* a, const double* b, double* c);
}  // namespace detail

}  // namespace cisnet

#endif
