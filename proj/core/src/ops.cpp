#include "cisnet/ops.hpp"

#include <algorithm>
#include <cmath>

namespace cisnet {

int64_t conv_output_extent(int64_t extent, int64_t padding, int64_t dilation,
                           int64_t kernel, int64_t stride) {
  return (extent + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
}

namespace detail {

void gemm_accum(int64_t m_count, int64_t k_count, int64_t n_count,
                const double* a, const double* b, double* c) {
  constexpr int64_t kBlockK = 32;
  constexpr int64_t kBlockN = 1024;
  for (int64_t nb = 0; nb < n_count; nb += kBlockN) {
    const int64_t nend = std::min(nb + kBlockN, n_count);
    for (int64_t kb = 0; kb < k_count; kb += kBlockK) {
      const int64_t kend = std::min(kb + kBlockK, k_count);
      for (int64_t m = 0; m < m_count; ++m) {
        const double* arow = a + m * k_count;
        double* crow = c + m * n_count;
        for (int64_t k = kb; k < kend; ++k) {
          const double av = arow[k];
          const double* brow = b + k * n_count;
          for (int64_t n = nb; n < nend; ++n) crow[n] += av * brow[n];
        }
      }
    }
  }
}

// C[M,K] += A[M,N] * B[K,N]^T (dot products over N).
static void gemm_abt_accum(int64_t m_count, int64_t n_count, int64_t k_count,
                           const double* a, const double* b, double* c) {
  for (int64_t m = 0; m < m_count; ++m) {
    const double* arow = a + m * n_count;
    double* crow = c + m * k_count;
    for (int64_t k = 0; k < k_count; ++k) {
      const double* brow = b + k * n_count;
      double acc = 0.0;
      for (int64_t n = 0; n < n_count; ++n) acc += arow[n] * brow[n];
      crow[k] += acc;
    }
  }
}

// C[K,N] += A[M,K]^T * B[M,N].
static void gemm_atb_accum(int64_t m_count, int64_t k_count, int64_t n_count,
                           const double* a, const double* b, double* c) {
  for (int64_t m = 0; m < m_count; ++m) {
    const double* arow = a + m * k_count;
    const double* brow = b + m * n_count;
    for (int64_t k = 0; k < k_count; ++k) {
      const double av = arow[k];
      double* crow = c + k * n_count;
      for (int64_t n = 0; n < n_count; ++n) crow[n] += av * brow[n];
    }
  }
}

}  // namespace detail

namespace {

struct ConvDims {
  int64_t batch, cin, h, w, cout, k, ho, wo;
  int64_t patch() const { return cin * k * k; }
  int64_t area_out() const { return ho * wo; }
};

ConvDims conv_dims(const Tensor& input, const Tensor& weight, const Tensor& bias,
                   const ConvSpec& spec) {
  if (input.ndim() != 4) throw Error("conv2d: input must be 4-D, got " + shape_str(input.shape()));
  if (weight.ndim() != 4) throw Error("conv2d: weight must be 4-D, got " + shape_str(weight.shape()));
  ConvDims d{};
  d.batch = input.dim(0);
  d.cin = input.dim(1);
  d.h = input.dim(2);
  d.w = input.dim(3);
  d.cout = weight.dim(0);
  d.k = weight.dim(2);
  if (weight.dim(3) != d.k) throw Error("conv2d: kernel must be square");
  if (weight.dim(1) != d.cin)
    throw Error("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                " input channels, input has " + std::to_string(d.cin));
  if (spec.in_channels != d.cin || spec.out_channels != d.cout || spec.kernel_size != d.k)
    throw Error("conv2d: spec does not match weight shape");
  if (spec.stride < 1 || spec.dilation < 1 || spec.padding < 0)
    throw Error("conv2d: stride/dilation must be >= 1 and padding >= 0");
  if (spec.has_bias) {
    if (!bias.defined() || bias.ndim() != 1 || bias.dim(0) != d.cout)
      throw Error("conv2d: bias must have shape [out_channels]");
  } else if (bias.defined()) {
    throw Error("conv2d: bias passed but spec.has_bias is false");
  }
  d.ho = conv_output_extent(d.h, spec.padding, spec.dilation, d.k, spec.stride);
  d.wo = conv_output_extent(d.w, spec.padding, spec.dilation, d.k, spec.stride);
  if (d.ho < 1 || d.wo < 1)
    throw Error("conv2d: output extent < 1 for input " + shape_str(input.shape()));
  return d;
}

void im2col(const double* img, const ConvDims& d, const ConvSpec& spec, double* cols) {
  const int64_t area = d.area_out();
  for (int64_t ci = 0; ci < d.cin; ++ci) {
    const double* channel = img + ci * d.h * d.w;
    for (int64_t ky = 0; ky < d.k; ++ky) {
      for (int64_t kx = 0; kx < d.k; ++kx) {
        double* row = cols + ((ci * d.k + ky) * d.k + kx) * area;
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          const int64_t iy = oy * spec.stride - spec.padding + ky * spec.dilation;
          double* out = row + oy * d.wo;
          if (iy < 0 || iy >= d.h) {
            std::fill(out, out + d.wo, 0.0);
            continue;
          }
          const double* in_row = channel + iy * d.w;
          for (int64_t ox = 0; ox < d.wo; ++ox) {
            const int64_t ix = ox * spec.stride - spec.padding + kx * spec.dilation;
            out[ox] = (ix >= 0 && ix < d.w) ? in_row[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_accum(const double* cols, const ConvDims& d, const ConvSpec& spec, double* img) {
  const int64_t area = d.area_out();
  for (int64_t ci = 0; ci < d.cin; ++ci) {
    double* channel = img + ci * d.h * d.w;
    for (int64_t ky = 0; ky < d.k; ++ky) {
      for (int64_t kx = 0; kx < d.k; ++kx) {
        const double* row = cols + ((ci * d.k + ky) * d.k + kx) * area;
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          const int64_t iy = oy * spec.stride - spec.padding + ky * spec.dilation;
          if (iy < 0 || iy >= d.h) continue;
          const double* in_row = row + oy * d.wo;
          double* out_row = channel + iy * d.w;
          for (int64_t ox = 0; ox < d.wo; ++ox) {
            const int64_t ix = ox * spec.stride - spec.padding + kx * spec.dilation;
            if (ix >= 0 && ix < d.w) out_row[ix] += in_row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              const ConvSpec& spec) {
  const ConvDims d = conv_dims(input, weight, bias, spec);
  const int64_t area = d.area_out();
  const int64_t patch = d.patch();

  std::vector<double> out(static_cast<size_t>(d.batch * d.cout * area), 0.0);
  std::vector<double> cols(static_cast<size_t>(patch * area));
  for (int64_t n = 0; n < d.batch; ++n) {
    im2col(input.data() + n * d.cin * d.h * d.w, d, spec, cols.data());
    detail::gemm_accum(d.cout, patch, area, weight.data(), cols.data(),
                       out.data() + n * d.cout * area);
  }
  if (spec.has_bias) {
    for (int64_t n = 0; n < d.batch; ++n)
      for (int64_t co = 0; co < d.cout; ++co) {
        const double b = bias.data()[co];
        double* row = out.data() + (n * d.cout + co) * area;
        for (int64_t p = 0; p < area; ++p) row[p] += b;
      }
  }

  std::vector<Tensor> parents{input, weight};
  if (spec.has_bias) parents.push_back(bias);
  Tensor in_saved = input;
  Tensor w_saved = weight;
  auto backprop = [d, spec, in_saved, w_saved](TensorImpl& self) {
    const int64_t area = d.area_out();
    const int64_t patch = d.patch();
    TensorImpl* in_impl = self.parents[0].get();
    TensorImpl* w_impl = self.parents[1].get();
    const bool need_dx = in_impl->requires_grad;
    const bool need_dw = w_impl->requires_grad;

    std::vector<double> cols;
    std::vector<double> dcols;
    if (need_dw) cols.resize(static_cast<size_t>(patch * area));
    if (need_dx) dcols.resize(static_cast<size_t>(patch * area));

    for (int64_t n = 0; n < d.batch; ++n) {
      const double* g = self.grad.data() + n * d.cout * area;
      if (need_dw) {
        im2col(in_saved.data() + n * d.cin * d.h * d.w, d, spec, cols.data());
        detail::gemm_abt_accum(d.cout, area, patch, g, cols.data(),
                               w_impl->ensure_grad().data());
      }
      if (need_dx) {
        std::fill(dcols.begin(), dcols.end(), 0.0);
        detail::gemm_atb_accum(d.cout, patch, area, w_saved.data(), g, dcols.data());
        col2im_accum(dcols.data(), d, spec,
                     in_impl->ensure_grad().data() + n * d.cin * d.h * d.w);
      }
    }
    if (spec.has_bias && self.parents[2]->requires_grad) {
      double* db = self.parents[2]->ensure_grad().data();
      for (int64_t n = 0; n < d.batch; ++n)
        for (int64_t co = 0; co < d.cout; ++co) {
          const double* row = self.grad.data() + (n * d.cout + co) * area;
          double acc = 0.0;
          for (int64_t p = 0; p < area; ++p) acc += row[p];
          db[co] += acc;
        }
    }
  };
  return autodiff::make_op_result(Shape{d.batch, d.cout, d.ho, d.wo}, std::move(out),
                                  std::move(parents), std::move(backprop));
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int64_t stride, int64_t dilation, int64_t padding) {
  ConvSpec spec;
  spec.in_channels = weight.dim(1);
  spec.out_channels = weight.dim(0);
  spec.kernel_size = weight.dim(2);
  spec.stride = stride;
  spec.dilation = dilation;
  spec.padding = padding;
  spec.has_bias = bias.defined();
  return conv2d(input, weight, bias, spec);
}

namespace {
Tensor avg_pool_rect(const Tensor& input, int64_t wh, int64_t ww) {
  if (input.ndim() != 4) throw Error("avg_pool: input must be 4-D");
  const int64_t n_count = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (wh < 1 || ww < 1) throw Error("avg_pool: window must be positive");
  if (h % wh != 0 || w % ww != 0)
    throw Error("avg_pool: extents " + std::to_string(h) + "x" + std::to_string(w) +
                " not divisible by window " + std::to_string(wh) + "x" + std::to_string(ww));
  const int64_t ho = h / wh, wo = w / ww;
  const double inv = 1.0 / static_cast<double>(wh * ww);

  std::vector<double> out(static_cast<size_t>(n_count * c * ho * wo));
  const double* in = input.data();
  for (int64_t nc = 0; nc < n_count * c; ++nc) {
    const double* plane = in + nc * h * w;
    double* oplane = out.data() + nc * ho * wo;
    for (int64_t oy = 0; oy < ho; ++oy)
      for (int64_t ox = 0; ox < wo; ++ox) {
        double acc = 0.0;
        for (int64_t dy = 0; dy < wh; ++dy) {
          const double* row = plane + (oy * wh + dy) * w + ox * ww;
          for (int64_t dx = 0; dx < ww; ++dx) acc += row[dx];
        }
        oplane[oy * wo + ox] = acc * inv;
      }
  }

  auto backprop = [n_count, c, h, w, wh, ww, ho, wo, inv](TensorImpl& self) {
    TensorImpl* in_impl = self.parents[0].get();
    if (!in_impl->requires_grad) return;
    double* dx = in_impl->ensure_grad().data();
    for (int64_t nc = 0; nc < n_count * c; ++nc) {
      const double* gplane = self.grad.data() + nc * ho * wo;
      double* dplane = dx + nc * h * w;
      for (int64_t oy = 0; oy < ho; ++oy)
        for (int64_t ox = 0; ox < wo; ++ox) {
          const double g = gplane[oy * wo + ox] * inv;
          for (int64_t dy = 0; dy < wh; ++dy) {
            double* row = dplane + (oy * wh + dy) * w + ox * ww;
            for (int64_t dx2 = 0; dx2 < ww; ++dx2) row[dx2] += g;
          }
        }
    }
  };
  return autodiff::make_op_result(Shape{n_count, c, ho, wo}, std::move(out), {input},
                                  std::move(backprop));
}
}  // namespace

Tensor avg_pool(const Tensor& input, int64_t window, int64_t stride) {
  if (stride != window)
    throw Error("avg_pool: only the exact mode (stride == window) is supported");
  return avg_pool_rect(input, window, window);
}

Tensor global_avg_pool(const Tensor& input) {
  return avg_pool_rect(input, input.dim(2), input.dim(3));
}

Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.ndim() != 2 || weight.ndim() != 2)
    throw Error("fully_connected: input and weight must be 2-D");
  const int64_t n_count = input.dim(0), d_in = input.dim(1), k_out = weight.dim(0);
  if (weight.dim(1) != d_in)
    throw Error("fully_connected: weight expects " + std::to_string(weight.dim(1)) +
                " features, input has " + std::to_string(d_in));
  if (!bias.defined() || bias.ndim() != 1 || bias.dim(0) != k_out)
    throw Error("fully_connected: bias must have shape [out_features]");

  std::vector<double> out(static_cast<size_t>(n_count * k_out));
  for (int64_t n = 0; n < n_count; ++n) {
    const double* x = input.data() + n * d_in;
    for (int64_t k = 0; k < k_out; ++k) {
      const double* wrow = weight.data() + k * d_in;
      double acc = bias.data()[k];
      for (int64_t j = 0; j < d_in; ++j) acc += x[j] * wrow[j];
      out[n * k_out + k] = acc;
    }
  }

  Tensor in_saved = input;
  Tensor w_saved = weight;
  auto backprop = [n_count, d_in, k_out, in_saved, w_saved](TensorImpl& self) {
    TensorImpl* in_impl = self.parents[0].get();
    TensorImpl* w_impl = self.parents[1].get();
    TensorImpl* b_impl = self.parents[2].get();
    for (int64_t n = 0; n < n_count; ++n) {
      const double* g = self.grad.data() + n * k_out;
      if (in_impl->requires_grad) {
        double* dx = in_impl->ensure_grad().data() + n * d_in;
        for (int64_t k = 0; k < k_out; ++k) {
          const double* wrow = w_saved.data() + k * d_in;
          const double gv = g[k];
          for (int64_t j = 0; j < d_in; ++j) dx[j] += gv * wrow[j];
        }
      }
      if (w_impl->requires_grad) {
        double* dw = w_impl->ensure_grad().data();
        const double* x = in_saved.data() + n * d_in;
        for (int64_t k = 0; k < k_out; ++k) {
          const double gv = g[k];
          double* dwrow = dw + k * d_in;
          for (int64_t j = 0; j < d_in; ++j) dwrow[j] += gv * x[j];
        }
      }
      if (b_impl->requires_grad) {
        double* db = b_impl->ensure_grad().data();
        for (int64_t k = 0; k < k_out; ++k) db[k] += g[k];
      }
    }
  };
  return autodiff::make_op_result(Shape{n_count, k_out}, std::move(out),
                                  {input, weight, bias}, std::move(backprop));
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.impl()->value);
  for (double& v : out)
    if (v < 0.0) v = 0.0;
  Tensor x_saved = x;
  auto backprop = [x_saved](TensorImpl& self) {
    TensorImpl* in_impl = self.parents[0].get();
    if (!in_impl->requires_grad) return;
    double* dx = in_impl->ensure_grad().data();
    const double* xv = x_saved.data();
    const double* g = self.grad.data();
    const size_t n = self.grad.size();
    for (size_t i = 0; i < n; ++i)
      if (xv[i] > 0.0) dx[i] += g[i];
  };
  return autodiff::make_op_result(x.shape(), std::move(out), {x}, std::move(backprop));
}

Tensor map_unary(const Tensor& x, double (*f)(double), double (*deriv)(double, double)) {
  std::vector<double> out(x.impl()->value.size());
  const double* xv = x.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  Tensor x_saved = x;
  auto backprop = [x_saved, deriv](TensorImpl& self) {
    TensorImpl* in_impl = self.parents[0].get();
    if (!in_impl->requires_grad) return;
    double* dx = in_impl->ensure_grad().data();
    const double* xv = x_saved.data();
    const double* g = self.grad.data();
    for (size_t i = 0; i < self.grad.size(); ++i)
      dx[i] += g[i] * deriv(xv[i], self.value[i]);
  };
  return autodiff::make_op_result(x.shape(), std::move(out), {x}, std::move(backprop));
}

Tensor reshape(const Tensor& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.numel())
    throw Error("reshape: " + shape_str(x.shape()) + " -> " + shape_str(new_shape) +
                " changes element count");
  std::vector<double> out(x.impl()->value);
  auto backprop = [](TensorImpl& self) {
    TensorImpl* in_impl = self.parents[0].get();
    if (!in_impl->requires_grad) return;
    double* dx = in_impl->ensure_grad().data();
    const double* g = self.grad.data();
    for (size_t i = 0; i < self.grad.size(); ++i) dx[i] += g[i];
  };
  return autodiff::make_op_result(std::move(new_shape), std::move(out), {x},
                                  std::move(backprop));
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw Error("add: shape mismatch");
  std::vector<double> out(a.impl()->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto backprop = [](TensorImpl& self) {
    for (int p = 0; p < 2; ++p) {
      TensorImpl* impl = self.parents[p].get();
      if (!impl->requires_grad) continue;
      double* d = impl->ensure_grad().data();
      for (size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
    }
  };
  return autodiff::make_op_result(a.shape(), std::move(out), {a, b}, std::move(backprop));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw Error("mul: shape mismatch");
  std::vector<double> out(a.impl()->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  Tensor a_saved = a, b_saved = b;
  auto backprop = [a_saved, b_saved](TensorImpl& self) {
    TensorImpl* ai = self.parents[0].get();
    TensorImpl* bi = self.parents[1].get();
    if (ai->requires_grad) {
      double* d = ai->ensure_grad().data();
      for (size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * b_saved.data()[i];
    }
    if (bi->requires_grad) {
      double* d = bi->ensure_grad().data();
      for (size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * a_saved.data()[i];
    }
  };
  return autodiff::make_op_result(a.shape(), std::move(out), {a, b}, std::move(backprop));
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.impl()->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor;
  auto backprop = [factor](TensorImpl& self) {
    TensorImpl* impl = self.parents[0].get();
    if (!impl->requires_grad) return;
    double* d = impl->ensure_grad().data();
    for (size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * factor;
  };
  return autodiff::make_op_result(x.shape(), std::move(out), {x}, std::move(backprop));
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.impl()->value) acc += v;
  auto backprop = [](TensorImpl& self) {
    TensorImpl* impl = self.parents[0].get();
    if (!impl->requires_grad) return;
    double* d = impl->ensure_grad().data();
    const double g = self.grad[0];
    for (size_t i = 0; i < impl->value.size(); ++i) d[i] += g;
  };
  return autodiff::make_op_result(Shape{1}, {acc}, {x}, std::move(backprop));
}

Tensor mean(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.numel());
  double acc = 0.0;
  for (double v : x.impl()->value) acc += v;
  auto backprop = [inv](TensorImpl& self) {
    TensorImpl* impl = self.parents[0].get();
    if (!impl->requires_grad) return;
    double* d = impl->ensure_grad().data();
    const double g = self.grad[0] * inv;
    for (size_t i = 0; i < impl->value.size(); ++i) d[i] += g;
  };
  return autodiff::make_op_result(Shape{1}, {acc * inv}, {x}, std::move(backprop));
}

std::vector<double> softmax_rows(const Tensor& logits) {
  const int64_t n_count = logits.dim(0), k_count = logits.dim(1);
  std::vector<double> probs(static_cast<size_t>(n_count * k_count));
  for (int64_t n = 0; n < n_count; ++n) {
    const double* row = logits.data() + n * k_count;
    double hi = row[0];
    for (int64_t k = 1; k < k_count; ++k) hi = std::max(hi, row[k]);
    double denom = 0.0;
    for (int64_t k = 0; k < k_count; ++k) denom += std::exp(row[k] - hi);
    for (int64_t k = 0; k < k_count; ++k)
      probs[n * k_count + k] = std::exp(row[k] - hi) / denom;
  }
  return probs;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int64_t>& labels) {
  if (logits.ndim() != 2) throw Error("softmax_cross_entropy: logits must be 2-D");
  const int64_t n_count = logits.dim(0), k_count = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != n_count)
    throw Error("softmax_cross_entropy: label count mismatch");
  for (int64_t lab : labels)
    if (lab < 0 || lab >= k_count) throw Error("softmax_cross_entropy: label out of range");

  std::vector<double> probs = softmax_rows(logits);
  double loss = 0.0;
  for (int64_t n = 0; n < n_count; ++n)
    loss -= std::log(probs[n * k_count + labels[n]]);
  loss /= static_cast<double>(n_count);

  auto labels_copy = labels;
  auto backprop = [probs = std::move(probs), labels = std::move(labels_copy), n_count,
                   k_count](TensorImpl& self) {
    TensorImpl* impl = self.parents[0].get();
    if (!impl->requires_grad) return;
    double* d = impl->ensure_grad().data();
    const double g = self.grad[0] / static_cast<double>(n_count);
    for (int64_t n = 0; n < n_count; ++n)
      for (int64_t k = 0; k < k_count; ++k) {
        const double onehot = (k == labels[n]) ? 1.0 : 0.0;
        d[n * k_count + k] += g * (probs[n * k_count + k] - onehot);
      }
  };
  return autodiff::make_op_result(Shape{1}, {loss}, {logits}, std::move(backprop));
}

}  // namespace cisnet
