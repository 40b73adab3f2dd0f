#include "cisnet/suppression.hpp"

#include <cmath>

namespace cisnet {

namespace {
constexpr double kDerivClamp = 1e6;

void check_threshold(double threshold) {
  if (!(threshold > 0.0)) throw Error("truncation threshold must be positive");
}
}  // namespace

Tensor btl(const Tensor& x, double threshold) {
  check_threshold(threshold);
  std::vector<double> out(x.impl()->value.size());
  const double* xv = x.data();
  for (size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    out[i] = v < -threshold ? -threshold : (v > threshold ? threshold : v);
  }
  Tensor x_saved = x;
  auto backprop = [x_saved, threshold](TensorImpl& self) {
    TensorImpl* impl = self.parents[0].get();
    if (!impl->requires_grad) return;
    double* d = impl->ensure_grad().data();
    const double* xv = x_saved.data();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (xv[i] > -threshold && xv[i] < threshold) d[i] += self.grad[i];
  };
  return autodiff::make_op_result(x.shape(), std::move(out), {x}, std::move(backprop));
}

Tensor stl(const Tensor& x, double threshold) {
  check_threshold(threshold);
  std::vector<double> out(x.impl()->value.size());
  const double* xv = x.data();
  for (size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    out[i] = (v < -threshold || v > threshold) ? threshold : v;
  }
  Tensor x_saved = x;
  auto backprop = [x_saved, threshold](TensorImpl& self) {
    TensorImpl* impl = self.parents[0].get();
    if (!impl->requires_grad) return;
    double* d = impl->ensure_grad().data();
    const double* xv = x_saved.data();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (xv[i] > -threshold && xv[i] < threshold) d[i] += self.grad[i];
  };
  return autodiff::make_op_result(x.shape(), std::move(out), {x}, std::move(backprop));
}

Tensor sublinear_map(const Tensor& x, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("sublinear gamma must be in (0, 1]");
  if (gamma == 1.0) {
    // Identity, bit for bit. Keeps SPL(1,1) exactly equal to average pooling.
    std::vector<double> out(x.impl()->value);
    auto backprop = [](TensorImpl& self) {
      TensorImpl* impl = self.parents[0].get();
      if (!impl->requires_grad) return;
      double* d = impl->ensure_grad().data();
      for (size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
    };
    return autodiff::make_op_result(x.shape(), std::move(out), {x}, std::move(backprop));
  }

  std::vector<double> out(x.impl()->value.size());
  const double* xv = x.data();
  for (size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    out[i] = v == 0.0 ? 0.0 : std::copysign(std::pow(std::fabs(v), gamma), v);
  }
  Tensor x_saved = x;
  auto backprop = [x_saved, gamma](TensorImpl& self) {
    TensorImpl* impl = self.parents[0].get();
    if (!impl->requires_grad) return;
    double* d = impl->ensure_grad().data();
    const double* xv = x_saved.data();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double v = xv[i];
      if (v == 0.0) continue;
      double local = gamma * std::pow(std::fabs(v), gamma - 1.0);
      if (local > kDerivClamp) local = kDerivClamp;
      d[i] += self.grad[i] * local;
    }
  };
  return autodiff::make_op_result(x.shape(), std::move(out), {x}, std::move(backprop));
}

Tensor spl(const Tensor& x, const SublinearConfig& cfg) {
  Tensor pre = sublinear_map(x, cfg.gamma1);
  Tensor pooled = cfg.window == kGlobalWindow ? global_avg_pool(pre)
                                              : avg_pool(pre, cfg.window, cfg.window);
  return sublinear_map(pooled, cfg.gamma2);
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
  if (x.ndim() != 4) throw Error("prelu: input must be 4-D");
  const int64_t n_count = x.dim(0), c = x.dim(1), area = x.dim(2) * x.dim(3);
  if (slope.ndim() != 1 || slope.dim(0) != c)
    throw Error("prelu: expected one slope per channel (" + std::to_string(c) + "), got " +
                shape_str(slope.shape()));

  std::vector<double> out(x.impl()->value.size());
  const double* xv = x.data();
  for (int64_t n = 0; n < n_count; ++n)
    for (int64_t ch = 0; ch < c; ++ch) {
      const double a = slope.data()[ch];
      const double* in = xv + (n * c + ch) * area;
      double* o = out.data() + (n * c + ch) * area;
      for (int64_t i = 0; i < area; ++i) o[i] = in[i] >= 0.0 ? in[i] : a * in[i];
    }

  Tensor x_saved = x;
  Tensor a_saved = slope;
  auto backprop = [x_saved, a_saved, n_count, c, area](TensorImpl& self) {
    TensorImpl* x_impl = self.parents[0].get();
    TensorImpl* a_impl = self.parents[1].get();
    const double* xv = x_saved.data();
    for (int64_t n = 0; n < n_count; ++n)
      for (int64_t ch = 0; ch < c; ++ch) {
        const double a = a_saved.data()[ch];
        const double* in = xv + (n * c + ch) * area;
        const double* g = self.grad.data() + (n * c + ch) * area;
        if (x_impl->requires_grad) {
          double* dx = x_impl->ensure_grad().data() + (n * c + ch) * area;
          for (int64_t i = 0; i < area; ++i) dx[i] += g[i] * (in[i] >= 0.0 ? 1.0 : a);
        }
        if (a_impl->requires_grad) {
          double acc = 0.0;
          for (int64_t i = 0; i < area; ++i)
            if (in[i] < 0.0) acc += g[i] * in[i];
          a_impl->ensure_grad()[static_cast<size_t>(ch)] += acc;
        }
      }
  };
  return autodiff::make_op_result(x.shape(), std::move(out), {x, slope}, std::move(backprop));
}

}  // namespace cisnet
