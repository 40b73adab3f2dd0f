#ifndef CISNET_TENSOR_HPP
#define CISNET_TENSOR_HPP

#include <functional>
#include <memory>
#include <vector>

#include "cisnet/common.hpp"

namespace cisnet {

struct TensorImpl;
using TensorImplPtr = std::shared_ptr<TensorImpl>;

/// Dense N-dimensional double tensor with reverse-mode differentiation.
///
/// A Tensor is a cheap shared handle. Tensors produced by operations are
/// treated as immutable; leaves (parameters, inputs) may be mutated through
/// data() between graph constructions. Gradients accumulate into `grad` until
/// zero_grad() is called.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor full(Shape shape, double value) { return Tensor(std::move(shape), value); }
  static Tensor scalar(double value) { return Tensor(Shape{1}, std::vector<double>{value}); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int64_t dim(size_t i) const { return shape().at(i); }
  size_t ndim() const { return shape().size(); }
  int64_t numel() const;

  double* data();
  const double* data() const;
  double item() const;  // scalar tensors only
  double at(std::initializer_list<int64_t> idx) const;
  void set(std::initializer_list<int64_t> idx, double v);

  Tensor& set_requires_grad(bool flag);
  bool requires_grad() const;

  bool has_grad() const;
  /// Gradient values; throws if no backward pass has reached this tensor.
  const std::vector<double>& grad() const;
  void zero_grad();

  /// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
  /// interior node gradients are recomputed per call.
  void backward() const;

  bool all_finite() const;

  /// Deep copy of values (detached from any graph, requires_grad off).
  Tensor clone_detached() const;

  TensorImplPtr impl() const { return impl_; }
  explicit Tensor(TensorImplPtr impl) : impl_(std::move(impl)) {}

private:
  TensorImplPtr impl_;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<double> grad;  // empty until first accumulation
  std::vector<TensorImplPtr> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(TensorImpl&)> backprop;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

namespace autodiff {

/// While alive, operations build no graph and their results do not require grad.
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
  bool previous_;
};

bool grad_enabled();

/// Builds an operation result: wires parents and the local backward function
/// when grad is enabled and some parent requires it.
Tensor make_op_result(Shape shape, std::vector<double> values,
                      std::vector<Tensor> parents,
                      std::function<void(TensorImpl&)> backprop);

}  // namespace autodiff

}  // namespace cisnet

#endif
