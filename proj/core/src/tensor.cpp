#include "cisnet/tensor.hpp"

#include <cmath>
#include <unordered_set>

namespace cisnet {

Tensor::Tensor(Shape shape, double fill) {
  const int64_t n = shape_numel(shape);
  if (n < 0) throw Error("negative extent in shape " + shape_str(shape));
  impl_ = std::make_shared<TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->value.assign(static_cast<size_t>(n), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size()))
    throw Error("value count " + std::to_string(values.size()) +
                " does not match shape " + shape_str(shape));
  impl_ = std::make_shared<TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->value = std::move(values);
}

const Shape& Tensor::shape() const {
  if (!impl_) throw Error("undefined tensor");
  return impl_->shape;
}

int64_t Tensor::numel() const { return static_cast<int64_t>(impl_->value.size()); }

double* Tensor::data() {
  if (!impl_) throw Error("undefined tensor");
  return impl_->value.data();
}

const double* Tensor::data() const {
  if (!impl_) throw Error("undefined tensor");
  return impl_->value.data();
}

double Tensor::item() const {
  if (numel() != 1) throw Error("item() requires a scalar tensor, got " + shape_str(shape()));
  return impl_->value[0];
}

static size_t flat_index(const Shape& shape, std::initializer_list<int64_t> idx) {
  if (idx.size() != shape.size()) throw Error("index rank mismatch");
  size_t flat = 0;
  size_t i = 0;
  for (int64_t v : idx) {
    if (v < 0 || v >= shape[i]) throw Error("index out of range");
    flat = flat * static_cast<size_t>(shape[i]) + static_cast<size_t>(v);
    ++i;
  }
  return flat;
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  return impl_->value[flat_index(impl_->shape, idx)];
}

void Tensor::set(std::initializer_list<int64_t> idx, double v) {
  impl_->value[flat_index(impl_->shape, idx)] = v;
}

Tensor& Tensor::set_requires_grad(bool flag) {
  if (!impl_) throw Error("undefined tensor");
  if (!impl_->is_leaf) throw Error("requires_grad can only be toggled on leaf tensors");
  impl_->requires_grad = flag;
  return *this;
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) throw Error("tensor has no gradient");
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.clear();
}

bool Tensor::all_finite() const {
  for (double v : impl_->value)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::clone_detached() const {
  Tensor out(impl_->shape, impl_->value);
  return out;
}

void Tensor::backward() const {
  if (!impl_) throw Error("undefined tensor");
  if (numel() != 1) throw Error("backward() requires a scalar loss, got " + shape_str(shape()));

  // Post-order DFS over parents gives a topological order.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  std::vector<std::pair<TensorImpl*, size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorImpl* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients are per-sweep; leaves keep accumulating.
  for (TensorImpl* node : order)
    if (!node->is_leaf) node->grad.clear();

  impl_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    if (node->backprop && !node->grad.empty()) node->backprop(*node);
  }
}

namespace autodiff {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_op_result(Shape shape, std::vector<double> values,
                      std::vector<Tensor> parents,
                      std::function<void(TensorImpl&)> backprop) {
  Tensor out(std::move(shape), std::move(values));
  bool needs_grad = false;
  if (g_grad_enabled)
    for (const Tensor& p : parents)
      if (p.requires_grad()) needs_grad = true;
  if (needs_grad) {
    TensorImplPtr impl = out.impl();
    impl->is_leaf = false;
    impl->requires_grad = true;
    impl->parents.reserve(parents.size());
    for (Tensor& p : parents) impl->parents.push_back(p.impl());
    impl->backprop = std::move(backprop);
  }
  return out;
}

}  // namespace autodiff

}  // namespace cisnet
