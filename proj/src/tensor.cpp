#include "mvc3d/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <sstream>

#include "mvc3d/error.hpp"

namespace mvc3d {

namespace {

std::atomic<Precision> g_precision{Precision::Single};

void check_dims(const Shape& dims) {
  if (dims.empty() || dims.size() > 5) {
    throw ShapeError("tensor rank must be 1..5, got " + std::to_string(dims.size()));
  }
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("tensor extents must be positive: " + shape_str(dims));
  }
}

}  // namespace

std::size_t shape_numel(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

void set_precision(Precision p) { g_precision.store(p); }
Precision precision() { return g_precision.load(); }

PrecisionScope::PrecisionScope(Precision p) : saved_(precision()) { set_precision(p); }
PrecisionScope::~PrecisionScope() { set_precision(saved_); }

void round_to_storage(std::span<double> values) {
  if (precision() != Precision::Single) return;
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

Tensor::Tensor(Shape dims, bool requires_grad) {
  check_dims(dims);
  node_ = std::make_shared<Node>();
  node_->values.assign(shape_numel(dims), 0.0);
  node_->dims = std::move(dims);
  node_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape dims, std::vector<double> values, bool requires_grad) {
  check_dims(dims);
  if (shape_numel(dims) != values.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match dims " +
                     shape_str(dims));
  }
  node_ = std::make_shared<Node>();
  node_->dims = std::move(dims);
  node_->values = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::full(Shape dims, double value, bool requires_grad) {
  Tensor t(std::move(dims), requires_grad);
  std::fill(t.node_->values.begin(), t.node_->values.end(), value);
  return t;
}

const Shape& Tensor::dims() const {
  static const Shape empty;
  return node_ ? node_->dims : empty;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) throw ShapeError("axis out of range for " + shape_str(dims()));
  return node_->dims[axis];
}

std::size_t Tensor::numel() const { return node_ ? node_->values.size() : 0; }

std::span<const double> Tensor::values() const {
  if (!node_) return {};
  return node_->values;
}

std::span<double> Tensor::values_mut() const {
  if (!node_) return {};
  return node_->values;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of dims " + shape_str(dims()));
  return node_->values[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool on) const {
  if (node_) node_->requires_grad = on;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!node_) return {};
  return node_->grad;
}

std::span<double> Tensor::grad_mut() const {
  if (!node_) return {};
  if (node_->grad.empty()) node_->grad.assign(node_->values.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() const {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const {
  if (!node_) return {};
  return Tensor(node_->dims, node_->values, false);
}

Tensor Tensor::clone() const {
  if (!node_) return {};
  Tensor t(node_->dims, node_->values, node_->requires_grad);
  t.node_->grad = node_->grad;
  return t;
}

}  // namespace mvc3d
