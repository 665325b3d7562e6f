#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mvc3d {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& dims);
std::string shape_str(const Shape& dims);

/// Storage precision of op results.
///
/// Values always live in double buffers. In Single mode every op rounds its
/// results to the nearest float and the convolution GEMMs run in float; in
/// Double mode everything is computed and kept in double (gradient checks).
enum class Precision { Single, Double };

void set_precision(Precision p);
Precision precision();

/// Sets the precision for the lifetime of the scope, restoring the old one.
class PrecisionScope {
 public:
  explicit PrecisionScope(Precision p);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  Precision saved_;
};

/// Rounds values to float when running in Single precision.
void round_to_storage(std::span<double> values);

/// Dense row-major tensor of rank 1..5 with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same values and gradient.
/// Use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape dims, bool requires_grad = false);
  Tensor(Shape dims, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor full(Shape dims, double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& dims() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return dims().size(); }
  std::size_t numel() const;

  std::span<const double> values() const;
  std::span<double> values_mut() const;
  double operator[](std::size_t flat) const { return values()[flat]; }
  /// Value of a one-element tensor.
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool on) const;

  bool has_grad() const;
  std::span<const double> grad() const;
  /// Gradient buffer, zero-allocated on first use.
  std::span<double> grad_mut() const;
  void zero_grad() const;

  /// Deep copy of values; the copy has no gradient and does not require one.
  Tensor detach() const;
  Tensor clone() const;

  bool same(const Tensor& other) const { return node_ == other.node_; }

 private:
  struct Node {
    Shape dims;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Node> node_;
};

}  // namespace mvc3d
