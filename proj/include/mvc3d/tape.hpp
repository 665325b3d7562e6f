#pragma once

#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "mvc3d/tensor.hpp"

namespace mvc3d {

/// Ordered record of differentiable operations executed while the tape is
/// active. backward() replays the recorded closures in exact reverse order,
/// so gradients of tensors consumed by several ops are summed before they are
/// propagated further.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void record(std::string op_name, BackwardFn fn);

  /// Seeds d(root)/d(root) = 1 and runs every recorded op in reverse.
  void backward(Tensor root);

  std::size_t size() const { return ops_.size(); }
  std::vector<std::string> op_names() const;
  /// Names of the ops in the order the last backward() visited them.
  const std::vector<std::string>& backward_trace() const { return trace_; }

  void clear();

 private:
  struct Entry {
    std::string name;
    BackwardFn fn;
  };
  std::vector<Entry> ops_;
  std::vector<std::string> trace_;
};

/// Tape that ops record onto in the current thread, or nullptr.
Tape* active_tape();

/// Makes `tape` the active tape for the current thread within the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* saved_;
};

/// Returns the active tape if any of `inputs` requires a gradient.
Tape* recording_tape(std::initializer_list<const Tensor*> inputs);

}  // namespace mvc3d
