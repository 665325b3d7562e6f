#include "mvc3d/tape.hpp"

#include <algorithm>

#include "mvc3d/error.hpp"

namespace mvc3d {

namespace {
thread_local Tape* t_active = nullptr;
}

void Tape::record(std::string op_name, BackwardFn fn) {
  ops_.push_back({std::move(op_name), std::move(fn)});
}

void Tape::backward(Tensor root) {
  if (!root.defined()) throw ShapeError("backward on undefined tensor");
  auto g = root.grad_mut();
  std::fill(g.begin(), g.end(), 1.0);
  trace_.clear();
  trace_.reserve(ops_.size());
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    trace_.push_back(it->name);
    it->fn();
  }
}

std::vector<std::string> Tape::op_names() const {
  std::vector<std::string> names;
  names.reserve(ops_.size());
  for (const auto& e : ops_) names.push_back(e.name);
  return names;
}

void Tape::clear() {
  ops_.clear();
  trace_.clear();
}

Tape* active_tape() { return t_active; }

TapeScope::TapeScope(Tape& tape) : saved_(t_active) { t_active = &tape; }
TapeScope::~TapeScope() { t_active = saved_; }

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  if (t_active == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t != nullptr && t->requires_grad()) return t_active;
  }
  return nullptr;
}

}  // namespace mvc3d
