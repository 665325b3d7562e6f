#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mvc3d/tape.hpp"
#include "mvc3d/tensor.hpp"

namespace mvc3d::testing {

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Normwise relative error between the tape gradient of f and a central
/// finite-difference estimate, over every input listed in `wrt`.
inline double gradcheck(const ScalarFn& f, const std::vector<Tensor>& inputs, const std::vector<std::size_t>& wrt,
                        double h = 1e-5) {
  PrecisionScope dbl(Precision::Double);
  for (std::size_t i : wrt) {
    inputs[i].set_requires_grad(true);
    inputs[i].zero_grad();
  }
  std::vector<double> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    const Tensor out = f(inputs);
    tape.backward(out);
    for (std::size_t i : wrt) {
      if (inputs[i].has_grad()) {
        auto g = inputs[i].grad();
        analytic.insert(analytic.end(), g.begin(), g.end());
      } else {
        analytic.insert(analytic.end(), inputs[i].numel(), 0.0);
      }
    }
  }
  std::vector<double> numeric;
  for (std::size_t i : wrt) {
    auto v = inputs[i].values_mut();
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double x = v[k];
      v[k] = x + h;
      const double fp = f(inputs).item();
      v[k] = x - h;
      const double fm = f(inputs).item();
      v[k] = x;
      numeric.push_back((fp - fm) / (2.0 * h));
    }
  }
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
    na += analytic[k] * analytic[k];
    nn += numeric[k] * numeric[k];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
  return std::sqrt(diff) / scale;
}

inline Tensor random_tensor(Shape dims, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(dims));
  for (double& v : t.values_mut()) v = d(rng);
  return t;
}

}  // namespace mvc3d::testing
