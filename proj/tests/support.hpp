#pragma once

#include <functional>
#include <vector>

#include "edp/rng.hpp"
#include "edp/tensor.hpp"

namespace edp::test {

// Relative error with a floor so near-zero pairs compare absolutely.
double rel_err(double analytic, double numeric);

Tensor random_tensor(int rows, int cols, Rng& rng, double scale = 1.0,
                     bool requires_grad = true);

// Analytic-vs-central-difference check for an op producing a tensor.
// Reads the output through a random smooth scalar probe and returns the
// worst relative error across all entries of `wrt`.
double fd_check(const std::function<Tensor()>& op, const std::vector<Tensor>& wrt,
                Rng& rng, double h = 1e-5);

// Same, but for an op that already produces a scalar value. `forward` must
// recompute the value from current parameter values (tape-free).
double fd_check_scalar(const std::function<double()>& forward,
                       const std::vector<Tensor>& wrt, double h = 1e-5);

}  // namespace edp::test
