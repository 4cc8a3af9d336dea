#include "support.hpp"

#include <cmath>

#include "edp/ops.hpp"

namespace edp::test {

double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / denom;
}

Tensor random_tensor(int rows, int cols, Rng& rng, double scale, bool requires_grad) {
  Tensor t(rows, cols, requires_grad);
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

double fd_check_scalar(const std::function<double()>& forward,
                       const std::vector<Tensor>& wrt, double h) {
  double worst = 0.0;
  for (const Tensor& t : wrt) {
    std::vector<double>& vals = const_cast<Tensor&>(t).values();
    const std::vector<double>& grads = t.grad();
    for (size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + h;
      const double fp = forward();
      vals[i] = saved - h;
      const double fm = forward();
      vals[i] = saved;
      worst = std::max(worst, rel_err(grads[i], (fp - fm) / (2 * h)));
    }
  }
  return worst;
}

double fd_check(const std::function<Tensor()>& op, const std::vector<Tensor>& wrt, Rng& rng,
                double h) {
  Tensor probe;
  {
    Tape tape;
    Tensor y = op();
    probe = random_tensor(y.rows(), y.cols(), rng, 1.0, false);
    Tensor root = mse_loss(hadamard(y, probe), Tensor::zeros(y.rows(), y.cols()));
    tape.backward(root);
  }
  NoTapeGuard guard;
  auto forward = [&] {
    Tensor y = op();
    return mse_loss(hadamard(y, probe), Tensor::zeros(y.rows(), y.cols())).item();
  };
  return fd_check_scalar(forward, wrt, h);
}

}  // namespace edp::test
