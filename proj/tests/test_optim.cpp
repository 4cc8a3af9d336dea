#include <doctest.h>

#include <cmath>

#include "edp/optim.hpp"
#include "edp/tensor.hpp"

using namespace edp;

namespace {

// Scalar reference recurrence for AdamW, kept independent of the
// production implementation.
struct ScalarAdamRef {
  double m = 0, v = 0;
  int t = 0;
  double apply(double p, double g, const AdamWConfig& c) {
    ++t;
    m = c.beta1 * m + (1 - c.beta1) * g;
    v = c.beta2 * v + (1 - c.beta2) * g * g;
    const double mhat = m / (1 - std::pow(c.beta1, t));
    const double vhat = v / (1 - std::pow(c.beta2, t));
    return p - c.lr * (mhat / (std::sqrt(vhat) + c.eps) + c.weight_decay * p);
  }
};

}  // namespace

TEST_CASE("adamw: zero gradient and zero decay leaves parameters unchanged") {
  Tensor p(1, 3, true);
  p.values() = {1.0, -2.0, 0.5};
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW opt({p}, cfg);
  opt.step();
  CHECK(p.values()[0] == 1.0);
  CHECK(p.values()[1] == -2.0);
  CHECK(p.values()[2] == 0.5);
}

TEST_CASE("adamw: first step with unit gradient moves by about -lr") {
  Tensor p(1, 1, true);
  p.values()[0] = 0.7;
  p.grad()[0] = 1.0;
  AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.0;
  AdamW opt({p}, cfg);
  opt.step();
  // bias-corrected mhat = vhat = 1, so the update is -lr / (1 + eps)
  CHECK(p.values()[0] == doctest::Approx(0.7 - 0.1).epsilon(1e-7));
}

TEST_CASE("adamw: matches scalar reference recurrence over several steps") {
  AdamWConfig cfg;
  cfg.lr = 0.05;
  cfg.weight_decay = 0.01;
  Tensor p(1, 1, true);
  p.values()[0] = 0.3;
  AdamW opt({p}, cfg);

  ScalarAdamRef ref;
  double pref = 0.3;
  for (int step = 0; step < 5; ++step) {
    const double g = 1.0;  // constant gradient
    p.zero_grad();
    p.grad()[0] = g;
    opt.step();
    pref = ref.apply(pref, g, cfg);
    CHECK(p.values()[0] == doctest::Approx(pref).epsilon(1e-12));
  }
}

TEST_CASE("ema: fixed point, one-step value, monotone convergence") {
  Tensor p(1, 1, true);
  p.values()[0] = 1.0;

  Tensor q(1, 1, true);
  q.values()[0] = 1.0;
  Ema fixed({q}, 0.999);
  fixed.update();
  CHECK(fixed.shadow()[0][0] == doctest::Approx(1.0).epsilon(1e-15));

  Ema ema({p}, 0.999);
  ema.shadow()[0][0] = 0.0;
  ema.update();
  CHECK(ema.shadow()[0][0] == doctest::Approx(0.001).epsilon(1e-12));

  // repeated updates close the gap geometrically
  double prev_gap = 1.0 - ema.shadow()[0][0];
  for (int i = 0; i < 50; ++i) {
    ema.update();
    const double gap = 1.0 - ema.shadow()[0][0];
    CHECK(gap < prev_gap);
    CHECK(gap == doctest::Approx(prev_gap * 0.999).epsilon(1e-9));
    prev_gap = gap;
  }

  CHECK_THROWS_AS(Ema({p}, 1.0), std::invalid_argument);
}

TEST_CASE("paramset: names, scalar count, grad norm") {
  Tensor a(2, 2, true);
  Tensor b(1, 3, true);
  ParamSet ps;
  ps.add("a", a);
  ps.add("b", b);
  CHECK(ps.num_scalars() == 7);
  CHECK(ps.find("a") != nullptr);
  CHECK(ps.find("c") == nullptr);
  CHECK_THROWS_AS(ps.add("a", b), std::invalid_argument);

  a.grad()[0] = 3.0;
  b.grad()[2] = 4.0;
  CHECK(ps.grad_norm() == doctest::Approx(5.0).epsilon(1e-12));
  ps.zero_grads();
  CHECK(ps.grad_norm() == 0.0);

  ParamSet nested;
  nested.merge("enc", ps);
  CHECK(nested.find("enc.a") != nullptr);
}
