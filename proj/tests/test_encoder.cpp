#include <doctest.h>

#include <cmath>
#include <set>

#include "edp/encoder.hpp"
#include "edp/ops.hpp"
#include "support.hpp"

using namespace edp;
using edp::test::fd_check;
using edp::test::random_tensor;

TEST_CASE("positional embedding: tau=0 pattern, range, sin(1)") {
  const std::vector<double> pe0 = positional_embedding(0, 8);
  for (int i = 0; i < 8; i += 2) {
    CHECK(pe0[static_cast<size_t>(i)] == 0.0);
    CHECK(pe0[static_cast<size_t>(i + 1)] == 1.0);
  }

  const std::vector<double> pe1 = positional_embedding(1, 8);
  CHECK(pe1[0] == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
  CHECK(pe1[0] == doctest::Approx(0.84147).epsilon(1e-5));

  for (int tau : {1, 999, 1000000}) {
    for (double v : positional_embedding(tau, 16)) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }

  CHECK_THROWS_AS(positional_embedding(0, 7), std::invalid_argument);
  CHECK_THROWS_AS(positional_embedding(-1, 8), std::invalid_argument);
}

TEST_CASE("positional embedding distinguishes every tau below 1e4") {
  std::set<std::vector<double>> seen;
  for (int tau = 0; tau < 10000; ++tau) seen.insert(positional_embedding(tau, 16));
  CHECK(seen.size() == 10000);
}

TEST_CASE("encode_frame: zero-input determinism and zero-bias collapse") {
  Rng rng(31);
  FrameEncoder enc = FrameEncoder::init({2, 5}, 8, rng);

  RawObservation raw;
  raw.modalities = {{0.3, -0.7}, {1, 0, 0, 0.5, -0.5}};
  raw.timestep = 3;
  const ObservationToken a = enc.encode(raw);
  const ObservationToken b = enc.encode(raw);
  CHECK(a.values.values() == b.values.values());
  CHECK(a.timestep == 3);
  CHECK(a.values.cols() == 8);

  // zero weights and biases: activation at zero keeps the token at zero
  Rng zrng(1);
  FrameEncoder zero_enc = FrameEncoder::init({2, 5}, 8, zrng);
  ParamSet ps;
  zero_enc.register_params(ps);
  for (const auto& entry : ps.entries())
    for (double& v : const_cast<Tensor&>(entry.tensor).values()) v = 0.0;
  RawObservation zraw;
  zraw.modalities = {{0.0, 0.0}, {0, 0, 0, 0, 0}};
  for (double v : zero_enc.encode(zraw).values.values()) CHECK(v == 0.0);

  RawObservation bad;
  bad.modalities = {{0.1}, {0, 0, 0, 0, 0}};
  CHECK_THROWS_AS(enc.encode(bad), std::invalid_argument);
}

TEST_CASE("encode gradient w.r.t. raw input matches finite differences") {
  Rng rng(37);
  FrameEncoder enc = FrameEncoder::init({2, 4}, 8, rng);
  Tensor proprio = random_tensor(1, 2, rng);
  Tensor feats = random_tensor(1, 4, rng);
  CHECK(fd_check([&] { return enc.encode_rows({proprio, feats}); }, {proprio, feats}, rng) <
        1e-5);
}

TEST_CASE("stamp adds exactly the positional embedding") {
  Rng rng(41);
  FrameEncoder enc = FrameEncoder::init({2, 4}, 8, rng);
  RawObservation raw;
  raw.modalities = {{0.2, 0.4}, {0.1, -0.1, 0.0, 0.9}};
  raw.timestep = 17;
  const ObservationToken token = enc.encode(raw);
  const Tensor stamped = stamp_out_of_window(token);
  const std::vector<double> pe = positional_embedding(17, 8);
  for (int j = 0; j < 8; ++j)
    CHECK(stamped.at(0, j) - token.values.at(0, j) == doctest::Approx(pe[static_cast<size_t>(j)]).epsilon(0));

  // same values, different timestep -> different stamped frame
  const Tensor other = stamp_out_of_window(ObservationToken{token.values, 18});
  bool any_diff = false;
  for (int j = 0; j < 8; ++j) any_diff |= stamped.at(0, j) != other.at(0, j);
  CHECK(any_diff);

  // zero token stamps to the embedding itself
  const Tensor zero_stamp = stamp_out_of_window(ObservationToken{Tensor::zeros(1, 8), 0});
  const std::vector<double> pe0 = positional_embedding(0, 8);
  for (int j = 0; j < 8; ++j) CHECK(zero_stamp.at(0, j) == pe0[static_cast<size_t>(j)]);
}
