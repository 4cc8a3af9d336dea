#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "edp/memory.hpp"
#include "edp/rng.hpp"

using namespace edp;

namespace {

std::vector<double> vec(std::initializer_list<double> v) { return std::vector<double>(v); }

// Brute-force 2-cluster oracle: minimum total within-cluster squared
// distance over every nonempty bipartition.
std::pair<std::vector<double>, std::vector<double>> best_two_clusters(
    const std::vector<std::vector<double>>& points) {
  const size_t n = points.size();
  double best_cost = 1e300;
  std::pair<std::vector<double>, std::vector<double>> best;
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<std::vector<double>> a, b;
    for (size_t i = 0; i < n; ++i) (mask >> i & 1 ? a : b).push_back(points[i]);
    auto centroid = [](const std::vector<std::vector<double>>& pts) {
      std::vector<double> c(pts[0].size(), 0.0);
      for (const auto& p : pts)
        for (size_t j = 0; j < c.size(); ++j) c[j] += p[j];
      for (double& v : c) v /= static_cast<double>(pts.size());
      return c;
    };
    const std::vector<double> ca = centroid(a), cb = centroid(b);
    double cost = 0.0;
    for (const auto& p : a)
      for (size_t j = 0; j < p.size(); ++j) cost += (p[j] - ca[j]) * (p[j] - ca[j]);
    for (const auto& p : b)
      for (size_t j = 0; j < p.size(); ++j) cost += (p[j] - cb[j]) * (p[j] - cb[j]);
    if (cost < best_cost) {
      best_cost = cost;
      best = {ca, cb};
    }
  }
  return best;
}

}  // namespace

TEST_CASE("window push: append, FIFO eviction, ordered eviction trace") {
  WorkingWindow w(2);
  CHECK(!w.push(0, vec({1.0})).has_value());
  CHECK(w.size() == 1);
  CHECK(!w.push(1, vec({2.0})).has_value());
  auto evicted = w.push(2, vec({3.0}));
  REQUIRE(evicted.has_value());
  CHECK(evicted->timestep == 0);
  CHECK(w.entries()[0].timestep == 1);
  CHECK(w.entries()[1].timestep == 2);

  CHECK_THROWS_AS(w.push(2, vec({9.0})), std::logic_error);

  // pushing T tokens evicts exactly max(0, T - L), oldest first
  for (int total : {1, 2, 3, 5, 9}) {
    WorkingWindow win(3);
    std::vector<int> evictions;
    for (int t = 0; t < total; ++t) {
      auto e = win.push(t, vec({static_cast<double>(t)}));
      if (e) evictions.push_back(e->timestep);
    }
    CHECK(static_cast<int>(evictions.size()) == std::max(0, total - 3));
    for (size_t i = 0; i < evictions.size(); ++i) CHECK(evictions[i] == static_cast<int>(i));
  }
}

TEST_CASE("fifo cache keeps exactly the last S timesteps") {
  TokenCache cache(2, 1, CachePolicy::fifo, 1);
  cache.insert(1, vec({1.0}));
  cache.insert(2, vec({2.0}));
  cache.insert(3, vec({3.0}));
  REQUIRE(cache.size() == 2);
  CHECK(cache.entries()[0].timestep == 2);
  CHECK(cache.entries()[1].timestep == 3);

  TokenCache big(4, 1, CachePolicy::fifo, 1);
  for (int t = 0; t < 100; ++t) big.insert(t, vec({static_cast<double>(t)}));
  for (int i = 0; i < 4; ++i) CHECK(big.entries()[static_cast<size_t>(i)].timestep == 96 + i);

  CHECK_THROWS_AS(cache.insert(4, vec({1.0, 2.0})), std::invalid_argument);
}

TEST_CASE("random policy evicts a seeded-reproducible victim") {
  auto run = [](uint64_t seed) {
    TokenCache cache(2, 1, CachePolicy::random, seed);
    cache.insert(1, vec({1.0}));
    cache.insert(2, vec({2.0}));
    cache.insert(3, vec({3.0}));
    std::vector<int> taus;
    for (const CacheEntry& e : cache.entries()) taus.push_back(e.timestep);
    return taus;
  };
  for (uint64_t seed : {1ull, 2ull, 3ull, 99ull}) {
    const std::vector<int> a = run(seed);
    CHECK(a == run(seed));
    CHECK(a.size() == 2);
    const std::set<std::vector<int>> possible = {{1, 2}, {1, 3}, {2, 3}};
    CHECK(possible.count(a) == 1);
  }
  // across seeds, more than one outcome actually occurs
  std::set<std::vector<int>> seen;
  for (uint64_t seed = 0; seed < 32; ++seed) seen.insert(run(seed));
  CHECK(seen.size() > 1);
}

TEST_CASE("kmeans reduce: two far pairs collapse to the oracle centroids") {
  std::vector<CacheEntry> entries = {{0, vec({0.0})}, {1, vec({0.1})}, {2, vec({10.0})},
                                     {3, vec({10.1})}};
  const auto reduced = kmeans_reduce(entries, 2);
  REQUIRE(reduced.size() == 2);
  const auto oracle = best_two_clusters({{0.0}, {0.1}, {10.0}, {10.1}});
  const double lo = std::min(oracle.first[0], oracle.second[0]);
  const double hi = std::max(oracle.first[0], oracle.second[0]);
  CHECK(lo == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(hi == doctest::Approx(10.05).epsilon(1e-12));
  CHECK(reduced[0].payload[0] == doctest::Approx(lo).epsilon(1e-12));
  CHECK(reduced[1].payload[0] == doctest::Approx(hi).epsilon(1e-12));
  // centroid carries its cluster's earliest timestep
  CHECK(reduced[0].timestep == 0);
  CHECK(reduced[1].timestep == 2);
}

TEST_CASE("kmeans reduce: identical payloads give identical centroids, count k") {
  std::vector<CacheEntry> entries;
  for (int t = 0; t < 5; ++t) entries.push_back({t, vec({3.0, 3.0})});
  const auto reduced = kmeans_reduce(entries, 4);
  REQUIRE(reduced.size() == 4);
  for (const CacheEntry& e : reduced) {
    CHECK(e.payload[0] == 3.0);
    CHECK(e.payload[1] == 3.0);
  }
  for (size_t i = 1; i < reduced.size(); ++i)
    CHECK(reduced[i - 1].timestep <= reduced[i].timestep);
}

TEST_CASE("adjsim: merges the identical adjacent pair, keeps the earlier tau") {
  std::vector<CacheEntry> entries = {{0, vec({1.0, 0.0})}, {1, vec({1.0, 0.0})},
                                     {2, vec({0.0, 1.0})}};
  const auto reduced = adjsim_reduce(entries);
  REQUIRE(reduced.size() == 2);
  CHECK(reduced[0].timestep == 0);
  CHECK(reduced[0].payload[0] == 1.0);
  CHECK(reduced[0].payload[1] == 0.0);
  CHECK(reduced[1].payload[1] == 1.0);

  // two entries only: their mean
  const auto pair = adjsim_reduce({{4, vec({2.0, 0.0})}, {7, vec({4.0, 2.0})}});
  REQUIRE(pair.size() == 1);
  CHECK(pair[0].timestep == 4);
  CHECK(pair[0].payload[0] == 3.0);
  CHECK(pair[0].payload[1] == 1.0);

  // orthogonal chain with one duplicated entry: the duplicate pair merges
  std::vector<CacheEntry> chain = {{0, vec({1.0, 0.0, 0.0})},
                                   {1, vec({0.0, 1.0, 0.0})},
                                   {2, vec({0.0, 1.0, 0.0})},
                                   {3, vec({0.0, 0.0, 1.0})}};
  const auto merged = adjsim_reduce(chain);
  REQUIRE(merged.size() == 3);
  CHECK(merged[1].timestep == 1);
  CHECK(merged[1].payload[1] == 1.0);

  // zero-norm payloads are never the preferred merge
  std::vector<CacheEntry> with_zero = {{0, vec({0.0, 0.0})},
                                       {1, vec({1.0, 0.0})},
                                       {2, vec({1.0, 0.0})}};
  const auto z = adjsim_reduce(with_zero);
  REQUIRE(z.size() == 2);
  CHECK(z[0].timestep == 0);
  CHECK(z[1].timestep == 1);
}

TEST_CASE("every policy bounds the cache and keeps timesteps sorted") {
  for (CachePolicy policy : {CachePolicy::fifo, CachePolicy::random, CachePolicy::kmeans,
                             CachePolicy::adjsim}) {
    Rng rng(777);
    TokenCache cache(5, 3, policy, 123);
    for (int t = 0; t < 400; ++t) {
      std::vector<double> payload = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      cache.insert(t, payload);
      CHECK(cache.size() <= 5);
      for (size_t i = 1; i < cache.entries().size(); ++i)
        CHECK(cache.entries()[i - 1].timestep <= cache.entries()[i].timestep);
    }
  }
}

TEST_CASE("adjsim merge shrinks by one and never raises the max timestep") {
  Rng rng(555);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CacheEntry> entries;
    const int n = 3 + trial % 5;
    for (int t = 0; t < n; ++t) {
      entries.push_back({t * 2, {rng.uniform(-1, 1), rng.uniform(-1, 1)}});
    }
    const int max_tau_before = entries.back().timestep;
    const auto reduced = adjsim_reduce(entries);
    CHECK(reduced.size() == entries.size() - 1);
    CHECK(reduced.back().timestep <= max_tau_before);
  }
}

TEST_CASE("memory state reset empties everything and is idempotent") {
  MemoryState st = MemoryState::make(2, 4, 3, 2, 2, CachePolicy::fifo, 9);
  st.window.push(0, vec({1, 2, 3}));
  st.obs_cache.insert(0, vec({1, 2, 3}));
  st.summary_caches[0].insert(0, vec({1, 2, 3, 4, 5, 6}));
  st.episodic = {1, 1, 1, 1, 1, 1};
  st.last_compressed = 0;

  st.reset();
  CHECK(st.window.size() == 0);
  CHECK(st.obs_cache.size() == 0);
  CHECK(st.summary_caches[0].size() == 0);
  CHECK(!st.last_compressed.has_value());
  for (double v : st.episodic) CHECK(v == 0.0);

  st.reset();
  CHECK(st.window.size() == 0);

  // random policy replays identically after reset
  MemoryState r1 = MemoryState::make(1, 2, 1, 1, 1, CachePolicy::random, 42);
  auto fill = [](MemoryState& s) {
    for (int t = 0; t < 6; ++t) s.obs_cache.insert(t, {static_cast<double>(t)});
    std::vector<int> taus;
    for (const CacheEntry& e : s.obs_cache.entries()) taus.push_back(e.timestep);
    return taus;
  };
  const auto first = fill(r1);
  r1.reset();
  CHECK(fill(r1) == first);
}
