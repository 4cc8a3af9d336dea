#include "edp/memory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "edp/tensor.hpp"

namespace edp {

CachePolicy cache_policy_from_string(const std::string& name) {
  if (name == "fifo") return CachePolicy::fifo;
  if (name == "random") return CachePolicy::random;
  if (name == "kmeans") return CachePolicy::kmeans;
  if (name == "adjsim") return CachePolicy::adjsim;
  throw std::invalid_argument("edp: unknown cache policy: " + name);
}

std::string to_string(CachePolicy policy) {
  switch (policy) {
    case CachePolicy::fifo: return "fifo";
    case CachePolicy::random: return "random";
    case CachePolicy::kmeans: return "kmeans";
    case CachePolicy::adjsim: return "adjsim";
  }
  return "?";
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return -1.0;  // zero-norm payloads never merge first
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

std::vector<CacheEntry> kmeans_reduce(std::vector<CacheEntry> entries, size_t k, int max_iters) {
  if (entries.size() <= k) return entries;
  const size_t n = entries.size();
  // Seed centers from the k oldest entries (entries are timestep-sorted).
  std::vector<std::vector<double>> centers(k);
  std::vector<int> seed_tau(k);
  for (size_t c = 0; c < k; ++c) {
    centers[c] = entries[c].payload;
    seed_tau[c] = entries[c].timestep;
  }
  std::vector<size_t> assign(n, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = iter == 0;
    for (size_t i = 0; i < n; ++i) {
      size_t best = 0;
      double best_d = sq_dist(entries[i].payload, centers[0]);
      for (size_t c = 1; c < k; ++c) {
        const double d = sq_dist(entries[i].payload, centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (size_t c = 0; c < k; ++c) {
      std::vector<double> mean(entries[0].payload.size(), 0.0);
      size_t count = 0;
      for (size_t i = 0; i < n; ++i) {
        if (assign[i] != c) continue;
        ++count;
        for (size_t j = 0; j < mean.size(); ++j) mean[j] += entries[i].payload[j];
      }
      if (count == 0) continue;  // empty cluster keeps its previous center
      for (double& v : mean) v /= static_cast<double>(count);
      centers[c] = std::move(mean);
    }
  }
  std::vector<CacheEntry> out(k);
  for (size_t c = 0; c < k; ++c) {
    int tau = seed_tau[c];
    bool has_member = false;
    for (size_t i = 0; i < n; ++i) {
      if (assign[i] != c) continue;
      tau = has_member ? std::min(tau, entries[i].timestep) : entries[i].timestep;
      has_member = true;
    }
    out[c] = CacheEntry{tau, centers[c]};
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CacheEntry& a, const CacheEntry& b) { return a.timestep < b.timestep; });
  return out;
}

std::vector<CacheEntry> adjsim_reduce(std::vector<CacheEntry> entries) {
  detail::check_contract(entries.size() >= 2, "adjsim_reduce needs at least two entries");
  size_t best = 0;
  double best_sim = cosine(entries[0].payload, entries[1].payload);
  for (size_t i = 1; i + 1 < entries.size(); ++i) {
    const double sim = cosine(entries[i].payload, entries[i + 1].payload);
    if (sim > best_sim) {  // strict: ties keep the earliest pair
      best_sim = sim;
      best = i;
    }
  }
  CacheEntry merged;
  merged.timestep = entries[best].timestep;
  merged.payload.resize(entries[best].payload.size());
  for (size_t j = 0; j < merged.payload.size(); ++j)
    merged.payload[j] = 0.5 * (entries[best].payload[j] + entries[best + 1].payload[j]);
  entries[best] = std::move(merged);
  entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(best) + 1);
  return entries;
}

TokenCache::TokenCache(size_t capacity, size_t payload_dim, CachePolicy policy, uint64_t rng_seed)
    : capacity_(capacity), payload_dim_(payload_dim), policy_(policy), seed_(rng_seed), rng_(rng_seed) {
  detail::check_shape(capacity >= 1, "cache capacity must be >= 1");
}

void TokenCache::insert(int timestep, std::vector<double> payload) {
  detail::check_shape(payload.size() == payload_dim_,
                      "cache insert: payload dimension mismatch");
  // Keep timestep order; inserts normally arrive with increasing timesteps.
  auto pos = std::upper_bound(
      entries_.begin(), entries_.end(), timestep,
      [](int t, const CacheEntry& e) { return t < e.timestep; });
  entries_.insert(pos, CacheEntry{timestep, std::move(payload)});
  if (entries_.size() <= capacity_) return;

  switch (policy_) {
    case CachePolicy::fifo:
      entries_.erase(entries_.begin());
      break;
    case CachePolicy::random: {
      const int victim = rng_.uniform_int(0, static_cast<int>(entries_.size()) - 1);
      entries_.erase(entries_.begin() + victim);
      break;
    }
    case CachePolicy::kmeans:
      entries_ = kmeans_reduce(std::move(entries_), capacity_);
      break;
    case CachePolicy::adjsim:
      entries_ = adjsim_reduce(std::move(entries_));
      break;
  }
}

void TokenCache::clear() {
  entries_.clear();
  rng_ = Rng(seed_);
}

std::optional<CacheEntry> WorkingWindow::push(int timestep, std::vector<double> values) {
  detail::check_contract(entries_.empty() || timestep > entries_.back().timestep,
                         "window push: timestep must increase");
  entries_.push_back(CacheEntry{timestep, std::move(values)});
  if (entries_.size() <= capacity_) return std::nullopt;
  CacheEntry evicted = std::move(entries_.front());
  entries_.erase(entries_.begin());
  return evicted;
}

MemoryState MemoryState::make(size_t window_len, size_t cache_size, int embed_dim,
                              int memory_tokens, int num_blocks, CachePolicy policy,
                              uint64_t rng_seed) {
  MemoryState st;
  st.window = WorkingWindow(window_len);
  st.obs_cache = TokenCache(cache_size, static_cast<size_t>(embed_dim), policy, Rng::mix(rng_seed, 0));
  for (int n = 0; n < num_blocks; ++n)
    st.summary_caches.emplace_back(cache_size, static_cast<size_t>(memory_tokens) * embed_dim,
                                   policy, Rng::mix(rng_seed, static_cast<uint64_t>(n) + 1));
  st.episodic.assign(static_cast<size_t>(memory_tokens) * embed_dim, 0.0);
  return st;
}

void MemoryState::reset() {
  window.clear();
  obs_cache.clear();
  for (TokenCache& c : summary_caches) c.clear();
  std::fill(episodic.begin(), episodic.end(), 0.0);
  last_compressed.reset();
}

}  // namespace edp
