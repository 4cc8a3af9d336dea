#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edp/rng.hpp"

namespace edp {

enum class CachePolicy { fifo, random, kmeans, adjsim };

CachePolicy cache_policy_from_string(const std::string& name);
std::string to_string(CachePolicy policy);

struct CacheEntry {
  int timestep = 0;
  std::vector<double> payload;  // D values (observation cache) or M*D (summary cache)
};

// Reduces entries to k by Lloyd clustering on the flattened payloads.
// Centers are seeded from the k oldest entries and iterated to assignment
// convergence (at most max_iters). Each surviving centroid is stamped with
// the smallest timestep of its cluster (its seed's timestep if the cluster
// emptied) and the result is re-sorted by timestep.
std::vector<CacheEntry> kmeans_reduce(std::vector<CacheEntry> entries, size_t k,
                                      int max_iters = 20);

// Merges the adjacent pair with the highest cosine similarity into its
// elementwise mean, stamped with the earlier timestep. Ties break toward
// the earliest pair; zero-norm payloads are never preferred (similarity -1).
std::vector<CacheEntry> adjsim_reduce(std::vector<CacheEntry> entries);

// Bounded store of timestep-ordered payloads. Inserting beyond capacity
// applies the policy once to restore size <= capacity.
class TokenCache {
 public:
  TokenCache() = default;
  TokenCache(size_t capacity, size_t payload_dim, CachePolicy policy, uint64_t rng_seed);

  void insert(int timestep, std::vector<double> payload);
  void clear();  // empties entries and re-arms the initial rng seed

  const std::vector<CacheEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  size_t capacity() const { return capacity_; }
  size_t payload_dim() const { return payload_dim_; }
  CachePolicy policy() const { return policy_; }

 private:
  std::vector<CacheEntry> entries_;
  size_t capacity_ = 0;
  size_t payload_dim_ = 0;
  CachePolicy policy_ = CachePolicy::fifo;
  uint64_t seed_ = 0;
  Rng rng_{0};
};

// FIFO ring of the last `capacity` tokens in arrival order. Pushing into a
// full window returns the evicted oldest entry.
class WorkingWindow {
 public:
  WorkingWindow() = default;
  explicit WorkingWindow(size_t capacity) : capacity_(capacity) {}

  std::optional<CacheEntry> push(int timestep, std::vector<double> values);
  void clear() { entries_.clear(); }

  const std::vector<CacheEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  size_t capacity() const { return capacity_; }

 private:
  std::vector<CacheEntry> entries_;
  size_t capacity_ = 0;
};

// Per-episode memory: the sliding window, the out-of-window observation
// cache, and one summary cache per compressor block. All caches share the
// same capacity and policy.
struct MemoryState {
  WorkingWindow window;
  TokenCache obs_cache;
  std::vector<TokenCache> summary_caches;
  std::vector<double> episodic;          // M*D values of the latest compression
  std::optional<int> last_compressed;    // timestep of the latest compression

  static MemoryState make(size_t window_len, size_t cache_size, int embed_dim,
                          int memory_tokens, int num_blocks, CachePolicy policy,
                          uint64_t rng_seed);
  void reset();
};

}  // namespace edp
