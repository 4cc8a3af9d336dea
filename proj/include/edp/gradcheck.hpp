#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace edp {

struct GradCheckGroup {
  std::string name;
  double max_rel_err = 0.0;
  size_t scalars = 0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double worst = 0.0;
  double seconds = 0.0;
  bool pass(double tolerance) const { return worst < tolerance; }
};

// Central finite differences of the full training loss against the tape's
// analytic gradients on a tiny model (token width 16, window 2, 2 episodic
// tokens, 2 compressor blocks, cache size 4, chunk length 4), grouped by
// sub-network. Cache contents are pinned to the reference forward's
// post-insertion snapshot, matching the detach-on-write semantics the tape
// sees. `corrupt` perturbs one analytic gradient entry to verify the check
// actually detects broken backward rules.
GradCheckReport run_gradcheck(uint64_t seed = 7, bool corrupt = false);

}  // namespace edp
