#pragma once

// Screening exclusion audits: a configuration obeys the exclusion rule if no point lies in the
// Thomas-Fermi screening region of any subset of the other points. Checking every subset is
// exponential, so audits run over a declared family of subsets.

#include <cstdint>
#include <vector>

#include "incomp/config.hpp"
#include "incomp/tf.hpp"

namespace incomp {

/// Exact minimum distance over all pairs. Unit-density frame, N >= 2.
double min_pairwise_distance(const PointConfig& config);
/// Same value computed with a uniform bucket grid; O(N) for well-spread points.
double min_pairwise_distance_bucketed(const PointConfig& config);

struct ExclusionViolation {
  std::vector<int> subset;
  int point = -1;
  /// Screening potential of the subset at the offending point.
  double phi = 0.0;
};

struct SubsetCheck {
  bool pass = true;
  /// True if the check used exact disk geometry instead of a grid solve.
  bool exact = false;
  std::vector<ExclusionViolation> violations;
};

struct SubsetCheckOptions {
  /// Grid spacing of the screening solve.
  double h = 1.0 / 32.0;
  /// Mask points closer than this many cells to the complement are not violations.
  double mask_tolerance_cells = 2.0;
  TfOptions tf;
};

/// Tests every point outside `subset` against the screening region of the subset.
/// Singletons and subsets with all pairwise distances >= 2/sqrt(pi) use exact disks.
SubsetCheck check_exclusion_subset(const PointConfig& config, const std::vector<int>& subset,
                                   const SubsetCheckOptions& opts = {});

struct AuditPolicy {
  bool singletons = true;
  /// Pairs closer than 2/sqrt(pi) + pair_margin; negative disables.
  double pair_margin = 0.1;
  /// Subsets of points inside sliding disks; radius <= 0 disables.
  double cluster_radius = 3.0;
  double cluster_stride = 1.5;
  int random_count = 0;
  int random_size = 3;
  std::uint64_t seed = 0;
  SubsetCheckOptions check;
  int threads = 1;

  static AuditPolicy default_policy() { return {}; }
  static AuditPolicy singletons_only();
};

struct ExclusionReport {
  int subsets_checked = 0;
  int exact_checks = 0;
  std::vector<ExclusionViolation> violations;
  double min_distance = 0.0;

  bool pass() const { return violations.empty(); }
};

/// Generates the policy's subset family (sorted indices, duplicates removed, in a fixed order).
std::vector<std::vector<int>> audit_subsets(const PointConfig& config, const AuditPolicy& policy);

/// Runs check_exclusion_subset over the policy family. Plasma-frame input is rescaled to the
/// unit-density frame first. A pair closer than the screening radius violates both singleton
/// checks and is reported once.
ExclusionReport audit_exclusion(const PointConfig& config, const AuditPolicy& policy = {});

/// Number of points strictly inside the region divided by its area.
double packing_density(const PointConfig& config, const Region& region);

}  // namespace incomp
