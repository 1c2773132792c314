#include "incomp/exclusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <random>
#include <set>
#include <unordered_map>

#include "incomp/errors.hpp"
#include "incomp/parallel.hpp"

namespace incomp {

namespace {

void require_unit(const PointConfig& config, const char* what) {
  if (config.frame.is_plasma())
    throw FrameMismatchError(std::string(what) + ": expected a unit-density configuration");
}

}  // namespace

double min_pairwise_distance(const PointConfig& config) {
  require_unit(config, "min_pairwise_distance");
  const Eigen::Index n = config.size();
  if (n < 2) throw InvalidArgument("min_pairwise_distance: need at least two points");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) best = std::min(best, (config[a] - config[b]).norm());
  return best;
}

double min_pairwise_distance_bucketed(const PointConfig& config) {
  require_unit(config, "min_pairwise_distance_bucketed");
  const Eigen::Index n = config.size();
  if (n < 2) throw InvalidArgument("min_pairwise_distance_bucketed: need at least two points");
  const Point lo = config.points.colwise().minCoeff().transpose();
  const Point hi = config.points.colwise().maxCoeff().transpose();
  const double extent = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-300});
  // About one point per bucket.
  const double cell = std::max(extent / std::ceil(std::sqrt(static_cast<double>(n))), 1e-300);
  auto key = [&](const Point& p) {
    const auto i = static_cast<std::int64_t>(std::floor((p.x() - lo.x()) / cell));
    const auto j = static_cast<std::int64_t>(std::floor((p.y() - lo.y()) / cell));
    return std::pair{i, j};
  };
  auto pack = [](std::int64_t i, std::int64_t j) { return (i << 32) ^ (j & 0xffffffff); };
  std::unordered_map<std::int64_t, std::vector<Eigen::Index>> buckets;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto [i, j] = key(config[k]);
    buckets[pack(i, j)].push_back(k);
  }
  // Search rings of buckets until no closer pair can exist.
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto [i, j] = key(config[a]);
    for (std::int64_t ring = 0;; ++ring) {
      if (std::isfinite(best) && (ring - 1) * cell > best) break;
      for (std::int64_t dj = -ring; dj <= ring; ++dj)
        for (std::int64_t di = -ring; di <= ring; ++di) {
          if (std::max(std::abs(di), std::abs(dj)) != ring) continue;
          const auto it = buckets.find(pack(i + di, j + dj));
          if (it == buckets.end()) continue;
          for (Eigen::Index b : it->second)
            if (b != a) best = std::min(best, (config[a] - config[b]).norm());
        }
      if (ring > static_cast<std::int64_t>(std::sqrt(static_cast<double>(n))) + 2) break;
    }
  }
  return best;
}

SubsetCheck check_exclusion_subset(const PointConfig& config, const std::vector<int>& subset,
                                   const SubsetCheckOptions& opts) {
  require_unit(config, "check_exclusion_subset");
  const int n = static_cast<int>(config.size());
  if (subset.empty()) throw InvalidArgument("check_exclusion_subset: empty subset");
  std::vector<char> in_subset(n, 0);
  for (int k : subset) {
    if (k < 0 || k >= n) throw InvalidArgument("check_exclusion_subset: index out of range");
    if (in_subset[k]) throw InvalidArgument("check_exclusion_subset: repeated index");
    in_subset[k] = 1;
  }
  if (static_cast<int>(subset.size()) >= n) throw InvalidArgument("check_exclusion_subset: subset must be proper");

  Points centers(subset.size(), 2);
  for (std::size_t k = 0; k < subset.size(); ++k) centers.row(k) = config.points.row(subset[k]);
  const NucleusSet nuclei(centers);
  const double radius = screening_radius();

  SubsetCheck out;
  const bool separated = nuclei.size() == 1 || nuclei.min_separation() >= 2.0 * radius;
  if (separated) {
    out.exact = true;
    for (int p = 0; p < n; ++p) {
      if (in_subset[p]) continue;
      double phi = 0.0;
      bool inside = false;
      for (Eigen::Index c = 0; c < nuclei.size(); ++c) {
        const double d = (config[p] - nuclei[c]).norm();
        if (d < radius) {
          inside = true;
          phi += single_nucleus_solution(nuclei[c]).at_distance(d);
        }
      }
      if (inside) out.violations.push_back({subset, p, phi});
    }
    out.pass = out.violations.empty();
    return out;
  }

  const TfSolution sol = solve_tf(nuclei, opts.h, 4.0 * opts.h, opts.tf);
  const GridSpec& g = sol.box;
  const double tol = opts.mask_tolerance_cells * g.h;
  const int reach = static_cast<int>(std::ceil(opts.mask_tolerance_cells)) + 1;
  for (int p = 0; p < n; ++p) {
    if (in_subset[p]) continue;
    const Point x = config[p];
    if (!g.contains(x)) continue;
    const int i = std::clamp(static_cast<int>(std::floor((x.x() - g.origin.x()) / g.h)), 0, g.nx - 1);
    const int j = std::clamp(static_cast<int>(std::floor((x.y() - g.origin.y()) / g.h)), 0, g.ny - 1);
    if (!sol.in_region(i, j)) continue;
    bool near_complement = false;
    for (int b = j - reach; b <= j + reach && !near_complement; ++b)
      for (int a = i - reach; a <= i + reach && !near_complement; ++a) {
        const bool outside = a < 0 || b < 0 || a >= g.nx || b >= g.ny || !sol.in_region(a, b);
        near_complement = outside && (g.cell_center(a, b) - x).norm() <= tol;
      }
    if (!near_complement) out.violations.push_back({subset, p, sol.phi.interpolate(x)});
  }
  out.pass = out.violations.empty();
  return out;
}

AuditPolicy AuditPolicy::singletons_only() {
  AuditPolicy p;
  p.pair_margin = -1.0;
  p.cluster_radius = 0.0;
  p.random_count = 0;
  return p;
}

std::vector<std::vector<int>> audit_subsets(const PointConfig& config, const AuditPolicy& policy) {
  const int n = static_cast<int>(config.size());
  std::vector<std::vector<int>> family;
  std::set<std::vector<int>> seen;
  auto add = [&](std::vector<int> s) {
    std::sort(s.begin(), s.end());
    if (s.empty() || static_cast<int>(s.size()) >= n) return;
    if (seen.insert(s).second) family.push_back(std::move(s));
  };

  if (policy.singletons)
    for (int i = 0; i < n; ++i) add({i});

  if (policy.pair_margin >= 0.0) {
    const double cutoff = 2.0 * screening_radius() + policy.pair_margin;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if ((config[a] - config[b]).norm() < cutoff) add({a, b});
  }

  if (policy.cluster_radius > 0.0) {
    if (!(policy.cluster_stride > 0.0)) throw InvalidArgument("audit policy: cluster stride must be positive");
    const Point lo = config.points.colwise().minCoeff().transpose();
    const Point hi = config.points.colwise().maxCoeff().transpose();
    const int mx = static_cast<int>(std::ceil((hi.x() - lo.x()) / policy.cluster_stride));
    const int my = static_cast<int>(std::ceil((hi.y() - lo.y()) / policy.cluster_stride));
    for (int b = 0; b <= my; ++b)
      for (int a = 0; a <= mx; ++a) {
        const Point c = lo + policy.cluster_stride * Point(a, b);
        std::vector<int> s;
        for (int k = 0; k < n; ++k)
          if ((config[k] - c).norm() < policy.cluster_radius) s.push_back(k);
        if (s.size() >= 2) add(std::move(s));
      }
  }

  if (policy.random_count > 0) {
    if (policy.random_size < 1) throw InvalidArgument("audit policy: random subset size must be >= 1");
    const int size = std::min(policy.random_size, n - 1);
    std::mt19937_64 rng(policy.seed);
    std::vector<int> idx(n);
    for (int r = 0; r < policy.random_count && size >= 1; ++r) {
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      add(std::vector<int>(idx.begin(), idx.begin() + size));
    }
  }
  return family;
}

ExclusionReport audit_exclusion(const PointConfig& config, const AuditPolicy& policy) {
  const PointConfig unit = config.frame.is_plasma() ? rescale_frame(config, Frame::unit()) : config;
  const auto family = audit_subsets(unit, policy);
  std::vector<SubsetCheck> results(family.size());
  parallel_for(static_cast<int>(family.size()), policy.threads,
               [&](int k) { results[k] = check_exclusion_subset(unit, family[k], policy.check); });

  ExclusionReport report;
  report.subsets_checked = static_cast<int>(family.size());
  std::set<std::pair<int, int>> pairs;
  for (const auto& r : results) {
    report.exact_checks += r.exact;
    for (const auto& v : r.violations) {
      if (v.subset.size() == 1 && !pairs.insert(std::minmax(v.subset.front(), v.point)).second) continue;
      report.violations.push_back(v);
    }
  }
  report.min_distance = unit.size() >= 2 ? min_pairwise_distance(unit) : std::numeric_limits<double>::infinity();
  return report;
}

double packing_density(const PointConfig& config, const Region& region) {
  return count_inside(config.points, region) / region.area();
}

}  // namespace incomp
