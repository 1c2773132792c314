#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "incomp/errors.hpp"
#include "incomp/exclusion.hpp"
#include "incomp/plasma.hpp"

using namespace incomp;

namespace {

const double kRadius = 1.0 / std::sqrt(std::numbers::pi);

PointConfig unit_points(std::initializer_list<std::pair<double, double>> xy) {
  Points p(xy.size(), 2);
  int k = 0;
  for (auto [x, y] : xy) p.row(k++) << x, y;
  return PointConfig(p, Frame::unit());
}

PointConfig random_config(std::uint64_t seed, int n, double box) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-box, box);
  Points p(n, 2);
  for (int k = 0; k < n; ++k) p.row(k) << u(rng), u(rng);
  return PointConfig(p, Frame::unit());
}

}  // namespace

TEST_SUITE("exclusion") {

TEST_CASE("minimum pairwise distance") {
  CHECK(min_pairwise_distance(unit_points({{0, 0}, {1, 0}, {0, 2}})) == 1.0);
  Points hex(6, 2);
  for (int k = 0; k < 6; ++k) hex.row(k) << std::cos(k * std::numbers::pi / 3), std::sin(k * std::numbers::pi / 3);
  CHECK(min_pairwise_distance(PointConfig(hex, Frame::unit())) == doctest::Approx(1.0));
  CHECK_THROWS_AS(min_pairwise_distance(unit_points({{0, 0}})), InvalidArgument);
  CHECK_THROWS_AS(min_pairwise_distance(PointConfig(hex, Frame::plasma(1))), FrameMismatchError);
}

TEST_CASE("bucketed distance agrees exactly") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PointConfig c = random_config(seed, 50 + 40 * static_cast<int>(seed), 5.0);
    CHECK(min_pairwise_distance_bucketed(c) == min_pairwise_distance(c));
  }
  const PointConfig clustered = unit_points({{0, 0}, {1e-9, 0}, {100, 100}});
  CHECK(min_pairwise_distance_bucketed(clustered) == min_pairwise_distance(clustered));
}

TEST_CASE("minimized jellium keeps the screening distance") {
  const MinimizeResult r = minimize(PlasmaModel(50, 1, Frame::unit()), {.starts = 2, .seed = 3});
  CHECK(min_pairwise_distance(r.config) >= kRadius * (1 - 1e-2));
}

TEST_CASE("singleton subsets use the exact disk") {
  const SubsetCheck close = check_exclusion_subset(unit_points({{0, 0}, {0.4, 0}}), {0});
  CHECK_FALSE(close.pass);
  CHECK(close.exact);
  REQUIRE(close.violations.size() == 1);
  CHECK(close.violations[0].point == 1);
  CHECK(close.violations[0].phi == doctest::Approx(single_nucleus_solution(Point::Zero()).at_distance(0.4)));
  CHECK(check_exclusion_subset(unit_points({{0, 0}, {1, 0}}), {0}).pass);
}

TEST_CASE("well separated pair leaves the midpoint free") {
  const SubsetCheck r = check_exclusion_subset(unit_points({{0, 0}, {0.6, 0}, {1.2, 0}}), {0, 2});
  CHECK(r.exact);
  CHECK(r.pass);
  CHECK(1.2 > 2 * kRadius);
}

TEST_CASE("merged pair region is solved on a grid") {
  // The merged region contains each single disk (monotone inclusion) and lies inside the
  // support bound.
  const PointConfig c = unit_points({{-0.15, 0}, {0.15, 0}, {0.0, 0.5}, {0.0, 2.5}});
  const SubsetCheck r = check_exclusion_subset(c, {0, 1});
  CHECK_FALSE(r.exact);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].point == 2);
  CHECK(r.violations[0].phi > 0.0);
  CHECK_THROWS_AS(check_exclusion_subset(c, {}), InvalidArgument);
  CHECK_THROWS_AS(check_exclusion_subset(c, {0, 1, 2, 3}), InvalidArgument);
  CHECK_THROWS_AS(check_exclusion_subset(c, {0, 0}), InvalidArgument);
}

TEST_CASE("audits") {
  Points square(25, 2);
  for (int k = 0; k < 25; ++k) square.row(k) << k % 5, k / 5;
  const ExclusionReport lattice = audit_exclusion(PointConfig(square, Frame::unit()), AuditPolicy::singletons_only());
  CHECK(lattice.pass());
  CHECK(lattice.subsets_checked == 25);
  CHECK(lattice.exact_checks == 25);

  const ExclusionReport pair = audit_exclusion(unit_points({{0, 0}, {0.5, 0}}), AuditPolicy::singletons_only());
  CHECK(pair.violations.size() == 1);
  CHECK(pair.min_distance == doctest::Approx(0.5));
}

TEST_CASE("singleton audit passes exactly when the minimum distance allows it") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PointConfig c = random_config(100 + seed, 12, 1.6);
    const bool pass = audit_exclusion(c, AuditPolicy::singletons_only()).pass();
    CHECK(pass == (min_pairwise_distance(c) >= kRadius));
  }
}

TEST_CASE("audit is frame covariant") {
  const MinimizeResult r = minimize(PlasmaModel(30, 1, Frame::unit()), {.starts = 1, .seed = 2});
  Points squeezed = r.config.points;
  squeezed.row(0) = squeezed.row(1) + Eigen::RowVector2d(0.3, 0.0);
  const PointConfig unit(squeezed, Frame::unit());
  const PointConfig plasma = rescale_frame(unit, Frame::plasma(2));
  const ExclusionReport a = audit_exclusion(unit);
  const ExclusionReport b = audit_exclusion(plasma);
  CHECK(a.subsets_checked == b.subsets_checked);
  CHECK(a.violations.size() == b.violations.size());
  CHECK_FALSE(a.pass());
  CHECK(a.min_distance == doctest::Approx(b.min_distance).epsilon(1e-12));
}

TEST_CASE("audit subsets are deterministic, sorted and proper") {
  const PointConfig c = random_config(9, 40, 3.0);
  AuditPolicy policy;
  policy.random_count = 10;
  policy.seed = 4;
  const auto a = audit_subsets(c, policy);
  const auto b = audit_subsets(c, policy);
  CHECK(a == b);
  for (const auto& s : a) {
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(s.size() < 40);
  }
  const ExclusionReport one = audit_exclusion(c, {.threads = 1});
  const ExclusionReport four = audit_exclusion(c, {.threads = 4});
  CHECK(one.violations.size() == four.violations.size());
  for (std::size_t k = 0; k < one.violations.size(); ++k) {
    CHECK(one.violations[k].subset == four.violations[k].subset);
    CHECK(one.violations[k].point == four.violations[k].point);
  }
}

TEST_CASE("packing density") {
  const PointConfig five = unit_points({{0, 0}, {1, 1}, {-2, 3}, {4, -1}, {0, -5}});
  CHECK(packing_density(five, Region(Disk{Point::Zero(), 10.0})) == doctest::Approx(5.0 / (100 * std::numbers::pi)));
  const PointConfig lat(triangular_lattice(3000), Frame::unit());
  CHECK(packing_density(lat, Region(Disk{Point::Zero(), 20.0})) == doctest::Approx(1.0).epsilon(0.01));
}

}  // TEST_SUITE
