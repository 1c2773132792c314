#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "incomp/errors.hpp"
#include "incomp/plasma.hpp"

using namespace incomp;

namespace {

const double kPi = std::numbers::pi;

Points random_points(std::uint64_t seed, int n, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Points p(n, 2);
  for (int k = 0; k < n; ++k) p.row(k) << g(rng), g(rng);
  return p;
}

// Central differences of the energy, step relative to the coordinate scale.
Points fd_gradient(const PlasmaModel& m, const Points& x, double step) {
  Points g(x.rows(), 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int c = 0; c < 2; ++c) {
      Points a = x, b = x;
      a(i, c) += step;
      b(i, c) -= step;
      g(i, c) = (hamiltonian(m, a) - hamiltonian(m, b)) / (2 * step);
    }
  return g;
}

std::vector<PlasmaModel> model_variants() {
  const ChargeList holes(Points{{0.4, -0.3}, {-1.0, 0.8}}, Eigen::Vector2d(2.0, 4.0));
  return {
      PlasmaModel(6, 1, Frame::unit()),
      PlasmaModel(6, 2, Frame::plasma(2)),
      PlasmaModel(6, 1, Frame::plasma(1), quasihole_perturbation({{Point(0.5, 0.5), 1}})),
      PlasmaModel(6, 1, Frame::unit(), PerturbationSpec(holes)),
      PlasmaModel(6, 3, Frame::plasma(3),
                  PerturbationSpec(holes, 0.3, builtin_potential("gaussian_bump"), 2.0, "gaussian_bump")),
      PlasmaModel(6, 1, Frame::unit(), PerturbationSpec(holes, 0.05, builtin_potential("quartic"), 100.0, "quartic")),
  };
}

}  // namespace

TEST_SUITE("plasma") {

TEST_CASE("perturbations must stay superharmonic") {
  const Points a{{0.0, 0.0}};
  CHECK_THROWS_AS(PerturbationSpec(ChargeList(a, Eigen::VectorXd::Constant(1, -1.0))), InvalidArgument);
  CHECK_THROWS_AS(PerturbationSpec(ChargeList(a), -0.1, builtin_potential("gaussian_bump"), 2.0), InvalidArgument);
  CHECK_THROWS_AS(PerturbationSpec(ChargeList(a), 0.1), InvalidArgument);
  CHECK_THROWS_AS(PerturbationSpec(ChargeList(a), 0.1, builtin_potential("quartic"), INFINITY), InvalidArgument);
  CHECK(PerturbationSpec().is_zero());
}

TEST_CASE("builtin potentials and their Laplacian bounds") {
  CHECK_FALSE(builtin_potential("none"));
  CHECK(builtin_laplacian_bound("gaussian_bump") == 2.0);
  CHECK_FALSE(builtin_laplacian_bound("quartic").has_value());
  CHECK_THROWS_AS(builtin_potential("cubic"), InvalidArgument);
  const auto U = builtin_potential("gaussian_bump");
  CHECK(U(Point::Zero()) == doctest::Approx(-1.0));
  double worst = 0.0;
  const double d = 1e-3;
  for (double r = 0.0; r < 5.0; r += 0.05) {
    const Point x(r, 0.3 * r);
    const double lap = (U(x + Point(d, 0)) + U(x - Point(d, 0)) + U(x + Point(0, d)) + U(x - Point(0, d)) - 4 * U(x)) / (d * d);
    worst = std::max(worst, std::abs(lap));
  }
  CHECK(worst <= 2.0 + 1e-5);
  CHECK(worst == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("quasi-hole charges") {
  const PerturbationSpec none = quasihole_perturbation({});
  CHECK(none.is_zero());
  const PerturbationSpec two = quasihole_perturbation({{Point(1, 2), 2}, {Point(0, 0), 3}});
  CHECK(two.point_charges().weights(0) == 4.0);
  CHECK(two.point_charges().weights(1) == 6.0);
  CHECK(two.eps() == 0.0);
  CHECK_THROWS_AS(quasihole_perturbation({{Point(0, 0), 0}}), InvalidArgument);

  const PlasmaModel m1(1, 1, Frame::plasma(1), quasihole_perturbation({{Point::Zero(), 1}}));
  CHECK(hamiltonian(m1, Points{{1.0, 0.0}}) == doctest::Approx(1.0));
  const PlasmaModel m2(1, 1, Frame::plasma(1), quasihole_perturbation({{Point::Zero(), 2}}));
  const double e = std::numbers::e;
  CHECK(hamiltonian(m2, Points{{e, 0.0}}) == doctest::Approx(e * e - 4.0));
}

TEST_CASE("energies at closed-form points") {
  CHECK(hamiltonian(PlasmaModel(1, 1, Frame::unit()), Points{{0.0, 0.0}}) == 0.0);
  const double a = 1.0 / std::sqrt(2 * kPi);
  const PlasmaModel two(2, 1, Frame::unit());
  CHECK(hamiltonian(two, Points{{a, 0.0}, {-a, 0.0}}) == doctest::Approx(0.725791).epsilon(1e-6));
  CHECK(hamiltonian(two, Points{{a, 0.0}, {-a, 0.0}}) == doctest::Approx(0.5 + 0.5 * std::log(kPi / 2)));
  const PlasmaModel p(2, 2, Frame::plasma(2));
  CHECK(hamiltonian(p, Points{{1.0, 0.0}, {-1.0, 0.0}}) == doctest::Approx(2.0 - 4.0 * std::log(2.0)));
}

TEST_CASE("singular configurations and frame mismatch") {
  const PlasmaModel two(2, 1, Frame::unit());
  CHECK_THROWS_AS(hamiltonian(two, Points{{0.3, 0.3}, {0.3, 0.3}}), SingularConfigurationError);
  const PlasmaModel hole(1, 1, Frame::plasma(1), quasihole_perturbation({{Point(1, 1), 1}}));
  CHECK_THROWS_AS(hamiltonian(hole, Points{{1.0, 1.0}}), SingularConfigurationError);
  CHECK_THROWS_AS(hamiltonian(two, PointConfig(Points{{0, 0}, {1, 0}}, Frame::plasma(1))), FrameMismatchError);
  CHECK_THROWS_AS(hamiltonian(two, Points{{0.0, 0.0}}), InvalidArgument);
  CHECK_THROWS_AS(PlasmaModel(0, 1, Frame::unit()), InvalidArgument);
  CHECK_THROWS_AS(PlasmaModel(3, 2, Frame::plasma(1)), FrameMismatchError);
}

TEST_CASE("gradient oracles") {
  const Points g1 = gradient(PlasmaModel(1, 1, Frame::unit()), Points{{1.0, 0.0}});
  CHECK(g1(0, 0) == doctest::Approx(kPi));
  CHECK(g1(0, 1) == 0.0);
  const double a = 1.0 / std::sqrt(2 * kPi);
  CHECK(gradient(PlasmaModel(2, 1, Frame::unit()), Points{{a, 0.0}, {-a, 0.0}}).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("gradient matches finite differences for every model variant") {
  std::uint64_t seed = 1;
  for (const PlasmaModel& m : model_variants()) {
    for (int trial = 0; trial < 3; ++trial) {
      const double scale = m.frame.length_scale();
      const Points x = random_points(seed++, m.N, scale);
      const Points g = gradient(m, x);
      const Points fd = fd_gradient(m, x, 1e-6 * scale);
      CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, g.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("single-move energy change") {
  const PlasmaModel m = model_variants()[4];
  const Points x = random_points(77, m.N, 2.0);
  Points y = x;
  y.row(3) << 0.7, -1.1;
  CHECK(move_energy_change(m, x, 3, Point(0.7, -1.1)) == doctest::Approx(hamiltonian(m, y) - hamiltonian(m, x)));
}

TEST_CASE("rotation invariance without perturbation") {
  const PlasmaModel m(8, 2, Frame::plasma(2));
  const Points x = random_points(4, 8, 2.0);
  const double t = 0.7;
  Eigen::Matrix2d R;
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  const Points rx = x * R.transpose();
  CHECK(hamiltonian(m, rx) == doctest::Approx(hamiltonian(m, x)).epsilon(1e-12));
  const MinimizeResult r = minimize(m, {.starts = 1, .seed = 5});
  CHECK(gradient(m, Points(r.config.points * R.transpose())).cwiseAbs().maxCoeff() <= 1e-5 * 8 * 1.01);
}

TEST_CASE("model rescaling scales energy differences by 2l") {
  for (const PlasmaModel& m : model_variants()) {
    const Frame target = m.frame.is_plasma() ? Frame::unit() : Frame::plasma(m.ell);
    const PlasmaModel t = rescale_frame(m, target);
    const double s = m.frame.is_plasma() ? 1.0 / (2.0 * m.ell) : 2.0 * m.ell;
    const PointConfig x(random_points(10, m.N, m.frame.length_scale()), m.frame);
    const PointConfig y(random_points(11, m.N, m.frame.length_scale()), m.frame);
    const double dt = hamiltonian(t, rescale_frame(x, target)) - hamiltonian(t, rescale_frame(y, target));
    const double ds = hamiltonian(m, x) - hamiltonian(m, y);
    CHECK(dt == doctest::Approx(s * ds).epsilon(1e-9));
    CHECK(t.cap_factor() == doctest::Approx(m.cap_factor()).epsilon(1e-12));
    const PlasmaModel back = rescale_frame(t, m.frame);
    CHECK(hamiltonian(back, x) == doctest::Approx(hamiltonian(m, x)).epsilon(1e-12));
  }
}

TEST_CASE("support radius and cap factor") {
  CHECK(PlasmaModel(100, 1, Frame::unit()).support_radius() == doctest::Approx(std::sqrt(100 / kPi)));
  CHECK(PlasmaModel(100, 3, Frame::plasma(3)).support_radius() == doctest::Approx(std::sqrt(300.0)));
  const PerturbationSpec bump(ChargeList(Points(0, 2), Eigen::VectorXd(0)), 0.1, builtin_potential("gaussian_bump"), 2.0);
  CHECK(PlasmaModel(10, 1, Frame::plasma(1), bump).cap_factor() == doctest::Approx(1.05));
  CHECK(PlasmaModel(10, 1, Frame::unit(), bump).cap_factor() == doctest::Approx(1.0 + 0.2 / (2 * kPi)));
}

TEST_CASE("jellium oracles") {
  const MinimizeResult one = minimize(PlasmaModel(1, 1, Frame::unit()));
  CHECK(one.config.points.norm() <= 1e-6);
  CHECK(std::abs(one.energy) <= 1e-12);

  const MinimizeResult two = minimize(PlasmaModel(2, 1, Frame::unit()));
  CHECK(two.converged);
  CHECK(two.energy == doctest::Approx(0.725791).epsilon(1e-4 / 0.725791));
  CHECK((two.config[0] - two.config[1]).norm() == doctest::Approx(std::sqrt(2 / kPi)).epsilon(1e-3));

  const MinimizeResult three = minimize(PlasmaModel(3, 1, Frame::unit()));
  CHECK(three.energy == doctest::Approx(1.5 - 1.5 * std::log(3 / kPi)).epsilon(1e-3 / 1.569176));
  for (int i = 0; i < 3; ++i) {
    CHECK(three.config[i].norm() == doctest::Approx(1 / std::sqrt(kPi)).epsilon(1e-4));
    CHECK((three.config[i] - three.config[(i + 1) % 3]).norm() == doctest::Approx(std::sqrt(3 / kPi)).epsilon(1e-4));
  }
}

TEST_CASE("descent never raises the energy") {
  const PlasmaModel m = model_variants()[3];
  const Points start = random_points(8, m.N, 1.0);
  double previous = hamiltonian(m, start);
  for (int k = 1; k <= 25; ++k) {
    const MinimizeResult r = descend(m, start, {.max_iter = k});
    CHECK(r.energy <= previous + 1e-12);
    previous = r.energy;
  }
}

TEST_CASE("minimize is deterministic and thread independent") {
  const PlasmaModel m(40, 1, Frame::unit(), quasihole_perturbation({{Point(0.5, 0.0), 2}}));
  const MinimizeResult a = minimize(m, {.starts = 4, .seed = 9, .threads = 1});
  const MinimizeResult b = minimize(m, {.starts = 4, .seed = 9, .threads = 4});
  CHECK((a.config.points.array() == b.config.points.array()).all());
  CHECK(a.start_energies == b.start_energies);
  CHECK(a.grad_sup <= 1e-6 * 40);
  CHECK(a.energy == *std::min_element(a.start_energies.begin(), a.start_energies.end()));
}

TEST_CASE("initial configurations") {
  const PlasmaModel m(60, 2, Frame::plasma(2));
  const auto starts = initial_configurations(m, 5, 1);
  CHECK(starts.size() == 5);
  for (const auto& s : starts) {
    CHECK(s.rows() == 60);
    CHECK(s.rowwise().norm().maxCoeff() <= m.support_radius() * (1 + 1e-12));
  }
  const auto again = initial_configurations(m, 5, 1);
  CHECK((starts[3].array() == again[3].array()).all());
}

TEST_CASE("non-convergence is reported") {
  CHECK_THROWS_AS(minimize(PlasmaModel(30, 1, Frame::unit()), {.max_iter = 2, .starts = 2}), ConvergenceError);
}

TEST_CASE("local density report") {
  const double a = 1.0 / std::sqrt(2 * kPi);
  const PointConfig two(Points{{a, 0.0}, {-a, 0.0}}, Frame::unit());
  const DensityReport r =
      local_density_report(two, {Region(Disk{Point::Zero(), 2.0}), Region(Disk{Point(10, 10), 1.0})});
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].count == 2);
  CHECK(r.rows[0].density == doctest::Approx(2 / (4 * kPi)));
  CHECK(r.rows[0].ratio == doctest::Approx(0.159).epsilon(0.01));
  CHECK(r.rows[1].density == 0.0);
  CHECK(r.rows[1].ratio == 0.0);
  CHECK(r.max_ratio() == r.rows[0].ratio);

  const PointConfig plasma(Points{{0.0, 0.0}}, Frame::plasma(2));
  const DensityReport p = local_density_report(plasma, {Region(Disk{Point::Zero(), 1.0})}, 1.05);
  CHECK(p.rows[0].cap == doctest::Approx(1 / (2 * kPi)));
  CHECK(p.rows[0].ratio == doctest::Approx((1 / kPi) / (1.05 / (2 * kPi))));
}

}  // TEST_SUITE
