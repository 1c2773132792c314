#include "incomp/bathtub.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "incomp/errors.hpp"

namespace incomp {

BathtubResult bathtub_minimize(const ScalarField& V, double mass, double cap) {
  const GridSpec& g = V.grid();
  g.validate();
  if (!(cap > 0.0) || !std::isfinite(cap)) throw InvalidArgument("bathtub: cap must be positive and finite");
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw InvalidArgument("bathtub: mass must be nonnegative and finite");
  if (V.values().isNaN().any()) throw InvalidArgument("bathtub: potential contains NaN");
  const double cell_mass = cap * g.cell_area();
  const long cells = static_cast<long>(g.nx) * g.ny;
  const double full = mass / cell_mass;
  if (full > static_cast<double>(cells) * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "bathtub: mass " << mass << " exceeds cap * area = " << cap * cells * g.cell_area();
    throw InfeasibleError(msg.str());
  }

  const long n_full = std::min(cells, static_cast<long>(std::floor(full)));
  const double fraction = n_full < cells ? full - n_full : 0.0;
  const long used = std::min(cells, n_full + (fraction > 0.0 ? 1 : 0));

  const double* v = V.values().data();
  std::vector<long> order(cells);
  std::iota(order.begin(), order.end(), 0L);
  auto less = [v](long a, long b) { return v[a] < v[b] || (v[a] == v[b] && a < b); };
  if (used < cells) std::nth_element(order.begin(), order.begin() + used, order.end(), less);
  std::sort(order.begin(), order.begin() + used, less);

  BathtubResult res;
  res.density = ScalarField(g);
  double* rho = res.density.values().data();
  long double energy = 0.0L, filled = 0.0L;
  for (long k = 0; k < used; ++k) {
    const long c = order[k];
    const double share = k < n_full ? 1.0 : fraction;
    rho[c] = cap * share;
    energy += static_cast<long double>(v[c]) * cap * share * g.cell_area();
    filled += static_cast<long double>(cap) * share * g.cell_area();
    res.fill_level = v[c];
  }
  res.energy = static_cast<double>(energy);
  res.filled_mass = static_cast<double>(filled);
  return res;
}

namespace {

// A filled edge cell strictly below the fill level means the sublevel set was cut by the box.
bool touches_edge(const BathtubResult& res, const ScalarField& V, int band) {
  const ScalarField& rho = res.density;
  for (int j = 0; j < rho.ny(); ++j)
    for (int i = 0; i < rho.nx(); ++i) {
      const bool edge = i < band || j < band || i >= rho.nx() - band || j >= rho.ny() - band;
      if (edge && rho(i, j) > 0.0 && V(i, j) < res.fill_level) return true;
    }
  return false;
}

}  // namespace

BathtubResult bathtub_minimize(const Potential& V, double mass, double cap, double h) {
  if (!(h > 0.0)) throw InvalidArgument("bathtub: h must be positive");
  if (!(cap > 0.0)) throw InvalidArgument("bathtub: cap must be positive");
  double half = std::max(2.0 * std::sqrt(mass / (std::numbers::pi * cap)), 4.0 * h);
  for (int attempt = 0; attempt <= 8; ++attempt, half *= 2.0) {
    const GridSpec g = aligned_grid(Point(-half, -half), Point(half, half), h);
    if (static_cast<double>(g.nx) * g.ny > 1 << 24) break;
    const ScalarField sampled = ScalarField::sample(g, V);
    BathtubResult res = bathtub_minimize(sampled, mass, cap);
    if (!touches_edge(res, sampled, 2)) return res;
  }
  throw InfeasibleError("bathtub: filled set keeps reaching the box edge; is V confining?");
}

double potential_energy(const ScalarField& density, const ScalarField& V) {
  if (!(density.grid() == V.grid())) throw InvalidArgument("potential_energy: density and potential grids differ");
  return (density.values() * V.values()).sum() * density.grid().cell_area();
}

double potential_energy(const ScalarField& density, const Potential& V) {
  return potential_energy(density, ScalarField::sample(density.grid(), V));
}

double potential_energy(const Points& points, const Potential& V) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < points.rows(); ++k) s += V(points.row(k).transpose());
  return s;
}

double potential_energy(const std::vector<Points>& samples, const Potential& V) {
  if (samples.empty()) throw InvalidArgument("potential_energy: no samples");
  double s = 0.0;
  for (const auto& p : samples) s += potential_energy(p, V);
  return s / samples.size();
}

Potential builtin_bathtub_potential(const std::string& name) {
  if (name == "harmonic") return [](const Point& x) { return x.squaredNorm(); };
  if (name == "quartic") return [](const Point& x) { return x.squaredNorm() * x.squaredNorm(); };
  if (name == "zero") return [](const Point&) { return 0.0; };
  throw InvalidArgument("unknown bathtub potential '" + name + "'");
}

BoundComparison compare_bounds(const PlasmaModel& model, const Potential& U, const std::vector<Points>& samples,
                               const CompareOptions& opts) {
  if (samples.empty()) throw InvalidArgument("compare_bounds: no samples");
  for (const auto& s : samples)
    if (s.rows() != model.N) throw InvalidArgument("compare_bounds: sample size differs from model N");
  const double root_n = std::sqrt(static_cast<double>(model.N));
  const Potential V = [&U, root_n](const Point& z) { return U(z / root_n); };

  BoundComparison out;
  out.slack = opts.slack;
  out.state_energy = potential_energy(samples, V);
  out.bathtub_energy = model.N * bathtub_minimize(U, 1.0, model.frame.density_cap(), opts.h).energy;
  out.ratio = out.bathtub_energy != 0.0 ? out.state_energy / out.bathtub_energy
                                        : (out.state_energy == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  out.pass = out.state_energy >= out.bathtub_energy - opts.slack * std::abs(out.bathtub_energy);
  return out;
}

BoundComparison compare_bounds(const Chain& chain, const Potential& U, const CompareOptions& opts) {
  return compare_bounds(chain.model, U, chain.samples, opts);
}

BoundComparison compare_bounds(const PlasmaModel& model, const Potential& U, const MinimizeResult& minimizer,
                               const CompareOptions& opts) {
  if (!(minimizer.config.frame == model.frame)) throw FrameMismatchError("compare_bounds: frame mismatch");
  return compare_bounds(model, U, std::vector<Points>{minimizer.config.points}, opts);
}

}  // namespace incomp
