#pragma once

// Bathtub problem: minimise \int V rho over 0 <= rho <= cap, \int rho = mass. The optimum fills
// the sublevel sets of V at the cap.

#include <functional>
#include <string>
#include <vector>

#include "incomp/config.hpp"
#include "incomp/gibbs.hpp"
#include "incomp/grid_field.hpp"
#include "incomp/plasma.hpp"

namespace incomp {

struct BathtubResult {
  ScalarField density;
  double energy = 0.0;
  /// V at the last (partially) filled cell.
  double fill_level = 0.0;
  double filled_mass = 0.0;
};

/// Exact discrete optimum: cells sorted by V (ties by cell index), filled at the cap, the last
/// one fractionally. Throws InfeasibleError if mass > cap * grid area, InvalidArgument on NaN.
BathtubResult bathtub_minimize(const ScalarField& V, double mass, double cap);

using Potential = std::function<double(const Point&)>;

/// Samples V on a centred square box of spacing h and doubles the box until the cells strictly below
/// the fill level stay two cells away from its edge (at most 8 doublings, at most 2^24 cells).
BathtubResult bathtub_minimize(const Potential& V, double mass, double cap, double h);

/// Midpoint quadrature \int V rho.
double potential_energy(const ScalarField& density, const ScalarField& V);
double potential_energy(const ScalarField& density, const Potential& V);
/// sum_i V(z_i).
double potential_energy(const Points& points, const Potential& V);
/// Average of sum_i V(z_i) over samples.
double potential_energy(const std::vector<Points>& samples, const Potential& V);

/// Named potentials for the scaled comparison: "harmonic" |x|^2, "quartic" |x|^4, "zero".
Potential builtin_bathtub_potential(const std::string& name);

struct BoundComparison {
  /// \int V rho_state with V(z) = U(z / sqrt(N)).
  double state_energy = 0.0;
  /// N * bathtub(U, mass 1, frame cap).
  double bathtub_energy = 0.0;
  double ratio = 0.0;
  double slack = 0.1;
  bool pass = false;
};

struct CompareOptions {
  double h = 1.0 / 256.0;
  double slack = 0.1;
};

/// Compares the potential energy of a state with the bathtub lower bound at the frame's cap.
/// `samples` are configurations in the model's frame (one for a minimizer, many for a chain).
BoundComparison compare_bounds(const PlasmaModel& model, const Potential& U, const std::vector<Points>& samples,
                               const CompareOptions& opts = {});
BoundComparison compare_bounds(const Chain& chain, const Potential& U, const CompareOptions& opts = {});
BoundComparison compare_bounds(const PlasmaModel& model, const Potential& U, const MinimizeResult& minimizer,
                               const CompareOptions& opts = {});

}  // namespace incomp
