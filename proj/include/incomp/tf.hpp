#pragma once

// Incompressible neutral Thomas-Fermi screening regions for unit point charges.
//
// The TF potential Phi of nuclei x_1..x_K solves the obstacle problem
//   Phi >= 0,  -Delta Phi - 2 pi (rho_nuc - 1) >= 0,  complementary,
// and the screening density is sigma = 1 on Sigma = {Phi > 0}, 0 elsewhere.
// The chemical potential is identically zero, so Phi vanishes outside Sigma.

#include <optional>
#include <span>
#include <vector>

#include "incomp/grid_field.hpp"
#include "incomp/obstacle.hpp"

namespace incomp {

/// Radius of the screening disk of a single unit nucleus.
double screening_radius();

/// K >= 1 pairwise distinct unit charges.
class NucleusSet {
 public:
  NucleusSet() = default;
  explicit NucleusSet(Points positions);

  const Points& positions() const { return positions_; }
  Eigen::Index size() const { return positions_.rows(); }
  Point operator[](Eigen::Index k) const { return positions_.row(k).transpose(); }
  Point centroid() const;
  /// Largest distance of a nucleus from the centroid.
  double spread() const;
  double min_separation() const;

  NucleusSet subset(std::span<const int> indices) const;
  ChargeList charges() const { return ChargeList(positions_); }

 private:
  Points positions_;
};

enum class TfInit { Zero, Superposition };

struct TfOptions {
  ObstacleOptions solver{.method = ObstacleMethod::ProjectedMultigrid,
                         .tol = 2.0 * 3.14159265358979323846 * 1e-8,
                         .omega = 1.9,
                         .max_sweeps = 0};
  TfInit init = TfInit::Superposition;
  /// Cells with Phi above this belong to Sigma.
  double activation_threshold = 1e-10;
  double growth = 1.5;
  int max_enlargements = 5;
};

struct TfSolution {
  ScalarField phi;
  ScalarField sigma;
  double region_area = 0.0;
  double residual = 0.0;
  GridSpec box;
  long sweeps = 0;
  int enlargements = 0;

  bool in_region(int i, int j) const { return sigma(i, j) > 0.5; }
};

/// Solves on an automatically sized box (support bound plus `pad`), enlarging it when
/// Sigma reaches the boundary. Throws ConvergenceError / InvalidArgument.
TfSolution solve_tf(const NucleusSet& nuclei, double h, double pad, const TfOptions& opts = {});

/// Solves on a caller-supplied grid; no enlargement.
TfSolution solve_tf_on_grid(const NucleusSet& nuclei, const GridSpec& grid,
                            const TfOptions& opts = {});

/// True if any Sigma cell lies in the outermost `band` cells of the grid.
bool region_touches_boundary(const TfSolution& sol, int band = 1);

/// Closed-form single-nucleus potential: -log r + (pi/2) r^2 - (log pi)/2 - 1/2 inside the
/// disk of radius 1/sqrt(pi), zero outside.
struct SingleNucleusProfile {
  Point center = Point::Zero();
  double radius = 0.0;

  double operator()(const Point& x) const { return at_distance((x - center).norm()); }
  double at_distance(double r) const;
  /// d Phi / d r.
  double radial_derivative(double r) const;
};
SingleNucleusProfile single_nucleus_solution(const Point& x0);

/// R + sqrt(M_R) with M_R = max(phi samples on |x - centroid| = R) / pi.
double support_radius_bound(const NucleusSet& nuclei, double R, std::span<const double> phi_on_circle);
/// A priori variant: the largest S with S <= R + sqrt((K/pi) log((R+S)/(R-spread))),
/// minimised over a few R. Always encloses the support.
double support_radius_bound(const NucleusSet& nuclei);
/// Same with a caller-chosen R (> spread).
double support_radius_bound(const NucleusSet& nuclei, double R);

/// `n` equally spaced samples of a field on a circle.
std::vector<double> circle_samples(const ScalarField& field, const Point& center, double R, int n = 256);

struct TfDiagnostics {
  double min_phi = 0.0;
  double area_defect = 0.0;  ///< |area - K| / K
  double residual = 0.0;     ///< complementarity defect away from nucleus cells
  bool nuclei_inside = false;
  int component_count = 0;
  int components_without_nucleus = 0;
  double max_phi_outside = 0.0;

  bool phi_ok = false, area_ok = false, residual_ok = false, components_ok = false,
       outside_ok = false;
  bool all_pass() const {
    return phi_ok && area_ok && residual_ok && nuclei_inside && components_ok && outside_ok;
  }
};

struct TfCheckTolerances {
  double phi = 1e-9;
  double area = 1e-2;
  double residual = 2.0 * 3.14159265358979323846 * 1e-8;
};

/// Checks the structural properties of a solution against its nuclei.
TfDiagnostics verify_tf_solution(const TfSolution& sol, const NucleusSet& nuclei,
                                 const TfCheckTolerances& tol = {});

/// Cellwise defect of the (phi, sigma) pair: equation residual on Sigma, |phi| plus the
/// inequality violation off Sigma. Nucleus-adjacent cells are set to zero.
ScalarField tf_defect_field(const TfSolution& sol, const NucleusSet& nuclei);

/// Phi with the lattice near field of every nucleus swapped for the continuum one (see
/// lattice_log_correction). The raw 5-point solution deviates from the closed form by about 1e-2
/// two cells from a nucleus whatever h is; the corrected field is second-order accurate there.
ScalarField near_field_corrected_phi(const TfSolution& sol, const NucleusSet& nuclei, int window = 24);

/// Indices (i, j) of the four cloud-in-cell cells of every nucleus.
std::vector<std::pair<int, int>> nucleus_cells(const NucleusSet& nuclei, const GridSpec& grid);

/// 4-connected components of Sigma; returns labels (-1 outside) and the count.
std::pair<Eigen::ArrayXXi, int> label_components(const TfSolution& sol);

struct MonotonicityReport {
  bool pass = false;
  int mask_cells_outside = 0;  ///< small-set Sigma cells not within one cell of large Sigma
  double max_phi_excess = 0.0; ///< max(phi_small - phi_large)
  explicit operator bool() const { return pass; }
};

/// Checks Sigma(small) within Sigma(large) and Phi_small <= Phi_large on a shared grid.
/// Throws InvalidArgument if `small` is not a subset of `large`.
MonotonicityReport tf_monotonicity_check(const NucleusSet& small, const NucleusSet& large, double h,
                                         double pad = 0.25, const TfOptions& opts = {},
                                         double phi_tol = 1e-6);

}  // namespace incomp
