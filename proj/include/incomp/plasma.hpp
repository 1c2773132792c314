#pragma once

// Generalized jellium / plasma Hamiltonians with superharmonic perturbations:
//
//   unit-density frame:  H = (pi/2) sum |x_i|^2 -    sum_{i<j} log|x_i - x_j| + W
//   plasma frame:        H =        sum |z_i|^2 - 2l sum_{i<j} log|z_i - z_j| + W
//
// with W = -sum_k w_k sum_i log|x_i - a_k| + eps sum_i U(x_i), w_k >= 0.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "incomp/config.hpp"

namespace incomp {

/// Fixed repulsive charges plus a smooth one-body potential with a declared Laplacian bound.
/// Quantities are interpreted in the frame of the model that carries them.
class PerturbationSpec {
 public:
  using Potential = std::function<double(const Point&)>;

  PerturbationSpec() = default;
  /// Throws InvalidArgument on a negative weight, negative eps or a missing/unbounded U.
  PerturbationSpec(ChargeList charges, double eps = 0.0, Potential U = {}, double laplacian_bound = 0.0,
                   std::string name = "none");

  const ChargeList& point_charges() const { return charges_; }
  double eps() const { return eps_; }
  const Potential& potential() const { return U_; }
  /// Declared sup |Delta U|.
  double laplacian_bound() const { return laplacian_bound_; }
  const std::string& potential_name() const { return name_; }
  bool has_smooth_part() const { return eps_ > 0.0 && static_cast<bool>(U_); }
  bool is_zero() const { return charges_.size() == 0 && !has_smooth_part(); }

 private:
  ChargeList charges_{Points(0, 2), Eigen::VectorXd(0)};
  double eps_ = 0.0;
  Potential U_;
  double laplacian_bound_ = 0.0;
  std::string name_ = "none";
};

struct QuasiHole {
  Point position = Point::Zero();
  int multiplicity = 1;
};

/// Weight 2m at every hole location (plasma frame), eps = 0.
PerturbationSpec quasihole_perturbation(const std::vector<QuasiHole>& holes);

/// Named smooth potentials: "none", "gaussian_bump" (-exp(-|z|^2/2), sup|Delta U| = 2) and
/// "quartic" (|z|^4, unbounded Laplacian; callers must supply their own bound for a region).
PerturbationSpec::Potential builtin_potential(const std::string& name);
/// Sup of |Delta U| for the builtins that have one; nullopt otherwise.
std::optional<double> builtin_laplacian_bound(const std::string& name);

struct PlasmaModel {
  int N = 1;
  int ell = 1;
  Frame frame = Frame::unit();
  PerturbationSpec perturbation;

  PlasmaModel() = default;
  PlasmaModel(int n, int ell, Frame frame, PerturbationSpec perturbation = {});

  void validate() const;
  /// Coefficient of sum |x|^2.
  double confinement() const;
  /// Coefficient of -sum_{i<j} log|x_i - x_j|.
  double coupling() const;
  /// Gibbs weight is exp(-beta H): 1 in the plasma frame, 2l in the unit-density frame.
  double beta() const;
  /// Neutral support radius: sqrt(N/pi) (unit) or sqrt(l N) (plasma).
  double support_radius() const;
  /// Cap factor 1 + eps sup|Delta U| / 4 (plasma) or 1 + eps sup|Delta U| / (2 pi) (unit).
  double cap_factor() const;
};

/// Rescales coordinates, charge positions, weights and eps so that H_target = s * H_source + const
/// with s = 2l (unit -> plasma) or 1/(2l); minimizers map to minimizers.
PlasmaModel rescale_frame(const PlasmaModel& model, const Frame& target);

/// Exact O(N^2) energy. Throws SingularConfigurationError on coincident particles or a particle
/// on a positive charge, FrameMismatchError on a frame mismatch.
double hamiltonian(const PlasmaModel& model, const PointConfig& config);
double hamiltonian(const PlasmaModel& model, const Points& points);

/// dH/dx_i as rows. The smooth part is differentiated by central differences with step
/// 1e-5 * max(1, |x_i|).
Points gradient(const PlasmaModel& model, const PointConfig& config);
Points gradient(const PlasmaModel& model, const Points& points);

/// Energy change when particle i moves from its current position to y.
double move_energy_change(const PlasmaModel& model, const Points& points, int i, const Point& y);

struct MinimizeOptions {
  /// Stop when max_i |grad_i| <= tol; <= 0 means 1e-6 * N.
  double tol = 0.0;
  int max_iter = 20000;
  int starts = 8;
  std::uint64_t seed = 0;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int threads = 1;
  /// Optional start; when set only this start is run.
  std::optional<PointConfig> init;
};

struct MinimizeResult {
  PointConfig config;
  double energy = 0.0;
  double grad_sup = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  /// Energies of all starts, in start order.
  std::vector<double> start_energies;
};

/// Single descent run from `start`; energy never increases.
MinimizeResult descend(const PlasmaModel& model, const Points& start, const MinimizeOptions& opts);

/// Multi-start gradient descent with Armijo backtracking; the best converged start wins.
/// Throws ConvergenceError if no start converges.
MinimizeResult minimize(const PlasmaModel& model, const MinimizeOptions& opts = {});

/// Start configurations used by minimize: perturbed triangular lattices, then uniform draws in
/// the support disk.
std::vector<Points> initial_configurations(const PlasmaModel& model, int starts, std::uint64_t seed);

struct DensityRow {
  std::string region;
  double count = 0.0;
  double area = 0.0;
  double density = 0.0;
  double cap = 0.0;
  double cap_factor = 1.0;
  /// density / (cap * cap_factor)
  double ratio = 0.0;
  double stderr_count = 0.0;
};

struct DensityReport {
  std::vector<DensityRow> rows;
  double max_ratio() const;
};

/// Per-region count, density and ratio to the frame's cap times `cap_factor`.
DensityReport local_density_report(const PointConfig& config, const std::vector<Region>& regions,
                                   double cap_factor = 1.0);

}  // namespace incomp
