#pragma once

// Single-particle Metropolis sampling of the plasma Gibbs measure exp(-beta H), beta = 1 in
// plasma coordinates (so the measure is exactly the squared wave-function), beta = 2l in the
// unit-density frame.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "incomp/config.hpp"
#include "incomp/plasma.hpp"

namespace incomp {

struct ChainOptions {
  /// Single-particle moves after burn-in.
  long steps = 1'000'000;
  /// Burn-in moves; < 0 means 200 sweeps (200 N moves).
  long burn_in = -1;
  /// Moves between retained samples; <= 0 means N.
  long thin = 0;
  /// Initial Gaussian step per coordinate; <= 0 means half the mean spacing.
  double step_size = 0.0;
  /// Acceptance targeted by the burn-in adaptation.
  double target_acceptance = 0.3;
  std::uint64_t seed = 1;
  /// Start configuration; the perturbed lattice start of minimize() otherwise.
  std::optional<PointConfig> init;
};

struct Chain {
  PlasmaModel model;
  std::vector<Points> samples;
  /// H at every retained sample.
  std::vector<double> energies;
  double acceptance_rate = 0.0;
  long proposals = 0;
  long accepted = 0;
  std::uint64_t seed = 0;
  long burn_in = 0;
  long thin = 0;
  double step_size = 0.0;

  std::size_t size() const { return samples.size(); }
};

/// Runs the chain. The step size adapts during burn-in only and is frozen afterwards.
/// Throws ConvergenceError if nothing is accepted at the end of burn-in.
Chain sample(const PlasmaModel& model, const ChainOptions& opts = {});

/// log of the Metropolis acceptance probability for moving particle i to y.
double metropolis_log_acceptance(const PlasmaModel& model, const Points& points, int i, const Point& y);

/// log density of the isotropic Gaussian proposal from x to y.
double proposal_log_density(const Point& x, const Point& y, double step);

/// log[pi(x) q(x->y) A(x->y)] - log[pi(y) q(y->x) A(y->x)] for the move of particle i to y,
/// with every factor computed by the sampler's own routines. Zero under detailed balance.
double detailed_balance_defect(const PlasmaModel& model, const Points& x, int i, const Point& y, double step);

struct Histogram {
  ScalarField density;
  /// Fraction of particle positions that fell outside the grid.
  double clipped_fraction = 0.0;
};

/// Mean count per cell area per sample.
Histogram density_histogram(const std::vector<Points>& samples, const GridSpec& grid);
Histogram density_histogram(const Chain& chain, const GridSpec& grid);

struct RegionAverage {
  double mean = 0.0;
  double stderr_mean = 0.0;
  int batches = 0;
  double area = 0.0;
  /// cap * area in the chain's frame.
  double cap_count = 0.0;
};

/// Mean in-region count per sample with a batch-means standard error over `batches` batches.
RegionAverage disk_average(const Chain& chain, const Region& region, int batches = 20);

/// Batch-means mean and standard error of a scalar trace.
std::pair<double, double> batch_means(const std::vector<double>& trace, int batches = 20);

/// Integrated autocorrelation time by the initial positive sequence estimator. +inf for a
/// constant trace.
double integrated_autocorrelation_time(const std::vector<double>& trace);

struct ChainDiagnostics {
  double acceptance = 0.0;
  /// Autocorrelation time of H in retained samples.
  double tau = 0.0;
  /// Same in single-particle moves.
  double tau_moves = 0.0;
  int batches = 0;
  bool frozen = false;
  /// Thinning is shorter than the autocorrelation time.
  bool undersampled = false;
};

ChainDiagnostics chain_diagnostics(const Chain& chain);

/// CSV "sample_id,particle_id,x,y".
void write_samples_csv(std::ostream& os, const std::vector<Points>& samples);
std::vector<Points> read_samples_csv(std::istream& is);

}  // namespace incomp
