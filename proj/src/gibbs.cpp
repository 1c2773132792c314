#include "incomp/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <limits>
#include <numbers>
#include <random>
#include <tuple>

#include "incomp/errors.hpp"

namespace incomp {

double metropolis_log_acceptance(const PlasmaModel& model, const Points& points, int i, const Point& y) {
  const double dE = move_energy_change(model, points, i, y);
  return std::min(0.0, -model.beta() * dE);
}

double proposal_log_density(const Point& x, const Point& y, double step) {
  return -(y - x).squaredNorm() / (2.0 * step * step) - std::log(2.0 * std::numbers::pi * step * step);
}

double detailed_balance_defect(const PlasmaModel& model, const Points& x, int i, const Point& y, double step) {
  const Point old = x.row(i).transpose();
  Points moved = x;
  moved.row(i) = y.transpose();
  // log pi(y) - log pi(x) from the forward energy change.
  const double log_ratio = -model.beta() * move_energy_change(model, x, i, y);
  const double forward = proposal_log_density(old, y, step) + metropolis_log_acceptance(model, x, i, y);
  const double backward = log_ratio + proposal_log_density(y, old, step) + metropolis_log_acceptance(model, moved, i, old);
  return forward - backward;
}

Chain sample(const PlasmaModel& model, const ChainOptions& opts) {
  model.validate();
  const int n = model.N;
  if (opts.steps < 0) throw InvalidArgument("sample: steps must be >= 0");
  if (!(opts.target_acceptance > 0.0 && opts.target_acceptance < 1.0))
    throw InvalidArgument("sample: target acceptance must lie in (0, 1)");

  Chain chain;
  chain.model = model;
  chain.seed = opts.seed;
  chain.burn_in = opts.burn_in >= 0 ? opts.burn_in : 200L * n;
  chain.thin = opts.thin > 0 ? opts.thin : n;
  double step = opts.step_size > 0.0 ? opts.step_size : 0.5 * model.frame.length_scale();

  Points x;
  if (opts.init) {
    if (!(opts.init->frame == model.frame)) throw FrameMismatchError("sample: initial configuration frame differs");
    x = opts.init->points;
  } else {
    x = initial_configurations(model, 1, opts.seed)[0];
  }
  hamiltonian(model, x);  // throws on a singular start

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto move = [&]() {
    const int i = pick(rng);
    const Point y = x.row(i).transpose() + step * Point(normal(rng), normal(rng));
    const double logA = metropolis_log_acceptance(model, x, i, y);
    if (std::log(unif(rng)) < logA) {
      x.row(i) = y.transpose();
      return true;
    }
    return false;
  };

  const long window = std::max(100, n);
  long window_moves = 0, window_accepts = 0;
  double last_window_rate = 1.0;
  for (long t = 0; t < chain.burn_in; ++t) {
    window_accepts += move();
    if (++window_moves == window) {
      last_window_rate = static_cast<double>(window_accepts) / window_moves;
      step *= std::exp(last_window_rate - opts.target_acceptance);
      window_moves = window_accepts = 0;
    }
  }
  if (chain.burn_in >= window && last_window_rate == 0.0)
    throw ConvergenceError("sample: no move accepted at the end of burn-in");
  chain.step_size = step;

  for (long t = 1; t <= opts.steps; ++t) {
    chain.accepted += move();
    ++chain.proposals;
    if (t % chain.thin == 0) {
      chain.samples.push_back(x);
      chain.energies.push_back(hamiltonian(model, x));
    }
  }
  chain.acceptance_rate = chain.proposals > 0 ? static_cast<double>(chain.accepted) / chain.proposals : 0.0;
  return chain;
}

Histogram density_histogram(const std::vector<Points>& samples, const GridSpec& grid) {
  grid.validate();
  if (samples.empty()) throw InvalidArgument("density_histogram: no samples");
  Histogram out{ScalarField(grid), 0.0};
  long total = 0, clipped = 0;
  for (const auto& s : samples)
    for (Eigen::Index k = 0; k < s.rows(); ++k) {
      ++total;
      const double u = (s(k, 0) - grid.origin.x()) / grid.h;
      const double v = (s(k, 1) - grid.origin.y()) / grid.h;
      if (!(u >= 0.0 && v >= 0.0 && u < grid.nx && v < grid.ny)) {
        ++clipped;
        continue;
      }
      out.density(static_cast<int>(u), static_cast<int>(v)) += 1.0;
    }
  out.density.values() /= samples.size() * grid.cell_area();
  out.clipped_fraction = static_cast<double>(clipped) / total;
  return out;
}

Histogram density_histogram(const Chain& chain, const GridSpec& grid) {
  return density_histogram(chain.samples, grid);
}

std::pair<double, double> batch_means(const std::vector<double>& trace, int batches) {
  if (batches < 2) throw InvalidArgument("batch_means: need at least two batches");
  if (static_cast<int>(trace.size()) < batches) throw InvalidArgument("batch_means: fewer samples than batches");
  const std::size_t len = trace.size() / batches;
  std::vector<double> means(batches);
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < len; ++k) s += trace[b * len + k];
    means[b] = s / len;
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= batches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= batches - 1;
  return {mean, std::sqrt(var / batches)};
}

RegionAverage disk_average(const Chain& chain, const Region& region, int batches) {
  if (static_cast<int>(chain.samples.size()) < batches)
    throw InvalidArgument("disk_average: need at least as many samples as batches");
  std::vector<double> counts;
  counts.reserve(chain.samples.size());
  for (const auto& s : chain.samples) counts.push_back(count_inside(s, region));
  RegionAverage out;
  std::tie(out.mean, out.stderr_mean) = batch_means(counts, batches);
  out.batches = batches;
  out.area = region.area();
  out.cap_count = chain.model.frame.density_cap() * out.area;
  return out;
}

double integrated_autocorrelation_time(const std::vector<double>& trace) {
  const std::size_t n = trace.size();
  if (n < 2) throw InvalidArgument("integrated_autocorrelation_time: need at least two values");
  double mean = 0.0;
  for (double v : trace) mean += v;
  mean /= n;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) s += (trace[k] - mean) * (trace[k + lag] - mean);
    return s / n;
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return std::numeric_limits<double>::infinity();
  // Sum consecutive pairs rho(2m) + rho(2m+1) while they stay positive.
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::max(tau, 1e-12);
}

ChainDiagnostics chain_diagnostics(const Chain& chain) {
  if (chain.samples.empty()) throw InvalidArgument("chain_diagnostics: empty chain");
  ChainDiagnostics d;
  d.acceptance = chain.acceptance_rate;
  d.frozen = chain.accepted == 0;
  d.tau = chain.energies.size() >= 2 ? integrated_autocorrelation_time(chain.energies)
                                     : std::numeric_limits<double>::infinity();
  d.tau_moves = d.tau * chain.thin;
  d.batches = std::min<int>(20, static_cast<int>(chain.samples.size()));
  d.undersampled = d.frozen || !(d.tau <= 1.2);
  return d;
}

void write_samples_csv(std::ostream& os, const std::vector<Points>& samples) {
  os << "sample_id,particle_id,x,y\n" << std::setprecision(17);
  for (std::size_t s = 0; s < samples.size(); ++s)
    for (Eigen::Index k = 0; k < samples[s].rows(); ++k)
      os << s << ',' << k << ',' << samples[s](k, 0) << ',' << samples[s](k, 1) << '\n';
}

std::vector<Points> read_samples_csv(std::istream& is) {
  std::vector<std::vector<Point>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("sample_id", 0) == 0) continue;
    std::stringstream ss(line);
    std::string a, b, x, y;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, x, ',') || !std::getline(ss, y, ','))
      throw InvalidArgument("samples csv line " + std::to_string(lineno) + ": expected sample_id,particle_id,x,y");
    try {
      const auto s = std::stoul(a), k = std::stoul(b);
      if (s >= rows.size()) rows.resize(s + 1);
      if (k != rows[s].size()) throw InvalidArgument("samples csv line " + std::to_string(lineno) + ": particles out of order");
      rows[s].emplace_back(std::stod(x), std::stod(y));
    } catch (const std::logic_error&) {
      throw InvalidArgument("samples csv line " + std::to_string(lineno) + ": not numeric");
    }
  }
  std::vector<Points> out;
  for (const auto& r : rows) {
    Points p(r.size(), 2);
    for (std::size_t k = 0; k < r.size(); ++k) p.row(k) = r[k].transpose();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace incomp
