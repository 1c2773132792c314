#include "incomp/plasma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "incomp/errors.hpp"
#include "incomp/parallel.hpp"

namespace incomp {

// --- perturbations ------------------------------------------------------------------------

PerturbationSpec::PerturbationSpec(ChargeList charges, double eps, Potential U, double laplacian_bound,
                                   std::string name)
    : charges_(std::move(charges)), eps_(eps), U_(std::move(U)), laplacian_bound_(laplacian_bound),
      name_(std::move(name)) {
  charges_.validate();
  for (Eigen::Index k = 0; k < charges_.size(); ++k)
    if (charges_.weights(k) < 0.0)
      throw InvalidArgument("perturbation charges must have nonnegative weight (superharmonicity)");
  if (!(eps_ >= 0.0) || !std::isfinite(eps_)) throw InvalidArgument("perturbation eps must be finite and >= 0");
  if (!(laplacian_bound_ >= 0.0) || !std::isfinite(laplacian_bound_))
    throw InvalidArgument("Laplacian bound must be finite and >= 0");
  if (eps_ > 0.0 && !U_) throw InvalidArgument("eps > 0 needs a smooth potential");
}

PerturbationSpec quasihole_perturbation(const std::vector<QuasiHole>& holes) {
  Points p(holes.size(), 2);
  Eigen::VectorXd w(holes.size());
  for (std::size_t k = 0; k < holes.size(); ++k) {
    if (holes[k].multiplicity < 1) throw InvalidArgument("quasi-hole multiplicity must be >= 1");
    p.row(k) = holes[k].position.transpose();
    w(k) = 2.0 * holes[k].multiplicity;
  }
  return PerturbationSpec(ChargeList(std::move(p), std::move(w)));
}

PerturbationSpec::Potential builtin_potential(const std::string& name) {
  if (name == "none") return {};
  if (name == "gaussian_bump") return [](const Point& z) { return -std::exp(-0.5 * z.squaredNorm()); };
  if (name == "quartic") return [](const Point& z) { return z.squaredNorm() * z.squaredNorm(); };
  throw InvalidArgument("unknown builtin potential '" + name + "'");
}

std::optional<double> builtin_laplacian_bound(const std::string& name) {
  if (name == "none") return 0.0;
  // Delta(-e^{-r^2/2}) = (2 - r^2) e^{-r^2/2}, largest in modulus at r = 0.
  if (name == "gaussian_bump") return 2.0;
  if (name == "quartic") return std::nullopt;
  throw InvalidArgument("unknown builtin potential '" + name + "'");
}

// --- model --------------------------------------------------------------------------------

PlasmaModel::PlasmaModel(int n, int ell_, Frame frame_, PerturbationSpec perturbation_)
    : N(n), ell(ell_), frame(frame_), perturbation(std::move(perturbation_)) {
  validate();
}

void PlasmaModel::validate() const {
  if (N < 1) throw InvalidArgument("model needs N >= 1");
  if (ell < 1) throw InvalidArgument("model needs l >= 1");
  if (frame.is_plasma() && frame.ell != ell) throw FrameMismatchError("plasma frame exponent differs from model l");
}

double PlasmaModel::confinement() const { return frame.is_plasma() ? 1.0 : std::numbers::pi / 2.0; }
double PlasmaModel::coupling() const { return frame.is_plasma() ? 2.0 * ell : 1.0; }
double PlasmaModel::beta() const { return frame.is_plasma() ? 1.0 : 2.0 * ell; }

double PlasmaModel::support_radius() const {
  return frame.is_plasma() ? std::sqrt(static_cast<double>(ell) * N) : std::sqrt(N / std::numbers::pi);
}

double PlasmaModel::cap_factor() const {
  const double e = perturbation.eps() * perturbation.laplacian_bound();
  return frame.is_plasma() ? 1.0 + e / 4.0 : 1.0 + e / (2.0 * std::numbers::pi);
}

PlasmaModel rescale_frame(const PlasmaModel& model, const Frame& target) {
  if (model.frame == target) throw FrameMismatchError("rescale_frame: source and target frames coincide");
  if (model.frame.is_plasma() && target.is_plasma())
    throw FrameMismatchError("rescale_frame: cannot convert between plasma frames directly");
  if (target.is_plasma() && target.ell != model.ell) throw FrameMismatchError("rescale_frame: exponent mismatch");
  const double length = target.is_plasma() ? std::sqrt(std::numbers::pi * model.ell)
                                           : 1.0 / std::sqrt(std::numbers::pi * model.ell);
  const double energy = target.is_plasma() ? 2.0 * model.ell : 1.0 / (2.0 * model.ell);
  const PerturbationSpec& p = model.perturbation;
  ChargeList charges(p.point_charges().positions * length, p.point_charges().weights * energy);
  PerturbationSpec::Potential U;
  if (p.potential()) U = [inner = p.potential(), length](const Point& z) { return inner(z / length); };
  PerturbationSpec q(std::move(charges), p.eps() * energy, std::move(U), p.laplacian_bound() / (length * length),
                     p.potential_name());
  return PlasmaModel(model.N, model.ell, target, std::move(q));
}

// --- energy and gradient ------------------------------------------------------------------

namespace {

void check_shape(const PlasmaModel& model, const Points& points) {
  if (points.rows() != model.N) throw InvalidArgument("configuration size differs from model N");
  if (!points.allFinite()) throw InvalidArgument("configuration has non-finite coordinates");
}

// Energy or +inf on a singular configuration.
double energy_or_inf(const PlasmaModel& model, const Points& x) {
  const Eigen::Index n = x.rows();
  const double c1 = model.confinement(), c2 = model.coupling();
  double one_body = c1 * x.squaredNorm();
  // Products of squared distances in short runs cut the number of logarithms.
  double pair = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = x(i, 0), yi = x(i, 1);
    double prod = 1.0;
    int run = 0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = xi - x(j, 0), dy = yi - x(j, 1);
      const double d2 = dx * dx + dy * dy;
      if (d2 == 0.0) return std::numeric_limits<double>::infinity();
      prod *= d2;
      if (++run == 8) {
        pair += std::log(prod);
        prod = 1.0;
        run = 0;
      }
    }
    pair += std::log(prod);
  }
  double w = 0.0;
  const auto& ch = model.perturbation.point_charges();
  for (Eigen::Index k = 0; k < ch.size(); ++k) {
    const double wk = ch.weights(k);
    if (wk == 0.0) continue;
    const Point a = ch.positions.row(k).transpose();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d2 = (x.row(i).transpose() - a).squaredNorm();
      if (d2 == 0.0) return std::numeric_limits<double>::infinity();
      s += std::log(d2);
    }
    w -= 0.5 * wk * s;
  }
  if (model.perturbation.has_smooth_part()) {
    const auto& U = model.perturbation.potential();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += U(x.row(i).transpose());
    w += model.perturbation.eps() * s;
  }
  const double e = one_body - 0.5 * c2 * pair + w;
  return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
}

Points gradient_unchecked(const PlasmaModel& model, const Points& x) {
  const Eigen::Index n = x.rows();
  const double c1 = model.confinement(), c2 = model.coupling();
  Points g = 2.0 * c1 * x;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = x(i, 0) - x(j, 0), dy = x(i, 1) - x(j, 1);
      const double d2 = dx * dx + dy * dy;
      if (d2 == 0.0) throw SingularConfigurationError("coincident particles");
      const double f = c2 / d2;
      g(i, 0) -= f * dx;
      g(i, 1) -= f * dy;
      g(j, 0) += f * dx;
      g(j, 1) += f * dy;
    }
  const auto& ch = model.perturbation.point_charges();
  for (Eigen::Index k = 0; k < ch.size(); ++k) {
    const double wk = ch.weights(k);
    if (wk == 0.0) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dx = x(i, 0) - ch.positions(k, 0), dy = x(i, 1) - ch.positions(k, 1);
      const double d2 = dx * dx + dy * dy;
      if (d2 == 0.0) throw SingularConfigurationError("particle on a perturbation charge");
      g(i, 0) -= wk * dx / d2;
      g(i, 1) -= wk * dy / d2;
    }
  }
  if (model.perturbation.has_smooth_part()) {
    const auto& U = model.perturbation.potential();
    const double eps = model.perturbation.eps();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Point p = x.row(i).transpose();
      const double d = 1e-5 * std::max(1.0, p.norm());
      g(i, 0) += eps * (U(p + Point(d, 0)) - U(p - Point(d, 0))) / (2.0 * d);
      g(i, 1) += eps * (U(p + Point(0, d)) - U(p - Point(0, d))) / (2.0 * d);
    }
  }
  return g;
}

double sup_norm(const Points& g) { return g.rowwise().norm().maxCoeff(); }

}  // namespace

double hamiltonian(const PlasmaModel& model, const Points& points) {
  check_shape(model, points);
  const double e = energy_or_inf(model, points);
  if (!std::isfinite(e)) throw SingularConfigurationError("hamiltonian: singular configuration");
  return e;
}

double hamiltonian(const PlasmaModel& model, const PointConfig& config) {
  if (!(config.frame == model.frame)) throw FrameMismatchError("hamiltonian: configuration frame differs from model frame");
  return hamiltonian(model, config.points);
}

Points gradient(const PlasmaModel& model, const Points& points) {
  check_shape(model, points);
  return gradient_unchecked(model, points);
}

Points gradient(const PlasmaModel& model, const PointConfig& config) {
  if (!(config.frame == model.frame)) throw FrameMismatchError("gradient: configuration frame differs from model frame");
  return gradient(model, config.points);
}

double move_energy_change(const PlasmaModel& model, const Points& x, int i, const Point& y) {
  const Point old = x.row(i).transpose();
  double dlog = 0.0;  // sum_j log(|y - x_j|^2 / |old - x_j|^2)
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    if (j == i) continue;
    const double dx1 = y.x() - x(j, 0), dy1 = y.y() - x(j, 1);
    const double dx0 = old.x() - x(j, 0), dy0 = old.y() - x(j, 1);
    dlog += std::log((dx1 * dx1 + dy1 * dy1) / (dx0 * dx0 + dy0 * dy0));
  }
  double dE = model.confinement() * (y.squaredNorm() - old.squaredNorm()) - 0.5 * model.coupling() * dlog;
  const auto& ch = model.perturbation.point_charges();
  for (Eigen::Index k = 0; k < ch.size(); ++k) {
    const Point a = ch.positions.row(k).transpose();
    dE -= 0.5 * ch.weights(k) * std::log((y - a).squaredNorm() / (old - a).squaredNorm());
  }
  if (model.perturbation.has_smooth_part())
    dE += model.perturbation.eps() * (model.perturbation.potential()(y) - model.perturbation.potential()(old));
  return std::isnan(dE) ? std::numeric_limits<double>::infinity() : dE;
}

// --- minimization -------------------------------------------------------------------------

std::vector<Points> initial_configurations(const PlasmaModel& model, int starts, std::uint64_t seed) {
  if (starts < 1) throw InvalidArgument("minimize: need at least one start");
  const double scale = model.frame.length_scale();
  const double spacing = std::sqrt(2.0 / std::sqrt(3.0)) * scale;
  const double R = model.support_radius();
  const int lattice_starts = (starts + 1) / 2;
  std::vector<Points> out;
  for (int s = 0; s < starts; ++s) {
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(s));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Points p(model.N, 2);
    if (s < lattice_starts) {
      const double angle = s == 0 ? 0.0 : 2.0 * std::numbers::pi * unif(rng);
      const double jitter = (s == 0 ? 0.02 : 0.1) * spacing;
      Eigen::Matrix2d rot;
      rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
      p = triangular_lattice(model.N) * scale;
      p = (p * rot.transpose()).eval();
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        p(i, 0) += jitter * normal(rng);
        p(i, 1) += jitter * normal(rng);
        const double r = p.row(i).norm();
        if (r > R) p.row(i) *= R / r;
      }
    } else {
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double r = R * std::sqrt(unif(rng)), t = 2.0 * std::numbers::pi * unif(rng);
        p(i, 0) = r * std::cos(t);
        p(i, 1) = r * std::sin(t);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

MinimizeResult descend(const PlasmaModel& model, const Points& start, const MinimizeOptions& opts) {
  check_shape(model, start);
  const double tol = opts.tol > 0.0 ? opts.tol : 1e-6 * model.N;
  Points x = start;
  double E = energy_or_inf(model, x);
  if (!std::isfinite(E)) throw InvalidArgument("minimize: singular initial configuration");
  Points g = gradient_unchecked(model, x);
  double gsup = sup_norm(g);

  MinimizeResult res;
  const double spacing = model.frame.length_scale();
  double alpha = gsup > 0.0 ? 0.1 * spacing / gsup : 1.0;
  int it = 0;
  for (; it < opts.max_iter && gsup > tol; ++it) {
    const double g2 = g.squaredNorm();
    double step = alpha;
    Points trial;
    double Et = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 80; ++k, step *= opts.shrink) {
      trial = x - step * g;
      Et = energy_or_inf(model, trial);
      if (Et <= E - opts.armijo_c * step * g2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    Points gt = gradient_unchecked(model, trial);
    // Barzilai-Borwein trial step for the next iteration.
    const Points sdiff = trial - x;
    const Points ydiff = gt - g;
    const double sy = (sdiff.array() * ydiff.array()).sum();
    const double yy = ydiff.squaredNorm();
    alpha = (sy > 0.0 && yy > 0.0) ? std::clamp(sy / yy, 1e-12, 1e6) : 2.0 * step;
    x = std::move(trial);
    E = Et;
    g = std::move(gt);
    gsup = sup_norm(g);
  }
  res.config = PointConfig(x, model.frame);
  res.energy = E;
  res.grad_sup = gsup;
  res.iterations = it;
  res.restarts_used = 1;
  res.converged = gsup <= tol;
  res.start_energies = {E};
  return res;
}

MinimizeResult minimize(const PlasmaModel& model, const MinimizeOptions& opts) {
  model.validate();
  std::vector<Points> starts;
  if (opts.init) {
    if (!(opts.init->frame == model.frame)) throw FrameMismatchError("minimize: initial configuration frame differs");
    starts.push_back(opts.init->points);
  } else {
    starts = initial_configurations(model, opts.starts, opts.seed);
  }
  std::vector<MinimizeResult> runs(starts.size());
  parallel_for(static_cast<int>(starts.size()), opts.threads,
               [&](int k) { runs[k] = descend(model, starts[k], opts); });

  int best = -1;
  MinimizeResult out;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    out.start_energies.push_back(runs[k].energy);
    if (runs[k].converged && (best < 0 || runs[k].energy < runs[best].energy)) best = static_cast<int>(k);
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "minimize: no start reached the gradient tolerance in " << opts.max_iter << " iterations";
    throw ConvergenceError(msg.str());
  }
  auto energies = std::move(out.start_energies);
  out = runs[best];
  out.start_energies = std::move(energies);
  out.restarts_used = static_cast<int>(runs.size());
  return out;
}

// --- density reports ----------------------------------------------------------------------

double DensityReport::max_ratio() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.ratio);
  return m;
}

DensityReport local_density_report(const PointConfig& config, const std::vector<Region>& regions,
                                   double cap_factor) {
  if (!(cap_factor > 0.0)) throw InvalidArgument("cap factor must be positive");
  DensityReport rep;
  const double cap = config.frame.density_cap();
  for (const auto& region : regions) {
    DensityRow row;
    row.region = region.describe();
    row.count = count_inside(config.points, region);
    row.area = region.area();
    row.density = row.count / row.area;
    row.cap = cap;
    row.cap_factor = cap_factor;
    row.ratio = row.density / (cap * cap_factor);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace incomp
