// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "incomp/bathtub.hpp"
#include "incomp/cli.hpp"
#include "incomp/exclusion.hpp"
#include "incomp/gibbs.hpp"
#include "incomp/plasma.hpp"
#include "incomp/tf.hpp"

using namespace incomp;

namespace {

const double kPi = std::numbers::pi;
const double kResidualTol = 2.0 * kPi * 1e-8;

int failures = 0;
double worst_residual = 0.0;
int solves = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

void note_residual(const TfSolution& sol, const NucleusSet& nuclei) {
  worst_residual = std::max(worst_residual, verify_tf_solution(sol, nuclei).residual);
  ++solves;
}

// Points uniform in a disk, at least `sep` apart.
Points random_nuclei(std::mt19937_64& rng, int k, double radius, double sep) {
  std::uniform_real_distribution<double> u(-radius, radius);
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < k) {
    const Point p(u(rng), u(rng));
    if (p.norm() > radius) continue;
    if (std::all_of(pts.begin(), pts.end(), [&](const Point& q) { return (p - q).norm() >= sep; })) pts.push_back(p);
  }
  Points out(k, 2);
  for (int i = 0; i < k; ++i) out.row(i) = pts[i].transpose();
  return out;
}

void single_nucleus() {
  const double h = 1.0 / 256.0;
  const NucleusSet one(Points::Zero(1, 2));
  Stopwatch sw;
  const TfSolution sol = solve_tf(one, h, 0.25);
  const double elapsed = sw.seconds();
  note_residual(sol, one);
  const auto profile = single_nucleus_solution(Point::Zero());
  const ScalarField corrected = near_field_corrected_phi(sol, one);
  const auto skip = nucleus_cells(one, sol.box);
  double err = 0.0, raw = 0.0, rmax = 0.0;
  for (int j = 0; j < sol.box.ny; ++j)
    for (int i = 0; i < sol.box.nx; ++i) {
      const Point c = sol.box.cell_center(i, j);
      if (sol.in_region(i, j)) rmax = std::max(rmax, c.norm());
      if (std::find(skip.begin(), skip.end(), std::pair{i, j}) != skip.end()) continue;
      err = std::max(err, std::abs(corrected(i, j) - profile(c)));
      raw = std::max(raw, std::abs(sol.phi(i, j) - profile(c)));
    }
  const double area_err = std::abs(sol.region_area - 1.0);
  const double radius_err = std::abs(rmax - screening_radius());
  const bool pass = radius_err <= 2 * h && area_err <= 1e-2 && err <= 5e-3 && elapsed < 60.0;
  report(1, pass,
         fmt("radius %.6f (|d| %.2e <= %.2e), area %.6f (%.2e <= 1e-2), sup error %.2e <= 5e-3 "
             "[uncorrected 5-point field %.2e], %.2f s",
             rmax, radius_err, 2 * h, sol.region_area, area_err, err, raw, elapsed));
}

void neutrality() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(2, 10);
  double worst_coarse = 0.0, worst_fine = 0.0, ratio_sum = 0.0, coarse_sum = 0.0, fine_sum = 0.0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 20; ++t) {
    const int k = count(rng);
    const NucleusSet nuclei(random_nuclei(rng, k, 1.0, 0.05));
    const TfSolution coarse = solve_tf(nuclei, 1.0 / 256, 0.25);
    const TfSolution fine = solve_tf(nuclei, 1.0 / 512, 0.25);
    note_residual(coarse, nuclei);
    note_residual(fine, nuclei);
    const double ec = std::abs(coarse.region_area - k) / k, ef = std::abs(fine.region_area - k) / k;
    worst_coarse = std::max(worst_coarse, ec);
    worst_fine = std::max(worst_fine, ef);
    ratio_sum += ec / ef;
    worst_ratio = std::min(worst_ratio, ec / ef);
    coarse_sum += ec;
    fine_sum += ef;
  }
  const double mean_ratio = ratio_sum / 20;
  const bool pass = worst_coarse <= 1e-2 && worst_fine <= 5e-3 && mean_ratio >= 2.0;
  report(2, pass,
         fmt("max defect %.2e at 1/256 (<= 1e-2), %.2e at 1/512 (<= 5e-3), mean refinement ratio %.3f >= 2 "
             "[ratio of summed defects %.3f, smallest ratio %.3f]",
             worst_coarse, worst_fine, mean_ratio, coarse_sum / fine_sum, worst_ratio));
}

void monotone_inclusion() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> small_count(1, 4), extra(1, 4);
  int failed = 0, outside = 0;
  double excess = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int ks = small_count(rng), kl = ks + extra(rng);
    const Points all = random_nuclei(rng, kl, 1.5, 0.05);
    const NucleusSet large(all), small(Points(all.topRows(ks)));
    const MonotonicityReport r = tf_monotonicity_check(small, large, 1.0 / 128);
    failed += !r.pass;
    outside = std::max(outside, r.mask_cells_outside);
    excess = std::max(excess, r.max_phi_excess);
  }
  report(3, failed == 0, fmt("%d of 20 nested pairs fail, cells outside %d, max phi excess %.2e", failed, outside, excess));
}

void complementarity() {
  report(4, worst_residual <= kResidualTol,
         fmt("worst residual %.2e <= %.2e over %d solves", worst_residual, kResidualTol, solves));
}

void jellium() {
  Stopwatch s2;
  const MinimizeResult two = minimize(PlasmaModel(2, 1, Frame::unit()));
  const double t2 = s2.seconds();
  Stopwatch s3;
  const MinimizeResult three = minimize(PlasmaModel(3, 1, Frame::unit()));
  const double t3 = s3.seconds();
  const double e2 = std::abs(two.energy - 0.725791), e3 = std::abs(three.energy - 1.569176);
  const double sep = std::abs((two.config[0] - two.config[1]).norm() - std::sqrt(2.0 / kPi));
  const bool pass = e2 <= 1e-4 && sep <= 1e-3 && e3 <= 1e-3 && t2 < 10.0 && t3 < 10.0;
  report(5, pass,
         fmt("N=2 energy %.6f (|d| %.1e), separation |d| %.1e, N=3 energy %.6f (|d| %.1e), %.2f s / %.2f s",
             two.energy, e2, sep, three.energy, e3, t2, t3));
}

void minimal_distance() {
  bool pass = true;
  std::string detail;
  const double bound = (1.0 - 1e-2) / std::sqrt(kPi);
  for (int n : {50, 100, 200}) {
    const MinimizeResult res = minimize(PlasmaModel(n, 1, Frame::unit()), {.seed = 6, .threads = 4});
    const double dmin = min_pairwise_distance(res.config);
    AuditPolicy policy = AuditPolicy::default_policy();
    policy.threads = 4;
    const ExclusionReport audit = audit_exclusion(res.config, policy);
    pass = pass && dmin >= bound && audit.pass();
    detail += fmt("N=%d min distance %.4f, %zu violations in %d subsets; ", n, dmin, audit.violations.size(),
                  audit.subsets_checked);
  }
  report(6, pass, detail + fmt("bound %.4f", bound));
}

void ground_state_density() {
  Stopwatch sw;
  const int n = 400;
  Points charges(3, 2);
  charges << 2.0, 0.0, -1.0, 1.7, -1.0, -1.7;
  const std::vector<std::pair<std::string, PlasmaModel>> cases{
      {"W=0", PlasmaModel(n, 1, Frame::unit())},
      {"charges", PlasmaModel(n, 1, Frame::unit(), PerturbationSpec(ChargeList(charges, Eigen::VectorXd::Constant(3, 8.0))))},
      {"bump", PlasmaModel(n, 1, Frame::unit(),
                           PerturbationSpec(ChargeList(Points(0, 2), Eigen::VectorXd(0)), 0.1,
                                            builtin_potential("gaussian_bump"), 2.0, "gaussian_bump"))},
  };
  bool pass = true;
  std::string detail;
  for (const auto& [name, model] : cases) {
    const MinimizeResult res = minimize(model, {.seed = 3, .threads = 4});
    const Point centroid = res.config.points.colwise().mean().transpose();
    const auto disks = cli::auto_disks(centroid, n, Frame::unit(), 6.0);
    const double ratio = local_density_report(res.config, disks, model.cap_factor()).max_ratio();
    pass = pass && ratio <= 1.10;
    detail += fmt("%s max ratio %.4f (cap factor %.4f, %zu disks); ", name.c_str(), ratio, model.cap_factor(), disks.size());
  }
  const double elapsed = sw.seconds();
  pass = pass && elapsed < 600.0;
  report(7, pass, detail + fmt("%.1f s", elapsed));
}

std::vector<Region> bulk_disks(double support, double radius) {
  std::vector<Region> out{Region(Disk{Point::Zero(), radius})};
  for (int k = 0; k < 6; ++k) {
    const double a = k * kPi / 3;
    out.emplace_back(Disk{0.45 * support * Point(std::cos(a), std::sin(a)), radius});
  }
  return out;
}

Chain ell2_chain;

void rigidity() {
  bool pass = true;
  std::string detail;
  double slowest = 0.0;
  for (int ell : {1, 2}) {
    const Frame frame = Frame::plasma(ell);
    const double cap = frame.density_cap();
    Stopwatch sw;
    const PlasmaModel pure(200, ell, frame);
    Chain chain = sample(pure, {.steps = 1'000'000, .seed = 100 + static_cast<std::uint64_t>(ell)});
    slowest = std::max(slowest, sw.seconds());
    double worst = 0.0;
    for (const auto& region : bulk_disks(pure.support_radius(), 5.0)) {
      const RegionAverage avg = disk_average(chain, region);
      worst = std::max(worst, std::abs(avg.mean / avg.cap_count - 1.0));
    }
    pass = pass && worst <= 0.10;
    detail += fmt("l=%d bulk |density/cap - 1| %.3f; ", ell, worst);
    if (ell == 2) ell2_chain = std::move(chain);

    Stopwatch sh;
    const PlasmaModel holed(200, ell, frame, quasihole_perturbation({{Point::Zero(), 10}}));
    const Chain hc = sample(holed, {.steps = 1'000'000, .seed = 200 + static_cast<std::uint64_t>(ell)});
    slowest = std::max(slowest, sh.seconds());
    double margin = -std::numeric_limits<double>::infinity();
    for (const auto& region : bulk_disks(holed.support_radius(), 5.0)) {
      const RegionAverage avg = disk_average(hc, region);
      const double bound = avg.cap_count * 1.1 + 3.0 * avg.stderr_mean;
      margin = std::max(margin, avg.mean - bound);
    }
    pass = pass && margin <= 0.0;
    detail += fmt("hole m=10 worst count - bound %.2f; ", margin);
  }
  pass = pass && slowest < 1800.0;
  report(8, pass, detail + fmt("slowest chain %.1f s", slowest));
}

void sampler_exactness() {
  const Chain c = sample(PlasmaModel(1, 1, Frame::plasma(1)), {.steps = 400000, .thin = 10, .seed = 9});
  std::vector<double> r2;
  for (const auto& s : c.samples) r2.push_back(s.row(0).squaredNorm());
  const auto [mean, se] = batch_means(r2);

  std::mt19937_64 rng(10);
  std::normal_distribution<double> g;
  const PlasmaModel model(20, 2, Frame::plasma(2), quasihole_perturbation({{Point(1.0, -0.5), 2}}));
  std::uniform_int_distribution<int> pick(0, model.N - 1);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Points x(model.N, 2);
    for (int k = 0; k < model.N; ++k) x.row(k) << 4.0 * g(rng), 4.0 * g(rng);
    const int i = pick(rng);
    const Point y = x.row(i).transpose() + 1.5 * Point(g(rng), g(rng));
    worst = std::max(worst, std::abs(detailed_balance_defect(model, x, i, y, 1.5)));
  }
  const bool pass = std::abs(mean - 1.0) <= 3 * se && worst <= 1e-12;
  report(9, pass, fmt("N=1 mean |z|^2 %.4f +- %.4f, detailed-balance defect %.1e over 1000 moves", mean, se, worst));
}

void bathtub_oracles() {
  const double h = 1.0 / 512;
  const auto harmonic = builtin_bathtub_potential("harmonic");
  double worst = 0.0;
  std::string detail;
  for (int ell : {1, 2}) {
    const double e = bathtub_minimize(harmonic, 1.0, 1.0 / (kPi * ell), h).energy;
    worst = std::max(worst, std::abs(e - ell / 2.0));
    detail += fmt("harmonic l=%d %.6f; ", ell, e);
  }
  const double quartic = bathtub_minimize(builtin_bathtub_potential("quartic"), 1.0, 1.0 / kPi, h).energy;
  worst = std::max(worst, std::abs(quartic - 1.0 / 3.0));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const GridSpec g = aligned_grid(Point(-1.5, -1.5), Point(1.5, 1.5), 1.0 / 32);
  const ScalarField V = ScalarField::sample(g, [](const Point& x) { return x.squaredNorm() + 0.2 * std::cos(4 * x.y()); });
  const double cap = 1.0 / kPi;
  const BathtubResult opt = bathtub_minimize(V, 1.0, cap);
  std::uniform_int_distribution<int> cell(0, g.nx * g.ny - 1);
  double lowest = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 10000; ++t) {
    ScalarField rho = opt.density;
    double* d = rho.values().data();
    for (int moves = 0; moves < 5; ++moves) {
      const int a = cell(rng), b = cell(rng);
      const double delta = std::min(d[a], cap - d[b]) * u(rng);
      d[a] -= delta;
      d[b] += delta;
    }
    lowest = std::min(lowest, potential_energy(rho, V) - opt.energy);
  }
  const bool pass = worst <= 1e-3 && lowest >= -1e-12;
  report(10, pass,
         detail + fmt("quartic %.6f; worst error %.1e <= 1e-3; smallest perturbation gain %.1e >= -1e-12", quartic, worst, lowest));
}

void energy_bound() {
  const BoundComparison cmp = compare_bounds(ell2_chain, builtin_bathtub_potential("harmonic"));
  report(11, cmp.pass && cmp.state_energy >= 0.9 * cmp.bathtub_energy,
         fmt("E_state %.3f, E_bt %.3f, ratio %.4f >= 0.9", cmp.state_energy, cmp.bathtub_energy, cmp.ratio));
}

void pl_class() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.1, 2.0);
  std::uniform_int_distribution<int> terms(1, 4), degree(0, 5);
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 50; ++t) {
    std::vector<double> alpha;
    std::vector<std::vector<std::complex<double>>> coeffs;
    const int m = terms(rng);
    for (int j = 0; j < m; ++j) {
      alpha.push_back(pos(rng));
      std::vector<std::complex<double>> c(degree(rng) + 1);
      for (auto& a : c) a = {u(rng), u(rng)};
      coeffs.push_back(c);
    }
    auto G = [&](const Point& x) {
      const std::complex<double> z(x.x(), x.y());
      double s = 0.0;
      for (int j = 0; j < m; ++j) {
        std::complex<double> f = 0.0;
        for (auto it = coeffs[j].rbegin(); it != coeffs[j].rend(); ++it) f = f * z + *it;
        s += alpha[j] * std::abs(f);
      }
      return s;
    };
    const Point centre(u(rng), u(rng));
    const SubharmonicityReport r = subharmonicity_check(G, centre, {0.05, 0.2, 0.5, 1.0});
    worst = std::min(worst, r.max_violation);
  }
  report(12, worst >= -1e-6, fmt("smallest mean-value deficit %.2e over 50 functions (>= -1e-6)", worst));
}

}  // namespace

int main() {
  Stopwatch total;
  const std::vector<std::function<void()>> steps{single_nucleus, neutrality, monotone_inclusion, complementarity,
                                                  jellium, minimal_distance, ground_state_density, rigidity,
                                                  sampler_exactness, bathtub_oracles, energy_bound, pl_class};
  int id = 1;
  for (const auto& step : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
    ++id;
  }
  std::printf("%d of 12 criteria failed, %.1f s\n", failures, total.seconds());
  return failures == 0 ? 0 : 1;
}
