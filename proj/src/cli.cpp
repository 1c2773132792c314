#include "incomp/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "incomp/bathtub.hpp"
#include "incomp/errors.hpp"
#include "incomp/exclusion.hpp"
#include "incomp/gibbs.hpp"
#include "incomp/plasma.hpp"
#include "incomp/tf.hpp"

namespace incomp::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json point_json(const Point& p) { return json::array({p.x(), p.y()}); }

class Report {
 public:
  explicit Report(std::string command) : command_(std::move(command)) {}

  json& echo() { return echo_; }
  json& results() { return results_; }

  void check(const std::string& name, double value, double bound, bool pass) {
    checks_.push_back({{"name", name}, {"value", num(value)}, {"bound", num(bound)}, {"pass", pass}});
    ok_ = ok_ && pass;
  }
  bool ok() const { return ok_; }

  json to_json() const {
    return {{"command", command_}, {"config_echo", echo_}, {"results", results_}, {"checks", checks_}};
  }

 private:
  std::string command_;
  json echo_ = json::object();
  json results_ = json::object();
  json checks_ = json::array();
  bool ok_ = true;
};

fs::path resolve_out(const std::string& path) {
  const fs::path p(path);
  const char* env = std::getenv("OUTPUT_DIR");
  if (env != nullptr && *env != '\0' && p.is_relative()) return fs::path(env) / p;
  return p;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void write_json(const fs::path& file, const json& j) {
  ensure_parent(file);
  std::ofstream out(file);
  if (!out) throw InvalidArgument("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& file, const std::function<void(std::ostream&)>& writer) {
  ensure_parent(file);
  std::ofstream out(file);
  if (!out) throw InvalidArgument("cannot write " + file.string());
  writer(out);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Binds options and remembers typed getters so reports echo the exact values used.
class OptionBinder {
 public:
  template <class T>
  CLI::Option* add(CLI::App* sub, const std::string& name, T& var, const std::string& desc) {
    getters_[sub].emplace_back(name, [&var] { return json(var); });
    return sub->add_option("--" + name, var, desc);
  }

  json echo(const CLI::App* sub) const {
    json out = json::object();
    if (auto it = getters_.find(sub); it != getters_.end())
      for (const auto& [name, get] : it->second) out[name] = get();
    return out;
  }

 private:
  std::map<const CLI::App*, std::vector<std::pair<std::string, std::function<json()>>>> getters_;
};

// Expands "--config file.json" into explicit options placed before the user's own.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> user;
  std::string config_path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      config_path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      config_path = args[k].substr(9);
    } else {
      user.push_back(args[k]);
    }
  }
  if (config_path.empty() || user.empty()) return user;
  const json doc = json::parse(read_file(config_path));
  if (!doc.is_object()) throw InvalidArgument("config file must hold a JSON object");
  if (doc.contains("command") && doc["command"] != user.front())
    throw InvalidArgument("config file is for command '" + doc["command"].get<std::string>() + "'");
  const json& echo = doc.contains("config_echo") ? doc["config_echo"] : doc;
  std::vector<std::string> out{user.front()};
  for (const auto& [key, value] : echo.items()) {
    if (key == "command") continue;
    out.push_back("--" + key);
    if (value.is_string()) {
      out.push_back(value.get<std::string>());
    } else if (value.is_number_integer()) {
      out.push_back(std::to_string(value.get<long long>()));
    } else if (value.is_number()) {
      std::ostringstream os;
      os << std::setprecision(17) << value.get<double>();
      out.push_back(os.str());
    } else {
      throw InvalidArgument("config key '" + key + "' must be a number or string");
    }
  }
  out.insert(out.end(), user.begin() + 1, user.end());
  return out;
}

// --- model files --------------------------------------------------------------------------

Points rows_xy(const json& arr, const char* what, std::vector<double>& third) {
  if (!arr.is_array()) throw InvalidArgument(std::string(what) + " must be a list of [x, y, value]");
  Points p(arr.size(), 2);
  third.clear();
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const json& r = arr[k];
    if (!r.is_array() || r.size() != 3) throw InvalidArgument(std::string(what) + " entries must be [x, y, value]");
    p(k, 0) = r[0].get<double>();
    p(k, 1) = r[1].get<double>();
    third.push_back(r[2].get<double>());
  }
  return p;
}

// --- commands -----------------------------------------------------------------------------

struct TfArgs {
  std::string nuclei, out = "tf_out", method = "multigrid", init = "superposition";
  double h = 1.0 / 256.0, pad = 0.5, tol = 2.0 * std::numbers::pi * 1e-8, omega = 1.9, area_tol = 1e-2;
  double max_sweeps = 0;
};

int cmd_tf(const TfArgs& a, Report& rep) {
  const ChargeList charges = read_charges_csv_file(a.nuclei);
  for (Eigen::Index k = 0; k < charges.size(); ++k)
    if (charges.weights(k) != 1.0) throw InvalidArgument("nuclei must carry unit charge");
  const NucleusSet nuclei(charges.positions);
  TfOptions opts;
  if (a.method == "multigrid") opts.solver.method = ObstacleMethod::ProjectedMultigrid;
  else if (a.method == "sor") opts.solver.method = ObstacleMethod::ProjectedSor;
  else throw InvalidArgument("--method must be multigrid or sor");
  if (a.init == "superposition") opts.init = TfInit::Superposition;
  else if (a.init == "zero") opts.init = TfInit::Zero;
  else throw InvalidArgument("--init must be superposition or zero");
  opts.solver.tol = a.tol;
  opts.solver.omega = a.omega;
  opts.solver.max_sweeps = static_cast<long>(a.max_sweeps);

  const TfSolution sol = solve_tf(nuclei, a.h, a.pad, opts);
  TfCheckTolerances tol;
  tol.area = a.area_tol;
  tol.residual = a.tol;
  const TfDiagnostics d = verify_tf_solution(sol, nuclei, tol);

  const fs::path dir = resolve_out(a.out);
  fs::create_directories(dir);
  write_grid2d_file((dir / "phi.grid2d").string(), sol.phi);
  write_grid2d_file((dir / "sigma.grid2d").string(), sol.sigma);

  auto& r = rep.results();
  r["K"] = nuclei.size();
  r["area"] = sol.region_area;
  r["area_defect"] = d.area_defect;
  r["residual"] = d.residual;
  r["solver_residual"] = sol.residual;
  r["component_count"] = d.component_count;
  r["min_phi"] = d.min_phi;
  r["max_phi_outside"] = d.max_phi_outside;
  r["sweeps"] = sol.sweeps;
  r["enlargements"] = sol.enlargements;
  r["box"] = {{"nx", sol.box.nx}, {"ny", sol.box.ny}, {"h", sol.box.h}, {"origin", point_json(sol.box.origin)}};
  r["support_bound"] = support_radius_bound(nuclei);
  rep.check("phi_nonnegative", d.min_phi, -tol.phi, d.phi_ok);
  rep.check("area", d.area_defect, tol.area, d.area_ok);
  rep.check("complementarity", d.residual, tol.residual, d.residual_ok);
  rep.check("nuclei_inside", d.nuclei_inside ? 1.0 : 0.0, 1.0, d.nuclei_inside);
  rep.check("components_contain_nucleus", d.components_without_nucleus, 0.0, d.components_ok);
  rep.check("phi_zero_outside", d.max_phi_outside, tol.phi, d.outside_ok);
  write_json(dir / "report.json", rep.to_json());
  return 0;
}

struct AuditArgs {
  std::string points, frame = "unit", policy = "default", out = "exclusion_report.json";
  int ell = 1, random_count = 0, random_size = 3, threads = 1;
  double h = 1.0 / 32.0, pair_margin = 0.1, cluster_radius = 3.0, cluster_stride = 1.5, seed = 0;
};

int cmd_audit(const AuditArgs& a, Report& rep) {
  const PointConfig config(read_points_csv_file(a.points), parse_frame(a.frame, a.ell));
  AuditPolicy policy;
  if (a.policy == "singletons") {
    policy = AuditPolicy::singletons_only();
  } else if (a.policy == "default") {
    policy.pair_margin = a.pair_margin;
    policy.cluster_radius = a.cluster_radius;
    policy.cluster_stride = a.cluster_stride;
  } else {
    throw InvalidArgument("--policy must be default or singletons");
  }
  policy.random_count = a.random_count;
  policy.random_size = a.random_size;
  policy.seed = static_cast<std::uint64_t>(a.seed);
  policy.check.h = a.h;
  policy.threads = a.threads;

  const ExclusionReport report = audit_exclusion(config, policy);
  auto& r = rep.results();
  r["N"] = config.size();
  r["subsets_checked"] = report.subsets_checked;
  r["exact_checks"] = report.exact_checks;
  r["min_distance"] = num(report.min_distance);
  json v = json::array();
  for (const auto& e : report.violations) v.push_back({{"subset", e.subset}, {"point", e.point}, {"phi", e.phi}});
  r["violations"] = v;
  rep.check("exclusion_violations", static_cast<double>(report.violations.size()), 0.0, report.violations.empty());
  if (config.size() >= 2) {
    const double bound = screening_radius() * (1.0 - 1e-2);
    rep.check("min_distance", report.min_distance, bound, report.min_distance >= bound);
  }
  write_json(resolve_out(a.out), rep.to_json());
  return 0;
}

struct MinimizeArgs {
  std::string model, out = "min_out";
  double seed = 0, tol = 0, max_iter = 20000;
  int starts = 8, threads = 1;
};

int cmd_minimize(const MinimizeArgs& a, Report& rep) {
  const PlasmaModel model = parse_model(read_file(a.model));
  MinimizeOptions opts;
  opts.seed = static_cast<std::uint64_t>(a.seed);
  opts.tol = a.tol;
  opts.max_iter = static_cast<int>(a.max_iter);
  opts.starts = a.starts;
  opts.threads = a.threads;
  const MinimizeResult res = minimize(model, opts);

  const fs::path dir = resolve_out(a.out);
  fs::create_directories(dir);
  write_text(dir / "points.csv", [&](std::ostream& os) { write_points_csv(os, res.config.points); });

  auto& r = rep.results();
  r["N"] = model.N;
  r["ell"] = model.ell;
  r["frame"] = model.frame.name();
  r["energy"] = res.energy;
  r["grad_sup"] = res.grad_sup;
  r["tol"] = opts.tol > 0.0 ? opts.tol : 1e-6 * model.N;
  r["iterations"] = res.iterations;
  r["restarts_used"] = res.restarts_used;
  r["start_energies"] = res.start_energies;
  r["cap_factor"] = model.cap_factor();
  rep.check("gradient", res.grad_sup, r["tol"].get<double>(), res.converged);
  if (model.N >= 2) {
    const PointConfig unit = model.frame.is_plasma() ? rescale_frame(res.config, Frame::unit()) : res.config;
    const double d = min_pairwise_distance(unit);
    r["min_distance_unit_frame"] = d;
    // The separation bound needs a superharmonic perturbation; a smooth U carries no sign.
    if (!model.perturbation.has_smooth_part()) {
      const double bound = screening_radius() * (1.0 - 1e-2);
      rep.check("min_distance", d, bound, d >= bound);
    }
  }
  write_json(dir / "result.json", rep.to_json());
  return 0;
}

struct GibbsArgs {
  std::string model, out = "chain_out", init;
  double steps = 1e6, burn_in = -1, thin = 0, step_size = 0, seed = 1, target_acceptance = 0.3, density_h = 0;
};

int cmd_gibbs(const GibbsArgs& a, Report& rep) {
  const PlasmaModel model = parse_model(read_file(a.model));
  ChainOptions opts;
  opts.steps = static_cast<long>(a.steps);
  opts.burn_in = static_cast<long>(a.burn_in);
  opts.thin = static_cast<long>(a.thin);
  opts.step_size = a.step_size;
  opts.seed = static_cast<std::uint64_t>(a.seed);
  opts.target_acceptance = a.target_acceptance;
  if (!a.init.empty()) opts.init = PointConfig(read_points_csv_file(a.init), model.frame);
  const Chain chain = sample(model, opts);
  if (chain.samples.empty()) throw InvalidArgument("gibbs-sample: no samples retained (steps < thin)");
  const ChainDiagnostics d = chain_diagnostics(chain);

  const fs::path dir = resolve_out(a.out);
  fs::create_directories(dir);
  write_text(dir / "samples.csv", [&](std::ostream& os) { write_samples_csv(os, chain.samples); });

  auto& r = rep.results();
  r["N"] = model.N;
  r["ell"] = model.ell;
  r["frame"] = model.frame.name();
  r["samples"] = chain.samples.size();
  r["acceptance"] = chain.acceptance_rate;
  r["step_size"] = chain.step_size;
  r["burn_in"] = chain.burn_in;
  r["thin"] = chain.thin;
  r["tau"] = num(d.tau);
  r["tau_moves"] = num(d.tau_moves);
  r["undersampled"] = d.undersampled;
  if (chain.energies.size() >= 20) {
    const auto [mean, se] = batch_means(chain.energies);
    r["energy_mean"] = mean;
    r["energy_stderr"] = se;
  }
  if (a.density_h > 0.0) {
    const double R = 1.5 * model.support_radius() + 3.0 * model.frame.length_scale();
    const GridSpec g = aligned_grid(Point(-R, -R), Point(R, R), a.density_h);
    const Histogram hist = density_histogram(chain, g);
    write_grid2d_file((dir / "density.grid2d").string(), hist.density);
    r["clipped_fraction"] = hist.clipped_fraction;
  }
  rep.check("acceptance", chain.acceptance_rate, 0.0, !d.frozen && chain.acceptance_rate > 0.0);
  write_json(dir / "diagnostics.json", rep.to_json());
  return 0;
}

struct BathtubArgs {
  std::string V = "builtin:harmonic", cap = "auto", out = "bathtub.json", density;
  double mass = 1.0, h = 0.005;
  int ell = 1;
};

int cmd_bathtub(const BathtubArgs& a, Report& rep) {
  double cap = 0.0;
  if (a.cap == "auto") {
    if (a.ell < 1) throw InvalidArgument("--ell must be >= 1");
    cap = 1.0 / (std::numbers::pi * a.ell);
  } else {
    cap = std::stod(a.cap);
  }
  BathtubResult res;
  if (a.V.rfind("builtin:", 0) == 0) {
    res = bathtub_minimize(builtin_bathtub_potential(a.V.substr(8)), a.mass, cap, a.h);
  } else if (a.V.rfind("grid:", 0) == 0) {
    res = bathtub_minimize(read_grid2d_file(a.V.substr(5)), a.mass, cap);
  } else {
    throw InvalidArgument("--V must be builtin:<name> or grid:<file>");
  }
  if (!a.density.empty()) write_grid2d_file(resolve_out(a.density).string(), res.density);

  auto& r = rep.results();
  r["energy"] = res.energy;
  r["fill_level"] = res.fill_level;
  r["filled_mass"] = res.filled_mass;
  r["cap"] = cap;
  r["box"] = {{"nx", res.density.nx()}, {"ny", res.density.ny()}, {"h", res.density.h()},
              {"origin", point_json(res.density.grid().origin)}};
  const double mass_err = a.mass > 0.0 ? std::abs(res.filled_mass - a.mass) / a.mass : std::abs(res.filled_mass);
  rep.check("mass", mass_err, 1e-9, mass_err <= 1e-9);
  const double excess = res.density.values().maxCoeff() - cap;
  rep.check("density_below_cap", excess, 1e-12, excess <= 1e-12);
  write_json(resolve_out(a.out), rep.to_json());
  return 0;
}

struct VerifyArgs {
  std::string points, chain, frame = "unit", disks = "auto", out = "density_report.json";
  int ell = 1;
  double radius = 0, slack = 0.1, cap_factor = 1.0;
};

std::vector<Region> read_disks(const std::string& path) {
  const ChargeList rows = read_charges_csv_file(path);  // x,y,r shares the x,y,w grammar
  std::vector<Region> out;
  for (Eigen::Index k = 0; k < rows.size(); ++k) out.emplace_back(Disk{rows.positions.row(k).transpose(), rows.weights(k)});
  return out;
}

int cmd_verify(const VerifyArgs& a, Report& rep) {
  if (a.points.empty() == a.chain.empty()) throw InvalidArgument("give exactly one of --points or --chain");
  const Frame frame = parse_frame(a.frame, a.ell);
  if (!(a.cap_factor > 0.0)) throw InvalidArgument("--cap-factor must be positive");

  std::vector<Points> samples;
  if (!a.points.empty()) {
    samples.push_back(read_points_csv_file(a.points));
  } else {
    fs::path p(a.chain);
    if (fs::is_directory(p)) p /= "samples.csv";
    std::ifstream in(p);
    if (!in) throw InvalidArgument("cannot open " + p.string());
    samples = read_samples_csv(in);
    if (samples.empty()) throw InvalidArgument("chain has no samples");
  }
  Point centroid = Point::Zero();
  for (const auto& s : samples) centroid += s.colwise().mean().transpose();
  centroid /= static_cast<double>(samples.size());
  const int n = static_cast<int>(samples.front().rows());

  std::vector<Region> regions;
  if (a.disks == "auto") regions = auto_disks(centroid, n, frame, a.radius);
  else regions = read_disks(a.disks);

  auto& r = rep.results();
  r["N"] = n;
  r["frame"] = frame.name();
  r["samples"] = samples.size();
  r["cap"] = frame.density_cap();
  r["cap_factor"] = a.cap_factor;
  json rows = json::array();
  double max_ratio = 0.0;
  if (!a.points.empty()) {
    const PointConfig config(samples.front(), frame);
    const DensityReport report = local_density_report(config, regions, a.cap_factor);
    for (const auto& row : report.rows) {
      rows.push_back({{"region", row.region}, {"count", row.count}, {"area", row.area}, {"density", row.density},
                      {"ratio", row.ratio}});
      rep.check(row.region, row.ratio, 1.0 + a.slack, row.ratio <= 1.0 + a.slack);
      max_ratio = std::max(max_ratio, row.ratio);
    }
  } else {
    Chain chain;
    chain.model = PlasmaModel(n, frame.ell, frame);
    chain.samples = std::move(samples);
    for (const auto& region : regions) {
      const RegionAverage avg = disk_average(chain, region);
      const double bound = avg.cap_count * a.cap_factor * (1.0 + a.slack) + 3.0 * avg.stderr_mean;
      const double ratio = avg.mean / (avg.cap_count * a.cap_factor);
      rows.push_back({{"region", region.describe()}, {"mean", avg.mean}, {"stderr", avg.stderr_mean},
                      {"area", avg.area}, {"cap_count", avg.cap_count}, {"ratio", ratio}});
      rep.check(region.describe(), avg.mean, bound, avg.mean <= bound);
      max_ratio = std::max(max_ratio, ratio);
    }
  }
  r["regions"] = rows;
  r["max_ratio"] = max_ratio;
  write_json(resolve_out(a.out), rep.to_json());
  return 0;
}

int cmd_selftest(const std::string& out, Report& rep) {
  // Single nucleus against the closed-form profile.
  {
    const double h = 1.0 / 256.0;
    const NucleusSet one(Points::Zero(1, 2));
    const TfSolution sol = solve_tf(one, h, 0.25);
    const auto prof = single_nucleus_solution(Point::Zero());
    const ScalarField phi = near_field_corrected_phi(sol, one);
    auto excluded = nucleus_cells(one, sol.box);
    double err = 0.0, rmax = 0.0;
    for (int j = 0; j < sol.box.ny; ++j)
      for (int i = 0; i < sol.box.nx; ++i) {
        if (std::find(excluded.begin(), excluded.end(), std::pair{i, j}) != excluded.end()) continue;
        const Point c = sol.box.cell_center(i, j);
        err = std::max(err, std::abs(phi(i, j) - prof(c)));
        if (sol.in_region(i, j)) rmax = std::max(rmax, c.norm());
      }
    rep.results()["tf_single_nucleus"] = {{"area", sol.region_area}, {"sup_error", err}, {"radius", rmax}};
    rep.check("tf_area", std::abs(sol.region_area - 1.0), 1e-2, std::abs(sol.region_area - 1.0) <= 1e-2);
    rep.check("tf_profile", err, 5e-3, err <= 5e-3);
    rep.check("tf_radius", std::abs(rmax - screening_radius()), 2 * h, std::abs(rmax - screening_radius()) <= 2 * h);
  }
  // Two-particle jellium.
  {
    const PlasmaModel model(2, 1, Frame::unit());
    const MinimizeResult res = minimize(model);
    const double exact = 0.5 + 0.5 * std::log(std::numbers::pi / 2.0);
    const double sep = (res.config[0] - res.config[1]).norm();
    rep.results()["jellium_two"] = {{"energy", res.energy}, {"separation", sep}};
    rep.check("jellium_energy", std::abs(res.energy - exact), 1e-4, std::abs(res.energy - exact) <= 1e-4);
    const double sep_err = std::abs(sep - std::sqrt(2.0 / std::numbers::pi));
    rep.check("jellium_separation", sep_err, 1e-3, sep_err <= 1e-3);
  }
  // Harmonic bathtub at l = 1: the unit disk filled at density 1/pi.
  {
    const BathtubResult bt = bathtub_minimize(builtin_bathtub_potential("harmonic"), 1.0, 1.0 / std::numbers::pi, 1.0 / 256.0);
    rep.results()["bathtub_harmonic"] = {{"energy", bt.energy}};
    rep.check("bathtub_energy", std::abs(bt.energy - 0.5), 1e-3, std::abs(bt.energy - 0.5) <= 1e-3);
  }
  if (!out.empty()) write_json(resolve_out(out), rep.to_json());
  return 0;
}

}  // namespace

PlasmaModel parse_model(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidArgument("model file must hold a JSON object");
  static const std::vector<std::string> known{"N", "ell", "frame", "holes", "charges", "eps", "U", "deltaU_bound"};
  for (const auto& [key, value] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw InvalidArgument("unknown model key '" + key + "'");
  if (!doc.contains("N")) throw InvalidArgument("model file needs N");
  try {
    const int n = doc["N"].get<int>();
    const int ell = doc.value("ell", 1);
    const Frame frame = parse_frame(doc.value("frame", std::string("plasma")), ell);

    std::vector<Point> positions;
    std::vector<double> weights;
    std::vector<double> third;
    if (doc.contains("holes")) {
      const Points p = rows_xy(doc["holes"], "holes", third);
      for (Eigen::Index k = 0; k < p.rows(); ++k) {
        const double m = third[k];
        if (m < 1 || m != std::floor(m)) throw InvalidArgument("hole multiplicities must be positive integers");
        positions.push_back(p.row(k).transpose());
        // Weight 2m in plasma units; the unit-density Hamiltonian is the plasma one divided by 2l.
        weights.push_back(frame.is_plasma() ? 2.0 * m : m / ell);
      }
    }
    if (doc.contains("charges")) {
      const Points p = rows_xy(doc["charges"], "charges", third);
      for (Eigen::Index k = 0; k < p.rows(); ++k) {
        positions.push_back(p.row(k).transpose());
        weights.push_back(third[k]);
      }
    }
    Points pos(positions.size(), 2);
    Eigen::VectorXd w(weights.size());
    for (std::size_t k = 0; k < positions.size(); ++k) {
      pos.row(k) = positions[k].transpose();
      w(k) = weights[k];
    }

    const double eps = doc.value("eps", 0.0);
    const std::string uname = doc.value("U", std::string("none"));
    PerturbationSpec::Potential U = builtin_potential(uname);
    double bound = 0.0;
    if (doc.contains("deltaU_bound")) {
      bound = doc["deltaU_bound"].get<double>();
    } else if (auto b = builtin_laplacian_bound(uname)) {
      bound = *b;
    } else if (eps > 0.0) {
      throw InvalidArgument("potential '" + uname + "' needs an explicit deltaU_bound");
    }
    if (eps > 0.0 && !U) throw InvalidArgument("eps > 0 needs a potential U");
    return PlasmaModel(n, ell, frame, PerturbationSpec(ChargeList(pos, w), eps, U, bound, uname));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed model file: ") + e.what());
  }
}

std::vector<Region> auto_disks(const Point& centroid, int n, const Frame& frame, double radius) {
  if (n < 1) throw InvalidArgument("auto_disks: need at least one point");
  const double R_unit = std::sqrt(n / std::numbers::pi);
  const double R = R_unit * frame.length_scale();
  const double r = radius > 0.0 ? radius : std::max(1.0, std::min(6.0, R_unit / 2.0)) * frame.length_scale();
  std::vector<Region> out{Region(Disk{centroid, r})};
  const double reach = R - r;
  const double stride = r / 2.0;
  if (reach <= 0.0) return out;
  const int m = static_cast<int>(std::floor(reach / stride));
  for (int b = -m; b <= m; ++b)
    for (int a = -m; a <= m; ++a) {
      if (a == 0 && b == 0) continue;
      const Point c = centroid + stride * Point(a, b);
      if ((c - centroid).norm() <= reach) out.emplace_back(Disk{c, r});
    }
  return out;
}

int run(const std::vector<std::string>& raw_args) {
  CLI::App app{"Incompressibility laboratory: Thomas-Fermi screening, jellium ground states, plasma sampling"};
  app.name("incomp");
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  OptionBinder opt;

  TfArgs tf;
  auto* tf_cmd = app.add_subcommand("tf-solve", "Solve the Thomas-Fermi screening problem for a set of nuclei");
  opt.add(tf_cmd, "nuclei", tf.nuclei, "CSV x,y of unit nuclei")->required();
  opt.add(tf_cmd, "h", tf.h, "Grid spacing");
  opt.add(tf_cmd, "pad", tf.pad, "Margin added to the support bound");
  opt.add(tf_cmd, "method", tf.method, "multigrid or sor");
  opt.add(tf_cmd, "init", tf.init, "superposition or zero");
  opt.add(tf_cmd, "tol", tf.tol, "Complementarity tolerance");
  opt.add(tf_cmd, "omega", tf.omega, "SOR relaxation factor");
  opt.add(tf_cmd, "max-sweeps", tf.max_sweeps, "Sweep cap (0: 200 max(nx, ny))");
  opt.add(tf_cmd, "area-tol", tf.area_tol, "Relative area tolerance of the report");
  opt.add(tf_cmd, "out", tf.out, "Output directory");

  AuditArgs au;
  auto* au_cmd = app.add_subcommand("exclusion-audit", "Audit a configuration against the screening exclusion rule");
  opt.add(au_cmd, "points", au.points, "CSV x,y")->required();
  opt.add(au_cmd, "frame", au.frame, "unit or plasma");
  opt.add(au_cmd, "ell", au.ell, "Laughlin exponent of a plasma-frame input");
  opt.add(au_cmd, "policy", au.policy, "default or singletons");
  opt.add(au_cmd, "h", au.h, "Grid spacing of the screening solves");
  opt.add(au_cmd, "pair-margin", au.pair_margin, "Pairs closer than 2/sqrt(pi) + margin");
  opt.add(au_cmd, "cluster-radius", au.cluster_radius, "Radius of sliding cluster disks (0 disables)");
  opt.add(au_cmd, "cluster-stride", au.cluster_stride, "Stride of cluster disk centres");
  opt.add(au_cmd, "random-count", au.random_count, "Number of random subsets");
  opt.add(au_cmd, "random-size", au.random_size, "Size of random subsets");
  opt.add(au_cmd, "seed", au.seed, "Seed for random subsets");
  opt.add(au_cmd, "threads", au.threads, "Worker threads; results do not depend on the count")->check(CLI::PositiveNumber);
  opt.add(au_cmd, "out", au.out, "Report file");

  MinimizeArgs mn;
  auto* mn_cmd = app.add_subcommand("plasma-minimize", "Find a ground state of a jellium/plasma model");
  opt.add(mn_cmd, "model", mn.model, "Model JSON")->required();
  opt.add(mn_cmd, "seed", mn.seed, "Seed of the start configurations");
  opt.add(mn_cmd, "starts", mn.starts, "Number of starts");
  opt.add(mn_cmd, "max-iter", mn.max_iter, "Iteration cap per start");
  opt.add(mn_cmd, "tol", mn.tol, "Gradient tolerance (0: 1e-6 N)");
  opt.add(mn_cmd, "threads", mn.threads, "Worker threads; results do not depend on the count")->check(CLI::PositiveNumber);
  opt.add(mn_cmd, "out", mn.out, "Output directory");

  GibbsArgs gb;
  auto* gb_cmd = app.add_subcommand("gibbs-sample", "Metropolis sampling of the plasma Gibbs measure");
  opt.add(gb_cmd, "model", gb.model, "Model JSON")->required();
  opt.add(gb_cmd, "steps", gb.steps, "Single-particle moves after burn-in");
  opt.add(gb_cmd, "burn-in", gb.burn_in, "Burn-in moves (-1: 200 N)");
  opt.add(gb_cmd, "thin", gb.thin, "Moves between samples (0: N)");
  opt.add(gb_cmd, "step-size", gb.step_size, "Initial proposal scale (0: automatic)");
  opt.add(gb_cmd, "target-acceptance", gb.target_acceptance, "Acceptance targeted during burn-in");
  opt.add(gb_cmd, "seed", gb.seed, "Chain seed");
  opt.add(gb_cmd, "init", gb.init, "Optional start configuration (CSV x,y)");
  opt.add(gb_cmd, "density-h", gb.density_h, "Write a density histogram with this spacing (0: none)");
  opt.add(gb_cmd, "out", gb.out, "Output directory");

  BathtubArgs bt;
  auto* bt_cmd = app.add_subcommand("bathtub", "Bathtub minimisation under a density cap");
  opt.add(bt_cmd, "V", bt.V, "builtin:harmonic|quartic|zero or grid:<file.grid2d>");
  opt.add(bt_cmd, "mass", bt.mass, "Total mass");
  opt.add(bt_cmd, "cap", bt.cap, "Density cap or auto (1/(pi ell))");
  opt.add(bt_cmd, "ell", bt.ell, "Laughlin exponent for --cap auto");
  opt.add(bt_cmd, "h", bt.h, "Grid spacing for builtin potentials");
  opt.add(bt_cmd, "density", bt.density, "Optional density.grid2d output");
  opt.add(bt_cmd, "out", bt.out, "Report file");

  VerifyArgs vd;
  auto* vd_cmd = app.add_subcommand("verify-density", "Check local densities against the incompressibility cap");
  opt.add(vd_cmd, "points", vd.points, "CSV x,y of one configuration");
  opt.add(vd_cmd, "chain", vd.chain, "Chain directory or samples.csv");
  opt.add(vd_cmd, "frame", vd.frame, "unit or plasma");
  opt.add(vd_cmd, "ell", vd.ell, "Laughlin exponent of the plasma frame");
  opt.add(vd_cmd, "disks", vd.disks, "auto or CSV x,y,r");
  opt.add(vd_cmd, "radius", vd.radius, "Disk radius for auto disks (0: automatic)");
  opt.add(vd_cmd, "slack", vd.slack, "Relative slack on the cap");
  opt.add(vd_cmd, "cap-factor", vd.cap_factor, "Perturbation correction of the cap");
  opt.add(vd_cmd, "out", vd.out, "Report file");

  std::string selftest_out;
  auto* st_cmd = app.add_subcommand("selftest", "Closed-form oracles: single nucleus, two-particle jellium, bathtub");
  opt.add(st_cmd, "out", selftest_out, "Optional report file");

  try {
    const std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  Report rep(sub->get_name());
  rep.echo() = opt.echo(sub);
  try {
    if (sub == tf_cmd) cmd_tf(tf, rep);
    else if (sub == au_cmd) cmd_audit(au, rep);
    else if (sub == mn_cmd) cmd_minimize(mn, rep);
    else if (sub == gb_cmd) cmd_gibbs(gb, rep);
    else if (sub == bt_cmd) cmd_bathtub(bt, rep);
    else if (sub == vd_cmd) cmd_verify(vd, rep);
    else cmd_selftest(selftest_out, rep);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  const json doc = rep.to_json();
  for (const auto& c : doc["checks"])
    std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << " value=" << c["value"].dump()
              << " bound=" << c["bound"].dump() << '\n';
  return rep.ok() ? 0 : 1;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args);
}

}  // namespace incomp::cli
