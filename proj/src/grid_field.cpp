#include "incomp/grid_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "incomp/errors.hpp"

namespace incomp {

bool GridSpec::contains(const Point& p) const {
  const Point hi = upper();
  return p.x() > origin.x() && p.x() < hi.x() && p.y() > origin.y() && p.y() < hi.y();
}

void GridSpec::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing must be positive");
  if (nx < 2 || ny < 2) throw InvalidArgument("grid needs at least 2x2 cells");
  if (!origin.allFinite()) throw InvalidArgument("grid origin must be finite");
}

GridSpec aligned_grid(const Point& lo, const Point& hi, double h, int multiple_of) {
  if (!(h > 0.0)) throw InvalidArgument("grid spacing must be positive");
  if (multiple_of < 1) multiple_of = 1;
  GridSpec g;
  g.h = h;
  const double ox = std::floor(lo.x() / h) * h;
  const double oy = std::floor(lo.y() / h) * h;
  g.origin = Point(ox, oy);
  auto cells = [&](double from, double to) {
    int n = static_cast<int>(std::ceil((to - from) / h - 1e-9));
    n = std::max(n, 2);
    return ((n + multiple_of - 1) / multiple_of) * multiple_of;
  };
  g.nx = cells(ox, hi.x());
  g.ny = cells(oy, hi.y());
  return g;
}

ScalarField::ScalarField(const GridSpec& grid) : grid_(grid) {
  grid_.validate();
  values_ = Eigen::ArrayXXd::Zero(grid_.nx, grid_.ny);
}

ScalarField::ScalarField(const GridSpec& grid, Eigen::ArrayXXd values)
    : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (values_.rows() != grid_.nx || values_.cols() != grid_.ny)
    throw InvalidArgument("field values do not match grid dimensions");
}

double ScalarField::integral() const { return values_.sum() * grid_.cell_area(); }

double ScalarField::interpolate(const Point& p) const {
  const double u = std::clamp((p.x() - grid_.origin.x()) / grid_.h - 0.5, 0.0, nx() - 1.0);
  const double v = std::clamp((p.y() - grid_.origin.y()) / grid_.h - 0.5, 0.0, ny() - 1.0);
  const int i0 = std::min(static_cast<int>(u), nx() - 2);
  const int j0 = std::min(static_cast<int>(v), ny() - 2);
  const double fx = u - i0;
  const double fy = v - j0;
  return (1 - fx) * (1 - fy) * values_(i0, j0) + fx * (1 - fy) * values_(i0 + 1, j0) +
         (1 - fx) * fy * values_(i0, j0 + 1) + fx * fy * values_(i0 + 1, j0 + 1);
}

ScalarField ScalarField::sample(const GridSpec& grid,
                                const std::function<double(const Point&)>& f) {
  ScalarField out(grid);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) out(i, j) = f(grid.cell_center(i, j));
  return out;
}

ChargeList::ChargeList(Points p, Eigen::VectorXd w) : positions(std::move(p)), weights(std::move(w)) {
  validate();
}

ChargeList::ChargeList(Points p) : positions(std::move(p)) {
  weights = Eigen::VectorXd::Ones(positions.rows());
  validate();
}

void ChargeList::validate() const {
  if (positions.rows() != weights.size())
    throw InvalidArgument("charge list: positions and weights differ in length");
  if (!positions.allFinite() || !weights.allFinite())
    throw InvalidArgument("charge list: non-finite entry");
}

namespace {

// Linear CIC stencil along one axis: lower index and weight of the upper neighbour.
std::pair<int, double> cic_axis(double coord, double origin, double h, int n) {
  const double u = (coord - origin) / h - 0.5;
  if (u <= 0.0) return {0, 0.0};
  if (u >= n - 1.0) return {n - 2, 1.0};
  const int i0 = static_cast<int>(std::floor(u));
  return {i0, u - i0};
}

}  // namespace

ScalarField deposit_charges(const ChargeList& charges, const GridSpec& grid) {
  charges.validate();
  ScalarField rho(grid);
  const double inv_area = 1.0 / grid.cell_area();
  for (Eigen::Index k = 0; k < charges.size(); ++k) {
    const Point p = charges.positions.row(k).transpose();
    if (!grid.contains(p)) {
      std::ostringstream msg;
      msg << "charge at (" << p.x() << ", " << p.y() << ") lies outside the grid";
      throw OutOfDomainError(msg.str());
    }
    const auto [i0, fx] = cic_axis(p.x(), grid.origin.x(), grid.h, grid.nx);
    const auto [j0, fy] = cic_axis(p.y(), grid.origin.y(), grid.h, grid.ny);
    const double w = charges.weights(k) * inv_area;
    rho(i0, j0) += w * (1 - fx) * (1 - fy);
    rho(i0 + 1, j0) += w * fx * (1 - fy);
    rho(i0, j0 + 1) += w * (1 - fx) * fy;
    rho(i0 + 1, j0 + 1) += w * fx * fy;
  }
  return rho;
}

double lattice_potential_kernel(int m, int n) {
  m = std::abs(m);
  n = std::abs(n);
  if (m > n) std::swap(m, n);
  if (m == 0 && n == 0) return 0.0;
  // a(m, n) = (1/2pi) \int_0^pi (1 - cos(m t) e^{-n s}) / sinh s dt with cosh s = 2 - cos t.
  static std::mutex mutex;
  static std::map<std::pair<int, int>, double> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find({m, n}); it != cache.end()) return it->second;
  }
  const int panels = 4096 + 64 * n;
  const double d = std::numbers::pi / panels;
  auto f = [m, n](double t) {
    if (t == 0.0) return static_cast<double>(n);
    const double s = std::acosh(2.0 - std::cos(t));
    return (1.0 - std::cos(m * t) * std::exp(-n * s)) / std::sinh(s);
  };
  double sum = f(0.0) + f(std::numbers::pi);
  for (int k = 1; k < panels; ++k) sum += (k % 2 == 1 ? 4.0 : 2.0) * f(k * d);
  const double a = sum * d / 3.0 / (2.0 * std::numbers::pi);
  std::lock_guard lock(mutex);
  cache.emplace(std::pair{m, n}, a);
  return a;
}

ScalarField lattice_log_correction(const Point& p, const GridSpec& grid, int window) {
  grid.validate();
  if (!grid.contains(p)) throw OutOfDomainError("lattice_log_correction: charge outside the grid");
  const auto [i0, fx] = cic_axis(p.x(), grid.origin.x(), grid.h, grid.nx);
  const auto [j0, fy] = cic_axis(p.y(), grid.origin.y(), grid.h, grid.ny);
  const double w[2][2] = {{(1 - fx) * (1 - fy), (1 - fx) * fy}, {fx * (1 - fy), fx * fy}};
  const double offset = std::numbers::egamma + 1.5 * std::numbers::ln2 - std::log(grid.h);
  ScalarField c(grid);
  for (int j = std::max(0, j0 - window); j <= std::min(grid.ny - 1, j0 + 1 + window); ++j)
    for (int i = std::max(0, i0 - window); i <= std::min(grid.nx - 1, i0 + 1 + window); ++i) {
      if ((i == i0 || i == i0 + 1) && (j == j0 || j == j0 + 1)) continue;
      double discrete = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          discrete += w[a][b] * (offset - 2.0 * std::numbers::pi * lattice_potential_kernel(i - i0 - a, j - j0 - b));
      c(i, j) = discrete + std::log((grid.cell_center(i, j) - p).norm());
    }
  return c;
}

double self_cell_log_average(double h) {
  // \int_{[-1/2,1/2]^2} log|u| du = (-log 2 - 3 + pi/2) / 2
  return -std::log(h) + 0.5 * (3.0 + std::numbers::ln2 - std::numbers::pi / 2.0);
}

ScalarField log_potential(const ScalarField& density) {
  if (!density.all_finite()) throw InvalidArgument("log_potential: density is not finite");
  const GridSpec& g = density.grid();
  const double area = g.cell_area();
  const double self = self_cell_log_average(g.h);

  // Only charged cells contribute; the sum is otherwise the plain O(M^2) midpoint rule.
  struct Source {
    int i, j;
    double q;
  };
  std::vector<Source> sources;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (density(i, j) != 0.0) sources.push_back({i, j, density(i, j) * area});

  ScalarField phi(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double acc = 0.0;
      for (const Source& s : sources) {
        if (s.i == i && s.j == j) {
          acc += s.q * self;
        } else {
          const double dx = (i - s.i) * g.h;
          const double dy = (j - s.j) * g.h;
          acc -= 0.5 * s.q * std::log(dx * dx + dy * dy);
        }
      }
      phi(i, j) = acc;
    }
  }
  return phi;
}

StencilResult discrete_laplacian(const ScalarField& field) {
  if (field.nx() < 3 || field.ny() < 3)
    throw InvalidArgument("discrete_laplacian needs at least 3x3 cells");
  StencilResult out{ScalarField(field.grid()),
                    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
                        field.nx(), field.ny(), false)};
  const double inv_h2 = 1.0 / (field.h() * field.h());
  for (int j = 1; j < field.ny() - 1; ++j) {
    for (int i = 1; i < field.nx() - 1; ++i) {
      out.values(i, j) = (field(i + 1, j) + field(i - 1, j) + field(i, j + 1) + field(i, j - 1) -
                          4.0 * field(i, j)) *
                         inv_h2;
      out.valid(i, j) = true;
    }
  }
  return out;
}

namespace {

double circle_mean_log(const std::function<double(const Point&)>& g, const Point& c, double r,
                       int n) {
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n;
    const double v = g(c + r * Point(std::cos(t), std::sin(t)));
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("subharmonicity_check: sample is not positive");
    acc += std::log(v);
  }
  return acc / n;
}

}  // namespace

SubharmonicityReport subharmonicity_check(const std::function<double(const Point&)>& sampler,
                                          const Point& center, const std::vector<double>& radii,
                                          int n_angles) {
  if (n_angles < 8) throw InvalidArgument("subharmonicity_check: need at least 8 angles");
  if (radii.empty()) throw InvalidArgument("subharmonicity_check: no radii");
  const double g0 = sampler(center);
  if (!(g0 > 0.0) || !std::isfinite(g0)) throw DomainError("subharmonicity_check: G(center) is not positive");
  const double log_center = std::log(g0);

  constexpr int kMaxAngles = 1 << 16;
  constexpr double kStable = 1e-12;
  SubharmonicityReport rep;
  rep.max_violation = std::numeric_limits<double>::infinity();
  for (double r : radii) {
    if (!(r > 0.0)) throw InvalidArgument("subharmonicity_check: radii must be positive");
    int n = n_angles;
    double mean = circle_mean_log(sampler, center, r, n);
    while (n < kMaxAngles) {
      const double refined = circle_mean_log(sampler, center, r, 2 * n);
      n *= 2;
      const bool stable = std::abs(refined - mean) <= kStable * std::max(1.0, std::abs(refined));
      mean = refined;
      if (stable) break;
    }
    rep.angles_used = std::max(rep.angles_used, n);
    const double deficit = mean - log_center;
    rep.deficits.push_back(deficit);
    rep.max_violation = std::min(rep.max_violation, deficit);
  }
  return rep;
}

// --- serialization -------------------------------------------------------------------------

namespace {

void put_le_double(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

double get_le_double(std::istream& is) {
  std::uint64_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), sizeof bits);
  if (!is) throw InvalidArgument("grid2d: truncated payload");
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw InvalidArgument("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw InvalidArgument("cannot open for reading: " + path);
  return f;
}

}  // namespace

void write_grid2d(std::ostream& os, const ScalarField& field) {
  const GridSpec& g = field.grid();
  std::ostringstream header;
  header << std::setprecision(17) << "GRID2D " << g.nx << ' ' << g.ny << ' ' << g.h << ' '
         << g.origin.x() << ' ' << g.origin.y() << '\n';
  os << header.str();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) put_le_double(os, field(i, j));
}

ScalarField read_grid2d(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("grid2d: missing header");
  std::istringstream hs(line);
  std::string tag;
  GridSpec g;
  double ox = 0, oy = 0;
  hs >> tag >> g.nx >> g.ny >> g.h >> ox >> oy;
  if (!hs || tag != "GRID2D") throw InvalidArgument("grid2d: malformed header");
  g.origin = Point(ox, oy);
  ScalarField field(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) field(i, j) = get_le_double(is);
  return field;
}

void write_grid2d_file(const std::string& path, const ScalarField& field) {
  auto f = open_out(path, std::ios::out | std::ios::binary);
  write_grid2d(f, field);
}

ScalarField read_grid2d_file(const std::string& path) {
  auto f = open_in(path, std::ios::in | std::ios::binary);
  return read_grid2d(f);
}

void write_grid_csv(std::ostream& os, const ScalarField& field) {
  os << "i,j,x,y,value\n" << std::setprecision(17);
  for (int j = 0; j < field.ny(); ++j) {
    for (int i = 0; i < field.nx(); ++i) {
      const Point c = field.grid().cell_center(i, j);
      os << i << ',' << j << ',' << c.x() << ',' << c.y() << ',' << field(i, j) << '\n';
    }
  }
}

void write_charges_csv(std::ostream& os, const ChargeList& charges) {
  os << "x,y,w\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < charges.size(); ++k)
    os << charges.positions(k, 0) << ',' << charges.positions(k, 1) << ',' << charges.weights(k)
       << '\n';
}

ChargeList read_charges_csv(std::istream& is) {
  std::vector<double> xs, ys, ws;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() < 2 || cols.size() > 3)
      throw InvalidArgument("charges csv line " + std::to_string(lineno) + ": expected x,y[,w]");
    try {
      std::size_t used = 0;
      const double x = std::stod(cols[0], &used);
      const double y = std::stod(cols[1]);
      const double w = cols.size() == 3 ? std::stod(cols[2]) : 1.0;
      xs.push_back(x);
      ys.push_back(y);
      ws.push_back(w);
    } catch (const std::invalid_argument&) {
      if (lineno == 1) continue;  // header
      throw InvalidArgument("charges csv line " + std::to_string(lineno) + ": not numeric");
    }
  }
  Points p(xs.size(), 2);
  Eigen::VectorXd w(ws.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    p(k, 0) = xs[k];
    p(k, 1) = ys[k];
    w(k) = ws[k];
  }
  return ChargeList(std::move(p), std::move(w));
}

ChargeList read_charges_csv_file(const std::string& path) {
  auto f = open_in(path);
  return read_charges_csv(f);
}

}  // namespace incomp
