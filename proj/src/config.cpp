#include "incomp/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "incomp/errors.hpp"

namespace incomp {

Frame Frame::plasma(int ell) {
  if (ell < 1) throw InvalidArgument("Laughlin exponent must be >= 1");
  return {FrameKind::Plasma, ell};
}

double Frame::density_cap() const {
  return is_plasma() ? 1.0 / (std::numbers::pi * ell) : 1.0;
}

double Frame::length_scale() const { return is_plasma() ? std::sqrt(std::numbers::pi * ell) : 1.0; }

std::string Frame::name() const { return is_plasma() ? "plasma(" + std::to_string(ell) + ")" : "unit"; }

bool Frame::operator==(const Frame& other) const {
  if (kind != other.kind) return false;
  return kind == FrameKind::UnitDensity || ell == other.ell;
}

Frame parse_frame(const std::string& name, int ell) {
  if (name == "unit" || name == "unit-density") return Frame::unit();
  if (name == "plasma") return Frame::plasma(ell);
  throw InvalidArgument("unknown frame '" + name + "' (expected unit or plasma)");
}

PointConfig::PointConfig(Points p, Frame f) : points(std::move(p)), frame(f) { validate(); }

void PointConfig::validate() const {
  if (points.rows() < 1) throw InvalidArgument("configuration needs at least one point");
  if (!points.allFinite()) throw InvalidArgument("configuration has non-finite coordinates");
  if (frame.ell < 1) throw InvalidArgument("Laughlin exponent must be >= 1");
}

PointConfig rescale_frame(const PointConfig& config, const Frame& target) {
  if (config.frame == target) throw FrameMismatchError("rescale_frame: source and target frames coincide");
  if (config.frame.is_plasma() && target.is_plasma())
    throw FrameMismatchError("rescale_frame: cannot convert between plasma frames directly");
  const double factor = target.length_scale() / config.frame.length_scale();
  return PointConfig(config.points * factor, target);
}

// --- regions ------------------------------------------------------------------------------

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const Points& v) {
  double s = 0.0;
  const Eigen::Index n = v.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Point a = v.row(k).transpose(), b = v.row((k + 1) % n).transpose();
    s += cross(a, b);
  }
  return 0.5 * s;
}

double perimeter(const Points& v) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < v.rows(); ++k) s += (v.row((k + 1) % v.rows()) - v.row(k)).norm();
  return s;
}

bool is_convex(const Points& v) {
  const Eigen::Index n = v.rows();
  int sign = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Point a = v.row(k).transpose(), b = v.row((k + 1) % n).transpose(), c = v.row((k + 2) % n).transpose();
    const double z = cross(b - a, c - b);
    if (std::abs(z) < 1e-15) continue;
    const int s = z > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const Point d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

bool inside_polygon(const Point& p, const Points& v) {
  bool in = false;
  const Eigen::Index n = v.rows();
  for (Eigen::Index k = 0, m = n - 1; k < n; m = k++) {
    const double xi = v(k, 0), yi = v(k, 1), xj = v(m, 0), yj = v(m, 1);
    if ((yi > p.y()) != (yj > p.y()) && p.x() < (xj - xi) * (p.y() - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

double boundary_distance(const Point& p, const Points& v) {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < v.rows(); ++k)
    d = std::min(d, segment_distance(p, v.row(k).transpose(), v.row((k + 1) % v.rows()).transpose()));
  return d;
}

}  // namespace

Region::Region(Disk d) : shape_(d) {
  if (!(d.radius > 0.0) || !d.center.allFinite()) throw InvalidArgument("disk region needs a positive radius");
}

Region::Region(DilatedPolygon p) : shape_(p) {
  if (p.vertices.rows() < 3 || !p.vertices.allFinite()) throw InvalidArgument("polygon needs >= 3 finite vertices");
  if (!(p.dilation >= 0.0)) throw InvalidArgument("polygon dilation must be nonnegative");
  if (p.dilation > 0.0 && !is_convex(p.vertices))
    throw InvalidArgument("dilated polygons must be convex");
  if (!(area() > 0.0)) throw InvalidArgument("degenerate region");
}

bool Region::contains(const Point& p) const {
  if (const auto* d = std::get_if<Disk>(&shape_)) return (p - d->center).norm() < d->radius;
  const auto& poly = std::get<DilatedPolygon>(shape_);
  const double dist = boundary_distance(p, poly.vertices);
  if (inside_polygon(p, poly.vertices)) return dist > 0.0 || poly.dilation > 0.0;
  return dist < poly.dilation;
}

double Region::area() const {
  if (const auto* d = std::get_if<Disk>(&shape_)) return std::numbers::pi * d->radius * d->radius;
  const auto& poly = std::get<DilatedPolygon>(shape_);
  const double r = poly.dilation;
  return std::abs(signed_area(poly.vertices)) + perimeter(poly.vertices) * r + std::numbers::pi * r * r;
}

std::pair<Point, Point> Region::bounds() const {
  if (const auto* d = std::get_if<Disk>(&shape_))
    return {d->center.array() - d->radius, d->center.array() + d->radius};
  const auto& poly = std::get<DilatedPolygon>(shape_);
  const Point lo = poly.vertices.colwise().minCoeff().transpose().array() - poly.dilation;
  const Point hi = poly.vertices.colwise().maxCoeff().transpose().array() + poly.dilation;
  return {lo, hi};
}

std::string Region::describe() const {
  std::ostringstream os;
  os << std::setprecision(17);
  if (const auto* d = std::get_if<Disk>(&shape_)) {
    os << "disk(" << d->center.x() << "," << d->center.y() << ";r=" << d->radius << ")";
  } else {
    const auto& poly = std::get<DilatedPolygon>(shape_);
    os << "polygon(" << poly.vertices.rows() << " vertices;dilation=" << poly.dilation << ")";
  }
  return os.str();
}

int count_inside(const Points& points, const Region& region) {
  int n = 0;
  for (Eigen::Index k = 0; k < points.rows(); ++k) n += region.contains(points.row(k).transpose());
  return n;
}

// --- I/O ----------------------------------------------------------------------------------

void write_points_csv(std::ostream& os, const Points& points) {
  os << "x,y\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < points.rows(); ++k) os << points(k, 0) << ',' << points(k, 1) << '\n';
}

Points read_points_csv(std::istream& is) {
  // Same grammar as charge files; weights are ignored.
  return read_charges_csv(is).positions;
}

Points read_points_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  return read_points_csv(in);
}

Points triangular_lattice(int n, double density, const Point& center) {
  if (n < 1) throw InvalidArgument("lattice needs n >= 1");
  if (!(density > 0.0)) throw InvalidArgument("lattice density must be positive");
  // Cell area sqrt(3)/2 s^2 = 1/density.
  const double s = std::sqrt(2.0 / (std::sqrt(3.0) * density));
  const int m = static_cast<int>(std::ceil(std::sqrt(n / density) / s)) + 3;
  std::vector<Point> pts;
  for (int b = -m; b <= m; ++b)
    for (int a = -m; a <= m; ++a) pts.emplace_back(s * (a + 0.5 * b), s * (std::sqrt(3.0) / 2.0) * b);
  std::stable_sort(pts.begin(), pts.end(), [](const Point& p, const Point& q) { return p.squaredNorm() < q.squaredNorm(); });
  Points out(n, 2);
  for (int k = 0; k < n; ++k) out.row(k) = (pts[k] + center).transpose();
  return out;
}

}  // namespace incomp
