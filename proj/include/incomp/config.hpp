#pragma once

// Point configurations, coordinate frames and counting regions.
//
// Two frames are used. In the unit-density frame the neutralizing background has density 1
// and the one-body term is (pi/2)|x|^2. In the plasma frame of exponent l the coordinates are
// z = sqrt(pi l) x, the one-body term is |z|^2 and the density cap is 1/(pi l).

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "incomp/grid_field.hpp"

namespace incomp {

enum class FrameKind { UnitDensity, Plasma };

struct Frame {
  FrameKind kind = FrameKind::UnitDensity;
  int ell = 1;  ///< Laughlin exponent; only meaningful for the plasma frame

  static Frame unit() { return {FrameKind::UnitDensity, 1}; }
  static Frame plasma(int ell);

  bool is_plasma() const { return kind == FrameKind::Plasma; }
  /// Maximal admissible density: 1, or 1/(pi l).
  double density_cap() const;
  /// Length factor from unit-density to this frame: 1, or sqrt(pi l).
  double length_scale() const;
  std::string name() const;

  bool operator==(const Frame& other) const;
};

/// Parses "unit" or "plasma" (the exponent is supplied separately).
Frame parse_frame(const std::string& name, int ell = 1);

struct PointConfig {
  Points points;
  Frame frame;

  PointConfig() = default;
  PointConfig(Points p, Frame f);

  Eigen::Index size() const { return points.rows(); }
  Point operator[](Eigen::Index i) const { return points.row(i).transpose(); }
  void validate() const;
};

/// Coordinates multiplied (unit -> plasma) or divided (plasma -> unit) by sqrt(pi l).
/// Throws FrameMismatchError when source and target coincide or two plasma exponents differ.
PointConfig rescale_frame(const PointConfig& config, const Frame& target);

struct Disk {
  Point center = Point::Zero();
  double radius = 1.0;
};

/// Polygon (counter-clockwise or clockwise vertices) thickened by `dilation` >= 0. A positive
/// dilation requires a convex polygon so the Steiner formula gives the exact area.
struct DilatedPolygon {
  Points vertices;
  double dilation = 0.0;
};

class Region {
 public:
  Region(Disk d);
  Region(DilatedPolygon p);

  /// Strict interior membership.
  bool contains(const Point& p) const;
  double area() const;
  /// Bounding box (lower-left, upper-right).
  std::pair<Point, Point> bounds() const;
  std::string describe() const;

  const std::variant<Disk, DilatedPolygon>& shape() const { return shape_; }

 private:
  std::variant<Disk, DilatedPolygon> shape_;
};

/// Points strictly inside the region.
int count_inside(const Points& points, const Region& region);

/// CSV "x,y" (header optional on read; extra columns ignored).
void write_points_csv(std::ostream& os, const Points& points);
Points read_points_csv(std::istream& is);
Points read_points_csv_file(const std::string& path);

/// Triangular lattice of unit-frame density `density`, the N points nearest to `center`.
Points triangular_lattice(int n, double density = 1.0, const Point& center = Point::Zero());

}  // namespace incomp
