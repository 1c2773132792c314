#pragma once

// Uniform cell-centred grids, charge deposition and discrete potential theory
// for the 2D logarithmic kernel.

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace incomp {

using Point = Eigen::Vector2d;
/// One point per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Geometry of a uniform grid: `nx * ny` square cells of side `h`, lower-left corner at `origin`.
struct GridSpec {
  Point origin = Point::Zero();
  double h = 1.0;
  int nx = 2;
  int ny = 2;

  Point cell_center(int i, int j) const {
    return origin + Point((i + 0.5) * h, (j + 0.5) * h);
  }
  Point extent() const { return Point(nx * h, ny * h); }
  Point upper() const { return origin + extent(); }
  double cell_area() const { return h * h; }
  bool contains(const Point& p) const;

  /// Throws InvalidArgument unless h > 0 and nx, ny >= 2.
  void validate() const;

  bool operator==(const GridSpec& other) const = default;
};

/// Grid spec with cells of side `h` covering [lo, hi], aligned to the global lattice h*Z^2.
GridSpec aligned_grid(const Point& lo, const Point& hi, double h, int multiple_of = 1);

/// Real values on the cells of a GridSpec. `values(i, j)` is the cell at column i, row j.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid);
  ScalarField(const GridSpec& grid, Eigen::ArrayXXd values);

  const GridSpec& grid() const { return grid_; }
  int nx() const { return grid_.nx; }
  int ny() const { return grid_.ny; }
  double h() const { return grid_.h; }

  const Eigen::ArrayXXd& values() const { return values_; }
  Eigen::ArrayXXd& values() { return values_; }
  double operator()(int i, int j) const { return values_(i, j); }
  double& operator()(int i, int j) { return values_(i, j); }

  /// Midpoint-rule integral: sum of values times h^2.
  double integral() const;
  bool all_finite() const { return values_.allFinite(); }

  /// Bilinear interpolation between cell centres (clamped at the outer half cell).
  double interpolate(const Point& p) const;

  /// Builds a field by evaluating `f` at every cell centre.
  static ScalarField sample(const GridSpec& grid, const std::function<double(const Point&)>& f);

 private:
  GridSpec grid_;
  Eigen::ArrayXXd values_;
};

/// Weighted point charges (nuclei, quasi-holes).
struct ChargeList {
  Points positions;
  Eigen::VectorXd weights;

  ChargeList() = default;
  ChargeList(Points p, Eigen::VectorXd w);
  /// Unit weights.
  explicit ChargeList(Points p);

  Eigen::Index size() const { return positions.rows(); }
  double total_weight() const { return weights.sum(); }
  void validate() const;
};

/// Cloud-in-cell deposition: every charge is split bilinearly over the four nearest cell
/// centres. Conserves total charge and first moments. Throws OutOfDomainError for charges
/// outside the grid extent.
ScalarField deposit_charges(const ChargeList& charges, const GridSpec& grid);

/// phi(x) = -\int log|x-y| rho(y) dy at every cell centre by direct midpoint summation.
/// The self cell uses the exact average of -log over a square.
ScalarField log_potential(const ScalarField& density);

/// Exact value of (1/h^2) \int_{[-h/2,h/2]^2} -log|y| dy.
double self_cell_log_average(double h);

/// 5-point Laplacian. Boundary cells carry no stencil; `valid` marks interior cells.
struct StencilResult {
  ScalarField values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
};
StencilResult discrete_laplacian(const ScalarField& field);

/// Potential kernel of the unit-spacing 5-point Laplacian: a(0, 0) = 0 and the stencil applied
/// to a is the unit impulse at the origin. a(m, n) = (log r + gamma + (3/2) log 2) / (2 pi) + O(r^-2).
double lattice_potential_kernel(int m, int n);

/// Discrete minus continuum potential of a unit charge at `p` deposited by cloud-in-cell:
/// the exact 5-point response -2 pi sum_c w_c a(cell - c) (constant matched at infinity) minus
/// -log|x - p|, at cell centres within `window` cells of the charge. Zero elsewhere and on the
/// four charged cells.
ScalarField lattice_log_correction(const Point& p, const GridSpec& grid, int window = 24);

struct SubharmonicityReport {
  /// min over radii of (circle mean of log G) - log G(center). Nonnegative for subharmonic log G.
  double max_violation = 0.0;
  std::vector<double> deficits;
  int angles_used = 0;
};

/// Mean-value test for subharmonicity of log G on circles around `center`. The angular
/// trapezoid rule starts at `n_angles` points and doubles until the circle mean stabilises.
/// Throws DomainError if G is nonpositive at a sample.
SubharmonicityReport subharmonicity_check(const std::function<double(const Point&)>& sampler,
                                          const Point& center, const std::vector<double>& radii,
                                          int n_angles = 64);

// --- serialization -------------------------------------------------------------------------

/// Binary grid dump: text header "GRID2D nx ny h ox oy\n" then nx*ny little-endian float64,
/// row-major (row j = fixed y index, i fastest).
void write_grid2d(std::ostream& os, const ScalarField& field);
ScalarField read_grid2d(std::istream& is);
void write_grid2d_file(const std::string& path, const ScalarField& field);
ScalarField read_grid2d_file(const std::string& path);

/// CSV with header "i,j,x,y,value".
void write_grid_csv(std::ostream& os, const ScalarField& field);

/// CSV "x,y,w" (header line optional on read; a missing w column means unit weight).
void write_charges_csv(std::ostream& os, const ChargeList& charges);
ChargeList read_charges_csv(std::istream& is);
ChargeList read_charges_csv_file(const std::string& path);

}  // namespace incomp
