#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace csi {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;   // m/s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

/// Uniform square-cell discretization of a rectangular investigation domain
/// centred at the origin. Cell n = iy * nx + ix (ix varies fastest).
struct Grid {
  double extent_x = 0.0;
  double extent_y = 0.0;
  int nx = 0;
  int ny = 0;

  double cell_size() const { return extent_x / nx; }
  int size() const { return nx * ny; }
  int index(int ix, int iy) const { return iy * nx + ix; }
  Point2 center(int ix, int iy) const;
  Point2 center(int n) const { return center(n % nx, n / nx); }
  double half_diagonal() const;
};

/// Square grid of n x n cells covering [-extent/2, extent/2]^2.
Grid make_grid(double extent, int n);

/// Complex contrast tau = eps_r - 1 - j sigma/(omega eps0), one sample per cell.
struct ContrastMap {
  Grid grid;
  Eigen::VectorXcd values;

  ContrastMap() = default;
  explicit ContrastMap(const Grid& g) : grid(g), values(Eigen::VectorXcd::Zero(g.size())) {}
  ContrastMap(const Grid& g, Eigen::VectorXcd v);
};

enum class PhantomKind { coaxial, austria };

PhantomKind phantom_kind_from_string(std::string_view name);
std::string to_string(PhantomKind kind);

struct Cylinder {
  Point2 center;
  double radius = 0.0;
  double eps_r = 1.0;
};

struct Ring {
  Point2 center;
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  double eps_r = 1.0;
};

struct PhantomSpec {
  PhantomKind kind = PhantomKind::coaxial;
  std::vector<Ring> rings;
  std::vector<Cylinder> cylinders;
  double conductivity = 0.0;  // S/m, shared by every shape
  double frequency = 1.25e8;  // Hz

  void validate() const;
};

/// Ring (outer 1.2 m, inner 0.9 m, eps_r 1.8) around a 0.45 m cylinder (eps_r 2.5).
PhantomSpec coaxial_phantom(double frequency = 1.25e8);

/// Ring (1.95/1.5 m, eps_r 2.0) plus two 0.6 m cylinders (eps_r 2.5) at (2.55, +-1.35).
PhantomSpec austria_phantom(double conductivity = 0.0, double frequency = 1.25e8);

/// Complex contrast of a medium with relative permittivity eps_r and
/// conductivity sigma under the exp(+j omega t) convention.
cplx material_contrast(double eps_r, double conductivity, double frequency);

/// Center-point membership; cylinders are tested before rings, so an inner
/// cylinder overrides the ring it sits in.
ContrastMap rasterize_phantom(const PhantomSpec& spec, const Grid& grid);

/// Area-weighted average of the source cells overlapping each destination cell.
ContrastMap resample(const ContrastMap& src, const Grid& dst_grid);

/// Fraction of cells with non-zero contrast.
double sparseness_level(const ContrastMap& map);

/// CSV with header "ix,iy,re,im", rows ordered by iy then ix.
void write_contrast_csv(std::ostream& os, const ContrastMap& map);
void write_contrast_csv(const std::string& path, const ContrastMap& map);
/// The CSV carries no extent; the caller supplies it. The grid must be square.
ContrastMap read_contrast_csv(std::istream& is, double extent);
ContrastMap read_contrast_csv(const std::string& path, double extent);

}  // namespace csi
