#include "csi/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace csi {

double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Point2 Grid::center(int ix, int iy) const {
  const double d = cell_size();
  return {-0.5 * extent_x + (ix + 0.5) * d, -0.5 * extent_y + (iy + 0.5) * d};
}

double Grid::half_diagonal() const {
  return 0.5 * std::hypot(extent_x, extent_y);
}

Grid make_grid(double extent, int n) {
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw std::invalid_argument("make_grid: extent must be positive");
  }
  if (n < 1) {
    throw std::invalid_argument("make_grid: cell count must be at least 1");
  }
  return Grid{extent, extent, n, n};
}

ContrastMap::ContrastMap(const Grid& g, Eigen::VectorXcd v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw std::invalid_argument("ContrastMap: value count does not match grid");
  }
}

PhantomKind phantom_kind_from_string(std::string_view name) {
  if (name == "coaxial") return PhantomKind::coaxial;
  if (name == "austria") return PhantomKind::austria;
  throw std::invalid_argument("unknown phantom kind: " + std::string(name));
}

std::string to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::coaxial: return "coaxial";
    case PhantomKind::austria: return "austria";
  }
  throw std::invalid_argument("unknown phantom kind");
}

void PhantomSpec::validate() const {
  if (kind != PhantomKind::coaxial && kind != PhantomKind::austria) {
    throw std::invalid_argument("PhantomSpec: unknown phantom kind");
  }
  for (const auto& r : rings) {
    if (!(r.inner_radius >= 0.0 && r.inner_radius < r.outer_radius)) {
      throw std::invalid_argument("PhantomSpec: ring inner radius must be below outer radius");
    }
    if (!(r.eps_r >= 1.0)) throw std::invalid_argument("PhantomSpec: permittivity below 1");
  }
  for (const auto& c : cylinders) {
    if (!(c.radius > 0.0)) throw std::invalid_argument("PhantomSpec: cylinder radius must be positive");
    if (!(c.eps_r >= 1.0)) throw std::invalid_argument("PhantomSpec: permittivity below 1");
  }
  if (!(conductivity >= 0.0)) throw std::invalid_argument("PhantomSpec: negative conductivity");
  if (!(frequency > 0.0)) throw std::invalid_argument("PhantomSpec: frequency must be positive");
}

PhantomSpec coaxial_phantom(double frequency) {
  PhantomSpec s;
  s.kind = PhantomKind::coaxial;
  s.rings = {Ring{{0.0, 0.0}, 0.9, 1.2, 1.8}};
  s.cylinders = {Cylinder{{0.0, 0.0}, 0.45, 2.5}};
  s.frequency = frequency;
  return s;
}

PhantomSpec austria_phantom(double conductivity, double frequency) {
  PhantomSpec s;
  s.kind = PhantomKind::austria;
  s.rings = {Ring{{0.0, 0.0}, 1.5, 1.95, 2.0}};
  s.cylinders = {Cylinder{{2.55, 1.35}, 0.6, 2.5}, Cylinder{{2.55, -1.35}, 0.6, 2.5}};
  s.conductivity = conductivity;
  s.frequency = frequency;
  return s;
}

cplx material_contrast(double eps_r, double conductivity, double frequency) {
  const double omega = 2.0 * std::numbers::pi * frequency;
  return {eps_r - 1.0, -conductivity / (omega * kVacuumPermittivity)};
}

ContrastMap rasterize_phantom(const PhantomSpec& spec, const Grid& grid) {
  spec.validate();
  ContrastMap map(grid);
  for (int n = 0; n < grid.size(); ++n) {
    const Point2 p = grid.center(n);
    bool hit = false;
    for (const auto& c : spec.cylinders) {
      if (distance(p, c.center) <= c.radius) {
        map.values[n] = material_contrast(c.eps_r, spec.conductivity, spec.frequency);
        hit = true;
        break;
      }
    }
    if (hit) continue;
    for (const auto& r : spec.rings) {
      const double rho = distance(p, r.center);
      if (rho >= r.inner_radius && rho <= r.outer_radius) {
        map.values[n] = material_contrast(r.eps_r, spec.conductivity, spec.frequency);
        break;
      }
    }
  }
  return map;
}

namespace {

// w(j, i) = length of the overlap of destination interval j with source interval i.
Eigen::MatrixXd overlap_1d(double extent, int n_src, int n_dst) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_dst, n_src);
  const double ds = extent / n_src, dd = extent / n_dst;
  for (int j = 0; j < n_dst; ++j) {
    const double a0 = j * dd, a1 = (j + 1) * dd;
    const int i0 = std::max(0, static_cast<int>(std::floor(a0 / ds)) - 1);
    const int i1 = std::min(n_src - 1, static_cast<int>(std::ceil(a1 / ds)) + 1);
    for (int i = i0; i <= i1; ++i) {
      const double lo = std::max(a0, i * ds), hi = std::min(a1, (i + 1) * ds);
      if (hi > lo) w(j, i) = hi - lo;
    }
  }
  return w;
}

bool same_length(double a, double b) {
  return std::fabs(a - b) <= 1e-12 * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

ContrastMap resample(const ContrastMap& src, const Grid& dst_grid) {
  const Grid& sg = src.grid;
  if (!same_length(sg.extent_x, dst_grid.extent_x) || !same_length(sg.extent_y, dst_grid.extent_y)) {
    throw std::invalid_argument("resample: source and destination extents differ");
  }
  if (sg.nx == dst_grid.nx && sg.ny == dst_grid.ny) {
    return ContrastMap(dst_grid, src.values);
  }
  const Eigen::MatrixXd wx = overlap_1d(sg.extent_x, sg.nx, dst_grid.nx);
  const Eigen::MatrixXd wy = overlap_1d(sg.extent_y, sg.ny, dst_grid.ny);
  // d = Wy * S * Wx^T with S(iy, ix).
  Eigen::MatrixXcd s(sg.ny, sg.nx);
  for (int iy = 0; iy < sg.ny; ++iy)
    for (int ix = 0; ix < sg.nx; ++ix) s(iy, ix) = src.values[sg.index(ix, iy)];
  const Eigen::MatrixXcd d = wy.cast<cplx>() * s * wx.transpose().cast<cplx>();
  const double cell_area = dst_grid.cell_size() * (dst_grid.extent_y / dst_grid.ny);
  ContrastMap out(dst_grid);
  for (int iy = 0; iy < dst_grid.ny; ++iy)
    for (int ix = 0; ix < dst_grid.nx; ++ix) out.values[dst_grid.index(ix, iy)] = d(iy, ix) / cell_area;
  return out;
}

double sparseness_level(const ContrastMap& map) {
  if (map.values.size() == 0) return 0.0;
  long count = 0;
  for (Eigen::Index n = 0; n < map.values.size(); ++n) {
    if (std::abs(map.values[n]) > 0.0) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(map.values.size());
}

void write_contrast_csv(std::ostream& os, const ContrastMap& map) {
  os << "ix,iy,re,im\n";
  char buf[96];
  for (int iy = 0; iy < map.grid.ny; ++iy) {
    for (int ix = 0; ix < map.grid.nx; ++ix) {
      const cplx v = map.values[map.grid.index(ix, iy)];
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", ix, iy, v.real(), v.imag());
      os << buf;
    }
  }
}

void write_contrast_csv(const std::string& path, const ContrastMap& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_contrast_csv(os, map);
  if (!os) throw std::runtime_error("write failed: " + path);
}

ContrastMap read_contrast_csv(std::istream& is, double extent) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("contrast CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ix,iy,re,im") {
    throw std::invalid_argument("contrast CSV: line 1: expected header 'ix,iy,re,im'");
  }
  struct Row {
    int ix, iy;
    cplx v;
  };
  std::vector<Row> rows;
  int max_ix = -1, max_iy = -1;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    Row r{};
    double re = 0.0, im = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &r.ix, &r.iy, &re, &im) != 4 || r.ix < 0 || r.iy < 0) {
      throw std::invalid_argument("contrast CSV: line " + std::to_string(line_no) + ": malformed row");
    }
    r.v = {re, im};
    max_ix = std::max(max_ix, r.ix);
    max_iy = std::max(max_iy, r.iy);
    rows.push_back(r);
  }
  if (rows.empty()) throw std::invalid_argument("contrast CSV: no data rows");
  if (max_ix != max_iy) throw std::invalid_argument("contrast CSV: grid is not square");
  const Grid g = make_grid(extent, max_ix + 1);
  if (static_cast<int>(rows.size()) != g.size()) {
    throw std::invalid_argument("contrast CSV: expected " + std::to_string(g.size()) + " rows, got " +
                                std::to_string(rows.size()));
  }
  ContrastMap map(g);
  for (const auto& r : rows) map.values[g.index(r.ix, r.iy)] = r.v;
  return map;
}

ContrastMap read_contrast_csv(const std::string& path, double extent) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_contrast_csv(is, extent);
}

}  // namespace csi
