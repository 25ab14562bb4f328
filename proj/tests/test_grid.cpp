#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "csi/grid.hpp"

using namespace csi;

namespace {

// Cell whose centre is nearest to p.
int cell_at(const Grid& g, Point2 p) {
  const double d = g.cell_size();
  const int ix = static_cast<int>(std::floor((p.x + 0.5 * g.extent_x) / d));
  const int iy = static_cast<int>(std::floor((p.y + 0.5 * g.extent_y) / d));
  return g.index(ix, iy);
}

cplx integral(const ContrastMap& m) {
  const double area = m.grid.cell_size() * m.grid.cell_size();
  return m.values.sum() * area;
}

ContrastMap random_map(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ContrastMap m(g);
  for (auto& v : m.values) v = {n(rng), n(rng)};
  return m;
}

}  // namespace

TEST_CASE("make_grid") {
  const Grid a = make_grid(7.5, 50);
  CHECK(a.size() == 2500);
  CHECK(a.cell_size() == doctest::Approx(0.15).epsilon(1e-15));

  const Grid b = make_grid(7.5, 60);
  CHECK(b.size() == 3600);
  CHECK(b.cell_size() == doctest::Approx(0.125).epsilon(1e-15));

  const Grid c = make_grid(1.0, 1);
  CHECK(c.size() == 1);
  CHECK(c.cell_size() == 1.0);
  CHECK(c.center(0).x == 0.0);
  CHECK(c.center(0).y == 0.0);

  CHECK_THROWS_AS(make_grid(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(-1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1.0, 0), std::invalid_argument);
}

TEST_CASE("grid centres are cell midpoints, row-major") {
  const Grid g = make_grid(3.0, 3);
  CHECK(g.index(2, 1) == 5);
  const Point2 p = g.center(5);
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == doctest::Approx(0.0));
  CHECK(g.center(0).x == doctest::Approx(-1.0));
  CHECK(g.center(0).y == doctest::Approx(-1.0));
  CHECK(g.half_diagonal() == doctest::Approx(1.5 * std::sqrt(2.0)));
}

TEST_CASE("rasterize_phantom examples") {
  const Grid odd = make_grid(7.5, 51);
  const ContrastMap coax = rasterize_phantom(coaxial_phantom(), odd);
  CHECK(coax.values[cell_at(odd, {0.0, 0.0})] == cplx(1.5, 0.0));
  // Ring cell at radius 1.05.
  CHECK(coax.values[cell_at(odd, {1.05, 0.0})].real() == doctest::Approx(0.8));

  const Grid g = make_grid(7.5, 50);
  const ContrastMap austria = rasterize_phantom(austria_phantom(), g);
  CHECK(austria.values[cell_at(g, {3.7, 3.7})] == cplx(0.0, 0.0));
  CHECK(austria.values.imag().cwiseAbs().maxCoeff() == 0.0);

  const ContrastMap lossy = rasterize_phantom(austria_phantom(0.005, 1.25e8), g);
  const cplx inside = lossy.values[cell_at(g, {2.55, 1.35})];
  CHECK(inside.real() == doctest::Approx(1.5));
  const double expect = 0.005 / (2.0 * std::numbers::pi * 1.25e8 * kVacuumPermittivity);
  CHECK(inside.imag() == doctest::Approx(-expect).epsilon(1e-14));
  CHECK(inside.imag() == doctest::Approx(-0.719).epsilon(1e-3));
}

TEST_CASE("innermost shape wins") {
  PhantomSpec s = coaxial_phantom();
  s.rings = {Ring{{0.0, 0.0}, 0.0, 2.0, 1.8}};  // ring now covers the cylinder
  const Grid g = make_grid(7.5, 51);
  CHECK(rasterize_phantom(s, g).values[cell_at(g, {0.0, 0.0})] == cplx(1.5, 0.0));
}

TEST_CASE("phantom validation") {
  PhantomSpec s = coaxial_phantom();
  s.rings[0].inner_radius = 1.3;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = coaxial_phantom();
  s.cylinders[0].eps_r = 0.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = austria_phantom(-1.0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_THROWS_AS(phantom_kind_from_string("shepp-logan"), std::invalid_argument);
  CHECK(phantom_kind_from_string("austria") == PhantomKind::austria);
  s = coaxial_phantom();
  s.kind = static_cast<PhantomKind>(7);
  CHECK_THROWS_AS(rasterize_phantom(s, make_grid(1.0, 2)), std::invalid_argument);
}

TEST_CASE("sparseness level") {
  const Grid g = make_grid(7.5, 50);
  CHECK(sparseness_level(ContrastMap(g)) == 0.0);
  CHECK(std::abs(sparseness_level(rasterize_phantom(coaxial_phantom(), g)) - 0.04) < 0.012);
  CHECK(std::abs(sparseness_level(rasterize_phantom(austria_phantom(), g)) - 0.125) < 0.01);
}

TEST_CASE("rasterization is scale consistent") {
  for (const PhantomSpec& s : {coaxial_phantom(), austria_phantom()}) {
    double perimeter = 0.0;
    for (const auto& r : s.rings) perimeter += 2.0 * std::numbers::pi * (r.inner_radius + r.outer_radius);
    for (const auto& c : s.cylinders) perimeter += 2.0 * std::numbers::pi * c.radius;
    for (int n : {30, 36, 50}) {
      const Grid coarse = make_grid(7.5, n), fine = make_grid(7.5, 2 * n);
      const double diff =
          std::abs(sparseness_level(rasterize_phantom(s, coarse)) - sparseness_level(rasterize_phantom(s, fine)));
      CHECK(diff < 2.0 * coarse.cell_size() * perimeter / (7.5 * 7.5));
    }
  }
}

TEST_CASE("resample examples") {
  const Grid g = make_grid(2.0, 4);
  const ContrastMap m = random_map(g, 3);
  const ContrastMap same = resample(m, g);
  CHECK((same.values - m.values).cwiseAbs().maxCoeff() == 0.0);

  ContrastMap c(make_grid(7.5, 36));
  c.values.setConstant(cplx(0.7, -0.2));
  for (int n : {1, 7, 30, 36, 50}) {
    const ContrastMap r = resample(c, make_grid(7.5, n));
    CHECK((r.values.array() - cplx(0.7, -0.2)).abs().maxCoeff() < 1e-14);
  }

  ContrastMap two(make_grid(1.0, 2));
  two.values << 1.0, 1.0, 0.0, 0.0;
  const ContrastMap one = resample(two, make_grid(1.0, 1));
  CHECK(std::abs(one.values[0] - cplx(0.5, 0.0)) < 1e-15);

  CHECK_THROWS_AS(resample(two, make_grid(1.5, 1)), std::invalid_argument);
}

TEST_CASE("resample preserves the domain integral") {
  const std::pair<int, int> pairs[] = {{60, 30}, {36, 12}, {30, 60}, {36, 30}, {30, 36}, {7, 5}};
  for (auto [from, to] : pairs) {
    const ContrastMap src = random_map(make_grid(7.5, from), static_cast<std::uint64_t>(from * 100 + to));
    const ContrastMap dst = resample(src, make_grid(7.5, to));
    const double scale = src.values.cwiseAbs().sum() * src.grid.cell_size() * src.grid.cell_size();
    CHECK(std::abs(integral(dst) - integral(src)) <= 1e-12 * scale);
  }
}

TEST_CASE("contrast CSV round trip is exact") {
  const ContrastMap m = random_map(make_grid(7.5, 6), 11);
  std::stringstream ss;
  write_contrast_csv(ss, m);
  const std::string text = ss.str();
  CHECK(text.rfind("ix,iy,re,im\n", 0) == 0);
  const ContrastMap back = read_contrast_csv(ss, 7.5);
  CHECK(back.grid.nx == 6);
  CHECK(back.values == m.values);

  std::stringstream again;
  write_contrast_csv(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("contrast CSV diagnostics") {
  std::stringstream bad_header("x,y,re,im\n0,0,1,0\n");
  CHECK_THROWS_WITH_AS(read_contrast_csv(bad_header, 1.0), doctest::Contains("line 1"), std::invalid_argument);

  std::stringstream bad_row("ix,iy,re,im\n0,0,1,0\n1,0,abc,0\n");
  CHECK_THROWS_WITH_AS(read_contrast_csv(bad_row, 1.0), doctest::Contains("line 3"), std::invalid_argument);

  std::stringstream missing("ix,iy,re,im\n0,0,1,0\n1,1,1,0\n");
  CHECK_THROWS_AS(read_contrast_csv(missing, 1.0), std::invalid_argument);

  std::stringstream empty("");
  CHECK_THROWS_AS(read_contrast_csv(empty, 1.0), std::invalid_argument);
}
