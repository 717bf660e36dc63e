/* test_geodesics.cc
 *
 * Critical radii against extended-precision brute-force extremization,
 * trapped-orbit preservation on the photon sphere, analytic radial rays,
 * axis crossings, and constraint drift for generic Kerr data.
 */
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>

#include "bhlab/geodesics.h"

using namespace bhlab;

namespace {

/* ternary search for the argmax of a unimodal function; long double keeps
 * the comparison noise floor below the requested tolerance near the flat
 * maximum */
template <class F>
long double argmax(F f, long double lo, long double hi, long double tol) {
  while (hi - lo > tol) {
    long double m1 = lo + (hi - lo) / 3.0L, m2 = hi - (hi - lo) / 3.0L;
    if (f(m1) < f(m2))
      lo = m1;
    else
      hi = m2;
  }
  return 0.5L * (lo + hi);
}

long double v_ld(long double a, long double r) {
  long double s = r * r + a * a;
  return (r * r - 2.0L * r + a * a) / (s * s);
}

} // namespace

TEST_CASE("critical radii: Schwarzschild closed values") {
  auto sp = make_spacetime(1.0, 0.0);
  auto cr = critical_radii(sp);
  CHECK(std::abs(cr.r_trap - 3.0) < 1e-12);
  CHECK(std::abs(cr.r_star - 4.0) < 1e-12);
}

TEST_CASE("critical radii: rotating case against brute force") {
  for (double a : {0.3, 0.5, 0.9}) {
    auto sp = make_spacetime(1.0, a);
    auto cr = critical_radii(sp);
    long double al = a;
    double bf_trap = (double)argmax([&](long double r) { return v_ld(al, r); },
                                    (long double)sp.rH, 10.0L, 1e-10L);
    double bf_star = (double)argmax([&](long double r) { return 2.0L * r * v_ld(al, r); },
                                    (long double)sp.rH, 10.0L, 1e-10L);
    CHECK(std::abs(cr.r_trap - bf_trap) < 1e-8);
    CHECK(std::abs(cr.r_star - bf_star) < 1e-8);
    /* cubic residual at the trapped radius */
    double c = cr.r_trap;
    CHECK(std::abs(c * c * c - 3.0 * c * c + a * a * c + a * a) < 1e-11);
    /* quadratic root for r_star */
    CHECK(cr.r_star == Catch::Approx(2.0 + std::sqrt(4.0 - a * a)).epsilon(1e-14));
    /* both shrink with spin */
    CHECK(cr.r_trap < 3.0);
    CHECK(cr.r_star < 4.0);
  }
}

TEST_CASE("photon sphere orbit stays put while theta oscillates") {
  auto sp = make_spacetime(1.0, 0.0);
  /* E^2 = v(3M) L^2 with L^2 = 27, E = 1: all arithmetic exact */
  auto g = make_null_geodesic(sp, 3.0, M_PI / 2.0, 1.0, std::sqrt(13.5), 27.0, 0, 1);
  double period = 2.0 * M_PI / std::sqrt(27.0); /* cos(theta) is harmonic in Mino time */
  auto res = integrate_null(sp, g, 6.0 * period);
  CHECK_FALSE(res.hit_horizon);
  CHECK(res.theta_turning_points >= 12);
  double max_dev = 0.0;
  for (const auto& s : res.samples) max_dev = std::max(max_dev, std::abs(s.r - 3.0));
  CHECK(max_dev < 1e-12);
  CHECK(res.max_null_residual < 1e-9);
  CHECK(res.max_radial_defect < 1e-9);
  CHECK(res.max_polar_defect < 1e-9);
  /* theta oscillates between pi/4 and 3 pi/4 for Lz^2 = L^2/2 */
  double th_lo = 4.0, th_hi = -1.0;
  for (const auto& s : res.samples) {
    th_lo = std::min(th_lo, s.theta);
    th_hi = std::max(th_hi, s.theta);
  }
  CHECK(th_lo == Catch::Approx(M_PI / 4.0).margin(1e-6));
  CHECK(th_hi == Catch::Approx(3.0 * M_PI / 4.0).margin(1e-6));
  /* conserved columns agree with the inputs */
  for (const auto& s : res.samples) {
    CHECK(s.E == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(s.Lz == Catch::Approx(std::sqrt(13.5)).epsilon(1e-12));
    CHECK(s.L2 == Catch::Approx(27.0).epsilon(1e-9));
  }
}

TEST_CASE("radial null ray follows 1/r = 1/r0 + E lambda and hits the horizon") {
  auto sp = make_spacetime(1.0, 0.0);
  auto g = make_null_geodesic(sp, 8.0, 1.0, 1.0, 0.0, 0.0, -1, 0);
  auto res = integrate_null(sp, g, 10.0);
  CHECK(res.hit_horizon);
  for (const auto& s : res.samples) {
    CHECK(1.0 / s.r == Catch::Approx(1.0 / 8.0 + s.lambda).margin(1e-9));
    CHECK(s.theta == Catch::Approx(1.0).margin(1e-12));
  }
  CHECK(res.max_null_residual < 1e-9);
}

TEST_CASE("polar orbit reflects at the axis and keeps its invariants") {
  auto sp = make_spacetime(1.0, 0.0);
  /* near-critical perihelion just outside the photon sphere: the ray
   * lingers while theta sweeps over the pole.  Lz = 0, through the poles. */
  double r0 = 3.1;
  double L2 = r0 * r0 * r0 * r0 / Delta(sp, r0);
  auto g = make_null_geodesic(sp, r0, M_PI / 2.0, 1.0, 0.0, L2, 0, -1);
  auto res = integrate_null(sp, g, 0.6, 1e-10, 100.0);
  CHECK(res.axis_reflections >= 1);
  CHECK_FALSE(res.hit_horizon);
  for (const auto& s : res.samples) {
    CHECK(s.theta >= 0.0);
    CHECK(s.theta <= M_PI);
  }
  CHECK(res.max_null_residual < 1e-9);
  CHECK(res.max_polar_defect < 1e-9);
  /* r only grows after the perihelion */
  for (const auto& s : res.samples) CHECK(s.r > r0 - 1e-9);
}

TEST_CASE("generic Kerr axisymmetric orbit conserves the constraints") {
  auto sp = make_spacetime(1.0, 0.5);
  auto cr = critical_radii(sp);
  double L2 = 30.0;
  /* energy slightly above the trapping threshold: orbit falls through */
  double E = std::sqrt(radial_potential(sp, cr.r_trap) * L2) * 1.01;
  auto g = make_null_geodesic(sp, 12.0, 1.2, E, 0.0, L2, -1, 1);
  auto res = integrate_null(sp, g, 30.0, 1e-11);
  CHECK(res.hit_horizon);
  CHECK(res.max_null_residual < 1e-9);
  CHECK(res.max_radial_defect < 1e-9);
  CHECK(res.max_polar_defect < 1e-9);
}

TEST_CASE("rejects data outside the allowed cone") {
  auto sp = make_spacetime(1.0, 0.0);
  /* turning point outside r0: R(r0) < 0 */
  CHECK_THROWS(make_null_geodesic(sp, 3.0, M_PI / 2.0, 0.1, 0.0, 27.0, 1, 1));
  /* polar potential negative: Lz too large for this theta */
  CHECK_THROWS(make_null_geodesic(sp, 10.0, 0.3, 1.0, 5.0, 25.1, 1, 1));
  /* zero branch sign away from a turning point */
  CHECK_THROWS(make_null_geodesic(sp, 20.0, M_PI / 2.0, 1.0, 0.0, 4.0, 0, -1));
}

TEST_CASE("csv writer emits one row per sample") {
  auto sp = make_spacetime(1.0, 0.0);
  auto g = make_null_geodesic(sp, 8.0, 1.0, 1.0, 0.0, 0.0, -1, 0);
  auto res = integrate_null(sp, g, 0.05);
  std::string path = "geodesic_test.csv";
  write_geodesic_csv(path, res);
  std::FILE* f = std::fopen(path.c_str(), "r");
  REQUIRE(f != nullptr);
  char line[512];
  REQUIRE(std::fgets(line, sizeof line, f) != nullptr);
  CHECK(std::string(line) == "lambda,t,r,theta,phi,E,Lz,L2,null_residual\n");
  int rows = 0;
  while (std::fgets(line, sizeof line, f)) ++rows;
  std::fclose(f);
  std::remove(path.c_str());
  CHECK(rows == (int)res.samples.size());
}
