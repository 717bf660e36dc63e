/* geodesics.h
 *
 * Null geodesics of the Kerr exterior in Boyer-Lindquist coordinates,
 * integrated in Mino time (d lambda_Mino = d lambda_affine / q^2), where the
 * radial and polar motions decouple into one-dimensional problems:
 *
 *   r'' = R'(r)/2,   R = P^2 - Delta (L^2 - 2 a E Lz),  P = E (r^2+a^2) - a Lz
 *   th'' = Theta'(th)/2,  Theta = Qc + cos^2(th) (a^2 E^2 - Lz^2/sin^2(th))
 *
 * with L^2 = Qc + Lz^2 + a^2 E^2, so that for the axisymmetric family
 * (Lz = 0) the radial energy identity reads E^2 = rdot^2 + v(r) L^2 with
 * v = Delta/(r^2+a^2)^2.  The second-order forms avoid sign bookkeeping at
 * turning points.  Conserved quantities and the null residual are
 * recomputed from the state at every sample so integration drift is
 * visible, not hidden.
 *
 * Also hosts the critical radii: r_trap (zero of v', the trapped set) and
 * r_star (argmax of 2 r v, where the Morawetz weight switches branch).
 */
#pragma once

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "bhlab/geometry.h"

namespace bhlab {

struct CriticalRadii {
  double r_trap = 0.0; /* zero of v'(r): unstable photon orbits (Lz = 0) */
  double r_star = 0.0; /* larger root of r^2 - 4 M r + a^2: argmax of 2 r v */
};

inline CriticalRadii critical_radii(const Spacetime& sp) {
  double M = sp.par.M, a = sp.par.a;
  CriticalRadii out;
  out.r_star = 2.0 * M + std::sqrt(4.0 * M * M - a * a);
  auto dv = [&](double r) { return d_radial_potential(sp, r); };
  double lo = sp.rH * (1.0 + 1e-12), hi = 10.0 * M;
  if (!(dv(lo) > 0.0 && dv(hi) < 0.0))
    fail("critical_radii: v' does not bracket a root in (r_H, 10M)");
  boost::math::tools::eps_tolerance<double> tol(60);
  std::uintmax_t it = 200;
  auto br = boost::math::tools::toms748_solve(dv, lo, hi, tol, it);
  out.r_trap = 0.5 * (br.first + br.second);
  return out;
}

/* Conserved data of a null geodesic.  L2 = Qc + Lz^2 + a^2 E^2. */
struct NullGeodesic {
  double E = 1.0, Lz = 0.0, L2 = 0.0, Qc = 0.0;
  std::array<double, 6> y{}; /* t, r, theta, phi, r' , theta'  (Mino) */
};

namespace detail {

inline double R_potential(const Spacetime& sp, const NullGeodesic& g, double r) {
  double a = sp.par.a;
  double P = g.E * (r * r + a * a) - a * g.Lz;
  return P * P - Delta(sp, r) * (g.L2 - 2.0 * a * g.E * g.Lz);
}
inline double dR_potential(const Spacetime& sp, const NullGeodesic& g, double r) {
  double a = sp.par.a;
  double P = g.E * (r * r + a * a) - a * g.Lz;
  return 4.0 * r * g.E * P - dDelta(sp, r) * (g.L2 - 2.0 * a * g.E * g.Lz);
}
inline double Theta_potential(const Spacetime& sp, const NullGeodesic& g, double th) {
  double a = sp.par.a;
  double c = std::cos(th), s = std::sin(th);
  double lz_term = (g.Lz == 0.0) ? 0.0 : g.Lz * g.Lz / (s * s);
  return g.Qc + c * c * (a * a * g.E * g.E - lz_term);
}
inline double dTheta_potential(const Spacetime& sp, const NullGeodesic& g, double th) {
  double a = sp.par.a;
  double c = std::cos(th), s = std::sin(th);
  double lz_term = (g.Lz == 0.0) ? 0.0 : g.Lz * g.Lz * c / (s * s * s);
  return -2.0 * a * a * g.E * g.E * s * c + 2.0 * lz_term;
}

} // namespace detail

/* Build a geodesic from conserved data at (r0, th0); sign_r/sign_th pick the
 * initial branch of the radial and polar motion. */
inline NullGeodesic make_null_geodesic(const Spacetime& sp, double r0, double th0, double E,
                                       double Lz, double L2, int sign_r, int sign_th) {
  NullGeodesic g;
  g.E = E;
  g.Lz = Lz;
  g.L2 = L2;
  g.Qc = L2 - Lz * Lz - sp.par.a * sp.par.a * E * E;
  double R = detail::R_potential(sp, g, r0);
  double Th = detail::Theta_potential(sp, g, th0);
  double scale = E * E * std::pow(r0 * r0 + sp.par.a * sp.par.a, 2) + std::abs(L2) + 1.0;
  if (R < -1e-12 * scale)
    fail("make_null_geodesic: radial potential negative at r0 (unreachable data)");
  if (Th < -1e-12 * (std::abs(L2) + 1.0))
    fail("make_null_geodesic: polar potential negative at th0 (unreachable data)");
  g.y = {0.0, r0, th0, 0.0, sign_r * std::sqrt(std::max(R, 0.0)),
         sign_th * std::sqrt(std::max(Th, 0.0))};
  /* a zero branch sign is only admissible at a turning point */
  if (std::abs(g.y[4] * g.y[4] - R) > 1e-10 * scale)
    fail("make_null_geodesic: sign_r = 0 away from a radial turning point");
  if (std::abs(g.y[5] * g.y[5] - Th) > 1e-10 * (std::abs(L2) + 1.0))
    fail("make_null_geodesic: sign_th = 0 away from a polar turning point");
  return g;
}

/* One trajectory sample; conserved quantities recomputed from the state. */
struct GeodesicSample {
  double lambda = 0, t = 0, r = 0, theta = 0, phi = 0;
  double E = 0, Lz = 0, L2 = 0, null_residual = 0;
};

struct GeodesicResult {
  std::vector<GeodesicSample> samples;
  bool hit_horizon = false;
  bool escaped = false; /* reached r_stop; outgoing rays hit r = infinity at finite Mino time */
  int axis_reflections = 0;
  int theta_turning_points = 0;
  double max_null_residual = 0.0;
  double max_radial_defect = 0.0; /* |r'^2 - R(r)| / scale */
  double max_polar_defect = 0.0;  /* |th'^2 - Theta(th)| / scale */
};

namespace detail {

struct DefectPair {
  double radial = 0.0, polar = 0.0;
};

/* The constraint defects (r'^2 - R)/scale and (th'^2 - Theta)/scale are the
 * honest drift monitors: E and Lz columns are recomputed from the metric
 * contraction for the record, but they are algebraic in the state and the
 * conserved inputs, so they cannot drift beyond roundoff.  The null
 * residual follows from the exact identity
 *   q^2 g(xdot, xdot) = (r'^2 - R)/Delta + (th'^2 - Theta)
 * and is normalized against the same 1/Delta-weighted scale, which keeps
 * it meaningful all the way into the horizon. */
inline GeodesicSample sample_state(const Spacetime& sp, const NullGeodesic& g, double lambda,
                                   const std::array<double, 6>& y, DefectPair* defects) {
  double M = sp.par.M, a = sp.par.a;
  double r = y[1], th = y[2];
  double s = std::sin(th), c = std::cos(th);
  double Q = r * r + a * a * c * c;
  double rr = r * r + a * a;
  double D = Delta(sp, r);

  double P = g.E * rr - a * g.Lz;
  double lz_s2 = (g.Lz == 0.0) ? 0.0 : g.Lz / (s * s);
  double tp = a * (g.Lz - a * g.E * s * s) + rr * P / D;
  double php = (lz_s2 - a * g.E) + a * P / D;

  GeodesicSample out;
  out.lambda = lambda;
  out.t = y[0];
  out.r = r;
  /* the polar angle is integrated on the unreflected chart; fold back to
   * [0, pi], each pole crossing shifting the azimuth by pi */
  double k = std::floor(th / M_PI);
  out.theta = (std::fmod(k, 2.0) == 0.0) ? th - k * M_PI : (k + 1.0) * M_PI - th;
  out.phi = y[3] + k * M_PI;

  /* conserved columns via the Killing contractions (affine velocities are
   * the Mino ones divided by q^2) */
  double g_tt = -(1.0 - 2.0 * M * r / Q);
  double g_tph = -2.0 * M * a * r * s * s / Q;
  double g_phph = s * s * (rr * rr - D * a * a * s * s) / Q;
  double td = tp / Q, phd = php / Q;
  out.E = -(g_tt * td + g_tph * phd);
  out.Lz = g_tph * td + g_phph * phd;
  double Qc_now = y[5] * y[5] + c * c * (((g.Lz == 0.0) ? 0.0 : g.Lz * g.Lz / (s * s)) -
                                         a * a * g.E * g.E);
  out.L2 = Qc_now + g.Lz * g.Lz + a * a * g.E * g.E;

  double R = R_potential(sp, g, r);
  double Th = Theta_potential(sp, g, th);
  double scale_R = y[4] * y[4] + P * P +
                   std::abs(D) * (std::abs(g.L2) + 2.0 * std::abs(a * g.E * g.Lz)) + 1e-300;
  double scale_Th = y[5] * y[5] + std::abs(g.Qc) + a * a * g.E * g.E +
                    ((g.Lz == 0.0) ? 0.0 : g.Lz * g.Lz / (s * s)) + 1e-300;
  double def_r = y[4] * y[4] - R;
  double def_th = y[5] * y[5] - Th;
  if (defects) {
    defects->radial = std::abs(def_r) / scale_R;
    defects->polar = std::abs(def_th) / scale_Th;
  }
  out.null_residual = std::abs(def_r / D + def_th) / (scale_R / std::abs(D) + scale_Th);
  return out;
}

} // namespace detail

/* Integrate in Mino time with an adaptive 5(4) Dormand-Prince pair.
 * Terminates early when the orbit reaches the horizon.  Crossings of the
 * rotation axis (only possible for Lz = 0) are handled by reflection. */
inline GeodesicResult integrate_null(const Spacetime& sp, NullGeodesic g, double lambda_end,
                                     double tol = 1e-10, double r_stop = 1e4) {
  namespace ode = boost::numeric::odeint;
  using state = std::array<double, 6>;

  GeodesicResult out;
  {
    detail::DefectPair d0;
    GeodesicSample s0 = detail::sample_state(sp, g, 0.0, g.y, &d0);
    if (s0.null_residual > 10.0 * tol)
      fail("integrate_null: initial data fails the null constraint");
    out.samples.push_back(s0);
  }

  auto rhs = [&](const state& y, state& dy, double) {
    double r = y[1], th = y[2];
    double a = sp.par.a;
    double rr = r * r + a * a;
    double D = Delta(sp, r);
    double s = std::sin(th);
    double P = g.E * rr - a * g.Lz;
    double lz_s2 = (g.Lz == 0.0) ? 0.0 : g.Lz / (s * s);
    dy[0] = a * (g.Lz - a * g.E * s * s) + rr * P / D;
    dy[1] = y[4];
    dy[2] = y[5];
    dy[3] = (lz_s2 - a * g.E) + a * P / D;
    dy[4] = 0.5 * detail::dR_potential(sp, g, r);
    dy[5] = 0.5 * detail::dTheta_potential(sp, g, th);
  };

  auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<state>());
  double lam = 0.0, dt = 1e-3;
  double prev_thdot = g.y[5];
  double prev_k = std::floor(g.y[2] / M_PI);
  const double horizon_stop = sp.rH + 1e-6 * sp.par.M;

  while (lam < lambda_end) {
    dt = std::min(dt, lambda_end - lam);
    ode::controlled_step_result res = stepper.try_step(rhs, g.y, lam, dt);
    if (res == ode::controlled_step_result::fail) {
      if (dt < 1e-15) {
        /* the Boyer-Lindquist time coordinate diverges at the horizon; a
         * step underflow during the final approach is the crossing */
        if (g.y[1] < sp.rH + 1e-3 * sp.par.M) {
          out.hit_horizon = true;
          break;
        }
        fail("integrate_null: step size underflow");
      }
      continue;
    }
    /* pole crossings show up as chart-interval changes (Lz = 0 only) */
    double k = std::floor(g.y[2] / M_PI);
    if (k != prev_k) {
      out.axis_reflections += (int)std::llabs((long long)(k - prev_k));
      prev_k = k;
    }
    if (g.y[5] * prev_thdot < 0.0) ++out.theta_turning_points;
    prev_thdot = g.y[5];

    detail::DefectPair d;
    GeodesicSample smp = detail::sample_state(sp, g, lam, g.y, &d);
    out.samples.push_back(smp);
    out.max_null_residual = std::max(out.max_null_residual, smp.null_residual);
    out.max_radial_defect = std::max(out.max_radial_defect, d.radial);
    out.max_polar_defect = std::max(out.max_polar_defect, d.polar);

    if (g.y[1] <= horizon_stop) {
      out.hit_horizon = true;
      break;
    }
    if (g.y[1] >= r_stop) {
      out.escaped = true;
      break;
    }
  }
  return out;
}

inline void write_geodesic_csv(const std::string& path, const GeodesicResult& res) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) fail("write_geodesic_csv: cannot open " + path);
  std::fprintf(f, "lambda,t,r,theta,phi,E,Lz,L2,null_residual\n");
  for (const auto& s : res.samples)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.lambda, s.t,
                 s.r, s.theta, s.phi, s.E, s.Lz, s.L2, s.null_residual);
  std::fclose(f);
}

} // namespace bhlab
