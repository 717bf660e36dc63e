/* geometry.h
 *
 * Kerr exterior background for axially symmetric wave problems.
 *
 * Coordinates are (t, r, theta) with the axial angle quotiented out.  The
 * time function is either Boyer-Lindquist or a horizon-regular foliation
 * obtained by bending t with a compactly supported profile T(r) near the
 * horizon.  Everything a caller needs is exposed through closed-form
 * evaluations: inverse metric components (divided by q^2 = r^2 + a^2 cos^2
 * theta), their first derivatives, volume weights for the base and lifted
 * measures, and the scalar background fields A, B of the axisymmetric
 * reduction together with their logarithmic derivatives.
 *
 * The combination (T^2 - (r^2+a^2)^2)/Delta is a 0/0 quotient at r = r_H;
 * near the horizon it is evaluated from the series of numerator and
 * denominator so no catastrophic cancellation occurs.
 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace bhlab {

inline void fail(const std::string& msg) { throw std::runtime_error(msg); }

struct SpacetimeParams {
  double M = 1.0;       /* mass */
  double a = 0.0;       /* specific angular momentum, |a| < M */
  double delta_H = 0.2; /* width of the horizon collar, units of M */
};

/* Precomputed background.  Build with make_spacetime(). */
struct Spacetime {
  SpacetimeParams par;
  bool horizon_regular = true; /* false: Boyer-Lindquist slicing (T = 0) */

  double rH = 0.0; /* larger root of Delta */
  double dH = 0.0; /* collar width delta_H * M */
  double d1 = 0.0; /* Delta'(rH) = 2 sqrt(M^2 - a^2) */
  double T0 = 0.0; /* T(rH) = rH^2 + a^2 */
  double T2 = 0.0; /* T''(rH) = -2 T0 / dH^2 */
  /* Taylor coefficients of N(r) = T^2 - (r^2+a^2)^2 about rH */
  double n1 = 0.0, n2 = 0.0, n3 = 0.0;
};

inline Spacetime make_spacetime(double M, double a, bool horizon_regular = true) {
  if (!(M > 0.0)) fail("make_spacetime: M must be positive");
  if (!(std::abs(a) < M)) fail("make_spacetime: need |a| < M (subextremal)");
  Spacetime sp;
  sp.par.M = M;
  sp.par.a = a;
  sp.horizon_regular = horizon_regular;
  sp.rH = M + std::sqrt(M * M - a * a);
  sp.dH = sp.par.delta_H * M;
  sp.d1 = 2.0 * std::sqrt(M * M - a * a);
  sp.T0 = sp.rH * sp.rH + a * a;
  sp.T2 = -2.0 * sp.T0 / (sp.dH * sp.dH);
  sp.n1 = -4.0 * sp.rH * sp.T0;
  sp.n2 = sp.T0 * sp.T2 - 6.0 * sp.rH * sp.rH - 2.0 * a * a;
  sp.n3 = -4.0 * sp.rH;
  return sp;
}

inline double Delta(const Spacetime& sp, double r) {
  return r * r - 2.0 * sp.par.M * r + sp.par.a * sp.par.a;
}
inline double dDelta(const Spacetime& sp, double r) { return 2.0 * r - 2.0 * sp.par.M; }

inline double q2(const Spacetime& sp, double r, double theta) {
  double c = std::cos(theta);
  return r * r + sp.par.a * sp.par.a * c * c;
}

/* Foliation profile T(r) and derivatives.  T = (rH^2+a^2) exp(1 - 1/(1-x^2))
 * with x = (r - rH)/dH on [0,1), and T = 0 outside the collar. */
inline double T_profile(const Spacetime& sp, double r) {
  if (!sp.horizon_regular) return 0.0;
  double x = (r - sp.rH) / sp.dH;
  if (x <= 0.0 || x >= 1.0) return (x == 0.0) ? sp.T0 : 0.0;
  double s = 1.0 - 1.0 / (1.0 - x * x);
  if (s < -700.0) return 0.0;
  return sp.T0 * std::exp(s);
}

inline double dT_profile(const Spacetime& sp, double r) {
  if (!sp.horizon_regular) return 0.0;
  double x = (r - sp.rH) / sp.dH;
  if (x <= 0.0 || x >= 1.0) return 0.0;
  double omx2 = 1.0 - x * x;
  double s = 1.0 - 1.0 / omx2;
  if (s < -680.0) return 0.0;
  double sp1 = -2.0 * x / (omx2 * omx2);
  return sp.T0 * std::exp(s) * sp1 / sp.dH;
}

inline double d2T_profile(const Spacetime& sp, double r) {
  if (!sp.horizon_regular) return 0.0;
  double x = (r - sp.rH) / sp.dH;
  if (x < 0.0 || x >= 1.0) return 0.0;
  if (x == 0.0) return sp.T2;
  double omx2 = 1.0 - x * x;
  double s = 1.0 - 1.0 / omx2;
  if (s < -660.0) return 0.0;
  double sp1 = -2.0 * x / (omx2 * omx2);
  double sp2 = -2.0 / (omx2 * omx2) - 8.0 * x * x / (omx2 * omx2 * omx2);
  return sp.T0 * std::exp(s) * (sp1 * sp1 + sp2) / (sp.dH * sp.dH);
}

/* p(r) = (T^2 - (r^2+a^2)^2)/Delta, the t-t block of the inverse metric
 * scaled by q^2.  Finite at the horizon in the horizon-regular slicing. */
inline constexpr double kHorizonGuard = 1e-4; /* switch to series inside |r-rH| < guard*M */

inline double p_ratio(const Spacetime& sp, double r) {
  double dr = r - sp.rH;
  if (!sp.horizon_regular) {
    double D = Delta(sp, r);
    if (D <= 0.0) fail("p_ratio: Boyer-Lindquist slicing needs r > r_H");
    double s = r * r + sp.par.a * sp.par.a;
    return -s * s / D;
  }
  if (std::abs(dr) < kHorizonGuard * sp.par.M) {
    return (sp.n1 + sp.n2 * dr + sp.n3 * dr * dr) / (sp.d1 + dr);
  }
  double T = T_profile(sp, r);
  double s = r * r + sp.par.a * sp.par.a;
  return (T * T - s * s) / Delta(sp, r);
}

inline double dp_ratio(const Spacetime& sp, double r) {
  double dr = r - sp.rH;
  if (!sp.horizon_regular) {
    double D = Delta(sp, r);
    if (D <= 0.0) fail("dp_ratio: Boyer-Lindquist slicing needs r > r_H");
    double s = r * r + sp.par.a * sp.par.a;
    return (-4.0 * r * s * D + s * s * dDelta(sp, r)) / (D * D);
  }
  if (std::abs(dr) < kHorizonGuard * sp.par.M) {
    double den = sp.d1 + dr;
    return ((sp.n2 + 2.0 * sp.n3 * dr) * den - (sp.n1 + sp.n2 * dr + sp.n3 * dr * dr)) /
           (den * den);
  }
  double T = T_profile(sp, r);
  double s = r * r + sp.par.a * sp.par.a;
  double D = Delta(sp, r);
  double N = T * T - s * s;
  double dN = 2.0 * T * dT_profile(sp, r) - 4.0 * r * s;
  return (dN - (N / D) * dDelta(sp, r)) / D;
}

/* Inverse metric components at (r, theta), all divided by q^2.  The full
 * coefficient of dt^2 in the inverse metric is gtt + qtt: gtt carries the
 * t-r block (T^2 - (r^2+a^2)^2)/(q^2 Delta) that the flux bookkeeping uses,
 * qtt = a^2 sin^2(theta)/q^2 is the Carter-operator share. */
struct Metric {
  double q2 = 0.0;
  double gtt = 0.0;
  double gtr = 0.0;
  double grr = 0.0;
  double gthth = 0.0; /* 1/q^2 */
  double qtt = 0.0;   /* a^2 sin^2(theta)/q^2 */
  double full_gtt() const { return gtt + qtt; }
};

inline Metric inverse_metric(const Spacetime& sp, double r, double theta) {
  Metric m;
  double s = std::sin(theta);
  m.q2 = q2(sp, r, theta);
  m.gtt = p_ratio(sp, r) / m.q2;
  m.gtr = T_profile(sp, r) / m.q2;
  m.grr = Delta(sp, r) / m.q2;
  m.gthth = 1.0 / m.q2;
  m.qtt = sp.par.a * sp.par.a * s * s / m.q2;
  return m;
}

/* First derivatives of the unscaled inverse components, for deformation
 * tensors and divergence checks.  q^2 depends on both r and theta. */
struct MetricJet {
  Metric m;
  double dr_gtt = 0, dr_gtr = 0, dr_grr = 0, dr_gthth = 0, dr_qtt = 0;
  double dth_gtt = 0, dth_gtr = 0, dth_grr = 0, dth_gthth = 0, dth_qtt = 0;
};

inline MetricJet metric_jet(const Spacetime& sp, double r, double theta) {
  MetricJet j;
  j.m = inverse_metric(sp, r, theta);
  double a = sp.par.a;
  double s = std::sin(theta), c = std::cos(theta);
  double Q = j.m.q2;
  double dQ_r = 2.0 * r;
  double dQ_th = -2.0 * a * a * s * c;

  double p = p_ratio(sp, r), dp = dp_ratio(sp, r);
  double T = T_profile(sp, r), dT = dT_profile(sp, r);
  double D = Delta(sp, r), dD = dDelta(sp, r);

  j.dr_gtt = dp / Q - p * dQ_r / (Q * Q);
  j.dr_gtr = dT / Q - T * dQ_r / (Q * Q);
  j.dr_grr = dD / Q - D * dQ_r / (Q * Q);
  j.dr_gthth = -dQ_r / (Q * Q);
  j.dr_qtt = -a * a * s * s * dQ_r / (Q * Q);

  j.dth_gtt = -p * dQ_th / (Q * Q);
  j.dth_gtr = -T * dQ_th / (Q * Q);
  j.dth_grr = -D * dQ_th / (Q * Q);
  j.dth_gthth = -dQ_th / (Q * Q);
  j.dth_qtt = a * a * (2.0 * s * c / Q - s * s * dQ_th / (Q * Q));
  return j;
}

/* Covariant components of the axisymmetric-quotient metric: the 2x2 t-r
 * block of the full inverse (Carter share included in tt) inverted, plus
 * the angular piece.  This is the metric axisymmetric fields see; causal
 * checks of multiplier vectorfields use it.  Regular at the horizon in the
 * horizon-regular slicing. */
struct DownMetric {
  double tt = 0.0, tr = 0.0, rr = 0.0, thth = 0.0;
};

inline DownMetric down_metric(const Spacetime& sp, double r, double theta) {
  Metric m = inverse_metric(sp, r, theta);
  double A = m.full_gtt(), B = m.gtr, C = m.grr;
  double det = A * C - B * B;
  if (!(det < 0.0)) fail("down_metric: t-r block is not Lorentzian here");
  DownMetric d;
  d.tt = C / det;
  d.tr = -B / det;
  d.rr = A / det;
  d.thth = 1.0 / m.gthth;
  return d;
}

/* Volume weight of the coordinate measure dt dr dtheta.
 * Base problem: mu = q^2 sin(theta).  Lifted (7+1 angular-momentum
 * reduced) problem: mu = q^2 (r^2+a^2)^2 sin^5(theta). */
inline double volume_weight(const Spacetime& sp, double r, double theta, bool tilde = false) {
  double s = std::sin(theta);
  double base = q2(sp, r, theta) * s;
  if (!tilde) return base;
  double rr = r * r + sp.par.a * sp.par.a;
  return base * rr * rr * s * s * s * s;
}

/* Logarithmic derivatives (d_r mu / mu, d_theta mu / mu). */
inline void volume_log_deriv(const Spacetime& sp, double r, double theta, bool tilde,
                             double* dlog_r, double* dlog_th) {
  double a = sp.par.a;
  double s = std::sin(theta), c = std::cos(theta);
  double Q = q2(sp, r, theta);
  *dlog_r = 2.0 * r / Q;
  *dlog_th = -2.0 * a * a * s * c / Q + c / s;
  if (tilde) {
    *dlog_r += 4.0 * r / (r * r + a * a);
    *dlog_th += 4.0 * c / s;
  }
}

/* Scalar background of the axisymmetric reduction.  A is the squared norm
 * of the axial Killing field, B its twist potential; both enter the coupled
 * wave systems only through the quotients below, which are evaluated in
 * closed form (no 0/0 division anywhere off the axis). */
struct Background {
  double A1 = 0, A2 = 0, A = 0, B = 0;
  double v = 0, dv = 0;     /* radial potential Delta/(r^2+a^2)^2 */
  double alpha = 0;         /* Delta/(r^2+a^2), the null slope */
  double dA1_A1_r = 0, dA1_A1_th = 0;
  double dA2_A2_r = 0, dA2_A2_th = 0;
  double dB_A_r = 0, dB_A_th = 0;
  double dA_A_r() const { return dA1_A1_r + dA2_A2_r; }
  double dA_A_th() const { return dA1_A1_th + dA2_A2_th; }
};

inline double radial_potential(const Spacetime& sp, double r) {
  double s = r * r + sp.par.a * sp.par.a;
  return Delta(sp, r) / (s * s);
}

inline double d_radial_potential(const Spacetime& sp, double r) {
  double a = sp.par.a, M = sp.par.M;
  double s = r * r + a * a;
  /* v' = -2 (r^3 - 3M r^2 + a^2 r + M a^2) / (r^2+a^2)^3 */
  double cubic = r * r * r - 3.0 * M * r * r + a * a * r + M * a * a;
  return -2.0 * cubic / (s * s * s);
}

inline Background background_scalars(const Spacetime& sp, double r, double theta) {
  Background b;
  double a = sp.par.a, M = sp.par.M;
  double s = std::sin(theta), c = std::cos(theta);
  double s2 = s * s;
  double Q = q2(sp, r, theta);
  double rr = r * r + a * a;
  double D = Delta(sp, r);

  b.v = D / (rr * rr);
  b.dv = d_radial_potential(sp, r);
  b.alpha = D / rr;

  b.A1 = rr * s2;
  double one_m = 1.0 - a * a * s2 * b.v;
  b.A2 = (1.0 + a * a * s2 / Q) * one_m;
  b.A = b.A1 * b.A2;
  b.B = -2.0 * a * M * (3.0 * c - c * c * c) - 2.0 * a * a * a * M * s2 * s2 * c / Q;

  b.dA1_A1_r = 2.0 * r / rr;
  b.dA1_A1_th = 2.0 * c / s;
  b.dA2_A2_r = a * a * s2 * (-2.0 * r / (Q * rr) - b.dv / one_m);
  b.dA2_A2_th = a * a * s * (4.0 * M * r * c / (Q * rr * one_m));
  b.dB_A_r = a * a * a * s2 * (4.0 * M * r * c / (Q * rr * rr * one_m));
  b.dB_A_th = a * s * (2.0 * M * (2.0 * r * r * rr + (r * r - a * a) * Q) /
                       (Q * rr * rr * one_m));
  return b;
}

/* Verify the three slicing conditions on a fine radial grid:
 *   1. g^{tr} >= 0 everywhere,
 *   2. T(rH) = rH^2 + a^2 with T'(rH) = 0,
 *   3. d_r(q^2 g^{tt}) - 2 (g^{tr}/g^{rr}) d_r(q^2 g^{tr}) > 0 on the collar.
 * Throws naming the failed condition and the radius. */
inline void foliation_check(const Spacetime& sp, int n_samples = 4000) {
  if (!sp.horizon_regular) return; /* nothing to check for T = 0 */
  double r0 = sp.rH, r1 = sp.rH + 2.0 * sp.dH;
  if (std::abs(T_profile(sp, sp.rH) - sp.T0) > 1e-12 * sp.T0)
    fail("foliation_check: condition 2 failed, T(r_H) != r_H^2 + a^2");
  if (std::abs(dT_profile(sp, sp.rH)) > 1e-10 * sp.T0 / sp.par.M)
    fail("foliation_check: condition 2 failed, T'(r_H) != 0");
  for (int i = 0; i <= n_samples; ++i) {
    double r = r0 + (r1 - r0) * i / n_samples;
    double T = T_profile(sp, r);
    if (T < 0.0)
      fail("foliation_check: condition 1 failed (g^{tr} < 0) at r = " + std::to_string(r));
    double lhs;
    if (r - sp.rH < kHorizonGuard * sp.par.M) {
      /* both terms are 0/0-regular; use the series forms */
      double dr = r - sp.rH;
      double den = sp.d1 + dr;
      double dp = ((sp.n2 + 2.0 * sp.n3 * dr) * den -
                   (sp.n1 + sp.n2 * dr + sp.n3 * dr * dr)) / (den * den);
      /* T' = T2 dr + O(dr^3), Delta = dr (d1 + dr), so T'/Delta -> T2/(d1+dr) */
      double tp_over_delta = sp.T2 / den;
      lhs = dp - 2.0 * T * tp_over_delta;
    } else {
      lhs = dp_ratio(sp, r) - 2.0 * (T / Delta(sp, r)) * dT_profile(sp, r);
    }
    if (!(lhs > 0.0))
      fail("foliation_check: condition 3 failed at r = " + std::to_string(r));
  }
}

} // namespace bhlab
