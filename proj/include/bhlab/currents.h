/* currents.h
 *
 * Pointwise machinery for the multiplier currents
 *
 *   J[X, w, m]_mu = T_{mu nu} X^nu + w psi d_mu psi - 1/2 psi^2 d_mu w
 *                   + m_mu psi^2,
 *
 * evaluated on the axisymmetric quotient (t, r, theta): the divergence
 * identity
 *
 *   div J = K^{mu nu} d_mu psi d_nu psi + K psi^2
 *           + (div m) psi^2 + 2 psi m(psi) + (2 X(psi) + w psi) box psi,
 *
 *   K^{mu nu} = g^{mu l} d_l X^nu + g^{nu l} d_l X^mu - X^l d_l g^{mu nu}
 *               + (w - div X) g^{mu nu},          K = -1/2 box w,
 *
 * the raised components J^t, J^r, J^theta for boundary fluxes, a direct
 * finite-difference divergence that audits the identity against the
 * assembled K-form, extraction of div J as a symmetric quadratic form in
 * (d_t psi, d_r psi, d_th psi, psi) with a fixed-size eigensolver for
 * pointwise positivity margins, and the integrated divergence-theorem
 * balance on a coordinate slab.
 *
 * Only the (t, r, theta) block of the inverse metric ever appears: for
 * radial multipliers and axisymmetric fields every raised object reduces
 * to mixed-index combinations that block determines, so the same assembly
 * is exact in the Boyer-Lindquist and horizon-regular slicings and under
 * the lifted volume weight.  The lower-order vector m is stored with its
 * indices up; one-forms proportional to a lowered vector come back from
 * g^{mu nu} exactly, with no quotient-block truncation error.
 *
 * Point evaluations are pure and safe to run in parallel.  The balance
 * integrals reduce through a fixed pairwise topology, so the reported
 * numbers do not depend on evaluation order.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "geometry.h"
#include "multipliers.h"

namespace bhlab {

/* ---- geometry samples --------------------------------------------------- */

/* Everything the current formulas need at one (r, theta): the inverse-metric
 * jet plus the volume weight and its logarithmic derivatives. */
struct GeomPoint {
  double r = 0.0, theta = 0.0;
  MetricJet jet;
  double mu = 0.0;
  double dlog_r = 0.0, dlog_th = 0.0;
};

using GeomFn = std::function<GeomPoint(double, double)>;

inline GeomPoint geom_point(const Spacetime& sp, double r, double theta,
                            bool tilde = false) {
  GeomPoint g;
  g.r = r;
  g.theta = theta;
  g.jet = metric_jet(sp, r, theta);
  g.mu = volume_weight(sp, r, theta, tilde);
  volume_log_deriv(sp, r, theta, tilde, &g.dlog_r, &g.dlog_th);
  return g;
}

/* Flat space in spherical polars, for the Minkowski recipes. */
inline GeomPoint geom_point_flat(double r, double theta) {
  if (!(r > 0.0)) fail("geom_point_flat: need r > 0");
  GeomPoint g;
  g.r = r;
  g.theta = theta;
  double s = std::sin(theta), c = std::cos(theta);
  g.jet.m.q2 = r * r;
  g.jet.m.gtt = -1.0;
  g.jet.m.gtr = 0.0;
  g.jet.m.grr = 1.0;
  g.jet.m.gthth = 1.0 / (r * r);
  g.jet.m.qtt = 0.0;
  g.jet.dr_gthth = -2.0 / (r * r * r);
  g.mu = r * r * s;
  g.dlog_r = 2.0 / r;
  g.dlog_th = c / s;
  return g;
}

inline GeomFn make_geom(const Spacetime& sp, bool tilde = false) {
  return [sp, tilde](double r, double theta) { return geom_point(sp, r, theta, tilde); };
}

inline GeomFn make_geom_flat() {
  return [](double r, double theta) { return geom_point_flat(r, theta); };
}

/* ---- fields ------------------------------------------------------------- */

/* One evaluation of an axisymmetric field: value, first derivatives, and
 * the wave operator applied to it (whatever the caller knows it to be --
 * zero for on-shell probes, the analytic value for manufactured fields). */
struct FieldPoint {
  double psi = 0.0, dt = 0.0, dr = 0.0, dth = 0.0;
  double box = 0.0;
};

using FieldFn = std::function<FieldPoint(double, double, double)>; /* (t,r,th) */

struct Profile1D {
  std::function<double(double)> f, df, ddf;
};

/* Separable field T(t) R(r) H(theta) with the wave operator assembled from
 * the metric jet, so FieldPoint.box is exact for the chart the geometry
 * function describes (lifted volume included). */
inline FieldFn product_field(GeomFn geom, Profile1D T, Profile1D R, Profile1D H) {
  return [geom, T, R, H](double t, double r, double th) {
    double Tv = T.f(t), T1 = T.df(t), T2 = T.ddf(t);
    double Rv = R.f(r), R1 = R.df(r), R2 = R.ddf(r);
    double Hv = H.f(th), H1 = H.df(th), H2 = H.ddf(th);
    FieldPoint p;
    p.psi = Tv * Rv * Hv;
    p.dt = T1 * Rv * Hv;
    p.dr = Tv * R1 * Hv;
    p.dth = Tv * Rv * H1;
    GeomPoint g = geom(r, th);
    const Metric& m = g.jet.m;
    p.box = m.full_gtt() * (T2 * Rv * Hv) + 2.0 * m.gtr * (T1 * R1 * Hv) +
            m.grr * (Tv * R2 * Hv) + m.gthth * (Tv * Rv * H2) +
            (g.jet.dr_gtr + m.gtr * g.dlog_r) * p.dt +
            (g.jet.dr_grr + m.grr * g.dlog_r) * p.dr +
            (g.jet.dth_gthth + m.gthth * g.dlog_th) * p.dth;
    return p;
  };
}

/* ---- multiplier data ---------------------------------------------------- */

/* The (X, w, m) triple as radial profiles plus the lower-order vector.
 * Any slot may be left empty and reads as zero.  m is stored raised
 * (components m^t, m^r, m^theta); dr_mr and dth_mth feed div m. */
struct MultiplierData {
  std::function<double(double)> Xt, dXt, Xr, dXr;
  std::function<double(double)> w, dw, ddw;
  std::function<double(double, double)> mt, mr, mth, dr_mr, dth_mth;
};

namespace detail {

inline double ev(const std::function<double(double)>& f, double r) {
  return f ? f(r) : 0.0;
}
inline double ev2(const std::function<double(double, double)>& f, double r,
                  double th) {
  return f ? f(r, th) : 0.0;
}

/* Order-independent summation: fixed binary-tree reduction. */
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}
inline double pairwise_sum(const std::vector<double>& v) {
  return v.empty() ? 0.0 : pairwise_sum(v.data(), v.size());
}

}  // namespace detail

/* ---- energy-momentum tensor (full 4d backgrounds) ----------------------- */

/* Covariant and inverse components of the stationary axisymmetric 4-metric
 * in the (t, r, theta, phi) chart with g_tr = 0: Boyer-Lindquist outside
 * the horizon, or flat space.  Used by the energy-momentum evaluations;
 * everything dynamical runs through the quotient machinery above. */
struct Metric4 {
  double g_tt = 0, g_tphi = 0, g_rr = 0, g_thth = 0, g_phiphi = 0;
  double gtt = 0, gtphi = 0, grr = 0, gthth = 0, gphiphi = 0;
};

inline Metric4 metric4_bl(const Spacetime& sp, double r, double theta) {
  double M = sp.par.M, a = sp.par.a;
  double D = Delta(sp, r);
  if (!(D > 0.0)) fail("metric4_bl: needs r outside the horizon");
  double s = std::sin(theta);
  double Q = q2(sp, r, theta);
  double ra = r * r + a * a;
  Metric4 g;
  g.g_tt = -(1.0 - 2.0 * M * r / Q);
  g.g_tphi = -2.0 * a * M * r * s * s / Q;
  g.g_rr = Q / D;
  g.g_thth = Q;
  g.g_phiphi = (ra + 2.0 * a * a * M * r * s * s / Q) * s * s;
  g.gtt = -(ra * ra - a * a * D * s * s) / (Q * D);
  g.gtphi = -2.0 * a * M * r / (Q * D);
  g.grr = D / Q;
  g.gthth = 1.0 / Q;
  g.gphiphi = (D - a * a * s * s) / (Q * D * s * s);
  return g;
}

inline Metric4 metric4_flat(double r, double theta) {
  if (!(r > 0.0)) fail("metric4_flat: need r > 0");
  double s = std::sin(theta);
  Metric4 g;
  g.g_tt = -1.0;
  g.g_rr = 1.0;
  g.g_thth = r * r;
  g.g_phiphi = r * r * s * s;
  g.gtt = -1.0;
  g.grr = 1.0;
  g.gthth = 1.0 / (r * r);
  g.gphiphi = 1.0 / (r * r * s * s);
  return g;
}

struct FieldDerivs4 {
  double dt = 0, dr = 0, dth = 0, dphi = 0;
};

/* T_{mu nu} = 2 d_mu psi d_nu psi - g_{mu nu} d^l psi d_l psi.  The scalar
 * P = d^l psi d_l psi is reported alongside the ten components. */
struct EnergyMomentum {
  double tt = 0, tr = 0, tth = 0, tphi = 0;
  double rr = 0, rth = 0, rphi = 0;
  double thth = 0, thphi = 0, phiphi = 0;
  double p_scalar = 0;
};

inline EnergyMomentum energy_momentum(const FieldDerivs4& d, const Metric4& g) {
  double ut = g.gtt * d.dt + g.gtphi * d.dphi;
  double ur = g.grr * d.dr;
  double uth = g.gthth * d.dth;
  double uphi = g.gtphi * d.dt + g.gphiphi * d.dphi;
  double P = ut * d.dt + ur * d.dr + uth * d.dth + uphi * d.dphi;
  EnergyMomentum T;
  T.p_scalar = P;
  T.tt = 2.0 * d.dt * d.dt - g.g_tt * P;
  T.tr = 2.0 * d.dt * d.dr;
  T.tth = 2.0 * d.dt * d.dth;
  T.tphi = 2.0 * d.dt * d.dphi - g.g_tphi * P;
  T.rr = 2.0 * d.dr * d.dr - g.g_rr * P;
  T.rth = 2.0 * d.dr * d.dth;
  T.rphi = 2.0 * d.dr * d.dphi;
  T.thth = 2.0 * d.dth * d.dth - g.g_thth * P;
  T.thphi = 2.0 * d.dth * d.dphi;
  T.phiphi = 2.0 * d.dphi * d.dphi - g.g_phiphi * P;
  return T;
}

/* ---- deformation tensor ------------------------------------------------- */

struct Deformation {
  double Ktt = 0, Ktr = 0, Krr = 0, Kthth = 0;
  double K = 0;    /* -1/2 box w */
  double divX = 0; /* volume-form divergence of X */
};

/* box applied to a radial profile: g^{rr} w'' + mu^{-1} d_r(mu g^{rr}) w'.
 * The t-column contributes nothing for static w, so this is the full wave
 * operator on functions of r, in whichever chart and volume the geometry
 * sample carries. */
inline double box_radial(const GeomPoint& g, double dw, double ddw) {
  return g.jet.m.grr * ddw + (g.jet.dr_grr + g.jet.m.grr * g.dlog_r) * dw;
}

inline Deformation deformation(const MultiplierData& md, const GeomPoint& g) {
  const Metric& m = g.jet.m;
  double dXt = detail::ev(md.dXt, g.r);
  double Xr = detail::ev(md.Xr, g.r), dXr = detail::ev(md.dXr, g.r);
  double w = detail::ev(md.w, g.r);
  Deformation d;
  d.divX = dXr + Xr * g.dlog_r;
  double c = w - d.divX;
  d.Ktt = 2.0 * m.gtr * dXt - Xr * (g.jet.dr_gtt + g.jet.dr_qtt) + c * m.full_gtt();
  d.Ktr = m.gtr * dXr + m.grr * dXt - Xr * g.jet.dr_gtr + c * m.gtr;
  d.Krr = 2.0 * m.grr * dXr - Xr * g.jet.dr_grr + c * m.grr;
  d.Kthth = -Xr * g.jet.dr_gthth + c * m.gthth;
  d.K = md.w ? -0.5 * box_radial(g, detail::ev(md.dw, g.r), detail::ev(md.ddw, g.r))
             : 0.0;
  return d;
}

/* div J assembled from the deformation identity.  FieldPoint.box must hold
 * the wave operator of the field (zero for on-shell quadratic-form probes). */
inline double divj_kform(const MultiplierData& md, const GeomPoint& g,
                         const FieldPoint& f) {
  Deformation d = deformation(md, g);
  double out = d.Ktt * f.dt * f.dt + 2.0 * d.Ktr * f.dt * f.dr +
               d.Krr * f.dr * f.dr + d.Kthth * f.dth * f.dth +
               d.K * f.psi * f.psi;
  double Xpsi = detail::ev(md.Xt, g.r) * f.dt + detail::ev(md.Xr, g.r) * f.dr;
  out += (2.0 * Xpsi + detail::ev(md.w, g.r) * f.psi) * f.box;
  if (md.mt || md.mr || md.mth) {
    double mt = detail::ev2(md.mt, g.r, g.theta);
    double mr = detail::ev2(md.mr, g.r, g.theta);
    double mth = detail::ev2(md.mth, g.r, g.theta);
    double divm = detail::ev2(md.dr_mr, g.r, g.theta) + mr * g.dlog_r +
                  detail::ev2(md.dth_mth, g.r, g.theta) + mth * g.dlog_th;
    out += divm * f.psi * f.psi +
           2.0 * f.psi * (mt * f.dt + mr * f.dr + mth * f.dth);
  }
  return out;
}

/* ---- current components ------------------------------------------------- */

struct CurrentSample {
  double Jt = 0, Jr = 0, Jth = 0;
  double divJ = 0;
  Deformation def;
};

inline CurrentSample current_sample(const MultiplierData& md, const GeomPoint& g,
                                    const FieldPoint& f) {
  const Metric& m = g.jet.m;
  double upt = m.full_gtt() * f.dt + m.gtr * f.dr;
  double upr = m.gtr * f.dt + m.grr * f.dr;
  double upth = m.gthth * f.dth;
  double P = upt * f.dt + upr * f.dr + upth * f.dth;
  double Xt = detail::ev(md.Xt, g.r), Xr = detail::ev(md.Xr, g.r);
  double Xpsi = Xt * f.dt + Xr * f.dr;
  double w = detail::ev(md.w, g.r), dw = detail::ev(md.dw, g.r);
  double p2 = f.psi * f.psi;
  CurrentSample cs;
  cs.Jt = 2.0 * upt * Xpsi - Xt * P + w * f.psi * upt - 0.5 * p2 * m.gtr * dw +
          detail::ev2(md.mt, g.r, g.theta) * p2;
  cs.Jr = 2.0 * upr * Xpsi - Xr * P + w * f.psi * upr - 0.5 * p2 * m.grr * dw +
          detail::ev2(md.mr, g.r, g.theta) * p2;
  cs.Jth = 2.0 * upth * Xpsi + w * f.psi * upth +
           detail::ev2(md.mth, g.r, g.theta) * p2;
  cs.divJ = divj_kform(md, g, f);
  cs.def = deformation(md, g);
  return cs;
}

/* ---- two evaluations of div J ------------------------------------------- */

struct TwoWayResult {
  double direct = 0; /* mu^{-1} d_mu (mu J^mu), five-point stencils */
  double kform = 0;  /* deformation identity at the centre */
  double residual = 0;
};

/* Audit of the divergence identity at a point: numerically differentiate
 * mu J^mu with fourth-order central stencils (geometry re-evaluated at
 * every node) and compare with the assembled K-form.  For exact field
 * derivatives the residual is pure stencil error, O(h^4). */
inline TwoWayResult div_current_two_ways(const FieldFn& field,
                                         const MultiplierData& md,
                                         const GeomFn& geom, double t, double r,
                                         double th, double h) {
  if (!(h > 0.0)) fail("div_current_two_ways: step must be positive");
  const double pi = 3.14159265358979323846;
  if (!(th - 2.0 * h > 0.0 && th + 2.0 * h < pi))
    fail("div_current_two_ways: theta stencil leaves (0, pi)");
  auto muJ = [&](double tv, double rv, double hv, int comp) {
    GeomPoint g = geom(rv, hv);
    CurrentSample cs = current_sample(md, g, field(tv, rv, hv));
    double J = comp == 0 ? cs.Jt : comp == 1 ? cs.Jr : cs.Jth;
    return g.mu * J;
  };
  auto d4 = [h](auto&& sample) {
    return (sample(-2) - 8.0 * sample(-1) + 8.0 * sample(1) - sample(2)) /
           (12.0 * h);
  };
  double ddt = d4([&](int k) { return muJ(t + k * h, r, th, 0); });
  double ddr = d4([&](int k) { return muJ(t, r + k * h, th, 1); });
  double ddth = d4([&](int k) { return muJ(t, r, th + k * h, 2); });
  GeomPoint g0 = geom(r, th);
  TwoWayResult tw;
  tw.direct = (ddt + ddr + ddth) / g0.mu;
  tw.kform = divj_kform(md, g0, field(t, r, th));
  tw.residual = std::abs(tw.direct - tw.kform);
  return tw;
}

/* ---- quadratic form and positivity margins ------------------------------ */

struct QForm4 {
  double a[4][4] = {};
};

/* div J with box psi = 0 is a quadratic form in (d_t psi, d_r psi,
 * d_th psi, psi); recover its matrix from ten probe evaluations, so any
 * multiplier data -- m terms included -- feeds the same sweep. */
inline QForm4 divj_quadratic_form(const MultiplierData& md, const GeomPoint& g) {
  auto probe = [&](double a0, double a1, double a2, double a3) {
    FieldPoint f;
    f.dt = a0;
    f.dr = a1;
    f.dth = a2;
    f.psi = a3;
    return divj_kform(md, g, f);
  };
  QForm4 A;
  double diag[4];
  for (int i = 0; i < 4; ++i) {
    double e[4] = {0, 0, 0, 0};
    e[i] = 1.0;
    diag[i] = probe(e[0], e[1], e[2], e[3]);
    A.a[i][i] = diag[i];
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      double e[4] = {0, 0, 0, 0};
      e[i] = 1.0;
      e[j] = 1.0;
      double q = probe(e[0], e[1], e[2], e[3]);
      A.a[i][j] = A.a[j][i] = 0.5 * (q - diag[i] - diag[j]);
    }
  return A;
}

/* Smallest eigenvalue of a symmetric 4x4 by cyclic Jacobi rotations.
 * Deterministic, allocation-free, quadratically convergent; the sweep
 * bound is far beyond what four dimensions ever need. */
inline double min_eig_sym4(QForm4 A) {
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0, frob = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        frob += A.a[i][j] * A.a[i][j];
        if (j > i) off += A.a[i][j] * A.a[i][j];
      }
    if (off == 0.0 || off <= 1e-32 * frob) break;
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 4; ++q) {
        double apq = A.a[p][q];
        if (apq == 0.0) continue;
        double tau = (A.a[q][q] - A.a[p][p]) / (2.0 * apq);
        double tsign = tau >= 0.0 ? 1.0 : -1.0;
        double tval = tsign / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + tval * tval), s = tval * c;
        for (int k = 0; k < 4; ++k) {
          double akp = A.a[k][p], akq = A.a[k][q];
          A.a[k][p] = c * akp - s * akq;
          A.a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 4; ++k) {
          double apk = A.a[p][k], aqk = A.a[q][k];
          A.a[p][k] = c * apk - s * aqk;
          A.a[q][k] = s * apk + c * aqk;
        }
      }
  }
  return std::min(std::min(A.a[0][0], A.a[1][1]), std::min(A.a[2][2], A.a[3][3]));
}

/* Claimed pointwise lower bound: diagonal coefficients for
 * ((d_t psi)^2, (d_r psi)^2, (d_th psi)^2, psi^2) at (r, theta). */
using DiagForm = std::function<std::array<double, 4>(double, double)>;

struct MarginReport {
  double min_margin = std::numeric_limits<double>::infinity(); /* scaled */
  double min_raw = std::numeric_limits<double>::infinity();
  double argmin_r = 0.0, argmin_th = 0.0;
  long points = 0;
};

/* Sweep min eig(A - diag(claimed)) over a grid, scaled at each point by the
 * largest coefficient in play there, so one number is comparable across the
 * whole region. */
inline MarginReport positivity_margin(const MultiplierData& md, const GeomFn& geom,
                                      const DiagForm& claimed, double r_lo,
                                      double r_hi, int nr, double th_lo,
                                      double th_hi, int nth, bool log_r = true) {
  if (!(r_hi > r_lo && r_lo > 0.0)) fail("positivity_margin: bad radial range");
  if (nr < 2 || nth < 1) fail("positivity_margin: need nr >= 2, nth >= 1");
  MarginReport rep;
  for (int i = 0; i < nr; ++i) {
    double fr = double(i) / (nr - 1);
    double r = log_r ? r_lo * std::pow(r_hi / r_lo, fr)
                     : r_lo + (r_hi - r_lo) * fr;
    for (int j = 0; j < nth; ++j) {
      double th = nth == 1 ? 0.5 * (th_lo + th_hi)
                           : th_lo + (th_hi - th_lo) * double(j) / (nth - 1);
      GeomPoint g = geom(r, th);
      QForm4 A = divj_quadratic_form(md, g);
      std::array<double, 4> D = claimed(r, th);
      double scale = 0.0;
      for (int p = 0; p < 4; ++p) {
        scale = std::max(scale, std::abs(D[p]));
        for (int q = 0; q < 4; ++q) scale = std::max(scale, std::abs(A.a[p][q]));
      }
      if (scale == 0.0) scale = 1.0;
      for (int p = 0; p < 4; ++p) A.a[p][p] -= D[p];
      double ev = min_eig_sym4(A);
      ++rep.points;
      if (ev / scale < rep.min_margin) {
        rep.min_margin = ev / scale;
        rep.min_raw = ev;
        rep.argmin_r = r;
        rep.argmin_th = th;
      }
    }
  }
  return rep;
}

/* The lower-bound forms the Morawetz recipes are asserted against, with
 * every constant pinned to 1.  Flat tags return the exact closed-form
 * coefficients (their margin is zero to round-off).  Black-hole tags:
 *
 *   (d_r psi)^2 :  M^2 r^{-3} (1 - r_H/r)^2      (M^6 r^{-7} ... lifted)
 *   angular     :  r^{-1} (1 - r_trap/r)^2 * (Carter share for t, 1/q^2
 *                  for theta)
 *   psi^2       :  M r^{-4} 1_{r > r_star}       (r^{-3} 1_{...} lifted)
 *
 * Kerr subtracts the concession potential eps_a * b(r)/q^2, b a unit-L1
 * bump on [r_H, r_star], eps_a = |a|/M * 1e-3.  With tempered = true the
 * three gradient entries are cut to r > r_star and the psi^2 entry absorbs
 * the flattening dip (the negative part of K below r_star, whose L1 norm
 * the recipe reports separately as temper_l1). */
inline DiagForm claimed_morawetz_form(const Spacetime& sp, const MorawetzRecipe& rec,
                                      bool tempered = false) {
  if (!is_black_hole(rec.tag)) {
    MorawetzRecipe flat = rec;
    return [flat](double r, double /*th*/) -> std::array<double, 4> {
      MinkCoefficients c = mink_divj_coefficients(flat, r);
      return {0.0, c.rr, c.ang / (r * r), c.psi};
    };
  }
  if (tempered && !rec.tempered)
    fail("claimed_morawetz_form: recipe has no tempered family");
  bool tilde = rec.tag == MorawetzTag::SchwarzschildTilde;
  bool kerr = rec.tag == MorawetzTag::Kerr;
  double M = rec.M, a = rec.a, rH = rec.r_H, rt = rec.r_trap, rs = rec.r_star;
  double eps_a = std::abs(a) / M * 1e-3;
  auto dwt = rec.dwt, ddwt = rec.ddwt;
  Spacetime spc = sp;
  return [=](double r, double th) -> std::array<double, 4> {
    std::array<double, 4> d{};
    double s = std::sin(th);
    double Q = q2(spc, r, th);
    double chi = 1.0 - rt / r;
    double shape = chi * chi / r;
    d[0] = shape * a * a * s * s / Q;
    if (kerr) {
      double om = 1.0 - rH / r;
      d[1] = M * M / (r * r * r) * om * om;
    } else {
      double om = 1.0 - 2.0 * M / r;
      double pref = tilde ? std::pow(M, 6) / std::pow(r, 7) : M * M / (r * r * r);
      d[1] = pref * om * om;
    }
    d[2] = shape / Q;
    d[3] = r > rs ? (tilde ? 1.0 / (r * r * r) : M / (r * r * r * r)) : 0.0;
    if (kerr && eps_a > 0.0) {
      double L = rs - rH, x = (r - rH) / L;
      if (x > 0.0 && x < 1.0) d[3] -= eps_a * d_smoothstep(x) / (L * Q);
    }
    if (tempered) {
      if (r <= rs) d[0] = d[1] = d[2] = 0.0;
      if (r < rs) {
        GeomPoint g = geom_point(spc, r, th, tilde);
        double K = -0.5 * box_radial(g, dwt(r), ddwt(r));
        if (K < 0.0) d[3] += K;
      }
    }
    return d;
  };
}

/* ---- divergence-theorem balance ----------------------------------------- */

struct BalanceReport {
  double sigma_t1 = 0, sigma_t2 = 0;       /* int (-J^t) mu over the slices */
  double horizon = 0, outer = 0;           /* int J^r mu over the r faces */
  double flux_th_lo = 0, flux_th_hi = 0;   /* int J^th mu over the th faces */
  double bulk = 0;                         /* int div J mu over the slab */
  double residual = 0;
};

namespace detail {

inline std::vector<double> simpson_weights(int n, double h) {
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i)
    w[i] = (i == 0 || i == n) ? h / 3.0 : (i % 2 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
  return w;
}

}  // namespace detail

/* Composite-Simpson balance of the current over the coordinate slab
 * [t1,t2] x [r_lo,r_hi] x [th_lo,th_hi].  All six faces are reported; the
 * residual
 *
 *   bulk + sigma_t2 - sigma_t1 + horizon - outer - flux_th_hi + flux_th_lo
 *
 * vanishes identically in the continuum and measures pure quadrature error
 * for smooth fields.  The field must vanish on the outer face (this is
 * checked); nt, nr, nth are interval counts and must be even. */
inline BalanceReport divergence_theorem_balance(
    const FieldFn& field, const MultiplierData& md, const GeomFn& geom, double t1,
    double t2, double r_lo, double r_hi, double th_lo, double th_hi, int nt,
    int nr, int nth) {
  if (!(t2 > t1 && r_hi > r_lo && th_hi > th_lo))
    fail("divergence_theorem_balance: empty slab");
  if (nt < 2 || nr < 2 || nth < 2 || nt % 2 || nr % 2 || nth % 2)
    fail("divergence_theorem_balance: interval counts must be even and >= 2");
  double ht = (t2 - t1) / nt, hr = (r_hi - r_lo) / nr, hth = (th_hi - th_lo) / nth;
  std::vector<double> wt = detail::simpson_weights(nt, ht);
  std::vector<double> wr = detail::simpson_weights(nr, hr);
  std::vector<double> wth = detail::simpson_weights(nth, hth);

  std::vector<GeomPoint> G;
  G.reserve(std::size_t(nr + 1) * (nth + 1));
  for (int i = 0; i <= nr; ++i)
    for (int j = 0; j <= nth; ++j)
      G.push_back(geom(r_lo + i * hr, th_lo + j * hth));

  std::vector<double> bulk_terms(std::size_t(nt + 1) * (nr + 1) * (nth + 1));
  std::vector<double> sig1(std::size_t(nr + 1) * (nth + 1));
  std::vector<double> sig2(sig1.size());
  std::vector<double> hor(std::size_t(nt + 1) * (nth + 1)), out(hor.size());
  std::vector<double> tlo(std::size_t(nt + 1) * (nr + 1)), thi(tlo.size());

  for (int k = 0; k <= nt; ++k) {
    double t = t1 + k * ht;
    for (int i = 0; i <= nr; ++i) {
      double r = r_lo + i * hr;
      for (int j = 0; j <= nth; ++j) {
        double th = th_lo + j * hth;
        const GeomPoint& g = G[std::size_t(i) * (nth + 1) + j];
        FieldPoint f = field(t, r, th);
        if (i == nr &&
            std::abs(f.psi) + std::abs(f.dt) + std::abs(f.dr) + std::abs(f.dth) >
                1e-12)
          fail("divergence_theorem_balance: field support reaches the outer face");
        CurrentSample cs = current_sample(md, g, f);
        bulk_terms[(std::size_t(k) * (nr + 1) + i) * (nth + 1) + j] =
            wt[k] * wr[i] * wth[j] * cs.divJ * g.mu;
        if (k == 0) sig1[std::size_t(i) * (nth + 1) + j] = wr[i] * wth[j] * (-cs.Jt) * g.mu;
        if (k == nt) sig2[std::size_t(i) * (nth + 1) + j] = wr[i] * wth[j] * (-cs.Jt) * g.mu;
        if (i == 0) hor[std::size_t(k) * (nth + 1) + j] = wt[k] * wth[j] * cs.Jr * g.mu;
        if (i == nr) out[std::size_t(k) * (nth + 1) + j] = wt[k] * wth[j] * cs.Jr * g.mu;
        if (j == 0) tlo[std::size_t(k) * (nr + 1) + i] = wt[k] * wr[i] * cs.Jth * g.mu;
        if (j == nth) thi[std::size_t(k) * (nr + 1) + i] = wt[k] * wr[i] * cs.Jth * g.mu;
      }
    }
  }
  BalanceReport rep;
  rep.bulk = detail::pairwise_sum(bulk_terms);
  rep.sigma_t1 = detail::pairwise_sum(sig1);
  rep.sigma_t2 = detail::pairwise_sum(sig2);
  rep.horizon = detail::pairwise_sum(hor);
  rep.outer = detail::pairwise_sum(out);
  rep.flux_th_lo = detail::pairwise_sum(tlo);
  rep.flux_th_hi = detail::pairwise_sum(thi);
  rep.residual = rep.bulk + rep.sigma_t2 - rep.sigma_t1 + rep.horizon - rep.outer -
                 rep.flux_th_hi + rep.flux_th_lo;
  return rep;
}

/* ---- recipe adapters ----------------------------------------------------- */

inline MultiplierData multiplier_time() {
  MultiplierData md;
  md.Xt = [](double) { return 1.0; };
  md.dXt = [](double) { return 0.0; };
  return md;
}

inline MultiplierData multiplier_h_dt(std::function<double(double)> h,
                                      std::function<double(double)> dh) {
  MultiplierData md;
  md.Xt = std::move(h);
  md.dXt = std::move(dh);
  return md;
}

/* The radial pair X = u v d_r, w (plain or tempered family). */
inline MultiplierData multiplier_morawetz(const MorawetzRecipe& rec,
                                          bool tempered = false) {
  if (tempered && !rec.tempered) fail("multiplier_morawetz: recipe not tempered");
  MultiplierData md;
  auto u = tempered ? rec.ut : rec.u;
  auto du = tempered ? rec.dut : rec.du;
  auto v = rec.v, dv = rec.dv;
  md.Xr = [u, v](double r) { return u(r) * v(r); };
  md.dXr = [u, du, v, dv](double r) { return du(r) * v(r) + u(r) * dv(r); };
  md.w = tempered ? rec.wt : rec.w;
  md.dw = tempered ? rec.dwt : rec.dw;
  md.ddw = tempered ? rec.ddwt : rec.ddw;
  return md;
}

inline MultiplierData multiplier_redshift(const MorawetzRecipe& rec) {
  if (!is_black_hole(rec.tag) || !rec.Yr)
    fail("multiplier_redshift: recipe carries no redshift pair");
  MultiplierData md;
  md.Xr = rec.Yr;
  md.dXr = rec.dYr;
  md.Xt = rec.Yt;
  md.dXt = rec.dYt;
  return md;
}

/* d_t paired with the time-derivative weight. */
inline MultiplierData multiplier_dt_weight(const MorawetzRecipe& rec) {
  if (!rec.w_dt) fail("multiplier_dt_weight: recipe carries no w_dt");
  MultiplierData md;
  md.Xt = [](double) { return 1.0; };
  md.dXt = [](double) { return 0.0; };
  md.w = rec.w_dt;
  md.dw = rec.dw_dt;
  md.ddw = rec.ddw_dt;
  return md;
}

/* Full interior composite X = X_tempered + eps_redshift Y + d_t with
 * w = w_tempered + eps_dt w_dt. */
inline MultiplierData multiplier_composite(const MorawetzRecipe& rec) {
  if (!is_black_hole(rec.tag)) fail("multiplier_composite: black-hole tags only");
  if (!rec.tempered) fail("multiplier_composite: temper the recipe first");
  if (!rec.Yr) fail("multiplier_composite: recipe carries no redshift pair");
  double er = rec.eps_redshift, edt = rec.eps_dt;
  auto ut = rec.ut, dut = rec.dut, v = rec.v, dv = rec.dv;
  auto Yr = rec.Yr, dYr = rec.dYr, Yt = rec.Yt, dYt = rec.dYt;
  auto wt = rec.wt, dwt = rec.dwt, ddwt = rec.ddwt;
  auto wd = rec.w_dt, dwd = rec.dw_dt, ddwd = rec.ddw_dt;
  MultiplierData md;
  md.Xt = [Yt, er](double r) { return 1.0 + er * Yt(r); };
  md.dXt = [dYt, er](double r) { return er * dYt(r); };
  md.Xr = [ut, v, Yr, er](double r) { return ut(r) * v(r) + er * Yr(r); };
  md.dXr = [ut, dut, v, dv, dYr, er](double r) {
    return dut(r) * v(r) + ut(r) * dv(r) + er * dYr(r);
  };
  md.w = [wt, wd, edt](double r) { return wt(r) + edt * wd(r); };
  md.dw = [dwt, dwd, edt](double r) { return dwt(r) + edt * dwd(r); };
  md.ddw = [ddwt, ddwd, edt](double r) { return ddwt(r) + edt * ddwd(r); };
  return md;
}

/* Composite plus the radial-power tail: X gains alpha^{-1} f L, w gains
 * 2 r f/(r^2+a^2), and the lower-order vector (1-eps)(r f'/q^2) L appears.
 * Derivatives are rebuilt from the recipe parts, which is why the base
 * recipe is required alongside the r^p data. */
inline MultiplierData multiplier_rp(const Spacetime& sp, const MorawetzRecipe& base,
                                    const RpRecipe& rp) {
  if (!base.tempered) fail("multiplier_rp: base recipe must be tempered");
  if (!base.Yr) fail("multiplier_rp: base recipe carries no redshift pair");
  MultiplierData md = multiplier_composite(base);
  double a = sp.par.a, R = rp.R, eps = rp.eps_rp;
  auto f = rp.f, df = rp.df, ddf = rp.ddf;
  auto alpha = [sp](double r) { return Delta(sp, r) / (r * r + sp.par.a * sp.par.a); };
  auto dalpha = [sp](double r) {
    double s = r * r + sp.par.a * sp.par.a;
    return (dDelta(sp, r) * s - 2.0 * r * Delta(sp, r)) / (s * s);
  };
  auto Xt0 = md.Xt, dXt0 = md.dXt, Xr0 = md.Xr, dXr0 = md.dXr;
  auto w0 = md.w, dw0 = md.dw, ddw0 = md.ddw;
  md.Xt = [Xt0, f, alpha, R](double r) {
    return Xt0(r) + (r <= R ? 0.0 : f(r) / alpha(r));
  };
  md.dXt = [dXt0, f, df, alpha, dalpha, R](double r) {
    if (r <= R) return dXt0(r);
    double al = alpha(r);
    return dXt0(r) + df(r) / al - f(r) * dalpha(r) / (al * al);
  };
  md.Xr = [Xr0, f](double r) { return Xr0(r) + f(r); };
  md.dXr = [dXr0, df](double r) { return dXr0(r) + df(r); };
  md.w = [w0, f, a](double r) { return w0(r) + 2.0 * r * f(r) / (r * r + a * a); };
  md.dw = [dw0, f, df, a](double r) {
    double s = r * r + a * a;
    return dw0(r) + 2.0 * (f(r) + r * df(r)) / s - 4.0 * r * r * f(r) / (s * s);
  };
  md.ddw = [ddw0, f, df, ddf, a](double r) {
    double s = r * r + a * a;
    return ddw0(r) + 2.0 * (2.0 * df(r) + r * ddf(r)) / s -
           (12.0 * r * f(r) + 8.0 * r * r * df(r)) / (s * s) +
           16.0 * r * r * r * f(r) / (s * s * s);
  };
  Spacetime spc = sp;
  md.mt = [df, eps, spc](double r, double th) {
    return (1.0 - eps) * r * df(r) / q2(spc, r, th);
  };
  md.mr = [df, eps, spc, alpha](double r, double th) {
    return (1.0 - eps) * r * df(r) * alpha(r) / q2(spc, r, th);
  };
  md.dr_mr = [df, ddf, eps, spc, alpha, dalpha](double r, double th) {
    double Q = q2(spc, r, th);
    double al = alpha(r);
    double gnum = r * df(r) * al;
    double dgnum = (df(r) + r * ddf(r)) * al + r * df(r) * dalpha(r);
    return (1.0 - eps) * (dgnum / Q - gnum * 2.0 * r / (Q * Q));
  };
  return md;
}

/* The bare radial-power current J[alpha^{-1} f L, w_p, m_p] with no
 * interior composite attached: w_p = 2 r f/(r^2+a^2) and m = (1-eps)
 * (r f'/q^2) L for the 3+1 backgrounds, w_p = 6 f/r and m = 3 r^{-1} f' L
 * for the lifted problem (which also forces a = 0 and the lifted volume). */
inline MultiplierData multiplier_rp_pure(const Spacetime& sp,
                                         std::function<double(double)> f,
                                         std::function<double(double)> df,
                                         std::function<double(double)> ddf,
                                         double eps, bool tilde = false) {
  if (tilde && sp.par.a != 0.0) fail("multiplier_rp_pure: lifted form needs a = 0");
  double a = sp.par.a;
  auto alpha = [sp](double r) { return Delta(sp, r) / (r * r + sp.par.a * sp.par.a); };
  auto dalpha = [sp](double r) {
    double s = r * r + sp.par.a * sp.par.a;
    return (dDelta(sp, r) * s - 2.0 * r * Delta(sp, r)) / (s * s);
  };
  MultiplierData md;
  md.Xt = [f, alpha](double r) { return f(r) == 0.0 ? 0.0 : f(r) / alpha(r); };
  md.dXt = [f, df, alpha, dalpha](double r) {
    if (f(r) == 0.0 && df(r) == 0.0) return 0.0;
    double al = alpha(r);
    return df(r) / al - f(r) * dalpha(r) / (al * al);
  };
  md.Xr = f;
  md.dXr = df;
  if (!tilde) {
    md.w = [f, a](double r) { return 2.0 * r * f(r) / (r * r + a * a); };
    md.dw = [f, df, a](double r) {
      double s = r * r + a * a;
      return 2.0 * (f(r) + r * df(r)) / s - 4.0 * r * r * f(r) / (s * s);
    };
    md.ddw = [f, df, ddf, a](double r) {
      double s = r * r + a * a;
      return 2.0 * (2.0 * df(r) + r * ddf(r)) / s -
             (12.0 * r * f(r) + 8.0 * r * r * df(r)) / (s * s) +
             16.0 * r * r * r * f(r) / (s * s * s);
    };
    Spacetime spc = sp;
    md.mt = [df, eps, spc](double r, double th) {
      return (1.0 - eps) * r * df(r) / q2(spc, r, th);
    };
    md.mr = [df, eps, spc, alpha](double r, double th) {
      return (1.0 - eps) * r * df(r) * alpha(r) / q2(spc, r, th);
    };
    md.dr_mr = [df, ddf, eps, spc, alpha, dalpha](double r, double th) {
      double Q = q2(spc, r, th);
      double al = alpha(r);
      double gnum = r * df(r) * al;
      double dgnum = (df(r) + r * ddf(r)) * al + r * df(r) * dalpha(r);
      return (1.0 - eps) * (dgnum / Q - gnum * 2.0 * r / (Q * Q));
    };
  } else {
    md.w = [f](double r) { return 6.0 * f(r) / r; };
    md.dw = [f, df](double r) { return 6.0 * df(r) / r - 6.0 * f(r) / (r * r); };
    md.ddw = [f, df, ddf](double r) {
      return 6.0 * ddf(r) / r - 12.0 * df(r) / (r * r) + 12.0 * f(r) / (r * r * r);
    };
    md.mt = [df](double r, double) { return 3.0 * df(r) / r; };
    md.mr = [df, alpha](double r, double) { return 3.0 * df(r) * alpha(r) / r; };
    md.dr_mr = [df, ddf, alpha, dalpha](double r, double) {
      return 3.0 * (ddf(r) * alpha(r) + df(r) * dalpha(r)) / r -
             3.0 * df(r) * alpha(r) / (r * r);
    };
  }
  return md;
}

}  // namespace bhlab
