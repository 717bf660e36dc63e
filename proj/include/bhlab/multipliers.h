/* multipliers.h
 *
 * Explicit multiplier recipes for the Morawetz and r^p machinery.
 *
 * A Morawetz recipe is the radial triple (u, v, w) with w = v u' and u
 * vanishing at the trapped radius, together with the horizon fixes: the
 * tempered family (u capped below by -2/eps through a C^2 flattening
 * function F), the redshift pair (Y^r, Y^t) supported on the horizon
 * collar, and the negative weight w_dt that recovers (d_t psi)^2 away
 * from trapping.  The flat-space recipes are closed forms; for the black
 * hole backgrounds u is accumulated by adaptive quadrature of w / v from
 * r_trap, switching to the analytic continuation beyond the junction
 * window where w rides the maximizing profile (2 r v, or 6 r^5 v for the
 * lifted problem).
 *
 * The r^p family packages f = rho^p with rho a smooth cutoff of r above
 * the radius R, plus the composite vectorfield (tempered Morawetz +
 * redshift + d_t + alpha^{-1} f L) whose causal character and decay the
 * tests probe on a grid.
 *
 * Recipes are built single-threaded and immutable afterwards; every
 * profile is a pure function of r, safe to share across threads.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "geodesics.h"
#include "geometry.h"

namespace bhlab {

enum class MorawetzTag { MinkI, MinkII, Schwarzschild, Kerr, SchwarzschildTilde };

inline bool is_black_hole(MorawetzTag t) {
  return t == MorawetzTag::Schwarzschild || t == MorawetzTag::Kerr ||
         t == MorawetzTag::SchwarzschildTilde;
}

inline const char* tag_name(MorawetzTag t) {
  switch (t) {
    case MorawetzTag::MinkI: return "mink_i";
    case MorawetzTag::MinkII: return "mink_ii";
    case MorawetzTag::Schwarzschild: return "schwarzschild";
    case MorawetzTag::Kerr: return "kerr";
    case MorawetzTag::SchwarzschildTilde: return "schwarzschild_tilde";
  }
  return "?";
}

/* ---- C-infinity ramp -------------------------------------------------- */

inline double bump_phi(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return std::exp(-1.0 / s - 1.0 / (1.0 - s));
}

namespace detail {
inline double quad(const std::function<double(double)>& f, double a, double b,
                   double rtol = 1e-12) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, rtol);
}
inline double bump_norm() {
  static const double z = quad([](double s) { return bump_phi(s); }, 0.0, 1.0, 1e-14);
  return z;
}
}  // namespace detail

/* m(s): 0 for s <= 0, 1 for s >= 1, strictly increasing C-infinity ramp. */
inline double smoothstep(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return detail::quad([](double t) { return bump_phi(t); }, 0.0, s, 1e-13) /
         detail::bump_norm();
}
inline double d_smoothstep(double s) { return bump_phi(s) / detail::bump_norm(); }
inline double d2_smoothstep(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  double i1 = 1.0 / s, i2 = 1.0 / (1.0 - s);
  return bump_phi(s) * (i1 * i1 - i2 * i2) / detail::bump_norm();
}

/* ---- flattening function F for the tempering -------------------------- */
/* F(x) = x for x <= 1 and F = 2 for x >= 3, glued by a quintic Hermite
 * ansatz in t = (x-1)/2 that degenerates to the quartic
 * G(t) = 1 + 2t - 2t^3 + t^4.  C^2, monotone, F'' <= 0 on the ramp. */

inline double temper_F(double x) {
  if (x <= 1.0) return x;
  if (x >= 3.0) return 2.0;
  double t = 0.5 * (x - 1.0);
  return 1.0 + 2.0 * t - 2.0 * t * t * t + t * t * t * t;
}
inline double temper_F1(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= 3.0) return 0.0;
  double t = 0.5 * (x - 1.0);
  return 1.0 - 3.0 * t * t + 2.0 * t * t * t;
}
inline double temper_F2(double x) {
  if (x <= 1.0 || x >= 3.0) return 0.0;
  double t = 0.5 * (x - 1.0);
  return 3.0 * t * (t - 1.0);
}
inline double temper_F3(double x) {
  if (x <= 1.0 || x >= 3.0) return 0.0;
  double t = 0.5 * (x - 1.0);
  return 3.0 * t - 1.5;
}

/* ---- recipe ------------------------------------------------------------ */

struct MorawetzRecipe {
  MorawetzTag tag{};
  double M = 1.0, a = 0.0;
  double r_H = 0.0, delta_H = 0.0; /* 0 for the flat tags */
  double r_trap = 0.0, r_star = 0.0;
  double blend_lo = 0.0, blend_hi = 0.0; /* C^1 junction window of w */
  double w0 = 0.0;                       /* plateau value of w below r_star */

  std::function<double(double)> u, du, ddu, v, dv, w, dw, ddw;
  /* u cannot be carried to r = r_H itself (logarithmic divergence);
   * evaluations there return -inf and the flag records the limitation. */
  bool quadrature_flagged = false;

  /* tempered family; equal to the plain profiles for the flat tags */
  bool tempered = false;
  double eps_temper = 0.0;   /* requested L^1 budget */
  double eps_internal = 0.0; /* parameter actually used inside F */
  double temper_l1 = 0.0;    /* reported ||V||_{L^1(r)} */
  std::function<double(double)> ut, dut, wt, dwt, ddwt;

  /* horizon collar: redshift pair and the time-derivative weight */
  double eps_redshift = 0.0, eps_dt = 0.0;
  double Y0 = 0.0, Yt_rH = 0.0;
  std::function<double(double)> Yr, dYr, Yt, dYt;
  std::function<double(double)> w_dt, dw_dt, ddw_dt;
};

/* ---- redshift pair ----------------------------------------------------- */

/* T'(r)/Delta(r) written with the bump factor pulled out: the x/Delta
 * quotient cancels algebraically, so there is no 0/0 at the horizon. */
inline double tprime_over_Delta(const Spacetime& sp, double r) {
  if (!sp.horizon_regular)
    fail("tprime_over_Delta: needs the horizon-regular slicing");
  double x = (r - sp.rH) / sp.dH;
  if (x < 0.0 || x >= 1.0) return 0.0;
  double omx2 = 1.0 - x * x;
  double s = 1.0 - 1.0 / omx2;
  if (s < -680.0) return 0.0;
  return -2.0 * sp.T0 * std::exp(s) /
         (sp.dH * sp.dH * omx2 * omx2 * (sp.d1 + (r - sp.rH)));
}

struct RedshiftPair {
  double Y0 = 0.0;    /* constant value of Y^r on [r_H, r_H + delta_H] */
  double Yt_rH = 0.0; /* Y^t at the horizon (finite, negative) */
  std::function<double(double)> Yr, dYr, Yt, dYt;
};

/* Y^r: negative constant on the inner collar, ramped smoothly to zero on
 * [r_H+delta_H, r_H+2 delta_H].  Y^t solves d_r Y^t = (T'/Delta) Y^r with
 * Y^t(r_H+delta_H) = 0; since T' vanishes beyond the collar, Y^t is
 * supported on [r_H, r_H+delta_H].  The pair is normalized so that
 * |Y^t(r_H)| <= 1/4: composites add Y to d_t, and the cap keeps their
 * time component positive for any amplitude eps_redshift <= 1. */
inline RedshiftPair redshift_vectorfield(const Spacetime& sp) {
  if (!sp.horizon_regular)
    fail("redshift_vectorfield: needs horizon-penetrating foliation");
  double rH = sp.rH, dH = sp.dH;
  double lim = tprime_over_Delta(sp, rH);
  if (!std::isfinite(lim))
    fail("redshift_vectorfield: regular limit of T'/Delta is not finite");

  /* anchor grid for I(r) = -int_r^{rH+dH} T'/Delta (positive, decreasing) */
  auto g = [sp](double r) { return tprime_over_Delta(sp, r); };
  auto tab = std::make_shared<std::vector<std::pair<double, double>>>();
  int n = 64;
  tab->resize(n + 1);
  for (int i = 0; i <= n; ++i) (*tab)[i].first = rH + dH * i / n;
  (*tab)[n].second = 0.0;
  for (int i = n - 1; i >= 0; --i)
    (*tab)[i].second =
        (*tab)[i + 1].second - detail::quad(g, (*tab)[i].first, (*tab)[i + 1].first);

  RedshiftPair out;
  double I0 = (*tab)[0].second; /* I(rH) */
  out.Y0 = -1.0;
  if (I0 > 0.25) out.Y0 = -0.25 / I0;
  double Y0 = out.Y0;
  out.Yt_rH = Y0 * I0;

  out.Yr = [Y0, rH, dH](double r) {
    if (r >= rH + 2.0 * dH) return 0.0; /* exact support edge */
    double s = (r - rH - dH) / dH;
    if (s <= 0.0) return Y0;
    return Y0 * (1.0 - smoothstep(s));
  };
  out.dYr = [Y0, rH, dH](double r) {
    double s = (r - rH - dH) / dH;
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return -Y0 * d_smoothstep(s) / dH;
  };
  out.Yt = [tab, g, Y0, rH, dH](double r) -> double {
    if (r >= rH + dH) return 0.0;
    if (r < rH) r = rH;
    size_t k = std::min<size_t>((size_t)((r - rH) / dH * (tab->size() - 1)),
                                tab->size() - 2);
    double acc = (*tab)[k].second + detail::quad(g, (*tab)[k].first, r);
    return Y0 * acc; /* acc = I(r) */
  };
  /* Y^r equals Y0 on the whole support of T', so the defining relation
   * d_r Y^t = (T'/Delta) Y^r closes with the constant value. */
  out.dYt = [g, Y0](double r) { return g(r) * Y0; };
  return out;
}

/* ---- construction ------------------------------------------------------ */

namespace detail {

/* cumulative table for u on the black-hole backgrounds */
struct UTable {
  std::vector<double> r, val;
  std::function<double(double)> integrand; /* w / v */
  double r_H = 0.0, G = 0.0;               /* log-model slope near the horizon */
};

inline double u_from_table(const std::shared_ptr<UTable>& t, double r) {
  if (r <= t->r_H) return -std::numeric_limits<double>::infinity();
  if (r < t->r.front()) {
    double dr0 = t->r.front() - t->r_H;
    return t->val.front() + t->G * std::log((r - t->r_H) / dr0);
  }
  size_t k = (size_t)(std::upper_bound(t->r.begin(), t->r.end(), r) - t->r.begin());
  if (k == 0) k = 1;
  if (k >= t->r.size()) k = t->r.size() - 1;
  /* integrate from the nearer anchor */
  if (r - t->r[k - 1] <= t->r[k] - r)
    return t->val[k - 1] + quad(t->integrand, t->r[k - 1], r);
  return t->val[k] - quad(t->integrand, r, t->r[k]);
}

}  // namespace detail

inline MorawetzRecipe build_morawetz(MorawetzTag tag) {
  if (is_black_hole(tag)) fail("build_morawetz: black-hole tags need a Spacetime");
  MorawetzRecipe rec;
  rec.tag = tag;
  rec.v = [](double r) { return 1.0 / (r * r); };
  rec.dv = [](double r) { return -2.0 / (r * r * r); };
  if (tag == MorawetzTag::MinkI) {
    rec.u = [](double r) { return r * r * r / (1.0 + r); };
    rec.du = [](double r) {
      double p = 1.0 + r;
      return (2.0 * r * r * r + 3.0 * r * r) / (p * p);
    };
    rec.ddu = [](double r) {
      double p = 1.0 + r;
      return (2.0 * r * r * r + 6.0 * r * r + 6.0 * r) / (p * p * p);
    };
    rec.w = [](double r) {
      double p = 1.0 + r;
      return (2.0 * r + 3.0) / (p * p);
    };
    rec.dw = [](double r) {
      double p = 1.0 + r;
      return -(2.0 * r + 4.0) / (p * p * p);
    };
    rec.ddw = [](double r) {
      double p = 1.0 + r;
      return (4.0 * r + 10.0) / (p * p * p * p);
    };
    rec.w_dt = [](double r) {
      double p = 1.0 + r;
      return -1.0 / (p * p);
    };
    rec.dw_dt = [](double r) {
      double p = 1.0 + r;
      return 2.0 / (p * p * p);
    };
    rec.ddw_dt = [](double r) {
      double p = 1.0 + r;
      return -6.0 / (p * p * p * p);
    };
  } else {
    rec.u = [](double r) {
      double p = 1.0 + r;
      return (r * r * r * r + 2.0 * r * r * r) / (p * p);
    };
    rec.du = [](double r) {
      double p = 1.0 + r;
      return (2.0 * r * r * r * r + 6.0 * r * r * r + 6.0 * r * r) / (p * p * p);
    };
    rec.ddu = [](double r) {
      double p = 1.0 + r;
      return (2.0 * r * r * r * r + 8.0 * r * r * r + 12.0 * r * r + 12.0 * r) /
             (p * p * p * p);
    };
    rec.w = [](double r) {
      double p = 1.0 + r;
      return (2.0 * r * r + 6.0 * r + 6.0) / (p * p * p);
    };
    rec.dw = [](double r) {
      double p = 1.0 + r;
      return -(2.0 * r * r + 8.0 * r + 12.0) / (p * p * p * p);
    };
    rec.ddw = [](double r) {
      double p = 1.0 + r;
      return (4.0 * r * r + 20.0 * r + 40.0) / (p * p * p * p * p);
    };
    rec.w_dt = [](double r) {
      double p = 1.0 + r;
      return -1.0 / (p * p * p * p);
    };
    rec.dw_dt = [](double r) {
      double p = 1.0 + r;
      return 4.0 / (p * p * p * p * p);
    };
    rec.ddw_dt = [](double r) {
      double p = 1.0 + r;
      return -20.0 / (p * p * p * p * p * p);
    };
  }
  /* flat space needs no tempering, redshift, or junction */
  rec.ut = rec.u;
  rec.dut = rec.du;
  rec.wt = rec.w;
  rec.dwt = rec.dw;
  rec.ddwt = rec.ddw;
  rec.Yr = rec.dYr = rec.Yt = rec.dYt = [](double) { return 0.0; };
  return rec;
}

inline MorawetzRecipe build_morawetz(const Spacetime& sp, MorawetzTag tag) {
  if (!is_black_hole(tag)) return build_morawetz(tag);
  bool tilde = tag == MorawetzTag::SchwarzschildTilde;
  double M = sp.par.M, a = tilde ? 0.0 : sp.par.a;
  if (tag == MorawetzTag::Schwarzschild && sp.par.a != 0.0)
    fail("build_morawetz: the Schwarzschild recipe needs a = 0");
  if (tilde && sp.par.a != 0.0)
    fail("build_morawetz: the lifted recipe is built on a = 0");

  MorawetzRecipe rec;
  rec.tag = tag;
  rec.M = M;
  rec.a = a;
  rec.r_H = sp.rH;
  rec.delta_H = sp.dH;

  CriticalRadii cr = critical_radii(sp);
  rec.r_trap = tilde ? 3.0 * M : cr.r_trap;
  rec.r_star = tilde ? 4.0 * M : cr.r_star;

  /* v and its derivatives */
  if (!tilde) {
    rec.v = [sp](double r) {
      double s = r * r + sp.par.a * sp.par.a;
      return Delta(sp, r) / (s * s);
    };
    rec.dv = [sp](double r) {
      double s = r * r + sp.par.a * sp.par.a;
      return (dDelta(sp, r) * s - 4.0 * r * Delta(sp, r)) / (s * s * s);
    };
  } else {
    rec.v = [sp](double r) { return Delta(sp, r) / std::pow(r, 8); };
    rec.dv = [M](double r) { return (-6.0 * r + 14.0 * M) / std::pow(r, 8); };
  }

  /* w: plateau below r_star, maximizing profile beyond, one-sided C^1
   * cubic junction on [r_star, r_star + 0.1 M].  The window sits past the
   * argmax so the cubic stays concave and d_r(Delta_k d_r w) keeps its
   * sign through the junction. */
  double rs = rec.r_star;
  double rb = rs + 0.1 * M;
  rec.blend_lo = rs;
  rec.blend_hi = rb;

  auto W = [sp, tilde](double r) {
    double s = r * r + sp.par.a * sp.par.a;
    if (!tilde) return 2.0 * r * Delta(sp, r) / (s * s);
    return 6.0 * Delta(sp, r) / (r * r * r);
  };
  auto dW = [sp, tilde](double r) {
    double D = Delta(sp, r), dD = dDelta(sp, r);
    if (!tilde) {
      double s = r * r + sp.par.a * sp.par.a;
      double v = D / (s * s);
      double dv = (dD * s - 4.0 * r * D) / (s * s * s);
      return 2.0 * v + 2.0 * r * dv;
    }
    return 6.0 * (dD * r - 3.0 * D) / (r * r * r * r);
  };
  auto ddW = [sp, tilde](double r) {
    double D = Delta(sp, r), dD = dDelta(sp, r);
    double s = r * r + sp.par.a * sp.par.a;
    if (!tilde) {
      double v = D / (s * s);
      double dv = (dD * s - 4.0 * r * D) / (s * s * s);
      double N = dD * s - 4.0 * r * D;
      double Np = 2.0 * s - 2.0 * r * dD - 4.0 * D;
      double ddv = (Np * s - 6.0 * r * N) / (s * s * s * s);
      return 4.0 * dv + 2.0 * r * ddv;
    }
    /* d/dr of 6 (dD r - 3 D) / r^4 with dD = 2r - 2M:
     * numerator' = 2 r dD' ... done directly */
    double num = dD * r - 3.0 * D;
    double dnum = 2.0 * r + dD - 3.0 * dD;
    return 6.0 * (dnum * r - 4.0 * num) / (r * r * r * r * r);
  };

  double w0 = W(rs);
  rec.w0 = w0;
  double h = rb - rs;
  double d = W(rb) - w0;
  double wpb = dW(rb);
  double a2 = (3.0 * d - h * wpb) / (h * h);
  double a3 = (h * wpb - 2.0 * d) / (h * h * h);

  rec.w = [w0, rs, rb, a2, a3, W](double r) {
    if (r <= rs) return w0;
    if (r >= rb) return W(r);
    double x = r - rs;
    return w0 + a2 * x * x + a3 * x * x * x;
  };
  rec.dw = [rs, rb, a2, a3, dW](double r) {
    if (r <= rs) return 0.0;
    if (r >= rb) return dW(r);
    double x = r - rs;
    return 2.0 * a2 * x + 3.0 * a3 * x * x;
  };
  rec.ddw = [rs, rb, a2, a3, ddW](double r) {
    if (r <= rs) return 0.0;
    if (r >= rb) return ddW(r);
    return 2.0 * a2 + 6.0 * a3 * (r - rs);
  };

  /* du = w / v and its derivative, written per tag to dodge overflow */
  auto w_fn = rec.w, dw_fn = rec.dw, v_fn = rec.v, dv_fn = rec.dv;
  rec.du = [sp, tilde, w_fn](double r) {
    double s = r * r + sp.par.a * sp.par.a;
    double D = Delta(sp, r);
    if (!tilde) return w_fn(r) * s * s / D;
    return w_fn(r) * std::pow(r, 8) / D;
  };
  auto du_fn = rec.du;
  rec.ddu = [w_fn, dw_fn, v_fn, dv_fn, du_fn](double r) {
    return (dw_fn(r) - du_fn(r) * dv_fn(r)) / v_fn(r);
  };

  /* u: cumulative quadrature from r_trap, analytic continuation past rb */
  auto tab = std::make_shared<detail::UTable>();
  tab->r_H = sp.rH;
  tab->integrand = rec.du;
  double T0 = sp.T0;
  tab->G = tilde ? w0 * std::pow(sp.rH, 8) / sp.d1 : w0 * T0 * T0 / sp.d1;

  std::vector<double> anch;
  for (double dd : {1e-8, 2.5e-8, 6e-8, 1.5e-7, 4e-7, 1e-6, 2.5e-6, 6e-6,
                    1.5e-5, 4e-5, 1e-4, 2.5e-4, 6e-4, 1.5e-3, 4e-3})
    anch.push_back(sp.rH + dd * M);
  int nu = 360;
  for (int i = 0; i <= nu; ++i) anch.push_back(sp.rH + 0.01 * M + (rb - sp.rH - 0.01 * M) * i / nu);
  anch.push_back(rec.r_trap);
  anch.push_back(rs);
  std::sort(anch.begin(), anch.end());
  anch.erase(std::unique(anch.begin(), anch.end(),
                         [M](double x, double y) { return std::abs(x - y) < 1e-12 * M; }),
             anch.end());
  /* the trapped radius and the junction must be table members exactly */
  for (double pin : {rec.r_trap, rs}) {
    size_t j = 0;
    for (size_t i = 1; i < anch.size(); ++i)
      if (std::abs(anch[i] - pin) < std::abs(anch[j] - pin)) j = i;
    anch[j] = pin;
  }
  size_t it = (size_t)(std::lower_bound(anch.begin(), anch.end(), rec.r_trap - 1e-13 * M) -
                       anch.begin());
  tab->r = anch;
  tab->val.assign(anch.size(), 0.0);
  for (size_t i = it; i + 1 < anch.size(); ++i)
    tab->val[i + 1] = tab->val[i] + detail::quad(tab->integrand, anch[i], anch[i + 1]);
  for (size_t i = it; i > 0; --i)
    tab->val[i - 1] = tab->val[i] - detail::quad(tab->integrand, anch[i - 1], anch[i]);

  double ub = tab->val.back();
  rec.u = [tab, rb, ub, tilde](double r) -> double {
    if (r >= rb) {
      if (!tilde) return ub + (r * r - rb * rb);
      return ub + (std::pow(r, 6) - std::pow(rb, 6));
    }
    return detail::u_from_table(tab, r);
  };
  /* the untempered u diverges logarithmically at the horizon: quadrature
   * cannot carry it to r_H, only the tempered family reaches the boundary */
  rec.quadrature_flagged = true;

  /* redshift pair */
  RedshiftPair rp = redshift_vectorfield(sp);
  rec.Y0 = rp.Y0;
  rec.Yt_rH = rp.Yt_rH;
  rec.Yr = rp.Yr;
  rec.dYr = rp.dYr;
  rec.Yt = rp.Yt;
  rec.dYt = rp.dYt;

  /* time-derivative weight: O(M^2/r^3) tail, double zero at r_trap,
   * switched on across [r_H + delta_H, r_H + 3 delta_H / 2] */
  double rH = sp.rH, dH = sp.dH, rt = rec.r_trap;
  rec.w_dt = [M, rH, dH, rt](double r) {
    double s = (r - rH - dH) / (0.5 * dH);
    if (s <= 0.0) return 0.0;
    double chi = 1.0 - rt / r;
    return -M * M / (r * r * r) * chi * chi * smoothstep(s);
  };
  rec.dw_dt = [M, rH, dH, rt](double r) {
    double s = (r - rH - dH) / (0.5 * dH);
    if (s <= 0.0) return 0.0;
    double chi = 1.0 - rt / r;
    double base = M * M / (r * r * r) * chi * chi;
    double dbase = M * M / (r * r * r * r) * chi * (-3.0 * chi + 2.0 * rt / r);
    return -(dbase * smoothstep(s) + base * d_smoothstep(s) * 2.0 / dH);
  };
  rec.ddw_dt = [M, rH, dH, rt](double r) {
    double s = (r - rH - dH) / (0.5 * dH);
    if (s <= 0.0) return 0.0;
    double chi = 1.0 - rt / r, y = rt / r;
    double r4 = r * r * r * r;
    double base = M * M / (r * r * r) * chi * chi;
    double dbase = M * M / r4 * chi * (-3.0 * chi + 2.0 * y);
    double d2base = M * M / (r4 * r) * (12.0 * chi * chi - 16.0 * y * chi + 2.0 * y * y);
    double k = 2.0 / dH;
    return -(d2base * smoothstep(s) + 2.0 * dbase * d_smoothstep(s) * k +
             base * d2_smoothstep(s) * k * k);
  };
  return rec;
}

/* ---- tempering --------------------------------------------------------- */

namespace detail {

/* Solve u(r) = target on the black-hole backgrounds.  Above the first
 * anchor this is a bracketed root solve; below it the logarithmic model
 * u ~ u(a0) + G log(dr/dr0) is inverted directly (relative error O(dr)). */
inline double r_of_u(const MorawetzRecipe& rec, double target) {
  double a0 = rec.r_H + 1e-8 * rec.M;
  double ua0 = rec.u(a0);
  if (target < ua0) {
    /* slope of u in the log regime */
    double T0 = rec.r_H * rec.r_H + rec.a * rec.a;
    double G = rec.tag == MorawetzTag::SchwarzschildTilde
                   ? rec.w0 * std::pow(rec.r_H, 8)
                   : rec.w0 * T0 * T0;
    G /= 2.0 * std::sqrt(rec.M * rec.M - rec.a * rec.a);
    return rec.r_H + 1e-8 * rec.M * std::exp((target - ua0) / G);
  }
  auto fn = [&rec, target](double r) { return rec.u(r) - target; };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iter = 100;
  auto br = boost::math::tools::toms748_solve(fn, a0, rec.r_star, tol, iter);
  return 0.5 * (br.first + br.second);
}

}  // namespace detail

/* ||V||_{L^1(r)} for the tempering parameter eps, by the exact change of
 * variables y = -eps u.  In the transition zone w = w0 is constant and
 * Delta_k u' is a polynomial in r, so the integrand is closed-form; the
 * zone itself can sit exponentially close to the horizon where no r-grid
 * could resolve it. */
inline double temper_l1_norm(const MorawetzRecipe& rec, double eps) {
  if (!is_black_hole(rec.tag)) return 0.0;
  bool tilde = rec.tag == MorawetzTag::SchwarzschildTilde;
  double w0 = rec.w0, a = rec.a;
  double rH = rec.r_H, d1 = 2.0 * std::sqrt(rec.M * rec.M - a * a);
  auto integrand = [&](double y) {
    double r = detail::r_of_u(rec, -y / eps);
    double dr = r - rH;
    double D = dr * (d1 + dr); /* Delta, exact in terms of the roots */
    if (!tilde) {
      double s = r * r + a * a;
      return 0.5 * std::abs(eps * w0 * w0 * temper_F3(y) * s * s -
                            4.0 * w0 * temper_F2(y) * r * D / s);
    }
    return 0.5 * std::abs(eps * w0 * w0 * temper_F3(y) * std::pow(r, 12) -
                          12.0 * w0 * temper_F2(y) * r * r * r * D);
  };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
             integrand, 1.0, 2.0, 10, 1e-9) +
         boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
             integrand, 2.0, 3.0, 10, 1e-9);
}

/* Cap u below by -2/eps through F.  The internal parameter is solved from
 * the L^1 budget: ||V|| scales linearly in eps, so one model-guided retry
 * settles it or the construction fails. */
inline MorawetzRecipe temper(MorawetzRecipe rec, double eps_budget) {
  if (!(eps_budget > 0.0)) fail("temper: budget must be positive");
  rec.eps_temper = eps_budget;
  if (!is_black_hole(rec.tag)) {
    /* flat u is already bounded on r >= 0 and -eps u <= 0 < 1 everywhere */
    rec.tempered = true;
    rec.eps_internal = eps_budget;
    rec.temper_l1 = 0.0;
    return rec;
  }
  double e = eps_budget;
  double l1 = temper_l1_norm(rec, e);
  if (!(l1 < eps_budget)) {
    e = eps_budget * eps_budget / (2.0 * l1);
    l1 = temper_l1_norm(rec, e);
    if (!(l1 < eps_budget)) fail("temper: L1 bound still violated after shrinking");
  }
  /* the transition must sit inside the w-plateau */
  if (!(detail::r_of_u(rec, -1.0 / e) < rec.r_star))
    fail("temper: transition zone leaks past r_star");

  rec.eps_internal = e;
  rec.temper_l1 = l1;
  rec.tempered = true;

  auto u = rec.u, du = rec.du, ddu = rec.ddu, w = rec.w, dw = rec.dw, ddw = rec.ddw;
  double rH = rec.r_H;
  rec.ut = [u, e, rH](double r) -> double {
    if (r <= rH) return -2.0 / e;
    double y = -e * u(r);
    if (y >= 3.0) return -2.0 / e;
    if (y <= 1.0) return u(r);
    return -temper_F(y) / e;
  };
  rec.dut = [u, du, e, rH](double r) -> double {
    if (r <= rH) return 0.0;
    double y = -e * u(r);
    if (y >= 3.0) return 0.0;
    if (y <= 1.0) return du(r);
    return temper_F1(y) * du(r);
  };
  rec.wt = [u, w, e, rH](double r) -> double {
    if (r <= rH) return 0.0;
    double y = -e * u(r);
    if (y >= 3.0) return 0.0;
    if (y <= 1.0) return w(r);
    return w(r) * temper_F1(y);
  };
  rec.dwt = [u, du, w, dw, e, rH](double r) -> double {
    if (r <= rH) return 0.0;
    double y = -e * u(r);
    if (y >= 3.0) return 0.0;
    if (y <= 1.0) return dw(r);
    return dw(r) * temper_F1(y) - e * temper_F2(y) * du(r) * w(r);
  };
  rec.ddwt = [u, du, ddu, w, dw, ddw, e, rH](double r) -> double {
    if (r <= rH) return 0.0;
    double y = -e * u(r);
    if (y >= 3.0) return 0.0;
    if (y <= 1.0) return ddw(r);
    return ddw(r) * temper_F1(y) - 2.0 * e * temper_F2(y) * du(r) * dw(r) -
           e * temper_F2(y) * ddu(r) * w(r) +
           e * e * temper_F3(y) * du(r) * du(r) * w(r);
  };
  return rec;
}

/* Density of the tempering error V = (Delta_k-divergence of w-tilde)/2,
 * supported in the transition zone below r_star.  Integrated in r this is
 * the quantity temper_l1_norm reports. */
inline double temper_V_density(const MorawetzRecipe& rec, double r) {
  if (!rec.tempered || !is_black_hole(rec.tag)) return 0.0;
  if (r >= rec.blend_lo || r <= rec.r_H) return 0.0;
  double e = rec.eps_internal;
  double y = -e * rec.u(r);
  if (y <= 1.0 || y >= 3.0) return 0.0;
  double wp = rec.dwt(r), wpp = rec.ddwt(r);
  double dr = r - rec.r_H, d1 = 2.0 * std::sqrt(rec.M * rec.M - rec.a * rec.a);
  double D = dr * (d1 + dr), dD = d1 + 2.0 * dr;
  if (rec.tag == MorawetzTag::SchwarzschildTilde) {
    double r4 = r * r * r * r;
    return 0.5 * ((4.0 * r * r * r * D + r4 * dD) * wp + r4 * D * wpp);
  }
  return 0.5 * (dD * wp + D * wpp);
}

/* ---- grid condition checks --------------------------------------------- */

struct RecipeGridReport {
  double min_u_sign = 0.0;  /* min of u (1 - r_trap/r): >= 0 wanted */
  double min_Krr = 0.0;     /* min of the radial deformation profile */
  double max_cond3 = 0.0;   /* max of d_r(Delta_k d_r w): <= 0 wanted */
  double max_w_err = 0.0;   /* |w - v u'| with u' from finite differences */
  bool ok(double tol) const {
    return min_u_sign >= -tol && min_Krr >= -tol && max_cond3 <= tol && max_w_err <= tol;
  }
};

/* K^{rr} profile of the untempered current, in the per-tag normalization:
 * (1/2) r^3 d_r(u/r^2) flat and Schwarzschild, the (r^2+a^2) version for
 * Kerr, (1/6) r^7 d_r(u/r^6) lifted. */
inline double Krr_profile(const MorawetzRecipe& rec, double r) {
  double u = rec.u(r), du = rec.du(r);
  switch (rec.tag) {
    case MorawetzTag::MinkI:
    case MorawetzTag::MinkII:
    case MorawetzTag::Schwarzschild:
      return 0.5 * (r * du - 2.0 * u);
    case MorawetzTag::Kerr: {
      double s = r * r + rec.a * rec.a;
      return (s * du - 2.0 * r * u) / (2.0 * r);
    }
    case MorawetzTag::SchwarzschildTilde:
      return (r * du - 6.0 * u) / 6.0;
  }
  return 0.0;
}

/* Normalized junction value of the radial deformation profile,
 * s K^{rr}(r_star) v(r_star) / (r_star w0) with s = 2 (or 6 lifted):
 * equals 1 - s u v / (r w0) at the junction.  The profile decreases to
 * this minimum at r_star and stays constant beyond, so positivity of the
 * whole profile reduces to this one number. */
inline double junction_constant(const MorawetzRecipe& rec) {
  if (!is_black_hole(rec.tag)) fail("junction_constant: black-hole tags only");
  double s = rec.tag == MorawetzTag::SchwarzschildTilde ? 6.0 : 2.0;
  double r = rec.r_star;
  return 1.0 - s * rec.u(r) * rec.v(r) / (r * rec.w0);
}

/* Closed-form lower bound for the lifted junction value: replacing the
 * decreasing weight r^4 v by its junction value gives
 * 1 - 6 r_star^{-5} int_{r_trap}^{r_star} r^4 dr, evaluated here by the
 * same quadrature the recipes use. */
inline double junction_lower_bound_tilde(const MorawetzRecipe& rec) {
  if (rec.tag != MorawetzTag::SchwarzschildTilde)
    fail("junction_lower_bound_tilde: lifted recipe only");
  double I = detail::quad([](double r) { return r * r * r * r; }, rec.r_trap,
                          rec.r_star, 1e-14);
  return 1.0 - 6.0 * I / std::pow(rec.r_star, 5);
}

/* d_r(Delta_k d_r w) with Delta_k = r^2 (flat), Delta, or r^4 Delta. */
inline double cond3_density(const MorawetzRecipe& rec, double r) {
  double dw = rec.dw(r), ddw = rec.ddw(r);
  if (!is_black_hole(rec.tag)) return 2.0 * r * dw + r * r * ddw;
  double dr = r - rec.r_H, d1 = 2.0 * std::sqrt(rec.M * rec.M - rec.a * rec.a);
  double D = dr * (d1 + dr), dD = d1 + 2.0 * dr;
  if (rec.tag == MorawetzTag::SchwarzschildTilde) {
    double r3 = r * r * r, r4 = r3 * r;
    return (4.0 * r3 * D + r4 * dD) * dw + r4 * D * ddw;
  }
  return dD * dw + D * ddw;
}

inline RecipeGridReport check_recipe_conditions(const MorawetzRecipe& rec, int n = 2000) {
  RecipeGridReport rep;
  bool bh = is_black_hole(rec.tag);
  double lo = bh ? rec.r_H + 1e-3 * rec.M : 1e-3;
  double hi = bh ? 100.0 * rec.M : 100.0;
  double mid = bh ? rec.r_star + rec.M : 10.0;
  rep.min_u_sign = rep.min_Krr = std::numeric_limits<double>::infinity();
  rep.max_cond3 = -std::numeric_limits<double>::infinity();
  rep.max_w_err = 0.0;
  auto visit = [&](double r) {
    double sgn = rec.u(r) * (bh ? 1.0 - rec.r_trap / r : 1.0);
    rep.min_u_sign = std::min(rep.min_u_sign, sgn);
    rep.min_Krr = std::min(rep.min_Krr, Krr_profile(rec, r));
    rep.max_cond3 = std::max(rep.max_cond3, cond3_density(rec, r));
  };
  int n1 = (2 * n) / 3;
  for (int i = 0; i <= n1; ++i) visit(lo + (mid - lo) * i / n1);
  for (int i = 1; i <= n - n1; ++i)
    visit(mid * std::pow(hi / mid, double(i) / (n - n1)));

  /* independent check of the constraint w = v u': differentiate the
   * accumulated u numerically away from the junction kinks */
  double flo = bh ? rec.r_H + 0.05 * rec.M : 0.1;
  for (int i = 0; i <= 160; ++i) {
    double r = flo + (0.96 * hi - flo) * i / 160.0;
    double hstep = 1e-4 * std::max(1.0, r);
    if (std::abs(r - rec.blend_lo) < 6.0 * hstep || std::abs(r - rec.blend_hi) < 6.0 * hstep)
      continue;
    double d8 = (8.0 * (rec.u(r + hstep) - rec.u(r - hstep)) -
                 (rec.u(r + 2.0 * hstep) - rec.u(r - 2.0 * hstep))) /
                (12.0 * hstep);
    double scale = std::max(1.0, std::abs(rec.du(r)));
    rep.max_w_err = std::max(rep.max_w_err, std::abs(d8 - rec.du(r)) / scale);
  }
  return rep;
}

/* Flat-space divergence coefficients of J[u v d_r, w]: the quadratic form
 * div J = c_rr (d_r psi)^2 + c_ang |angular gradient|^2 + c_psi psi^2. */
struct MinkCoefficients {
  double rr = 0.0, ang = 0.0, psi = 0.0;
};

inline MinkCoefficients mink_divj_coefficients(const MorawetzRecipe& rec, double r) {
  if (is_black_hole(rec.tag)) fail("mink_divj_coefficients: flat tags only");
  MinkCoefficients c;
  double u = rec.u(r), du = rec.du(r);
  c.rr = 2.0 * (du / (r * r) - 2.0 * u / (r * r * r));
  c.ang = -u * rec.dv(r);
  c.psi = -0.5 * (2.0 * rec.dw(r) / r + rec.ddw(r));
  return c;
}

/* ---- Hardy transfer ----------------------------------------------------- */

struct HardyTransfer {
  double r_H = 0.0, r_star = 0.0, R_star = 0.0;
  double norm_V1 = 0.0, norm_V2 = 0.0;
  double sup_bound = 0.0; /* 2 (R_star - r_H) ||V1||_{L^1} */
  double max_A12 = 0.0;
  std::function<double(double)> A12;
  std::function<double(double)> R_map; /* transfer map on [r_H, r_star] */
};

/* Move the L^1 mass of V1 (living on [r_H, r_star]) onto the support of
 * V2 (living on [r_star, R_star]) through the measure-matching map R(r)
 * with 2 int_{r_H}^r V1 = int_{r_star}^{R(r)} V2, and accumulate the
 * first-order weight A12 that pays for the transfer. */
inline HardyTransfer hardy_transfer(std::function<double(double)> V1,
                                    std::function<double(double)> V2, double r_H,
                                    double r_star, double R_star) {
  if (!(r_H < r_star && r_star < R_star)) fail("hardy_transfer: need r_H < r_star < R_star");
  for (int i = 0; i <= 2000; ++i) {
    double r1 = r_H + (r_star - r_H) * i / 2000.0;
    double r2 = r_star + (R_star - r_star) * i / 2000.0;
    if (V1(r1) < -1e-13 || V2(r2) < -1e-13)
      fail("hardy_transfer: potentials must be nonnegative");
  }

  int n = 1600;
  auto C1 = std::make_shared<std::vector<double>>(n + 1, 0.0);
  auto C2 = std::make_shared<std::vector<double>>(n + 1, 0.0);
  auto twoV1 = [V1](double r) { return 2.0 * V1(r); };
  for (int i = 0; i < n; ++i) {
    double a = r_H + (r_star - r_H) * i / n, b = r_H + (r_star - r_H) * (i + 1) / n;
    (*C1)[i + 1] = (*C1)[i] + detail::quad(twoV1, a, b);
    double a2 = r_star + (R_star - r_star) * i / n, b2 = r_star + (R_star - r_star) * (i + 1) / n;
    (*C2)[i + 1] = (*C2)[i] + detail::quad(V2, a2, b2);
  }
  double tot1 = C1->back(), tot2 = C2->back();
  if (std::abs(tot2 - tot1) > 1e-10 * std::max(1.0, tot2))
    fail("hardy_transfer: ||V2|| must equal 2 ||V1||");

  auto c1_at = [C1, twoV1, r_H, r_star, n](double r) {
    if (r <= r_H) return 0.0;
    if (r >= r_star) return C1->back();
    double x = (r - r_H) / (r_star - r_H) * n;
    int k = std::min((int)x, n - 1);
    return (*C1)[k] + detail::quad(twoV1, r_H + (r_star - r_H) * k / n, r);
  };
  auto c2_at = [C2, V2, r_star, R_star, n](double R) {
    if (R <= r_star) return 0.0;
    if (R >= R_star) return C2->back();
    double x = (R - r_star) / (R_star - r_star) * n;
    int k = std::min((int)x, n - 1);
    return (*C2)[k] + detail::quad(V2, r_star + (R_star - r_star) * k / n, R);
  };
  auto solve_monotone = [](const std::function<double(double)>& F, double lo, double hi,
                           double target) {
    if (target <= F(lo)) return lo;
    if (target >= F(hi)) return hi;
    boost::math::tools::eps_tolerance<double> tol(48);
    std::uintmax_t iter = 90;
    auto fn = [&](double x) { return F(x) - target; };
    auto br = boost::math::tools::toms748_solve(fn, lo, hi, tol, iter);
    return 0.5 * (br.first + br.second);
  };

  HardyTransfer out;
  out.r_H = r_H;
  out.r_star = r_star;
  out.R_star = R_star;
  out.norm_V1 = 0.5 * tot1;
  out.norm_V2 = tot2;
  out.sup_bound = 2.0 * (R_star - r_H) * out.norm_V1;

  auto rmap = [c2_at, solve_monotone, c1_at, r_star, R_star](double r) {
    return solve_monotone(c2_at, r_star, R_star, c1_at(r));
  };
  out.R_map = rmap;

  /* branch 1: A12 on [r_H, r_star], cumulative Simpson over 4801 nodes */
  int m = 4800;
  auto g1 = std::make_shared<std::vector<double>>(m + 1, 0.0);
  std::vector<double> hvals(m + 1);
  for (int i = 0; i <= m; ++i) {
    double r = r_H + (r_star - r_H) * i / m;
    hvals[i] = 2.0 * V1(r) * (rmap(r) - r);
  }
  double step = (r_star - r_H) / m;
  for (int i = 0; i + 2 <= m; i += 2) {
    double add1 = step / 12.0 * (5.0 * hvals[i] + 8.0 * hvals[i + 1] - hvals[i + 2]);
    double add2 = step / 12.0 * (-hvals[i] + 8.0 * hvals[i + 1] + 5.0 * hvals[i + 2]);
    (*g1)[i + 1] = (*g1)[i] + add1;
    (*g1)[i + 2] = (*g1)[i + 1] + add2;
  }
  double a12_star = g1->back();

  /* branch 2: on [r_star, R_star] via the inverse map, tabulated once */
  int m2 = 2400;
  auto g2 = std::make_shared<std::vector<double>>(m2 + 1, 0.0);
  auto interp1 = [g1, r_H, r_star, m](double r) {
    if (r <= r_H) return 0.0;
    if (r >= r_star) return g1->back();
    double x = (r - r_H) / (r_star - r_H) * m;
    int k = std::min((int)x, m - 1);
    double f = x - k;
    return (*g1)[k] * (1.0 - f) + (*g1)[k + 1] * f;
  };
  for (int i = 0; i <= m2; ++i) {
    double R = r_star + (R_star - r_star) * i / m2;
    double rinv = solve_monotone(c1_at, r_H, r_star, c2_at(R));
    (*g2)[i] = a12_star - interp1(rinv);
  }

  out.A12 = [g1, g2, interp1, r_H, r_star, R_star, m2](double r) -> double {
    if (r <= r_H || r >= R_star) return 0.0;
    if (r <= r_star) return interp1(r);
    double x = (r - r_star) / (R_star - r_star) * m2;
    int k = std::min((int)x, m2 - 1);
    double f = x - k;
    return (*g2)[k] * (1.0 - f) + (*g2)[k + 1] * f;
  };
  double mx = 0.0;
  for (double vv : *g1) mx = std::max(mx, vv);
  for (double vv : *g2) mx = std::max(mx, vv);
  out.max_A12 = mx;
  return out;
}

/* ---- r^p family --------------------------------------------------------- */

struct RpRecipe {
  double p = 0.0, R = 0.0;
  double delta_minus = 0.1, delta_plus = 0.1;
  double eps_rp = 0.0;
  double r_H = 0.0, r_trap = 0.0;
  double c_bulk = 0.0; /* measured constant in 2rf/(r^2+a^2) - f' >= c r^{p-1} */
  std::function<double(double)> rho, f, df, ddf;
  /* composite multiplier: X = X_tempered + eps_redshift Y + d_t + alpha^{-1} f L,
   * weight wcomp = w_tempered + eps_dt w_dt + 2rf/(r^2+a^2), and lower-order
   * one-form (1-eps) (r f'/q^2) L.  m_coeff stores the on-axis-free radial
   * factor (1-eps) f'/r; the full coefficient is m_coeff * r^2/q^2. */
  std::function<double(double)> Xt, Xr, wcomp, m_coeff;
};

namespace detail {

/* f = rho^p with rho = r m((r-R)/R).  Near the inner edge the ramp is
 * exponentially flat and rho^{p-2} overflows while rho'^2 underflows, so
 * the small-s branch combines everything in log space. */
struct RpProfile {
  double p, R;
  double val(double r, int deriv) const {
    double s = (r - R) / R;
    if (s <= 0.002) return 0.0; /* f < r^p e^{-50}: below double noise */
    if (s >= 1.0) {
      if (deriv == 0) return std::pow(r, p);
      if (deriv == 1) return p * std::pow(r, p - 1.0);
      return p * (p - 1.0) * std::pow(r, p - 2.0);
    }
    double Z = bump_norm();
    double Phi = quad([](double t) { return bump_phi(t); }, 0.0, s, 1e-13);
    double lnphi = -1.0 / s - 1.0 / (1.0 - s);
    double lnm = std::log(Phi) - std::log(Z);
    double lnrho = std::log(r) + lnm;
    /* q = r m'(s) / (R m(s)) = r phi / (R Phi) */
    double q = r / R * std::exp(lnphi - std::log(Phi));
    double lnrhop = lnm + std::log1p(q); /* rho' = m (1 + q) */
    if (deriv == 0) return std::exp(p * lnrho);
    if (deriv == 1) return p * std::exp((p - 1.0) * lnrho + lnrhop);
    /* rho'' = 2 m'/R + r m''/R^2, with m'' = phi (1/s^2 - 1/(1-s)^2)/Z */
    double i1 = 1.0 / s, i2 = 1.0 / (1.0 - s);
    double rpp = std::exp(lnphi) / Z * (2.0 / R + r * (i1 * i1 - i2 * i2) / (R * R));
    double t1 = p * (p - 1.0) * std::exp((p - 2.0) * lnrho + 2.0 * lnrhop);
    double t2 = (rpp >= 0.0 ? 1.0 : -1.0) * p *
                std::exp((p - 1.0) * lnrho + std::log(std::abs(rpp)));
    return t1 + t2;
  }
};

}  // namespace detail

inline RpRecipe rp_multiplier(const Spacetime& sp, const MorawetzRecipe& base, double p,
                              double R, double delta_minus = 0.1, double delta_plus = 0.1) {
  if (!(p >= delta_minus && p <= 2.0 - delta_plus))
    fail("rp_multiplier: p outside [delta_minus, 2 - delta_plus]");
  if (is_black_hole(base.tag)) {
    if (!base.tempered) fail("rp_multiplier: base recipe must be tempered");
    if (!(R > base.r_star)) fail("rp_multiplier: R must sit beyond r_star");
    double alphaR = Delta(sp, R) / (R * R + sp.par.a * sp.par.a);
    if (!(alphaR > 0.75)) fail("rp_multiplier: R too small, alpha(R) <= 3/4");
    if (sp.par.a != 0.0 &&
        !(sp.par.a * sp.par.a * p / (4.0 * R * R) <= 0.5 * delta_plus))
      fail("rp_multiplier: spin correction a^2 p / 4R^2 exceeds delta_plus/2");
  }

  RpRecipe out;
  out.p = p;
  out.R = R;
  out.delta_minus = delta_minus;
  out.delta_plus = delta_plus;
  out.eps_rp = 0.5 * delta_plus;
  out.r_H = base.r_H;
  out.r_trap = base.r_trap;

  detail::RpProfile prof{p, R};
  out.rho = [R](double r) { return r * smoothstep((r - R) / R); };
  out.f = [prof](double r) { return prof.val(r, 0); };
  out.df = [prof](double r) { return prof.val(r, 1); };
  out.ddf = [prof](double r) { return prof.val(r, 2); };

  double a = sp.par.a;
  double eps_r = base.eps_redshift, eps_dt = base.eps_dt, eps = out.eps_rp;
  auto ut = base.ut, v = base.v, Yr = base.Yr, Yt = base.Yt, wt = base.wt,
       wdt = base.w_dt;
  auto f = out.f;
  double rH = base.r_H;
  auto alpha = [sp](double r) {
    return Delta(sp, r) / (r * r + sp.par.a * sp.par.a);
  };
  out.Xr = [ut, v, Yr, f, eps_r, rH](double r) {
    double base_part = r <= rH ? 0.0 : ut(r) * v(r);
    return base_part + eps_r * Yr(r) + f(r);
  };
  out.Xt = [Yt, f, alpha, eps_r, R](double r) {
    double fa = r <= R ? 0.0 : f(r) / alpha(r);
    return 1.0 + eps_r * Yt(r) + fa;
  };
  out.wcomp = [wt, wdt, f, eps_dt, a](double r) {
    return wt(r) + eps_dt * wdt(r) + 2.0 * r * f(r) / (r * r + a * a);
  };
  auto df = out.df;
  out.m_coeff = [df, eps](double r) { return (1.0 - eps) * df(r) / r; };

  /* measured bulk constant on r > 2R */
  double cmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 200; ++i) {
    double r = 2.0 * R * std::pow(50.0, i / 200.0) * (1.0 + 1e-9);
    double g = (2.0 * r * out.f(r) / (r * r + a * a) - out.df(r)) / std::pow(r, p - 1.0);
    cmin = std::min(cmin, g);
  }
  out.c_bulk = cmin;
  if (!(cmin > 0.0)) fail("rp_multiplier: bulk coefficient lost positivity beyond 2R");
  return out;
}

/* g(X, X) of the composite in the quotient metric. */
inline double rp_norm2(const Spacetime& sp, const RpRecipe& rp, double r, double theta) {
  DownMetric d = down_metric(sp, r, theta);
  double xt = rp.Xt(r), xr = rp.Xr(r);
  return d.tt * xt * xt + 2.0 * d.tr * xt * xr + d.rr * xr * xr;
}

}  // namespace bhlab
