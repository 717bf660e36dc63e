/* test_geometry.cc
 *
 * Oracles for the background: horizon roots against the quadratic formula,
 * Schwarzschild closed forms, the 0/0-guarded g^{tt} against its one-sided
 * limits, analytic derivatives against centered finite differences, and the
 * axial Killing norm A against the closed form of g_{phi phi}.
 */
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bhlab/geometry.h"

using namespace bhlab;

namespace {

/* 4th order centered difference */
template <class F>
double fd4(F f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

} // namespace

TEST_CASE("horizon radius matches the quadratic root") {
  for (double a : {0.0, 0.05, 0.3, 0.5, 0.9}) {
    auto sp = make_spacetime(1.0, a);
    CHECK(std::abs(Delta(sp, sp.rH)) < 1e-13);
    CHECK(sp.d1 == Catch::Approx(2.0 * std::sqrt(1.0 - a * a)).epsilon(1e-14));
  }
  auto sp = make_spacetime(1.0, 0.3);
  CHECK(sp.rH == Catch::Approx(1.0 + std::sqrt(0.91)).epsilon(1e-15));
  CHECK_THROWS(make_spacetime(1.0, 1.0));
  CHECK_THROWS(make_spacetime(-1.0, 0.0));
}

TEST_CASE("Schwarzschild closed forms in the Boyer-Lindquist region") {
  auto sp = make_spacetime(1.0, 0.0);
  for (double r : {2.5, 3.0, 4.0, 10.0, 50.0}) {
    double th = 0.7;
    Metric m = inverse_metric(sp, r, th);
    double al = 1.0 - 2.0 / r;
    CHECK(m.gtt == Catch::Approx(-1.0 / al).epsilon(1e-13));
    CHECK(m.grr == Catch::Approx(al).epsilon(1e-13));
    CHECK(m.gthth == Catch::Approx(1.0 / (r * r)).epsilon(1e-13));
    CHECK(m.gtr == 0.0);
    CHECK(m.qtt == 0.0);
  }
}

TEST_CASE("slicing agrees with Boyer-Lindquist outside the collar") {
  for (double a : {0.0, 0.3, 0.9}) {
    auto reg = make_spacetime(1.0, a, true);
    auto bl = make_spacetime(1.0, a, false);
    for (double r : {reg.rH + 2.0 * reg.dH + 1e-12, 3.0, 7.0, 40.0}) {
      Metric m1 = inverse_metric(reg, r, 1.1);
      Metric m2 = inverse_metric(bl, r, 1.1);
      CHECK(m1.gtt == Catch::Approx(m2.gtt).epsilon(1e-12));
      CHECK(m1.gtr == 0.0);
      CHECK(m1.grr == Catch::Approx(m2.grr).epsilon(1e-14));
    }
  }
}

TEST_CASE("guarded g^{tt} quotient: horizon limit and seam continuity") {
  for (double a : {0.0, 0.3, 0.7}) {
    auto sp = make_spacetime(1.0, a);
    /* limit value at r_H from the series */
    CHECK(p_ratio(sp, sp.rH) == Catch::Approx(sp.n1 / sp.d1).epsilon(1e-14));
    /* continuity across the guard seam at |r - rH| = 1e-4 M */
    double seam = sp.rH + kHorizonGuard;
    double below = p_ratio(sp, seam * (1.0 - 1e-9));
    double above = p_ratio(sp, seam * (1.0 + 1e-9));
    CHECK(std::abs(below - above) < 1e-6 * std::abs(above));
    double dbelow = dp_ratio(sp, seam * (1.0 - 1e-9));
    double dabove = dp_ratio(sp, seam * (1.0 + 1e-9));
    CHECK(std::abs(dbelow - dabove) < 1e-5 * std::abs(dabove));
  }
}

TEST_CASE("full g^{tt} is negative from the horizon out") {
  for (double a : {0.0, 0.3, 0.9}) {
    auto sp = make_spacetime(1.0, a);
    for (int i = 0; i <= 2000; ++i) {
      double r = sp.rH + 100.0 * i / 2000.0;
      for (double th : {0.01, 0.8, 1.5707963, 2.6}) {
        Metric m = inverse_metric(sp, r, th);
        REQUIRE(m.full_gtt() < 0.0);
      }
    }
  }
}

TEST_CASE("metric jet matches finite differences") {
  auto sp = make_spacetime(1.0, 0.6);
  for (double r : {sp.rH + 0.03, sp.rH + 0.17, 3.1, 9.0}) {
    for (double th : {0.4, 1.2, 2.8}) {
      MetricJet j = metric_jet(sp, r, th);
      double h = 1e-5;
      auto cmp = [&](double got, double want, double scale) {
        CHECK(std::abs(got - want) < 2e-6 * scale);
      };
      auto comp = [&](auto pick) {
        double dr = fd4([&](double x) { return pick(inverse_metric(sp, x, th)); }, r, h);
        double dth = fd4([&](double x) { return pick(inverse_metric(sp, r, x)); }, th, h);
        return std::pair<double, double>(dr, dth);
      };
      {
        auto [dr, dth] = comp([](const Metric& m) { return m.gtt; });
        double sc = std::abs(j.m.gtt) + 1.0;
        cmp(j.dr_gtt, dr, sc * 10.0);
        cmp(j.dth_gtt, dth, sc);
      }
      {
        auto [dr, dth] = comp([](const Metric& m) { return m.gtr; });
        double sc = std::abs(j.m.gtr) + 1.0;
        cmp(j.dr_gtr, dr, sc * 10.0);
        cmp(j.dth_gtr, dth, sc);
      }
      {
        auto [dr, dth] = comp([](const Metric& m) { return m.grr; });
        cmp(j.dr_grr, dr, 10.0);
        cmp(j.dth_grr, dth, 1.0);
      }
      {
        auto [dr, dth] = comp([](const Metric& m) { return m.gthth; });
        cmp(j.dr_gthth, dr, 1.0);
        cmp(j.dth_gthth, dth, 1.0);
      }
      {
        auto [dr, dth] = comp([](const Metric& m) { return m.qtt; });
        cmp(j.dr_qtt, dr, 1.0);
        cmp(j.dth_qtt, dth, 1.0);
      }
    }
  }
}

TEST_CASE("background scalar ratios are logarithmic derivatives") {
  auto sp = make_spacetime(1.0, 0.55);
  for (double r : {sp.rH + 0.05, 2.7, 6.3, 21.0}) {
    for (double th : {0.3, 1.0, 1.9, 2.9}) {
      Background b = background_scalars(sp, r, th);
      double h = 1e-5;
      auto A1f = [&](double rr, double tt) { return background_scalars(sp, rr, tt).A1; };
      auto A2f = [&](double rr, double tt) { return background_scalars(sp, rr, tt).A2; };
      auto Bf = [&](double rr, double tt) { return background_scalars(sp, rr, tt).B; };
      auto Af = [&](double rr, double tt) { return background_scalars(sp, rr, tt).A; };

      CHECK(b.dA1_A1_r ==
            Catch::Approx(fd4([&](double x) { return A1f(x, th); }, r, h) / b.A1).margin(1e-7));
      CHECK(b.dA1_A1_th ==
            Catch::Approx(fd4([&](double x) { return A1f(r, x); }, th, h) / b.A1).margin(1e-7));
      CHECK(b.dA2_A2_r ==
            Catch::Approx(fd4([&](double x) { return A2f(x, th); }, r, h) / b.A2).margin(1e-7));
      CHECK(b.dA2_A2_th ==
            Catch::Approx(fd4([&](double x) { return A2f(r, x); }, th, h) / b.A2).margin(1e-7));
      CHECK(b.dB_A_r ==
            Catch::Approx(fd4([&](double x) { return Bf(x, th); }, r, h) / b.A).margin(1e-7));
      CHECK(b.dB_A_th ==
            Catch::Approx(fd4([&](double x) { return Bf(r, x); }, th, h) / b.A).margin(1e-7));
      CHECK(b.dA_A_r() ==
            Catch::Approx(fd4([&](double x) { return Af(x, th); }, r, h) / b.A).margin(1e-7));
      CHECK(b.dA_A_th() ==
            Catch::Approx(fd4([&](double x) { return Af(r, x); }, th, h) / b.A).margin(1e-7));
    }
  }
}

TEST_CASE("A equals the closed form of the axial Killing norm") {
  auto sp = make_spacetime(1.0, 0.8);
  for (double r : {sp.rH + 0.01, 2.2, 5.0, 17.0}) {
    for (double th : {0.2, 0.9, 1.5707963, 2.4}) {
      Background b = background_scalars(sp, r, th);
      double s = std::sin(th);
      double rr = r * r + 0.64;
      double gphph = s * s * (rr * rr - Delta(sp, r) * 0.64 * s * s) / q2(sp, r, th);
      CHECK(b.A == Catch::Approx(gphph).epsilon(1e-13));
    }
  }
}

TEST_CASE("a = 0 background reduces to the spherical forms") {
  auto sp = make_spacetime(1.0, 0.0);
  for (double r : {2.4, 3.0, 8.0}) {
    double th = 0.85;
    Background b = background_scalars(sp, r, th);
    double s = std::sin(th);
    CHECK(b.A == Catch::Approx(r * r * s * s).epsilon(1e-14));
    CHECK(b.A2 == 1.0);
    CHECK(b.B == 0.0);
    CHECK(b.dB_A_r == 0.0);
    CHECK(b.dB_A_th == 0.0);
    CHECK(b.dA2_A2_r == 0.0);
    CHECK(b.v == Catch::Approx((1.0 - 2.0 / r) / (r * r)).epsilon(1e-14));
    CHECK(b.alpha == Catch::Approx(1.0 - 2.0 / r).epsilon(1e-14));
  }
  /* photon-sphere zero of v' */
  CHECK(std::abs(d_radial_potential(sp, 3.0)) < 1e-15);
}

TEST_CASE("radial potential derivative matches finite differences") {
  for (double a : {0.0, 0.4, 0.85}) {
    auto sp = make_spacetime(1.0, a);
    for (double r : {sp.rH + 0.1, 3.3, 12.0}) {
      double want = fd4([&](double x) { return radial_potential(sp, x); }, r, 1e-5);
      CHECK(d_radial_potential(sp, r) == Catch::Approx(want).margin(1e-9));
    }
  }
}

TEST_CASE("volume weights and their log derivatives") {
  auto sp = make_spacetime(1.0, 0.45);
  for (double r : {sp.rH + 0.02, 4.4}) {
    for (double th : {0.35, 1.3, 2.6}) {
      CHECK(volume_weight(sp, r, th) > 0.0);
      CHECK(volume_weight(sp, r, th, true) > 0.0);
      for (bool tilde : {false, true}) {
        double lr, lth;
        volume_log_deriv(sp, r, th, tilde, &lr, &lth);
        double h = 1e-5;
        double mu = volume_weight(sp, r, th, tilde);
        double want_r =
            fd4([&](double x) { return volume_weight(sp, x, th, tilde); }, r, h) / mu;
        double want_th =
            fd4([&](double x) { return volume_weight(sp, r, x, tilde); }, th, h) / mu;
        CHECK(lr == Catch::Approx(want_r).margin(1e-7));
        CHECK(lth == Catch::Approx(want_th).margin(1e-7));
      }
    }
  }
}

TEST_CASE("foliation profile: endpoint data and smooth cutoff") {
  auto sp = make_spacetime(1.0, 0.3);
  CHECK(T_profile(sp, sp.rH) == Catch::Approx(sp.T0).epsilon(1e-15));
  CHECK(dT_profile(sp, sp.rH) == 0.0);
  CHECK(d2T_profile(sp, sp.rH) == Catch::Approx(-2.0 * sp.T0 / (sp.dH * sp.dH)).epsilon(1e-14));
  CHECK(T_profile(sp, sp.rH + sp.dH) == 0.0);
  CHECK(T_profile(sp, sp.rH + 2.0 * sp.dH) == 0.0);
  /* derivative consistency inside the collar */
  for (double fr : {0.15, 0.4, 0.62, 0.8}) {
    double r = sp.rH + fr * sp.dH;
    double want = fd4([&](double x) { return T_profile(sp, x); }, r, 1e-6);
    CHECK(dT_profile(sp, r) == Catch::Approx(want).margin(1e-6));
    double want2 = fd4([&](double x) { return dT_profile(sp, x); }, r, 1e-6);
    CHECK(d2T_profile(sp, r) == Catch::Approx(want2).margin(1e-4));
  }
}

TEST_CASE("slicing conditions hold across spins") {
  for (double a : {0.0, 0.05, 0.3, 0.5, 0.9}) {
    auto sp = make_spacetime(1.0, a);
    CHECK_NOTHROW(foliation_check(sp));
  }
}

TEST_CASE("Boyer-Lindquist slicing rejects the horizon") {
  auto sp = make_spacetime(1.0, 0.2, false);
  CHECK_THROWS(inverse_metric(sp, sp.rH, 1.0));
  CHECK_NOTHROW(inverse_metric(sp, sp.rH + 1e-3, 1.0));
}
