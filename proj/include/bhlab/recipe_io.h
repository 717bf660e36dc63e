/* recipe_io.h
 *
 * Serialization of multiplier recipes: scalars plus profiles sampled on a
 * fixed log-spaced grid, as JSON.  Used by the command-line dump and by
 * regression snapshots; parse side only needs to read back what dump
 * wrote, profiles stay tabulated (recipes are rebuilt from parameters,
 * never deserialized into callables).
 */
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "multipliers.h"

namespace bhlab {

inline std::vector<double> recipe_sample_grid(const MorawetzRecipe& rec, int n = 240) {
  std::vector<double> r(n);
  bool bh = is_black_hole(rec.tag);
  double lo = bh ? rec.r_H + 1e-6 * rec.M : 1e-3;
  double hi = bh ? 100.0 * rec.M : 100.0;
  double base = bh ? rec.r_H : 0.0;
  for (int i = 0; i < n; ++i)
    r[i] = base + (lo - base) * std::pow((hi - base) / (lo - base), double(i) / (n - 1));
  return r;
}

inline nlohmann::json recipe_to_json(const MorawetzRecipe& rec, int n = 240) {
  nlohmann::json j;
  j["tag"] = tag_name(rec.tag);
  j["M"] = rec.M;
  j["a"] = rec.a;
  j["r_H"] = rec.r_H;
  j["delta_H"] = rec.delta_H;
  j["r_trap"] = rec.r_trap;
  j["r_star"] = rec.r_star;
  j["blend_lo"] = rec.blend_lo;
  j["blend_hi"] = rec.blend_hi;
  j["w0"] = rec.w0;
  j["quadrature_flagged"] = rec.quadrature_flagged;
  j["tempered"] = rec.tempered;
  j["eps_temper"] = rec.eps_temper;
  j["eps_internal"] = rec.eps_internal;
  j["temper_l1"] = rec.temper_l1;
  j["eps_redshift"] = rec.eps_redshift;
  j["eps_dt"] = rec.eps_dt;
  j["Y0"] = rec.Y0;
  j["Yt_rH"] = rec.Yt_rH;

  std::vector<double> grid = recipe_sample_grid(rec, n);
  auto sample = [&grid](const std::function<double(double)>& f) {
    std::vector<double> v(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);
    return v;
  };
  j["r"] = grid;
  j["u"] = sample(rec.u);
  j["du"] = sample(rec.du);
  j["v"] = sample(rec.v);
  j["w"] = sample(rec.w);
  j["dw"] = sample(rec.dw);
  j["w_dt"] = sample(rec.w_dt);
  if (rec.tempered) {
    j["ut"] = sample(rec.ut);
    j["wt"] = sample(rec.wt);
  }
  if (is_black_hole(rec.tag)) {
    j["Yr"] = sample(rec.Yr);
    j["Yt"] = sample(rec.Yt);
  }
  return j;
}

inline nlohmann::json rp_to_json(const RpRecipe& rp, int n = 240) {
  nlohmann::json j;
  j["p"] = rp.p;
  j["R"] = rp.R;
  j["delta_minus"] = rp.delta_minus;
  j["delta_plus"] = rp.delta_plus;
  j["eps_rp"] = rp.eps_rp;
  j["r_H"] = rp.r_H;
  j["r_trap"] = rp.r_trap;
  j["c_bulk"] = rp.c_bulk;
  std::vector<double> grid(n);
  double lo = rp.r_H > 0.0 ? rp.r_H + 1e-6 : 1e-3, hi = 100.0 * rp.R;
  for (int i = 0; i < n; ++i)
    grid[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  std::vector<double> f(n), xt(n), xr(n), wc(n);
  for (int i = 0; i < n; ++i) {
    f[i] = rp.f(grid[i]);
    xt[i] = rp.Xt(grid[i]);
    xr[i] = rp.Xr(grid[i]);
    wc[i] = rp.wcomp(grid[i]);
  }
  j["r"] = grid;
  j["f"] = f;
  j["Xt"] = xt;
  j["Xr"] = xr;
  j["wcomp"] = wc;
  return j;
}

}  // namespace bhlab
