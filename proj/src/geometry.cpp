#include "magshift/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "magshift/errors.hpp"

namespace magshift {

namespace {

double arc_support(const Vec2 &c, double r, const Arc &arc, double theta) {
  const Vec2 u{std::cos(theta), std::sin(theta)};
  double reach;
  if (arc.contains(wrap_angle(theta))) {
    reach = r;
  } else {
    reach = r * std::max(std::cos(theta - arc.start), std::cos(theta - arc.end()));
  }
  return dot(u, c) + reach;
}

// Point where a line leaves (sign +1) or meets (sign -1) the circle (c, r).
Vec2 chord_end(const CorridorLine &line, const Vec2 &c, double r, int sign) {
  const double d = line.signed_distance(c);
  const Vec2 foot = c - d * left_normal(line.direction);
  const double half = std::sqrt(std::max(0.0, r * r - d * d));
  return foot + (sign * half) * line.direction;
}

std::vector<Arc> complement(const std::vector<Arc> &covered) {
  std::vector<std::pair<double, double>> iv;
  for (const Arc &a : covered) {
    if (a.length >= kTwoPi) return {};
    const double s = wrap_angle(a.start);
    const double e = s + a.length;
    if (e <= kTwoPi) {
      iv.emplace_back(s, e);
    } else {
      iv.emplace_back(s, kTwoPi);
      iv.emplace_back(0.0, e - kTwoPi);
    }
  }
  if (iv.empty()) return {Arc{0.0, kTwoPi}};
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto &x : iv) {
    if (!merged.empty() && x.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, x.second);
    } else {
      merged.push_back(x);
    }
  }
  std::vector<std::pair<double, double>> gaps;
  double cursor = 0.0;
  for (const auto &m : merged) {
    if (m.first > cursor) gaps.emplace_back(cursor, m.first);
    cursor = std::max(cursor, m.second);
  }
  if (cursor < kTwoPi) gaps.emplace_back(cursor, kTwoPi);
  // Join a gap touching 2 pi with one starting at 0.
  if (gaps.size() >= 2 && gaps.front().first == 0.0 && gaps.back().second == kTwoPi) {
    gaps.back().second = kTwoPi + gaps.front().second;
    gaps.erase(gaps.begin());
  }
  std::vector<Arc> out;
  for (const auto &g : gaps) {
    if (g.second > g.first) out.push_back({wrap_angle(g.first), g.second - g.first});
  }
  std::sort(out.begin(), out.end(), [](const Arc &a, const Arc &b) { return a.start < b.start; });
  return out;
}

}  // namespace

bool Arc::contains(double angle, double tol) const {
  const double rel = wrap_angle(angle - start);
  return rel <= length + tol || rel >= kTwoPi - tol;
}

Arc arc_between(double from, double to) {
  const double s = wrap_angle(from);
  return {s, wrap_angle(to - s)};
}

CorridorLine line_with_signed_distances(const Vec2 &c_k, const Vec2 &c_l, double d_k,
                                        double d_l) {
  const Vec2 sep = c_l - c_k;
  const double len = norm(sep);
  if (!(len > std::abs(d_k - d_l))) {
    throw GeometryError(fmt::format(
        "no directed line with clearances {} and {} between centres {} apart", d_k, d_l, len));
  }
  const Vec2 e = sep / len;
  const double sin_b = (d_k - d_l) / len;
  const double cos_b = std::sqrt(1.0 - sin_b * sin_b);
  const Vec2 u = cos_b * e + sin_b * left_normal(e);
  return {c_k - d_k * left_normal(u), u, d_k, d_l};
}

DistanceWindow distance_window(const FieldConfig &config, const EnergyAnalysis &analysis,
                               std::size_t k) {
  const BumpAnalysis &ba = analysis.at(k);
  const double rr = config.bump(k).radius();
  const double crit = ba.i_plus / analysis.speed();
  DistanceWindow w;
  w.critical = crit;
  if (ba.sign > 0) {
    w.tangent = -rr;
    w.lo = -rr;
    w.hi = crit;
  } else {
    w.tangent = rr;
    w.lo = crit;
    w.hi = rr;
  }
  return w;
}

Corridor corridor(const EnergyAnalysis &analysis, const FieldConfig &config, std::size_t k,
                  std::size_t l) {
  if (k == l) throw DomainError("corridor: k and l must differ");
  if (k >= config.size() || l >= config.size()) throw DomainError("corridor: index out of range");
  const Bump &bk = config.bump(k);
  const Bump &bl = config.bump(l);
  for (std::size_t m : {k, l}) {
    const BumpAnalysis &ba = analysis.at(m);
    if (std::abs(analysis.energy - ba.e_circ) <= 1e-12 * ba.e_circ) {
      throw GeometryError(fmt::format("degenerate corridor: E equals E° of bump {}", m + 1));
    }
  }
  const DistanceWindow wk = distance_window(config, analysis, k);
  const DistanceWindow wl = distance_window(config, analysis, l);
  if (std::abs(wk.hi - wk.lo) <= 1e-12 * bk.radius() ||
      std::abs(wl.hi - wl.lo) <= 1e-12 * bl.radius()) {
    throw GeometryError(
        fmt::format("degenerate corridor ({}, {}): tangent and critical lines coincide", k + 1,
                    l + 1));
  }

  Corridor c;
  c.k = k;
  c.l = l;
  c.sign_k = analysis.at(k).sign;
  c.sign_l = analysis.at(l).sign;
  c.symmetry_derived = c.sign_k < 0 && c.sign_l > 0;
  c.line1 = line_with_signed_distances(bk.center, bl.center, wk.lo, wl.lo);
  c.line2 = line_with_signed_distances(bk.center, bl.center, wk.hi, wl.hi);
  const CorridorLine mid = line_with_signed_distances(bk.center, bl.center, 0.5 * (wk.lo + wk.hi),
                                                      0.5 * (wl.lo + wl.hi));

  auto pick = [](double a1, double a2, double am) {
    Arc arc = arc_between(a1, a2);
    if (!arc.contains(am)) arc = arc_between(a2, a1);
    return arc;
  };
  auto angle_on = [](const Vec2 &p, const Vec2 &center) { return wrap_angle(angle_of(p - center)); };

  const double rk = bk.radius();
  const double rl = bl.radius();
  c.a_kl = pick(angle_on(chord_end(c.line1, bk.center, rk, +1), bk.center),
                angle_on(chord_end(c.line2, bk.center, rk, +1), bk.center),
                angle_on(chord_end(mid, bk.center, rk, +1), bk.center));
  c.b_lk = pick(angle_on(chord_end(c.line1, bl.center, rl, -1), bl.center),
                angle_on(chord_end(c.line2, bl.center, rl, -1), bl.center),
                angle_on(chord_end(mid, bl.center, rl, -1), bl.center));
  return c;
}

double hull_distance(const Vec2 &ca, double ra, const Arc &a, const Vec2 &cb, double rb,
                     const Arc &b, const Vec2 &p, Vec2 *witness) {
  auto phi = [&](double theta) {
    const Vec2 u{std::cos(theta), std::sin(theta)};
    return dot(u, p) - std::max(arc_support(ca, ra, a, theta), arc_support(cb, rb, b, theta));
  };
  constexpr int kGrid = 2048;
  const double step = kTwoPi / kGrid;
  int best_i = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double v = phi(i * step);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  const auto res = boost::math::tools::brent_find_minima(
      [&](double theta) { return -phi(theta); }, (best_i - 1) * step, (best_i + 1) * step, 52);
  double theta_star = best_i * step;
  if (-res.second > best) {
    best = -res.second;
    theta_star = res.first;
  }
  if (witness) {
    *witness = best > 0.0 ? p - best * Vec2{std::cos(theta_star), std::sin(theta_star)} : p;
  }
  return best;
}

GeneralPositionReport check_general_position(const EnergyAnalysis &analysis,
                                             const FieldConfig &config) {
  const std::size_t n = config.size();
  if (analysis.bumps.size() != n) throw DomainError("analysis does not match the configuration");
  GeneralPositionReport rep;
  std::vector<std::vector<Arc>> covered(n);

  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      if (k == l) continue;
      Corridor c;
      try {
        c = corridor(analysis, config, k, l);
      } catch (const GeometryError &e) {
        rep.violations.push_back({0, {k, l}, config.bump(k).center, e.what()});
        continue;
      }
      covered[k].push_back(c.a_kl);
      covered[l].push_back(c.b_lk);
      const Bump &bk = config.bump(k);
      const Bump &bl = config.bump(l);
      for (std::size_t m = 0; m < n; ++m) {
        if (m == k || m == l) continue;
        const Bump &bm = config.bump(m);
        Vec2 w;
        const double dist =
            hull_distance(bk.center, bk.radius(), c.a_kl, bl.center, bl.radius(), c.b_lk,
                          bm.center, &w);
        if (dist <= bm.radius()) {
          rep.violations.push_back(
              {1, {k, l, m}, w,
               fmt::format("conv(A_{0}{1} U B_{1}{0}) meets disc {2} (centre distance {3:.6g} <= "
                           "radius {4:.6g})",
                           k + 1, l + 1, m + 1, dist, bm.radius())});
        }
      }
      rep.corridors.push_back(c);
    }
  }

  rep.free_arcs.resize(n);
  rep.anchors.resize(n);
  rep.anchor_angles.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Bump &b = config.bump(k);
    rep.free_arcs[k] = complement(covered[k]);
    double angle = 0.0;
    if (n > 1) {
      if (rep.free_arcs[k].empty()) {
        rep.violations.push_back(
            {2, {k}, b.center + polar(b.radius(), 0.0),
             fmt::format("boundary of disc {} is covered by corridor arcs", k + 1)});
      } else {
        const Arc *best = &rep.free_arcs[k].front();
        for (const Arc &a : rep.free_arcs[k]) {
          if (a.length > best->length + 1e-12) best = &a;
        }
        angle = best->mid();
      }
    }
    rep.anchor_angles[k] = angle;
    rep.anchors[k] = b.center + polar(b.radius(), angle);
  }
  rep.holds = rep.violations.empty();
  return rep;
}

}  // namespace magshift
