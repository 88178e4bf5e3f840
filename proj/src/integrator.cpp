#include "magshift/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "magshift/dop853.hpp"
#include "magshift/errors.hpp"

namespace magshift {

namespace {

using Y = dop853::Vec<4>;

struct DiscRhs {
  const RadialProfile *profile;
  Vec2 center;

  void operator()(const Y &y, Y &out) const {
    const double b = profile->value(std::hypot(y[0] - center.x, y[1] - center.y));
    out = {y[2], y[3], b * y[3], -b * y[2]};
  }
};

Y to_y(const ParticleState &s) { return {s.q.x, s.q.y, s.v.x, s.v.y}; }
ParticleState to_state(const Y &y, double t) { return {{y[0], y[1]}, {y[2], y[3]}, t}; }

double wrap_pi(double a) {
  while (a > kPi) a -= kTwoPi;
  while (a <= -kPi) a += kTwoPi;
  return a;
}

// Illinois variant of regula falsi on a sign change fa * fb <= 0.
template <class G>
double refine_root(const G &g, double a, double fa, double b, double fb, double tol) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  int side = 0;
  double c = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    c = (fa * b - fb * a) / (fa - fb);
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    const double fc = g(c);
    if (std::abs(fc) <= tol) return c;
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)))
      return c;
    if ((fc < 0.0) == (fb < 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  return c;
}

enum class Candidate { kTurning, kSection, kExit };

struct Root {
  Candidate kind;
  double t;
};

}  // namespace

std::string event_label(const Event &e) {
  switch (e.kind) {
    case EventKind::kEnterDisc:
      return fmt::format("enter_disc:{}", e.bump + 1);
    case EventKind::kExitDisc:
      return fmt::format("exit_disc:{}", e.bump + 1);
    case EventKind::kCrossSection:
      return fmt::format("cross_section:{}:{}", e.bump + 1, e.direction > 0 ? '+' : '-');
    case EventKind::kTurningPoint:
      return fmt::format("turning_point:{}", e.bump + 1);
    case EventKind::kEscape:
      return "escape";
    case EventKind::kTimeCap:
      return "time_cap";
    case EventKind::kCaptured:
      return fmt::format("captured:{}", e.bump + 1);
  }
  return "unknown";
}

double default_t_max(const FieldConfig &config, double energy) {
  double r_max = 0.0;
  for (const auto &b : config.bumps()) r_max = std::max(r_max, b.radius());
  return 1e3 * kTwoPi * r_max / std::sqrt(2.0 * energy);
}

double default_escape_radius(const FieldConfig &config) {
  return 2.0 * (2.0 * config.bounding_radius());
}

Event free_flight(const FieldConfig &config, const ParticleState &state, double escape_radius,
                  std::optional<std::size_t> skip) {
  const Vec2 v = state.v;
  const double vv = norm2(v);
  if (!(vv > 0.0)) throw DomainError("free_flight: zero velocity");

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < config.size(); ++k) {
    if (skip && *skip == k) continue;
    const Bump &bump = config.bump(k);
    const Vec2 d = state.q - bump.center;
    const double rr = bump.radius();
    if (norm(d) < rr * (1.0 - 1e-12)) {
      throw DomainError(fmt::format("free_flight: state lies inside disc {}", k + 1));
    }
    const double b = dot(d, v);
    if (b >= 0.0) continue;
    const double dd = std::max(0.0, norm2(d) - rr * rr);
    const double disc = b * b - vv * dd;
    if (disc < 0.0) continue;
    const double t = dd / (-b + std::sqrt(disc));
    if (t < best) {
      best = t;
      best_k = k;
    }
  }

  const Vec2 d0 = state.q - config.bounding_center();
  const double b0 = dot(d0, v);
  const double dd0 = norm2(d0) - escape_radius * escape_radius;
  const double disc0 = b0 * b0 - vv * dd0;
  double t_esc = 0.0;
  if (disc0 > 0.0) t_esc = std::max(0.0, (-b0 + std::sqrt(disc0)) / vv);

  Event ev;
  if (best <= t_esc) {
    const Bump &bump = config.bump(best_k);
    Vec2 q = state.q + best * v;
    q = bump.center + bump.radius() * unit(q - bump.center);
    ev.kind = EventKind::kEnterDisc;
    ev.bump = best_k;
    ev.t = state.t + best;
    ev.state = {q, v, ev.t};
  } else {
    ev.kind = EventKind::kEscape;
    ev.t = state.t + t_esc;
    ev.state = {state.q + t_esc * v, v, ev.t};
  }
  return ev;
}

ExitRecord integrate_in_disc(const Bump &bump, std::size_t index, const ParticleState &state,
                             const PassageOptions &opt) {
  const Vec2 c = bump.center;
  const double rr = bump.radius();
  const double speed = norm(state.v);
  if (!(speed > 0.0)) throw DomainError("integrate_in_disc: zero velocity");
  const double e0 = 0.5 * speed * speed;
  const double t_max = opt.t_max > 0.0 ? opt.t_max : 1e3 * kTwoPi * rr / speed;
  const double len_tol = 1e-14 * rr;

  Vec2 sec_u{};
  double sec_len = 0.0;
  if (opt.section_anchor) {
    sec_len = norm(*opt.section_anchor - c);
    if (!(sec_len > 0.0)) throw DomainError("section anchor coincides with the centre");
    sec_u = (*opt.section_anchor - c) / sec_len;
  }

  auto g_boundary = [&](const Y &y) { return std::hypot(y[0] - c.x, y[1] - c.y) - rr; };
  auto g_section = [&](const Y &y) { return cross(sec_u, Vec2{y[0] - c.x, y[1] - c.y}); };
  auto g_turning = [&](const Y &y) { return (y[0] - c.x) * y[2] + (y[1] - c.y) * y[3]; };
  auto radius_of = [&](const Y &y) { return std::hypot(y[0] - c.x, y[1] - c.y); };
  auto angle_at = [&](const Y &y) { return std::atan2(y[1] - c.y, y[0] - c.x); };

  ExitRecord rec;
  rec.entry_state = state;

  dop853::Stepper<4, DiscRhs> stepper(DiscRhs{&bump.profile, c}, {opt.rtol, opt.atol});
  Y y = to_y(state);
  Y dy = stepper.rhs(y);
  double t = 0.0;

  bool inside = g_boundary(y) < -1e-12 * rr;
  double ang_prev = angle_at(y);
  double theta = 0.0;
  rec.min_radius = radius_of(y);
  double gb_prev = g_boundary(y);
  double gs_prev = opt.section_anchor ? g_section(y) : 0.0;
  bool gs_valid = opt.section_anchor.has_value() && !opt.skip_initial_section;
  double gt_prev = g_turning(y);

  auto h_cap = [&](const Y &yy) { return 0.25 * std::max(radius_of(yy), 1e-6 * rr) / speed; };
  double h = stepper.initial_step(y, dy, std::min(h_cap(y), t_max));
  if (!inside) {
    const double vr = g_turning(y) / std::max(radius_of(y), len_tol);
    if (vr < 0.0) {
      const double chord_time = 2.0 * rr * (-vr) / (speed * speed);
      h = std::min(h, 0.25 * chord_time);
    }
  }
  h = std::max(h, opt.h_min);

  auto advance_winding = [&](const Y &yy) {
    const double a = angle_at(yy);
    theta += wrap_pi(a - ang_prev);
    ang_prev = a;
  };
  auto finish = [&](PassageStatus status, const Y &yy, double tt) {
    rec.status = status;
    rec.exit_state = to_state(yy, state.t + tt);
    rec.exit_time = tt;
    rec.winding = theta;
    return rec;
  };

  bool first_step = true;
  while (true) {
    const double remaining = t_max - t;
    if (remaining <= opt.h_min) {
      rec.hit_time_cap = true;
      Event ev{EventKind::kTimeCap, index, 0, 0.0, state.t + t, to_state(y, state.t + t)};
      rec.events.push_back(ev);
      return finish(PassageStatus::kCaptured, y, t);
    }
    h = std::min({h, h_cap(y), remaining});
    auto res = stepper.attempt(t, y, dy, h);
    if (!res.accepted) {
      h = res.h_next;
      if (h < opt.h_min) {
        throw NumericalError(
            fmt::format("integrate_in_disc: step size fell below {} at t = {}", opt.h_min, t));
      }
      continue;
    }
    const double e1 = 0.5 * (res.y1[2] * res.y1[2] + res.y1[3] * res.y1[3]);
    if (std::abs(e1 - e0) > opt.energy_tol * e0) {
      throw NumericalError(
          fmt::format("integrate_in_disc: relative energy drift {} exceeds {}",
                      std::abs(e1 - e0) / e0, opt.energy_tol));
    }

    const auto &dense = res.dense;
    constexpr int kSub = 8;
    Y ya = y;
    double ta = t;
    for (int i = 1; i <= kSub; ++i) {
      const double tb = i == kSub ? res.t1 : t + h * i / kSub;
      const Y yb = i == kSub ? res.y1 : dense.eval(tb);
      const double gb = g_boundary(yb);
      const double gs = opt.section_anchor ? g_section(yb) : 0.0;
      const double gt = g_turning(yb);

      std::vector<Root> roots;
      if (inside && gb_prev < 0.0 && gb >= 0.0) {
        roots.push_back({Candidate::kExit,
                         refine_root([&](double x) { return g_boundary(dense.eval(x)); }, ta,
                                     gb_prev, tb, gb, len_tol)});
      }
      if (gs_valid && ((gs_prev < 0.0 && gs >= 0.0) || (gs_prev > 0.0 && gs <= 0.0))) {
        roots.push_back({Candidate::kSection,
                         refine_root([&](double x) { return g_section(dense.eval(x)); }, ta,
                                     gs_prev, tb, gs, len_tol)});
      }
      if ((gt_prev < 0.0) != (gt < 0.0)) {
        roots.push_back({Candidate::kTurning,
                         refine_root([&](double x) { return g_turning(dense.eval(x)); }, ta,
                                     gt_prev, tb, gt, len_tol * speed)});
      }
      std::sort(roots.begin(), roots.end(),
                [](const Root &a, const Root &b) { return a.t < b.t; });

      for (const Root &root : roots) {
        const Y ye = dense.eval(root.t);
        advance_winding(ye);
        const double r_e = radius_of(ye);
        const ParticleState se = to_state(ye, state.t + root.t);
        if (root.kind == Candidate::kTurning) {
          if (gt_prev < 0.0) rec.min_radius = std::min(rec.min_radius, r_e);
          if (opt.record_turning_points) {
            rec.events.push_back({EventKind::kTurningPoint, index, 0, 0.0, se.t, se});
          }
        } else if (root.kind == Candidate::kSection) {
          const Vec2 d = se.q - c;
          const double lambda = dot(d, sec_u) / sec_len;
          const double ang_mom = cross(d, se.v);
          if (lambda >= 1e-9 && lambda <= 1.0 - 1e-9 &&
              std::abs(ang_mom) > 1e-10 * rr * speed) {
            ++rec.section_hits;
            rec.events.push_back(
                {EventKind::kCrossSection, index, ang_mom > 0.0 ? 1 : -1, lambda, se.t, se});
            if (opt.stop_after_section_hits > 0 &&
                rec.section_hits >= opt.stop_after_section_hits) {
              return finish(PassageStatus::kSectionStop, ye, root.t);
            }
          }
        } else {
          rec.events.push_back({EventKind::kExitDisc, index, 0, 0.0, se.t, se});
          return finish(PassageStatus::kExited, ye, root.t);
        }
      }

      advance_winding(yb);
      const double r_b = radius_of(yb);
      rec.min_radius = std::min(rec.min_radius, r_b);
      if (!inside && gb < -1e-12 * rr) inside = true;
      if (opt.record_samples) rec.samples.push_back(to_state(yb, state.t + tb));
      if (opt.capture) {
        const double rdot = gt / r_b;
        const double band = opt.capture->band;
        if (std::abs(r_b - opt.capture->r_plus) <= band &&
            std::abs(rdot) <= band * speed / opt.capture->r_plus) {
          const ParticleState sb = to_state(yb, state.t + tb);
          rec.events.push_back({EventKind::kCaptured, index, 0, 0.0, sb.t, sb});
          return finish(PassageStatus::kCaptured, yb, tb);
        }
      }
      gb_prev = gb;
      gs_prev = gs;
      gt_prev = gt;
      gs_valid = opt.section_anchor.has_value();
      ya = yb;
      ta = tb;
    }

    if (first_step && !inside) {
      // Grazing contact: the orbit never gets strictly inside, so it leaves at once.
      rec.samples.clear();
      rec.events.clear();
      rec.min_radius = radius_of(to_y(state));
      theta = 0.0;
      rec.events.push_back({EventKind::kExitDisc, index, 0, 0.0, state.t, state});
      return finish(PassageStatus::kExited, to_y(state), 0.0);
    }
    first_step = false;
    t = res.t1;
    y = res.y1;
    dy = res.dy1;
    h = res.h_next;
  }
}

Trajectory flow(const FieldConfig &config, const ParticleState &state, const StopCondition &stop,
                const FlowOptions &options) {
  const double e = energy(state);
  if (!(e > 0.0)) throw DomainError("flow: kinetic energy must be positive");
  const double esc = stop.escape_radius > 0.0 ? stop.escape_radius : default_escape_radius(config);
  const double cap = stop.t_max > 0.0 ? stop.t_max : default_t_max(config, e);
  if (!options.anchors.empty() && options.anchors.size() != config.size()) {
    throw ValidationError("flow: need one section anchor per bump");
  }

  Trajectory out;
  out.samples.push_back(state);
  ParticleState cur = state;
  const double t0 = state.t;
  int hits = 0;
  std::optional<std::size_t> skip;

  while (true) {
    std::size_t k = 0;
    // An exit point may sit an ulp inside the disc it just left.
    const auto inside = config.disc_containing(cur.q);
    if (inside && inside != skip) {
      k = *inside;
    } else {
      const Event ev = free_flight(config, cur, esc, skip);
      if (ev.t - t0 > cap) {
        const double dt = t0 + cap - cur.t;
        const ParticleState end{cur.q + dt * cur.v, cur.v, t0 + cap};
        out.samples.push_back(end);
        out.events.push_back({EventKind::kTimeCap, 0, 0, 0.0, end.t, end});
        break;
      }
      out.samples.push_back(ev.state);
      out.events.push_back(ev);
      if (ev.kind == EventKind::kEscape) break;
      cur = ev.state;
      k = ev.bump;
    }

    PassageOptions po;
    po.rtol = options.rtol;
    po.atol = options.atol;
    po.t_max = cap - (cur.t - t0);
    if (!options.anchors.empty()) po.section_anchor = options.anchors[k];
    if (stop.section_hits > 0) po.stop_after_section_hits = stop.section_hits - hits;
    po.record_samples = options.record_samples;
    if (options.capture_band) {
      const auto radii = circular_radii(config.bump(k), e);
      po.capture = CaptureBox{radii.r_plus, *options.capture_band};
    }
    const ExitRecord rec = integrate_in_disc(config.bump(k), k, cur, po);
    out.samples.insert(out.samples.end(), rec.samples.begin(), rec.samples.end());
    out.events.insert(out.events.end(), rec.events.begin(), rec.events.end());
    hits += rec.section_hits;
    if (rec.status != PassageStatus::kExited) {
      out.samples.push_back(rec.exit_state);
      break;
    }
    out.samples.push_back(rec.exit_state);
    cur = rec.exit_state;
    skip = k;
  }

  // Keep time strictly increasing.
  std::vector<ParticleState> cleaned;
  for (const auto &s : out.samples) {
    if (cleaned.empty() || s.t > cleaned.back().t) cleaned.push_back(s);
  }
  out.samples = std::move(cleaned);
  return out;
}

void write_trajectory_csv(std::ostream &out, const Trajectory &tr) {
  out << "t,qx,qy,vx,vy,event\n";
  auto row = [&](const ParticleState &s, const std::string &label) {
    fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", s.t, s.q.x, s.q.y, s.v.x,
               s.v.y, label);
  };
  std::size_t j = 0;
  for (const auto &s : tr.samples) {
    while (j < tr.events.size() && tr.events[j].t < s.t) {
      row(tr.events[j].state, event_label(tr.events[j]));
      ++j;
    }
    row(s, "");
  }
  for (; j < tr.events.size(); ++j) row(tr.events[j].state, event_label(tr.events[j]));
}

}  // namespace magshift
