#include "magshift/singlebump.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "magshift/errors.hpp"

namespace magshift {

namespace {

struct Segment {
  double r0, r1;
  double a, b;  // B(r) = a + b r
};

std::vector<Segment> segments(const RadialProfile &p) {
  const auto nodes = p.nodes();
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double b = (nodes[i + 1].b - nodes[i].b) / (nodes[i + 1].r - nodes[i].r);
    out.push_back({nodes[i].r, nodes[i + 1].r, nodes[i].b - b * nodes[i].r, b});
  }
  return out;
}

// max |(a + b r) r| on [lo, hi]
double max_abs_br(const Segment &s, double lo, double hi) {
  auto g = [&](double r) { return std::abs((s.a + s.b * r) * r); };
  double m = std::max(g(lo), g(hi));
  if (s.b != 0.0) {
    const double vertex = -s.a / (2.0 * s.b);
    if (vertex > lo && vertex < hi) m = std::max(m, g(vertex));
  }
  return m;
}

// Real roots of b r^2 + a r - c = 0.
std::vector<double> quadratic_roots(double b, double a, double c) {
  if (b == 0.0) {
    if (a == 0.0) return {};
    return {c / a};
  }
  double disc = a * a + 4.0 * b * c;
  const double scale = a * a + std::abs(4.0 * b * c);
  if (disc < 0.0) {
    if (disc > -1e-12 * scale) {
      disc = 0.0;
    } else {
      return {};
    }
  }
  const double sq = std::sqrt(disc);
  // Stable form: q = -(a + sgn(a) sqrt(disc)) / 2, roots q/b and -c/q.
  const double q = -0.5 * (a + std::copysign(sq, a));
  if (q == 0.0) return {0.0};
  return {q / b, -c / q};
}

void check_energy(double energy) {
  if (!(energy > 0.0) || !std::isfinite(energy)) {
    throw DomainError(fmt::format("energy must be positive and finite (got {})", energy));
  }
}

}  // namespace

double energy(const ParticleState &state) { return 0.5 * norm2(state.v); }

double magnetic_momentum(const Bump &bump, const ParticleState &state) {
  const Vec2 d = state.q - bump.center;
  return cross(d, state.v) - bump.profile.flux(norm(d));
}

double energy_threshold(const Bump &bump) {
  double m = 0.0;
  for (const auto &s : segments(bump.profile)) m = std::max(m, max_abs_br(s, s.r0, s.r1));
  return 0.5 * m * m;
}

CircularRadii circular_radii(const Bump &bump, double energy) {
  check_energy(energy);
  const double e_circ = energy_threshold(bump);
  if (energy > e_circ * (1.0 + 1e-12)) {
    throw DomainError(
        fmt::format("no circular orbit at this energy (E = {} > E° = {})", energy, e_circ));
  }
  const double s = std::sqrt(2.0 * energy);
  const double rr = bump.radius();
  const double slack = 1e-12 * rr;

  std::vector<double> roots;
  for (const auto &seg : segments(bump.profile)) {
    for (const double target : {s, -s}) {
      for (double r : quadratic_roots(seg.b, seg.a, target)) {
        if (r >= seg.r0 - slack && r <= seg.r1 + slack && r > 0.0) {
          roots.push_back(std::clamp(r, seg.r0, seg.r1));
        }
      }
    }
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [&](double x, double y) { return std::abs(x - y) <= slack; }),
              roots.end());
  if (roots.empty()) {
    throw DomainError("no circular orbit at this energy");
  }
  return {roots, roots.back(), roots.front()};
}

CriticalMomentum critical_momentum(const Bump &bump, double energy) {
  const CircularRadii radii = circular_radii(bump, energy);
  const double r_plus = radii.r_plus;
  const double b_at = bump.profile.value(r_plus);
  if (b_at == 0.0) throw DomainError("degenerate outermost orbit: B(R+) = 0");
  const int sign = b_at > 0.0 ? 1 : -1;
  const double s = std::sqrt(2.0 * energy);
  const double i_plus = -sign * r_plus * s - bump.profile.flux(r_plus);
  const double ratio = std::clamp(i_plus / (bump.radius() * s), -1.0, 1.0);
  return {i_plus, std::asin(ratio), sign, r_plus};
}

ParticleState entry_state(const Bump &bump, double energy, double phi, double momentum) {
  check_energy(energy);
  const double rr = bump.radius();
  const double s = std::sqrt(2.0 * energy);
  double vt = momentum / rr;
  if (std::abs(vt) > s) {
    if (std::abs(vt) > s * (1.0 + 1e-12)) {
      throw DomainError(fmt::format("entry momentum {} outside [-R sqrt(2E), R sqrt(2E)] = +-{}",
                                    momentum, rr * s));
    }
    vt = std::copysign(s, vt);
  }
  const Vec2 n{std::cos(phi), std::sin(phi)};
  const Vec2 t{-n.y, n.x};
  const double vr = std::sqrt(std::max(0.0, s * s - vt * vt));
  return {bump.center + rr * n, vt * t - vr * n, 0.0};
}

double escape_delta(const Bump &bump, double energy, double r0) {
  check_energy(energy);
  const double r_plus = circular_radii(bump, energy).r_plus;
  if (!(r0 > r_plus)) {
    throw DomainError(fmt::format("escape_delta needs r0 > R+ = {} (got {})", r_plus, r0));
  }
  double m = 0.0;
  for (const auto &seg : segments(bump.profile)) {
    if (seg.r1 <= r0) continue;
    m = std::max(m, max_abs_br(seg, std::max(seg.r0, r0), seg.r1));
  }
  const double s = std::sqrt(2.0 * energy);
  return 2.0 * energy - s * m;
}

double theta_rate_bound(const Bump &bump, double energy, double rho) {
  const CriticalMomentum cm = critical_momentum(bump, energy);
  if (rho < cm.r_plus) {
    throw DomainError(fmt::format("theta_rate_bound needs rho >= R+ = {} (got {})", cm.r_plus, rho));
  }
  return -cm.sign * cm.r_plus * std::sqrt(2.0 * energy) / (rho * rho);
}

double EnergyAnalysis::speed() const { return std::sqrt(2.0 * energy); }

EnergyAnalysis analyze(const FieldConfig &config, double energy) {
  check_energy(energy);
  EnergyAnalysis out;
  out.energy = energy;
  for (std::size_t k = 0; k < config.size(); ++k) {
    const Bump &bump = config.bump(k);
    BumpAnalysis ba;
    ba.e_circ = energy_threshold(bump);
    if (energy > ba.e_circ * (1.0 + 1e-12)) {
      throw DomainError(fmt::format("bump {}: E = {} exceeds the threshold E° = {}", k + 1, energy,
                                    ba.e_circ));
    }
    const CircularRadii radii = circular_radii(bump, energy);
    const CriticalMomentum cm = critical_momentum(bump, energy);
    ba.r_plus = radii.r_plus;
    ba.r_minus = radii.r_minus;
    ba.all_circular_radii = radii.radii;
    ba.sign = cm.sign;
    ba.i_plus = cm.i_plus;
    ba.alpha_plus = cm.alpha_plus;
    out.bumps.push_back(std::move(ba));
  }
  return out;
}

}  // namespace magshift
