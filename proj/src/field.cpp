#include "magshift/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "magshift/errors.hpp"

namespace magshift {

namespace {

struct Linear {
  double a;  // B(s) = a + b s
  double b;
};

Linear segment_line(const ProfileNode &lo, const ProfileNode &hi) {
  const double b = (hi.b - lo.b) / (hi.r - lo.r);
  return {lo.b - b * lo.r, b};
}

// Antiderivative of B(s) s on one segment.
double segment_primitive(const Linear &l, double s) {
  return s * s * (0.5 * l.a + l.b * s / 3.0);
}

}  // namespace

RadialProfile::RadialProfile(Kind kind, std::vector<ProfileNode> nodes)
    : kind_(kind), nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) {
    throw ValidationError("nodes: at least two nodes are required");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto &n = nodes_[i];
    if (!std::isfinite(n.r) || !std::isfinite(n.b)) {
      throw ValidationError(fmt::format("nodes[{}]: non-finite value", i));
    }
    if (i > 0 && !(n.r > nodes_[i - 1].r)) {
      throw ValidationError(fmt::format("nodes[{}]: radii must be strictly increasing", i));
    }
  }
  if (nodes_.front().r != 0.0) {
    throw ValidationError("nodes[0]: first node must sit at r = 0");
  }
  if (nodes_.back().b != 0.0) {
    throw ValidationError(fmt::format(
        "nodes[{}]: last node must have B = 0 so the profile vanishes continuously at R",
        nodes_.size() - 1));
  }

  flux_at_node_.assign(nodes_.size(), 0.0);
  for (std::size_t i = nodes_.size() - 1; i-- > 0;) {
    const Linear l = segment_line(nodes_[i], nodes_[i + 1]);
    flux_at_node_[i] = flux_at_node_[i + 1] + segment_primitive(l, nodes_[i + 1].r) -
                       segment_primitive(l, nodes_[i].r);
  }
}

RadialProfile RadialProfile::piecewise_linear(std::vector<ProfileNode> nodes) {
  return RadialProfile(Kind::kPiecewiseLinear, std::move(nodes));
}

RadialProfile RadialProfile::constant_disc(double strength, double plateau, double ramp) {
  if (!(plateau > 0.0) || !(ramp > 0.0)) {
    throw ValidationError("plateau, ramp: constant disc needs positive plateau radius and ramp width");
  }
  return RadialProfile(Kind::kConstantDisc,
                       {{0.0, strength}, {plateau, strength}, {plateau + ramp, 0.0}});
}

std::size_t RadialProfile::segment_of(double r) const {
  // Index i with nodes_[i].r <= r < nodes_[i+1].r; callers guarantee r < R.
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r,
                                   [](double x, const ProfileNode &n) { return x < n.r; });
  const auto idx = static_cast<std::size_t>(it - nodes_.begin());
  return idx == 0 ? 0 : idx - 1;
}

double RadialProfile::value(double r) const {
  if (r >= support_radius()) return 0.0;
  if (r <= 0.0) return nodes_.front().b;
  const std::size_t i = segment_of(r);
  const auto &lo = nodes_[i];
  const auto &hi = nodes_[i + 1];
  const double t = (r - lo.r) / (hi.r - lo.r);
  return lo.b + t * (hi.b - lo.b);
}

double RadialProfile::slope(double r) const {
  if (r > support_radius()) return 0.0;
  const double rr = std::min(std::max(r, 0.0), std::nextafter(support_radius(), 0.0));
  const std::size_t i = segment_of(rr);
  return segment_line(nodes_[i], nodes_[i + 1]).b;
}

double RadialProfile::flux(double r) const {
  if (r >= support_radius()) return 0.0;
  if (r <= 0.0) return flux_at_node_.front();
  const std::size_t i = segment_of(r);
  const Linear l = segment_line(nodes_[i], nodes_[i + 1]);
  return flux_at_node_[i + 1] + segment_primitive(l, nodes_[i + 1].r) - segment_primitive(l, r);
}

RadialProfile RadialProfile::scaled(double factor) const {
  std::vector<ProfileNode> nodes = nodes_;
  for (auto &n : nodes) n.b *= factor;
  return RadialProfile(kind_, std::move(nodes));
}

FieldConfig::FieldConfig(std::vector<Bump> bumps) : bumps_(std::move(bumps)) {
  if (bumps_.empty()) throw ValidationError("bumps: at least one bump is required");
  for (std::size_t k = 0; k < bumps_.size(); ++k) {
    const Vec2 c = bumps_[k].center;
    if (!std::isfinite(c.x) || !std::isfinite(c.y)) {
      throw ValidationError(fmt::format("bumps[{}].center: non-finite coordinate", k));
    }
    for (std::size_t l = 0; l < k; ++l) {
      const double gap = norm(bumps_[k].center - bumps_[l].center);
      if (!(gap > bumps_[k].radius() + bumps_[l].radius())) {
        throw ValidationError(fmt::format(
            "bumps[{}] and bumps[{}]: support discs intersect (centre distance {} <= {} + {})", l,
            k, gap, bumps_[l].radius(), bumps_[k].radius()));
      }
    }
  }
}

std::optional<std::size_t> FieldConfig::disc_containing(const Vec2 &q) const {
  for (std::size_t k = 0; k < bumps_.size(); ++k) {
    if (bumps_[k].contains(q)) return k;
  }
  return std::nullopt;
}

Vec2 FieldConfig::bounding_center() const {
  Vec2 c{};
  for (const auto &b : bumps_) c += b.center;
  return c / static_cast<double>(bumps_.size());
}

double FieldConfig::bounding_radius() const {
  const Vec2 o = bounding_center();
  double r = 0.0;
  for (const auto &b : bumps_) r = std::max(r, norm(b.center - o) + b.radius());
  return r;
}

double eval_field(const FieldConfig &config, const Vec2 &q) {
  if (const auto k = config.disc_containing(q)) return config.bump(*k).field_at(q);
  return 0.0;
}

double flux(const Bump &bump, double r) {
  if (r < 0.0) throw DomainError("flux: radius must be non-negative");
  return bump.profile.flux(r);
}

Vec2 vector_potential(const Bump &bump, const Vec2 &q) {
  const Vec2 d = q - bump.center;
  const double r2 = norm2(d);
  if (r2 == 0.0) throw DomainError("vector_potential: undefined at the bump centre");
  const double r = std::sqrt(r2);
  if (r >= bump.radius()) return {0.0, 0.0};
  return (bump.profile.flux(r) / r2) * apply_j(d);
}

Vec2 vector_potential_regularized(const Bump &bump, const Vec2 &q) {
  if (q == bump.center) return {0.0, 0.0};
  return vector_potential(bump, q);
}

}  // namespace magshift
