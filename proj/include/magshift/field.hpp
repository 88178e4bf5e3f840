#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "magshift/vec2.hpp"

namespace magshift {

/// One (r, B) node of a piecewise-linear radial profile.
struct ProfileNode {
  double r = 0.0;
  double b = 0.0;
};

/// Radial field profile B(r) of a rotationally symmetric bump.
///
/// Profiles are continuous and piecewise linear, vanish for r >= R and are
/// therefore Lipschitz. The flux F(r) = int_r^R B(s) s ds is evaluated from
/// the exact per-segment antiderivative a s^2/2 + b s^3/3.
class RadialProfile {
 public:
  enum class Kind { kPiecewiseLinear, kConstantDisc };

  /// Nodes must be strictly increasing in r, start at r = 0 and end with
  /// B = 0 at the support radius. Throws ValidationError otherwise.
  static RadialProfile piecewise_linear(std::vector<ProfileNode> nodes);

  /// B = strength on [0, plateau], then a linear ramp of width `ramp` to 0.
  static RadialProfile constant_disc(double strength, double plateau, double ramp);

  Kind kind() const { return kind_; }
  std::span<const ProfileNode> nodes() const { return nodes_; }
  double support_radius() const { return nodes_.back().r; }

  double value(double r) const;
  /// One-sided derivative dB/dr from the right (left at r = R).
  double slope(double r) const;
  double flux(double r) const;

  /// Same shape with every field value multiplied by `factor`.
  RadialProfile scaled(double factor) const;

 private:
  RadialProfile(Kind kind, std::vector<ProfileNode> nodes);
  std::size_t segment_of(double r) const;

  Kind kind_;
  std::vector<ProfileNode> nodes_;
  // flux_at_node_[i] = F(nodes_[i].r)
  std::vector<double> flux_at_node_;
};

/// A rotationally symmetric field component centred at `center`.
struct Bump {
  Vec2 center;
  RadialProfile profile;

  double radius() const { return profile.support_radius(); }
  double field_at(const Vec2 &q) const { return profile.value(norm(q - center)); }
  double flux_at(const Vec2 &q) const { return profile.flux(norm(q - center)); }
  bool contains(const Vec2 &q) const { return norm(q - center) < radius(); }
};

/// B = sum_k B_k with pairwise disjoint closed support discs.
class FieldConfig {
 public:
  /// Throws ValidationError on an empty list or intersecting discs.
  explicit FieldConfig(std::vector<Bump> bumps);

  std::size_t size() const { return bumps_.size(); }
  const Bump &bump(std::size_t k) const { return bumps_.at(k); }
  std::span<const Bump> bumps() const { return bumps_; }

  /// Index of the disc whose open interior holds q, if any.
  std::optional<std::size_t> disc_containing(const Vec2 &q) const;

  /// Smallest circle (centred at the centroid of the centres) holding all discs.
  Vec2 bounding_center() const;
  double bounding_radius() const;

 private:
  std::vector<Bump> bumps_;
};

double eval_field(const FieldConfig &config, const Vec2 &q);

double flux(const Bump &bump, double r);

/// A(q) = F(|q-c|)/|q-c|^2 J(q-c). Throws DomainError at q == center.
Vec2 vector_potential(const Bump &bump, const Vec2 &q);

/// As vector_potential, but (0, 0) at the centre (the continuous limit).
Vec2 vector_potential_regularized(const Bump &bump, const Vec2 &q);

}  // namespace magshift
