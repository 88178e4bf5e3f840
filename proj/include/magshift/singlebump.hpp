#pragma once

#include <vector>

#include "magshift/field.hpp"
#include "magshift/vec2.hpp"

namespace magshift {

struct ParticleState {
  Vec2 q;
  Vec2 v;
  double t = 0.0;
};

double energy(const ParticleState &state);

/// I = (q - c) x v - F(|q - c|), conserved inside a rotationally symmetric bump.
double magnetic_momentum(const Bump &bump, const ParticleState &state);

/// E° = max_r (B(r) r)^2 / 2, exact per linear segment.
double energy_threshold(const Bump &bump);

struct CircularRadii {
  std::vector<double> radii;  // sorted ascending
  double r_plus = 0.0;
  double r_minus = 0.0;
};

/// Every r with |B(r)| r = sqrt(2E). Throws DomainError for E <= 0 or E > E°.
CircularRadii circular_radii(const Bump &bump, double energy);

struct CriticalMomentum {
  double i_plus = 0.0;
  double alpha_plus = 0.0;
  int sign = 1;
  double r_plus = 0.0;
};

CriticalMomentum critical_momentum(const Bump &bump, double energy);

/// State on the boundary circle at angle phi, pointing inward, with momentum I.
ParticleState entry_state(const Bump &bump, double energy, double phi, double momentum);

/// delta = 2E - sqrt(2E) max_{r >= r0} |B(r)| r, requires r0 > R+.
double escape_delta(const Bump &bump, double energy, double r0);

/// Bound on the angular rate for orbits on the critical side at radius >= rho.
double theta_rate_bound(const Bump &bump, double energy, double rho);

struct BumpAnalysis {
  double r_plus = 0.0;
  double r_minus = 0.0;
  int sign = 1;
  double i_plus = 0.0;
  double alpha_plus = 0.0;
  double e_circ = 0.0;
  std::vector<double> all_circular_radii;
};

struct EnergyAnalysis {
  double energy = 0.0;
  std::vector<BumpAnalysis> bumps;

  double speed() const;
  const BumpAnalysis &at(std::size_t k) const { return bumps.at(k); }
};

/// Per-bump critical data. Throws DomainError unless 0 < E <= min_k E°.
EnergyAnalysis analyze(const FieldConfig &config, double energy);

}  // namespace magshift
