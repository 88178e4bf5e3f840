#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "magshift/field.hpp"
#include "magshift/singlebump.hpp"

namespace magshift {

/// Directed line. Signed distance of a centre c is (p - c) x direction for
/// any point p on the line, so a particle moving along the line at speed
/// sqrt(2E) has momentum d * sqrt(2E) about c (positive: c on the left).
struct CorridorLine {
  Vec2 point;      // foot of the perpendicular from c_k
  Vec2 direction;  // unit
  double d_k = 0.0;
  double d_l = 0.0;

  double signed_distance(const Vec2 &c) const { return cross(point - c, direction); }
};

CorridorLine line_with_signed_distances(const Vec2 &c_k, const Vec2 &c_l, double d_k,
                                        double d_l);

/// Counter-clockwise angular interval [start, start + length] on a circle.
struct Arc {
  double start = 0.0;  // in [0, 2 pi)
  double length = 0.0;

  double end() const { return start + length; }
  double mid() const { return wrap_angle(start + 0.5 * length); }
  bool contains(double angle, double tol = 0.0) const;
};

Arc arc_between(double from, double to);

struct Corridor {
  std::size_t k = 0;
  std::size_t l = 0;
  int sign_k = 1;
  int sign_l = 1;
  CorridorLine line1;  // built from the lower window ends
  CorridorLine line2;  // built from the upper window ends
  Arc a_kl;            // exit arc on the boundary of D_k
  Arc b_lk;            // entry arc on the boundary of D_l
  bool symmetry_derived = false;
};

/// Admissible signed-distance window of the exit/entry lines of bump k.
struct DistanceWindow {
  double lo = 0.0;
  double hi = 0.0;
  double tangent = 0.0;
  double critical = 0.0;
};

DistanceWindow distance_window(const FieldConfig &config, const EnergyAnalysis &analysis,
                               std::size_t k);

Corridor corridor(const EnergyAnalysis &analysis, const FieldConfig &config, std::size_t k,
                  std::size_t l);

/// Signed distance from p to conv(arc a on circle (ca, ra) U arc b on circle
/// (cb, rb)); negative values mean p is inside. `witness` receives the
/// nearest hull point (or p itself when inside).
double hull_distance(const Vec2 &ca, double ra, const Arc &a, const Vec2 &cb, double rb,
                     const Arc &b, const Vec2 &p, Vec2 *witness = nullptr);

struct Violation {
  int condition = 1;  // 1: hull meets a third disc, 2: no free arc, 0: degenerate corridor
  std::vector<std::size_t> indices;
  Vec2 witness;
  std::string message;
};

struct GeneralPositionReport {
  bool holds = true;
  std::vector<Violation> violations;
  std::vector<Vec2> anchors;
  std::vector<double> anchor_angles;
  std::vector<std::vector<Arc>> free_arcs;
  std::vector<Corridor> corridors;
};

GeneralPositionReport check_general_position(const EnergyAnalysis &analysis,
                                             const FieldConfig &config);

}  // namespace magshift
