#pragma once

#include <string>
#include <vector>

#include "magshift/geometry.hpp"
#include "magshift/integrator.hpp"
#include "magshift/poincare.hpp"

namespace magshift {

/// Minimal SVG writer. World coordinates are mapped to a fixed-size canvas
/// with y pointing up; numbers are printed with six significant digits so
/// output is reproducible.
class SvgCanvas {
 public:
  SvgCanvas(double x_min, double x_max, double y_min, double y_max, int width = 800,
            int height = 800);

  void circle(double cx, double cy, double r, const std::string &style);
  void polyline(const std::vector<Vec2> &points, const std::string &style);
  void segment(const Vec2 &a, const Vec2 &b, const std::string &style);
  void dot(double x, double y, double radius_px, const std::string &style);
  /// Filled region between two arcs and the chords joining their ends.
  void wedge(const std::vector<Vec2> &outline, const std::string &style);
  void text(double x, double y, const std::string &label, int size_px = 12);
  void axes(const std::string &x_label, const std::string &y_label);

  std::string str() const;

 private:
  double px(double x) const;
  double py(double y) const;

  double x0_, x1_, y0_, y1_;
  int w_, h_;
  std::string body_;
};

/// Samples of the field configuration plot: disc outlines, corridor arcs
/// (when a report is given) and an optional trajectory.
std::string render_trajectory_svg(const FieldConfig &config, const GeneralPositionReport *report,
                                  const Trajectory *trajectory);

/// Momentum in the (r, r') plane for the clockwise branch:
/// I = -r sqrt(2E - r'^2) - F(r) (sign flipped for negative bumps).
double momentum_polar(const Bump &bump, int sign, double energy, double r, double rdot);

struct LevelGrid {
  double r_min = 0.0, r_max = 1.0;
  double v_min = -1.0, v_max = 1.0;
  int nr = 0, nv = 0;
  std::vector<double> values;  // row-major over v, NaN outside the energy shell
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nr + i]; }
  double r_at(int i) const { return r_min + (r_max - r_min) * i / (nr - 1); }
  double v_at(int j) const { return v_min + (v_max - v_min) * j / (nv - 1); }
};

LevelGrid momentum_grid(const Bump &bump, int sign, double energy, int nr, int nv);

/// Marching squares on one level; returns line segments in (r, r') space.
std::vector<std::pair<Vec2, Vec2>> contour_segments(const LevelGrid &grid, double level);

/// Distance from p to the nearest contour segment (infinity if none).
double distance_to_contour(const std::vector<std::pair<Vec2, Vec2>> &segments, const Vec2 &p);

std::string render_levelsets_svg(const LevelGrid &grid, const std::vector<double> &levels,
                                 double critical_level, const std::vector<Vec2> &markers);

/// Scatter of (lambda, signed tangential velocity) for section crossings.
std::string render_section_svg(const std::vector<SectionPoint> &points, const FieldConfig &config,
                               const std::vector<Vec2> &anchors);

}  // namespace magshift
