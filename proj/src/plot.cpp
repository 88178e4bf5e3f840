#include "magshift/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace magshift {

namespace {

constexpr int kMargin = 50;

const std::array<const char *, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                              "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double x) { return fmt::format("{:.6g}", x); }

}  // namespace

SvgCanvas::SvgCanvas(double x_min, double x_max, double y_min, double y_max, int width,
                     int height)
    : x0_(x_min), x1_(x_max), y0_(y_min), y1_(y_max), w_(width), h_(height) {}

double SvgCanvas::px(double x) const {
  return kMargin + (x - x0_) / (x1_ - x0_) * (w_ - 2 * kMargin);
}

double SvgCanvas::py(double y) const {
  return h_ - kMargin - (y - y0_) / (y1_ - y0_) * (h_ - 2 * kMargin);
}

void SvgCanvas::circle(double cx, double cy, double r, const std::string &style) {
  const double rx = r / (x1_ - x0_) * (w_ - 2 * kMargin);
  body_ += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" style=\"{}\"/>\n", num(px(cx)),
                       num(py(cy)), num(rx), style);
}

void SvgCanvas::polyline(const std::vector<Vec2> &points, const std::string &style) {
  if (points.empty()) return;
  std::string pts;
  for (const Vec2 &p : points) {
    if (!pts.empty()) pts += ' ';
    pts += num(px(p.x)) + "," + num(py(p.y));
  }
  body_ += fmt::format("<polyline points=\"{}\" style=\"fill:none;{}\"/>\n", pts, style);
}

void SvgCanvas::segment(const Vec2 &a, const Vec2 &b, const std::string &style) {
  body_ += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" style=\"{}\"/>\n",
                       num(px(a.x)), num(py(a.y)), num(px(b.x)), num(py(b.y)), style);
}

void SvgCanvas::dot(double x, double y, double radius_px, const std::string &style) {
  body_ += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" style=\"{}\"/>\n", num(px(x)),
                       num(py(y)), num(radius_px), style);
}

void SvgCanvas::wedge(const std::vector<Vec2> &outline, const std::string &style) {
  if (outline.size() < 3) return;
  std::string d;
  for (std::size_t i = 0; i < outline.size(); ++i) {
    d += fmt::format("{}{},{} ", i == 0 ? "M" : "L", num(px(outline[i].x)), num(py(outline[i].y)));
  }
  body_ += fmt::format("<path d=\"{}Z\" style=\"{}\"/>\n", d, style);
}

void SvgCanvas::text(double x, double y, const std::string &label, int size_px) {
  body_ += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"{}\" font-family=\"sans-serif\">{}</text>\n",
                       num(px(x)), num(py(y)), size_px, label);
}

void SvgCanvas::axes(const std::string &x_label, const std::string &y_label) {
  const double l = kMargin, r = w_ - kMargin, t = kMargin, b = h_ - kMargin;
  body_ += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" style=\"fill:none;stroke:#000\"/>\n",
      num(l), num(t), num(r - l), num(b - t));
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0_ + (x1_ - x0_) * i / 4.0;
    const double fy = y0_ + (y1_ - y0_) * i / 4.0;
    body_ += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
        num(px(fx)), num(b + 14), num(fx));
    body_ += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
                         num(l - 4), num(py(fy) + 3), num(fy));
  }
  body_ += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                       num(0.5 * (l + r)), num(h_ - 10), x_label);
  body_ += fmt::format(
      "<text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" "
      "text-anchor=\"middle\">{}</text>\n",
      num(0.5 * (t + b)), num(0.5 * (t + b)), y_label);
}

std::string SvgCanvas::str() const {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} "
      "{1}\">\n<rect width=\"100%\" height=\"100%\" style=\"fill:#fff\"/>\n{2}</svg>\n",
      w_, h_, body_);
}

std::string render_trajectory_svg(const FieldConfig &config, const GeneralPositionReport *report,
                                  const Trajectory *trajectory) {
  const Vec2 c = config.bounding_center();
  const double half = 1.1 * config.bounding_radius();
  SvgCanvas svg(c.x - half, c.x + half, c.y - half, c.y + half);
  svg.axes("x", "y");
  if (report) {
    for (const Corridor &cor : report->corridors) {
      const Bump &bk = config.bump(cor.k);
      const Bump &bl = config.bump(cor.l);
      std::vector<Vec2> outline;
      constexpr int kArcPts = 16;
      for (int i = 0; i <= kArcPts; ++i) {
        outline.push_back(bk.center + polar(bk.radius(), cor.a_kl.start + cor.a_kl.length * i / kArcPts));
      }
      for (int i = 0; i <= kArcPts; ++i) {
        outline.push_back(bl.center + polar(bl.radius(), cor.b_lk.start + cor.b_lk.length * i / kArcPts));
      }
      svg.wedge(outline, "fill:#f2c14e;fill-opacity:0.25;stroke:none");
    }
    for (std::size_t k = 0; k < report->anchors.size(); ++k) {
      svg.segment(config.bump(k).center, report->anchors[k], "stroke:#444;stroke-dasharray:4,3");
    }
  }
  for (std::size_t k = 0; k < config.size(); ++k) {
    const Bump &b = config.bump(k);
    svg.circle(b.center.x, b.center.y, b.radius(),
               fmt::format("fill:none;stroke:{};stroke-width:1.5", kPalette[k % kPalette.size()]));
    svg.text(b.center.x, b.center.y, fmt::format("{}", k + 1));
  }
  if (trajectory && !trajectory->samples.empty()) {
    std::vector<Vec2> pts;
    pts.reserve(trajectory->samples.size());
    for (const ParticleState &s : trajectory->samples) pts.push_back(s.q);
    svg.polyline(pts, "stroke:#000;stroke-width:0.8");
    for (const Event &ev : trajectory->events) {
      if (ev.kind == EventKind::kCrossSection) svg.dot(ev.state.q.x, ev.state.q.y, 2.5, "fill:#d62728");
    }
  }
  return svg.str();
}

double momentum_polar(const Bump &bump, int sign, double energy, double r, double rdot) {
  const double w = 2.0 * energy - rdot * rdot;
  if (w < 0.0) return std::numeric_limits<double>::quiet_NaN();
  return -sign * r * std::sqrt(w) - bump.profile.flux(r);
}

LevelGrid momentum_grid(const Bump &bump, int sign, double energy, int nr, int nv) {
  LevelGrid g;
  const double s = std::sqrt(2.0 * energy);
  g.r_min = 0.0;
  g.r_max = bump.radius();
  g.v_min = -s;
  g.v_max = s;
  g.nr = nr;
  g.nv = nv;
  g.values.resize(static_cast<std::size_t>(nr) * nv);
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nr; ++i) {
      g.values[static_cast<std::size_t>(j) * nr + i] =
          momentum_polar(bump, sign, energy, g.r_at(i), g.v_at(j));
    }
  }
  return g;
}

std::vector<std::pair<Vec2, Vec2>> contour_segments(const LevelGrid &grid, double level) {
  std::vector<std::pair<Vec2, Vec2>> out;
  auto lerp = [&](const Vec2 &a, double fa, const Vec2 &b, double fb) {
    const double t = (level - fa) / (fb - fa);
    return a + t * (b - a);
  };
  for (int j = 0; j + 1 < grid.nv; ++j) {
    for (int i = 0; i + 1 < grid.nr; ++i) {
      const std::array<Vec2, 4> p = {Vec2{grid.r_at(i), grid.v_at(j)},
                                     Vec2{grid.r_at(i + 1), grid.v_at(j)},
                                     Vec2{grid.r_at(i + 1), grid.v_at(j + 1)},
                                     Vec2{grid.r_at(i), grid.v_at(j + 1)}};
      const std::array<double, 4> f = {grid.at(i, j), grid.at(i + 1, j), grid.at(i + 1, j + 1),
                                       grid.at(i, j + 1)};
      if (std::any_of(f.begin(), f.end(), [](double x) { return std::isnan(x); })) continue;
      std::vector<Vec2> cuts;
      for (int e = 0; e < 4; ++e) {
        const int n = (e + 1) % 4;
        if ((f[e] < level) != (f[n] < level)) cuts.push_back(lerp(p[e], f[e], p[n], f[n]));
      }
      if (cuts.size() == 2) {
        out.emplace_back(cuts[0], cuts[1]);
      } else if (cuts.size() == 4) {
        // Saddle: resolve with the cell-centre value.
        const double centre = 0.25 * (f[0] + f[1] + f[2] + f[3]);
        if ((centre < level) == (f[0] < level)) {
          out.emplace_back(cuts[0], cuts[3]);
          out.emplace_back(cuts[1], cuts[2]);
        } else {
          out.emplace_back(cuts[0], cuts[1]);
          out.emplace_back(cuts[2], cuts[3]);
        }
      }
    }
  }
  return out;
}

double distance_to_contour(const std::vector<std::pair<Vec2, Vec2>> &segments, const Vec2 &p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto &[a, b] : segments) {
    const Vec2 ab = b - a;
    const double len2 = norm2(ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, norm(p - (a + t * ab)));
  }
  return best;
}

std::string render_levelsets_svg(const LevelGrid &grid, const std::vector<double> &levels,
                                 double critical_level, const std::vector<Vec2> &markers) {
  SvgCanvas svg(grid.r_min, grid.r_max, grid.v_min, grid.v_max);
  svg.axes("r", "dr/dt");
  for (double level : levels) {
    for (const auto &[a, b] : contour_segments(grid, level)) {
      svg.segment(a, b, "stroke:#1f77b4;stroke-width:0.8");
    }
  }
  for (const auto &[a, b] : contour_segments(grid, critical_level)) {
    svg.segment(a, b, "stroke:#d62728;stroke-width:1.6");
  }
  for (const Vec2 &m : markers) svg.dot(m.x, m.y, 4.0, "fill:#000");
  return svg.str();
}

std::string render_section_svg(const std::vector<SectionPoint> &points, const FieldConfig &config,
                               const std::vector<Vec2> &anchors) {
  double vmax = 0.0;
  for (const SectionPoint &p : points) vmax = std::max(vmax, norm(p.state.v));
  if (vmax == 0.0) vmax = 1.0;
  SvgCanvas svg(0.0, 1.0, -vmax, vmax);
  svg.axes("lambda", "tangential velocity");
  for (const SectionPoint &p : points) {
    const Vec2 c = config.bump(p.k).center;
    const Vec2 e = anchors.at(p.k) - c;
    const double vt = cross(e, p.state.v) / norm(e);
    svg.dot(p.lambda, vt, 1.8, fmt::format("fill:{}", kPalette[p.k % kPalette.size()]));
  }
  return svg.str();
}

}  // namespace magshift
