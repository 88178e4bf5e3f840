#include "magshift/poincare.hpp"

#include <cmath>

#include <fmt/format.h>

#include "magshift/errors.hpp"

namespace magshift {

PoincareSystem::PoincareSystem(FieldConfig config, EnergyAnalysis analysis,
                               std::vector<Vec2> anchors, PoincareOptions options)
    : config_(std::move(config)),
      analysis_(std::move(analysis)),
      anchors_(std::move(anchors)),
      options_(options) {
  if (anchors_.size() != config_.size()) {
    throw ValidationError("PoincareSystem: need exactly one anchor per bump");
  }
  t_max_ = options_.t_max > 0.0 ? options_.t_max : default_t_max(config_, analysis_.energy);
  escape_radius_ =
      options_.escape_radius > 0.0 ? options_.escape_radius : default_escape_radius(config_);
}

SectionPoint PoincareSystem::section_point(std::size_t k, const ParticleState &state) const {
  const Vec2 c = config_.bump(k).center;
  const Vec2 seg = anchors_.at(k) - c;
  const Vec2 d = state.q - c;
  SectionPoint sp;
  sp.k = k;
  sp.lambda = dot(d, seg) / norm2(seg);
  const double am = cross(d, state.v);
  sp.direction = am > 0.0 ? 1 : (am < 0.0 ? -1 : 0);
  sp.state = state;
  return sp;
}

SectionPoint PoincareSystem::section_point(std::size_t k, double lambda, const Vec2 &v) const {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("section parameter must lie in (0, 1)");
  const Vec2 c = config_.bump(k).center;
  const ParticleState s{c + lambda * (anchors_.at(k) - c), v, 0.0};
  return section_point(k, s);
}

MapResult PoincareSystem::first_crossing(ParticleState state, std::optional<std::size_t> inside,
                                         bool skip_initial) const {
  const double t0 = state.t;
  std::optional<std::size_t> skip;
  MapResult out;
  while (true) {
    std::size_t k;
    if (inside) {
      k = *inside;
      inside.reset();
    } else {
      const Event ev = free_flight(config_, state, escape_radius_, skip);
      if (ev.kind == EventKind::kEscape) {
        out.status = MapStatus::kEscape;
        out.final_state = ev.state;
        out.return_time = ev.t - t0;
        return out;
      }
      if (ev.t - t0 >= t_max_) {
        out.status = MapStatus::kCaptured;
        out.final_state = ev.state;
        out.return_time = ev.t - t0;
        return out;
      }
      state = ev.state;
      k = ev.bump;
    }

    PassageOptions po;
    po.rtol = options_.rtol;
    po.atol = options_.atol;
    po.t_max = t_max_ - (state.t - t0);
    po.section_anchor = anchors_[k];
    po.skip_initial_section = skip_initial;
    po.stop_after_section_hits = 1;
    if (options_.capture_band) {
      po.capture = CaptureBox{analysis_.at(k).r_plus, *options_.capture_band};
    }
    skip_initial = false;
    const ExitRecord rec = integrate_in_disc(config_.bump(k), k, state, po);
    out.final_state = rec.exit_state;
    out.return_time = rec.exit_state.t - t0;
    if (rec.status == PassageStatus::kSectionStop) {
      out.status = MapStatus::kHit;
      const Event &hit = rec.events.back();
      out.point = section_point(k, hit.state);
      out.point.lambda = hit.lambda;
      out.point.direction = hit.direction;
      return out;
    }
    if (rec.status == PassageStatus::kCaptured) {
      out.status = MapStatus::kCaptured;
      return out;
    }
    state = rec.exit_state;
    skip = k;
  }
}

MapResult PoincareSystem::poincare_map(const SectionPoint &x) const {
  return first_crossing(x.state, x.k, true);
}

std::optional<SectionPoint> PoincareSystem::entry_to_section_u(std::size_t k,
                                                               const ParticleState &entry) const {
  const MapResult r = first_crossing(entry, k, false);
  if (r.status != MapStatus::kHit) return std::nullopt;
  return r.point;
}

std::optional<EntryResult> PoincareSystem::section_to_entry_v(const SectionPoint &x) const {
  PassageOptions po;
  po.rtol = options_.rtol;
  po.atol = options_.atol;
  po.t_max = t_max_;
  const ExitRecord rec = integrate_in_disc(config_.bump(x.k), x.k, x.state, po);
  if (rec.status != PassageStatus::kExited) return std::nullopt;
  const Event ev = free_flight(config_, rec.exit_state, escape_radius_, x.k);
  if (ev.kind != EventKind::kEnterDisc) return std::nullopt;
  return EntryResult{ev.bump, ev.state};
}

ItineraryResult PoincareSystem::itinerary_of(const SectionPoint &x, std::size_t length) const {
  ItineraryResult out;
  if (length == 0) return out;
  out.word.push_back(x.k);
  out.points.push_back(x);
  SectionPoint cur = x;
  while (out.word.size() < length) {
    const MapResult r = poincare_map(cur);
    if (r.status == MapStatus::kEscape) {
      out.end = ItineraryEnd::kEscape;
      return out;
    }
    if (r.status == MapStatus::kCaptured) {
      out.end = ItineraryEnd::kCaptured;
      return out;
    }
    out.word.push_back(r.point.k);
    out.points.push_back(r.point);
    out.return_times.push_back(r.return_time);
    cur = r.point;
  }
  return out;
}

}  // namespace magshift
