#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "magshift/field.hpp"
#include "magshift/integrator.hpp"
#include "magshift/singlebump.hpp"

namespace magshift {

/// A point on the section segment from q_k to the anchor q_k*.
struct SectionPoint {
  std::size_t k = 0;
  double lambda = 0.0;
  int direction = 0;  // sign of (q - q_k) x v
  ParticleState state;
};

enum class MapStatus { kHit, kEscape, kCaptured };

struct MapResult {
  MapStatus status = MapStatus::kEscape;
  SectionPoint point;         // valid when status == kHit
  double return_time = 0.0;   // time from the start to the hit (or to the end)
  ParticleState final_state;  // last state reached
};

struct EntryResult {
  std::size_t k = 0;
  ParticleState state;
};

struct PoincareOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double t_max = 0.0;          // per map evaluation, 0 = default cap
  double escape_radius = 0.0;  // 0 = default
  std::optional<double> capture_band;
};

enum class ItineraryEnd { kComplete, kEscape, kCaptured };

struct ItineraryResult {
  std::vector<std::size_t> word;  // 0-based bump indices
  std::vector<double> return_times;
  ItineraryEnd end = ItineraryEnd::kComplete;
  std::vector<SectionPoint> points;
};

/// Sections P_{k,E}, the return map p and the maps u, v.
class PoincareSystem {
 public:
  PoincareSystem(FieldConfig config, EnergyAnalysis analysis, std::vector<Vec2> anchors,
                 PoincareOptions options = {});

  const FieldConfig &config() const { return config_; }
  const EnergyAnalysis &analysis() const { return analysis_; }
  const std::vector<Vec2> &anchors() const { return anchors_; }
  const PoincareOptions &options() const { return options_; }

  /// Builds a section point from a state lying on the section of bump k.
  SectionPoint section_point(std::size_t k, const ParticleState &state) const;

  /// State at parameter lambda with velocity v.
  SectionPoint section_point(std::size_t k, double lambda, const Vec2 &v) const;

  MapResult poincare_map(const SectionPoint &x) const;
  std::optional<SectionPoint> entry_to_section_u(std::size_t k, const ParticleState &entry) const;
  std::optional<EntryResult> section_to_entry_v(const SectionPoint &x) const;
  ItineraryResult itinerary_of(const SectionPoint &x, std::size_t length) const;

 private:
  MapResult first_crossing(ParticleState state, std::optional<std::size_t> inside,
                           bool skip_initial) const;

  FieldConfig config_;
  EnergyAnalysis analysis_;
  std::vector<Vec2> anchors_;
  PoincareOptions options_;
  double t_max_;
  double escape_radius_;
};

}  // namespace magshift
