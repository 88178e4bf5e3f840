#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "magshift/field.hpp"
#include "magshift/singlebump.hpp"

namespace magshift {

enum class EventKind {
  kEnterDisc,
  kExitDisc,
  kCrossSection,
  kTurningPoint,
  kEscape,
  kTimeCap,
  kCaptured,
};

struct Event {
  EventKind kind = EventKind::kEnterDisc;
  std::size_t bump = 0;  // 0-based; unused for escape/time cap
  int direction = 0;     // section crossings: sign of (q - c) x v
  double lambda = 0.0;   // section crossings: position along the section
  double t = 0.0;
  ParticleState state;
};

std::string event_label(const Event &event);

/// Capture box around the outermost circular orbit: flagged once
/// |r - R+| <= band and |dr/dt| <= band * sqrt(2E) / R+.
struct CaptureBox {
  double r_plus = 0.0;
  double band = 0.0;
};

struct PassageOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Duration cap for this passage (not an absolute time).
  double t_max = 0.0;
  /// Section segment from the centre to this point.
  std::optional<Vec2> section_anchor;
  /// The start state lies on the section; ignore that root.
  bool skip_initial_section = false;
  /// Stop at the n-th section crossing (0 = never).
  int stop_after_section_hits = 0;
  std::optional<CaptureBox> capture;
  bool record_samples = false;
  bool record_turning_points = false;
  double energy_tol = 1e-8;
  double h_min = 1e-13;
};

enum class PassageStatus { kExited, kCaptured, kSectionStop };

/// Result of one passage through a support disc.
struct ExitRecord {
  PassageStatus status = PassageStatus::kExited;
  ParticleState entry_state;
  /// Exit state, or the terminal state when captured or stopped.
  ParticleState exit_state;
  double exit_time = 0.0;  // duration T(x) of the passage
  double winding = 0.0;    // accumulated polar angle about the centre
  int section_hits = 0;
  double min_radius = 0.0;
  bool hit_time_cap = false;
  std::vector<Event> events;
  std::vector<ParticleState> samples;
};

/// Default cap 10^3 * 2 pi R_max / sqrt(2E).
double default_t_max(const FieldConfig &config, double energy);

/// Default escape radius: twice the diameter of the bounding circle.
double default_escape_radius(const FieldConfig &config);

/// Exact straight-line motion to the first disc entry or to the escape
/// circle. Discs listed in `skip` are ignored (a chord cannot re-enter the
/// disc it just left).
Event free_flight(const FieldConfig &config, const ParticleState &state, double escape_radius,
                  std::optional<std::size_t> skip = std::nullopt);

/// Adaptive DOP853 integration of q'' = B(q) J q' inside one disc.
ExitRecord integrate_in_disc(const Bump &bump, std::size_t index, const ParticleState &state,
                             const PassageOptions &options);

struct StopCondition {
  int section_hits = 0;  // stop at the n-th section crossing (0 = never)
  double t_max = 0.0;    // absolute duration cap (0 = default)
  double escape_radius = 0.0;
};

struct FlowOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  std::vector<Vec2> anchors;  // one per bump, or empty for no sections
  std::optional<double> capture_band;
  bool record_samples = true;
};

struct Trajectory {
  std::vector<ParticleState> samples;
  std::vector<Event> events;
};

Trajectory flow(const FieldConfig &config, const ParticleState &state, const StopCondition &stop,
                const FlowOptions &options = {});

/// CSV with header t,qx,qy,vx,vy,event and 17 significant digits.
void write_trajectory_csv(std::ostream &out, const Trajectory &trajectory);

}  // namespace magshift
