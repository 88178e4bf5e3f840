#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "magshift/geometry.hpp"
#include "magshift/poincare.hpp"

namespace magshift {

struct ShootOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  int max_iterations = 200;
  /// Stop a bisection once the bracket is this narrow (0: down to adjacent doubles).
  double tol = 0.0;
  int scan_points = 48;
  int max_scan_points = 4096;
};

/// Everything the shooting code needs at one energy. Construction refuses
/// configurations that are not in general position.
class ShootingContext {
 public:
  ShootingContext(const FieldConfig &config, double energy, ShootOptions options = {});

  const FieldConfig &config() const { return system_->config(); }
  const EnergyAnalysis &analysis() const { return system_->analysis(); }
  const GeneralPositionReport &report() const { return report_; }
  const PoincareSystem &system() const { return *system_; }
  const ShootOptions &options() const { return options_; }

 private:
  GeneralPositionReport report_;
  std::unique_ptr<PoincareSystem> system_;
  ShootOptions options_;
};

/// One bisection certificate: the predicate is false at `lo` and true at `hi`.
struct ShootBracket {
  int stage = 0;
  std::size_t bump = 0;
  std::string predicate;
  double lo = 0.0;
  double hi = 0.0;
  std::string lo_class;
  std::string hi_class;
  /// Stage interval (tangent side a, critical side b) after this step.
  double a = 0.0;
  double b = 0.0;
  std::vector<std::size_t> prefix;
};

struct ShootResult {
  std::vector<std::size_t> word;  // 0-based
  std::size_t entry_bump = 0;
  double entry_angle = 0.0;
  double parameter = 0.0;  // entry momentum
  ParticleState initial_state;
  double bracket_width = 0.0;
  std::vector<double> return_times;
  std::vector<std::size_t> realized;
  bool verified = false;
  std::vector<ShootBracket> brackets;
};

/// Realizes a finite itinerary by nested bisection over the entry momentum.
/// Throws NumericalError naming the stage if a bracket collapses.
ShootResult shoot_prefix(const ShootingContext &ctx, const std::vector<std::size_t> &word);

/// Periodic word realized as a finite prefix of the requested length.
std::vector<std::size_t> periodic_prefix(const std::vector<std::size_t> &period, std::size_t length);

struct ShiftFailure {
  std::vector<std::size_t> word;
  std::string message;
};

struct ShiftReport {
  std::size_t length = 0;
  std::size_t total = 0;
  std::size_t realized = 0;
  double max_bracket_width = 0.0;
  double max_return_time = 0.0;
  std::vector<ShootResult> results;
  std::vector<ShiftFailure> failures;
};

/// Worker count: MAGSHIFT_THREADS if set, else hardware concurrency.
unsigned worker_count();

ShiftReport verify_full_shift(const ShootingContext &ctx, std::size_t length);

struct EntropyBound {
  double h_lower = 0.0;
  double c_prime = 0.0;
  double t_sup = 0.0;
  std::size_t samples = 0;
};

/// h >= ln(n) / T_sup with T_sup the largest observed return time.
EntropyBound entropy_lower_bound(std::size_t n, double energy,
                                 const std::vector<ShootResult> &samples);

std::string format_word(const std::vector<std::size_t> &word);
std::vector<std::size_t> parse_word(const std::string &text, std::size_t n);

}  // namespace magshift
