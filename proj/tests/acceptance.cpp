// Acceptance run: one PASS/FAIL line per criterion, with INFO lines for the
// measured quantities. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "magshift/geometry.hpp"
#include "magshift/integrator.hpp"
#include "magshift/shooting.hpp"
#include "oracles.hpp"

using namespace magshift;

namespace {

int failures = 0;

void info(const std::string &msg) { fmt::print("  INFO {}\n", msg); }

void criterion(int id, const std::string &name, double limit_s, const std::function<bool()> &body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string err;
  try {
    ok = body();
  } catch (const std::exception &e) {
    err = e.what();
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = dt < limit_s;
  const bool pass = ok && in_time;
  if (!pass) ++failures;
  fmt::print("{} C{} {} ({:.2f} s, limit {:.0f} s){}{}\n", pass ? "PASS" : "FAIL", id, name, dt,
             limit_s, in_time ? "" : " over time", err.empty() ? "" : " error: " + err);
  std::fflush(stdout);
}

using Nodes = std::vector<std::pair<double, double>>;

Bump bump_of(const Nodes &nodes) {
  std::vector<ProfileNode> pn;
  for (auto [r, b] : nodes) pn.push_back({r, b});
  return {{0.0, 0.0}, RadialProfile::piecewise_linear(pn)};
}

const Nodes kExample = {{0.0, 10.0}, {1.0, 0.0}};
const Nodes kReference = {{0.0, 4.1}, {1.0, 0.0}};
const Nodes kWiggly = {{0.0, 3.0}, {0.4, -2.0}, {1.0, 1.5}, {1.6, 0.0}};

struct Passage {
  Nodes nodes;
  ParticleState entry;
};

// The conservation suite, shared with the oracle comparison.
std::vector<Passage> conservation_suite() {
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Passage> out;
  const Nodes *profiles[] = {&kExample, &kReference, &kWiggly};
  for (int i = 0; i < 100; ++i) {
    const Nodes &nodes = *profiles[i % 3];
    const Bump b = bump_of(nodes);
    const double rr = b.radius();
    double m = rr * (2.0 * u(rng) - 1.0);
    if (&nodes != &kWiggly) {
      // Keep clear of the slow spiral near I+.
      const double ip = critical_momentum(b, 0.5).i_plus;
      if (std::abs(m - ip) < 1e-3) m = ip - 1e-3;
    }
    out.push_back({nodes, entry_state(b, 0.5, kTwoPi * u(rng), m)});
  }
  return out;
}

PassageOptions tight() {
  PassageOptions po;
  po.rtol = 1e-12;
  po.atol = 1e-14;
  po.t_max = 1e4;
  return po;
}

double cos_normal(const ParticleState &s) { return dot(s.v, s.q) / (norm(s.v) * norm(s.q)); }

}  // namespace

int main() {
  fmt::print("acceptance run\n");

  criterion(1, "worked example B = 10(1 - r), E = 1/2", 1.0, [] {
    const Bump b = bump_of(kExample);
    const CircularRadii c = circular_radii(b, 0.5);
    const CriticalMomentum cm = critical_momentum(b, 0.5);
    info(fmt::format("radii {} R+ = {:.6f} R- = {:.6f} I+ = {:.6f}", c.radii.size(), c.r_plus,
                     c.r_minus, cm.i_plus));
    return c.radii.size() == 2 && std::abs(c.radii[0] - 0.1127) <= 1e-3 &&
           std::abs(c.r_plus - 0.8873) <= 1e-3 && std::abs(cm.i_plus + 0.946) <= 1e-3;
  });

  criterion(2, "conservation suite, 100 passages", 30.0, [] {
    double e_drift = 0.0, i_drift = 0.0, cos_err = 0.0;
    for (const Passage &p : conservation_suite()) {
      const Bump b = bump_of(p.nodes);
      PassageOptions po = tight();
      po.record_samples = true;
      const ExitRecord rec = integrate_in_disc(b, 0, p.entry, po);
      if (rec.status != PassageStatus::kExited) return false;
      const double i0 = magnetic_momentum(b, p.entry);
      for (const ParticleState &s : rec.samples) {
        e_drift = std::max(e_drift, std::abs(energy(s) - 0.5) / 0.5);
        i_drift = std::max(i_drift, std::abs(magnetic_momentum(b, s) - i0));
      }
      cos_err = std::max(cos_err, std::abs(cos_normal(rec.exit_state) + cos_normal(p.entry)));
    }
    info(fmt::format("max energy drift {:.3g}, momentum drift {:.3g}, cosine asymmetry {:.3g}",
                     e_drift, i_drift, cos_err));
    return e_drift <= 1e-9 && i_drift <= 1e-7 && cos_err <= 1e-6;
  });

  criterion(3, "classification by momentum", 120.0, [] {
    const Bump b = bump_of(kExample);
    const CriticalMomentum cm = critical_momentum(b, 0.5);
    const double r_plus = circular_radii(b, 0.5).r_plus;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool ok = true;
    double worst_margin = 1e300;
    for (int i = 0; i < 50; ++i) {
      const double m = -1.0 + (cm.i_plus - 1e-2 + 1.0) * u(rng);
      const ExitRecord rec = integrate_in_disc(b, 0, entry_state(b, 0.5, kTwoPi * u(rng), m), tight());
      ok = ok && rec.status == PassageStatus::kExited && rec.min_radius > r_plus;
      worst_margin = std::min(worst_margin, rec.min_radius - r_plus);
    }
    info(fmt::format("50 sub-critical entries exit, smallest min radius - R+ = {:.3g}", worst_margin));
    double worst_r = 0.0;
    int captured = 0;
    for (int i = 0; i < 10; ++i) {
      const double m = cm.i_plus + 1e-10 * (-1.0 + 2.0 * i / 9.0);
      PassageOptions po = tight();
      po.capture = CaptureBox{r_plus, 1e-3};
      const ExitRecord rec = integrate_in_disc(b, 0, entry_state(b, 0.5, 0.3 * i, m), po);
      if (rec.status == PassageStatus::kCaptured) ++captured;
      worst_r = std::max(worst_r, std::abs(norm(rec.exit_state.q) - r_plus));
    }
    info(fmt::format("{}/10 near-critical entries captured, max |r - R+| = {:.3g}", captured, worst_r));
    return ok && captured == 10 && worst_r <= 1e-3;
  });

  criterion(4, "escape estimate |q(t)|^2 >= |q0|^2 + delta t^2", 60.0, [] {
    const Bump b = bump_of(kExample);
    const double r_plus = circular_radii(b, 0.5).r_plus;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 1e300;
    for (int i = 0; i < 50; ++i) {
      const double r0 = r_plus + 1e-3 + (1.0 - r_plus - 2e-3) * u(rng);
      const double a = kTwoPi * u(rng);
      const Vec2 q0 = polar(r0, a);
      // Outward or tangential: angle to the radial direction within pi/2.
      const Vec2 v0 = polar(1.0, a + (u(rng) - 0.5) * kPi);
      const double delta = escape_delta(b, 0.5, r0);
      ParticleState st{q0, v0, 0.0};
      bool inside = true;
      const double t_end = 10.0;
      for (int j = 1; j <= 1000; ++j) {
        const double t = t_end * j / 1000.0;
        if (inside) {
          PassageOptions po = tight();
          po.t_max = t - st.t;
          const ExitRecord rec = integrate_in_disc(b, 0, st, po);
          st = rec.exit_state;
          inside = rec.hit_time_cap;
        }
        const Vec2 q = st.q + (t - st.t) * st.v;
        worst = std::min(worst, norm2(q) - (r0 * r0 + delta * t * t));
      }
    }
    info(fmt::format("smallest margin over 50 x 1000 samples {:.3g}", worst));
    return worst >= -1e-8;
  });

  criterion(5, "winding diverges near I+", 120.0, [] {
    const Bump b = bump_of(kReference);
    const double ip = critical_momentum(b, 0.5).i_plus;
    double prev = 0.0, at_end = 0.0;
    bool monotone = true;
    for (int i = 0; i < 1000; ++i) {
      const double gap = std::pow(10.0, -1.0 - 9.0 * i / 999.0);
      const ExitRecord rec = integrate_in_disc(b, 0, entry_state(b, 0.5, 0.0, ip - gap), tight());
      if (rec.status != PassageStatus::kExited) return false;
      const double w = std::abs(rec.winding);
      if (w < prev) monotone = false;
      prev = w;
      at_end = w;
    }
    info(fmt::format("4.1 (1 - r): |theta| monotone = {}, |theta| at I+ - 1e-10 = {:.4f} (4 pi = {:.4f})",
                     monotone, at_end, 2.0 * kTwoPi));
    const Bump ex = bump_of(kExample);
    const double ip_ex = critical_momentum(ex, 0.5).i_plus;
    const ExitRecord slow = integrate_in_disc(ex, 0, entry_state(ex, 0.5, 0.0, ip_ex - 1e-10), tight());
    info(fmt::format("10 (1 - r) for comparison: |theta| at I+ - 1e-10 = {:.4f}", std::abs(slow.winding)));
    return monotone && at_end > 2.0 * kTwoPi;
  });

  criterion(6, "general position and corridor boundary lines", 60.0, [] {
    const FieldConfig tri = oracle::load("reference_triangle.json");
    const GeneralPositionReport ok = check_general_position(analyze(tri, 0.5), tri);
    const FieldConfig shrunk = oracle::load("reference_triangle_shrunk.json");
    const GeneralPositionReport bad = check_general_position(analyze(shrunk, 0.5), shrunk);
    bool witness = false;
    for (const Violation &v : bad.violations) {
      if (v.condition == 1) witness = true;
    }
    info(fmt::format("triangle holds = {}, shrunk holds = {} with {} violations", ok.holds, bad.holds,
                     bad.violations.size()));
    double worst_tangent = 0.0, worst_critical = 0.0;
    int checks = 0;
    for (const char *name : {"reference_pair.json", "reference_pair_mirrored.json",
                             "reference_pair_mixed.json", "example_pair.json"}) {
      const FieldConfig cfg = oracle::load(name);
      const EnergyAnalysis an = analyze(cfg, 0.5);
      for (std::size_t k = 0; k < 2; ++k) {
        const std::size_t l = 1 - k;
        const Corridor c = corridor(an, cfg, k, l);
        const Bump &bk = cfg.bump(k);
        const Bump &bl = cfg.bump(l);
        for (const CorridorLine *line : {&c.line1, &c.line2}) {
          // Start on the line well before D_k and fly through both discs'
          // exteriors: the line's own chord through D_k is skipped.
          const double along = dot(bk.center - line->point, line->direction);
          const Vec2 foot = line->point + along * line->direction;
          const double half = std::sqrt(std::max(0.0, 1.0 - norm2(foot - bk.center)));
          const ParticleState st{foot + half * line->direction, an.speed() * line->direction, 0.0};
          ++checks;
          if (std::abs(std::abs(line->d_l) - bl.radius()) < 1e-12) {
            worst_tangent = std::max(
                worst_tangent, std::abs(std::abs(line->signed_distance(bl.center)) - bl.radius()));
          } else {
            const Event ev = free_flight(cfg, st, 1e3, k);
            if (ev.kind != EventKind::kEnterDisc || ev.bump != l) return false;
            worst_critical = std::max(
                worst_critical, std::abs(magnetic_momentum(bl, ev.state) - an.at(l).i_plus));
          }
        }
      }
    }
    info(fmt::format("{} boundary lines: tangent miss error {:.3g}, critical entry error {:.3g}", checks,
                     worst_tangent, worst_critical));
    return ok.holds && ok.anchors.size() == 3 && !bad.holds && witness && worst_tangent <= 1e-9 &&
           worst_critical <= 1e-6;
  });

  ShiftReport tri_half;
  criterion(7, "full shift: n = 2, L = 4 and n = 3, L = 3", 900.0, [&] {
    const ShootingContext pair(oracle::load("reference_pair.json"), 0.5);
    const ShiftReport a = verify_full_shift(pair, 4);
    const ShootingContext tri(oracle::load("reference_triangle.json"), 0.5);
    tri_half = verify_full_shift(tri, 3);
    info(fmt::format("pair: {}/{} words, max width {:.3g}, max return time {:.4f}", a.realized, a.total,
                     a.max_bracket_width, a.max_return_time));
    info(fmt::format("triangle: {}/{} words, max width {:.3g}, max return time {:.4f}",
                     tri_half.realized, tri_half.total, tri_half.max_bracket_width,
                     tri_half.max_return_time));
    for (const ShiftFailure &f : a.failures) info("pair failure " + format_word(f.word) + ": " + f.message);
    for (const ShiftFailure &f : tri_half.failures) {
      info("triangle failure " + format_word(f.word) + ": " + f.message);
    }
    return a.realized == 16 && a.total == 16 && tri_half.realized == 27 && tri_half.total == 27;
  });

  criterion(8, "entropy bound and c' at E = 1/2 and 1/8", 600.0, [&] {
    const FieldConfig cfg = oracle::load("reference_triangle.json");
    if (tri_half.results.empty()) {
      const ShootingContext ctx(cfg, 0.5);
      tri_half = verify_full_shift(ctx, 3);
    }
    const EntropyBound hi = entropy_lower_bound(3, 0.5, tri_half.results);
    const ShootingContext low_ctx(cfg, 0.125);
    const ShiftReport low = verify_full_shift(low_ctx, 3);
    const EntropyBound lo = entropy_lower_bound(3, 0.125, low.results);
    const double ratio = lo.c_prime / hi.c_prime;
    info(fmt::format("E = 0.5: T_sup {:.4f}, h >= {:.4f}, c' = {:.4f} from {} return times", hi.t_sup,
                     hi.h_lower, hi.c_prime, hi.samples));
    info(fmt::format("E = 0.125: {}/{} words, T_sup {:.4f}, h >= {:.4f}, c' = {:.4f}", low.realized,
                     low.total, lo.t_sup, lo.h_lower, lo.c_prime));
    info(fmt::format("c' ratio {:.4f}", ratio));
    return hi.h_lower > 0.0 && std::abs(ratio - 1.0) <= 0.25;
  });

  criterion(9, "adaptive integrator vs fixed-step RK4, h = 1e-5", 300.0, [] {
    double worst = 0.0;
    for (const Passage &p : conservation_suite()) {
      const Bump b = bump_of(p.nodes);
      const ExitRecord rec = integrate_in_disc(b, 0, p.entry, tight());
      const Nodes nodes = p.nodes;
      const oracle::Exit ref = oracle::rk4_exit([&](double r) { return oracle::profile_value(nodes, r); },
                                                b.center, b.radius(), p.entry.q, p.entry.v, 1e-5, 1e4);
      if (!ref.exited || rec.status != PassageStatus::kExited) return false;
      worst = std::max(worst, norm(rec.exit_state.q - ref.q));
    }
    info(fmt::format("max exit position difference {:.3g}", worst));
    return worst <= 1e-6;
  });

  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
