#include <cmath>
#include <optional>

#include <gtest/gtest.h>

#include "magshift/errors.hpp"
#include "magshift/shooting.hpp"
#include "oracles.hpp"

using namespace magshift;

namespace {

struct Replay {
  bool on_prefix = true;
  int hits = 0;            // section hits in the last block's bump
  bool exited = false;     // left that bump before the hit limit
  std::optional<double> w;  // normalized clearance about the next bump
  std::optional<double> next_entry_momentum;
};

// Re-runs a parameter from scratch: follows the blocks before `stage`
// (1-based) and reports what happens inside the stage's bump.
Replay replay(const ShootingContext &ctx, const ShootResult &res, double s, int stage) {
  const FieldConfig &cfg = ctx.config();
  const double e = ctx.analysis().energy;
  const double speed = ctx.analysis().speed();
  std::vector<std::pair<std::size_t, int>> blocks;
  for (std::size_t sym : res.word) {
    if (!blocks.empty() && blocks.back().first == sym) {
      ++blocks.back().second;
    } else {
      blocks.push_back({sym, 1});
    }
  }
  ParticleState st = entry_state(cfg.bump(res.entry_bump), e, res.entry_angle, s);
  Replay out;
  for (int i = 0; i < stage; ++i) {
    const std::size_t k = blocks[i].first;
    PassageOptions po;
    po.rtol = 1e-12;
    po.atol = 1e-14;
    po.section_anchor = ctx.report().anchors[k];
    po.stop_after_section_hits = blocks[i].second + 2;
    po.t_max = 1e4;
    const ExitRecord rec = integrate_in_disc(cfg.bump(k), k, st, po);
    const bool last = i + 1 == stage;
    if (last) {
      out.hits = rec.section_hits;
      out.exited = rec.status == PassageStatus::kExited;
    } else if (rec.status != PassageStatus::kExited || rec.section_hits != blocks[i].second) {
      out.on_prefix = false;
      return out;
    }
    if (rec.status != PassageStatus::kExited) return out;
    const Event ev = free_flight(cfg, rec.exit_state, default_escape_radius(cfg), k);
    if (last) {
      if (static_cast<std::size_t>(stage) < blocks.size()) {
        const std::size_t l = blocks[stage].first;
        const DistanceWindow win = distance_window(cfg, ctx.analysis(), l);
        const Vec2 cl = cfg.bump(l).center;
        const double d = cross(rec.exit_state.q - cl, rec.exit_state.v) / speed;
        out.w = (d - win.tangent) / (win.critical - win.tangent);
        if (ev.kind == EventKind::kEnterDisc && ev.bump == l) {
          out.next_entry_momentum = magnetic_momentum(cfg.bump(l), ev.state);
        }
      }
      return out;
    }
    if (ev.kind != EventKind::kEnterDisc || ev.bump != blocks[i + 1].first) {
      out.on_prefix = false;
      return out;
    }
    st = ev.state;
  }
  return out;
}

bool holds(const ShootingContext &ctx, const ShootResult &res, const ShootBracket &br, double s) {
  const Replay r = replay(ctx, res, s, br.stage);
  if (br.predicate.rfind("hits>=", 0) == 0) {
    const int target = std::stoi(br.predicate.substr(6));
    return !r.exited || r.hits >= target;
  }
  const double level = br.predicate == "w>=0" ? 0.0 : 1.0;
  EXPECT_TRUE(r.w.has_value()) << br.predicate << " at " << s;
  return r.w.value_or(-1.0) >= level;
}

const ShootingContext &reference_pair() {
  static const ShootingContext ctx(oracle::load("reference_pair.json"), 0.5);
  return ctx;
}

}  // namespace

TEST(Shoot, ExamplePairTransition) {
  const ShootingContext ctx(oracle::load("example_pair.json"), 0.5);
  const ShootResult r = shoot_prefix(ctx, {0, 1});
  EXPECT_TRUE(r.verified);
  EXPECT_EQ(r.realized, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.return_times.size(), 1u);
  EXPECT_NEAR(energy(r.initial_state), 0.5, 1e-15);
  EXPECT_GT(r.parameter, -1.0);
  EXPECT_LT(r.parameter, ctx.analysis().at(0).i_plus);
}

TEST(Shoot, RepeatedSymbolSitsNearCriticalMomentum) {
  const ShootingContext &ctx = reference_pair();
  const ShootResult r = shoot_prefix(ctx, {0, 0, 0});
  ASSERT_TRUE(r.verified);
  const double ip = ctx.analysis().at(0).i_plus;
  EXPECT_LT(r.parameter, ip);
  EXPECT_LT(ip - r.parameter, 1e-2);
  // All three hits happen in one passage.
  const Replay once = replay(ctx, r, r.parameter, 1);
  EXPECT_EQ(once.hits, 3);
  EXPECT_TRUE(once.exited);
}

TEST(Shoot, SlowlyWindingBumpRefusesLongConstantWords) {
  // Three hits in one passage of 10 (1 - r) need I within about 1e-17 of I+.
  const ShootingContext ctx(oracle::load("example_pair.json"), 0.5);
  try {
    shoot_prefix(ctx, {0, 0, 0});
    FAIL() << "expected a stage-1 failure";
  } catch (const NumericalError &e) {
    EXPECT_NE(std::string(e.what()).find("stage 1"), std::string::npos) << e.what();
  }
}

TEST(Shoot, SingleSymbolAndShortShifts) {
  const ShootingContext &ctx = reference_pair();
  for (std::size_t k : {0u, 1u}) {
    const ShootResult r = shoot_prefix(ctx, {k});
    EXPECT_TRUE(r.verified);
    EXPECT_EQ(r.brackets.size(), 2u);
  }
  for (std::size_t len : {1u, 2u}) {
    const ShiftReport rep = verify_full_shift(ctx, len);
    EXPECT_EQ(rep.total, len == 1 ? 2u : 4u);
    EXPECT_EQ(rep.realized, rep.total);
    EXPECT_TRUE(rep.failures.empty());
  }
}

TEST(Shoot, BracketsAreSoundAndNested) {
  const ShootingContext &ctx = reference_pair();
  for (const auto &word : std::vector<std::vector<std::size_t>>{{0, 1}, {1, 0, 0, 1}, {0, 1, 1}}) {
    const ShootResult r = shoot_prefix(ctx, word);
    ASSERT_TRUE(r.verified) << format_word(word);
    // Per stage: hits>=j, hits>=j+1 (its a, b is the j-hit interval), then
    // w>=0 and w>=1 (its a, b is the transported window). Every bracket
    // lies inside the last window, and each window inside the previous one.
    double outer_lo = std::min(-ctx.analysis().speed(), ctx.analysis().at(word[0]).i_plus);
    double outer_hi = std::max(-ctx.analysis().speed(), ctx.analysis().at(word[0]).i_plus);
    int stage = 0, pos = 0;
    for (const ShootBracket &br : r.brackets) {
      EXPECT_FALSE(holds(ctx, r, br, br.lo)) << format_word(word) << " " << br.predicate;
      EXPECT_TRUE(holds(ctx, r, br, br.hi)) << format_word(word) << " " << br.predicate;
      EXPECT_FALSE(br.prefix.empty());
      pos = br.stage == stage ? pos + 1 : 0;
      stage = br.stage;
      EXPECT_GE(std::min(br.lo, br.hi), outer_lo) << format_word(word) << " " << br.predicate;
      EXPECT_LE(std::max(br.lo, br.hi), outer_hi) << format_word(word) << " " << br.predicate;
      if (pos == 1 || pos == 3) {
        const double lo = std::min(br.a, br.b), hi = std::max(br.a, br.b);
        EXPECT_GE(lo, outer_lo);
        EXPECT_LE(hi, outer_hi);
        outer_lo = lo;
        outer_hi = hi;
      }
    }
    EXPECT_GE(r.parameter, outer_lo);
    EXPECT_LE(r.parameter, outer_hi);
  }
}

TEST(Shoot, HitCountIsMonotoneTowardCriticalEnd) {
  const ShootingContext &ctx = reference_pair();
  const ShootResult r = shoot_prefix(ctx, {0, 1});
  ASSERT_TRUE(r.verified);
  auto check = [&](int stage, double a, double b) {
    int prev = -1;
    for (int i = 0; i < 1000; ++i) {
      const double s = a + (b - a) * (i + 0.5) / 1000.0;
      const Replay rp = replay(ctx, r, s, stage);
      ASSERT_TRUE(rp.on_prefix) << s;
      const int hits = rp.exited ? rp.hits : 1000;
      EXPECT_GE(hits, prev) << "stage " << stage << " i=" << i;
      prev = hits;
    }
  };
  // Stage 1 over the whole entry range, stage 2 over the transported window.
  check(1, -ctx.analysis().speed(), ctx.analysis().at(0).i_plus);
  const ShootBracket *window = nullptr;
  for (const ShootBracket &br : r.brackets) {
    if (br.stage == 1 && br.predicate == "w>=1") window = &br;
  }
  ASSERT_NE(window, nullptr);
  check(2, window->a, window->b);
}

TEST(Shoot, TransportedEndpointsReachTangentAndCriticalMomenta) {
  const ShootingContext &ctx = reference_pair();
  const ShootResult r = shoot_prefix(ctx, {0, 1, 0});
  ASSERT_TRUE(r.verified);
  const double speed = ctx.analysis().speed();
  for (const ShootBracket &br : r.brackets) {
    if (br.predicate != "w>=1") continue;
    const std::size_t l = r.word[br.prefix.size()];
    const Replay at_a = replay(ctx, r, br.a, br.stage);
    const Replay at_b = replay(ctx, r, br.b, br.stage);
    ASSERT_TRUE(at_a.w && at_b.w);
    EXPECT_NEAR(*at_a.w, 0.0, 1e-4);
    EXPECT_NEAR(*at_b.w, 1.0, 1e-4);
    const double tangent = -ctx.analysis().at(l).sign * ctx.config().bump(l).radius() * speed;
    if (at_a.next_entry_momentum) EXPECT_NEAR(*at_a.next_entry_momentum, tangent, 1e-4);
    ASSERT_TRUE(at_b.next_entry_momentum);
    EXPECT_NEAR(*at_b.next_entry_momentum, ctx.analysis().at(l).i_plus, 1e-4);
  }
}

TEST(Shoot, MixedSignsAndMirror) {
  for (const char *name : {"reference_pair_mirrored.json", "reference_pair_mixed.json"}) {
    const ShootingContext ctx(oracle::load(name), 0.5);
    for (const auto &word : std::vector<std::vector<std::size_t>>{{0, 1}, {1, 0}, {0, 1, 1, 0}}) {
      const ShootResult r = shoot_prefix(ctx, word);
      EXPECT_TRUE(r.verified) << name << " " << format_word(word);
    }
  }
}

TEST(Shoot, RefusesConfigurationsOutOfGeneralPosition) {
  EXPECT_THROW(ShootingContext(oracle::load("reference_triangle_shrunk.json"), 0.5), GeometryError);
  const ShootingContext &ctx = reference_pair();
  EXPECT_THROW(shoot_prefix(ctx, {}), ValidationError);
  EXPECT_THROW(shoot_prefix(ctx, {0, 2}), ValidationError);
}

TEST(Entropy, Formula) {
  ShootResult a, b;
  a.return_times = {1.0, 2.5};
  b.return_times = {2.0};
  const EntropyBound eb = entropy_lower_bound(2, 0.5, {a, b});
  EXPECT_DOUBLE_EQ(eb.t_sup, 2.5);
  EXPECT_DOUBLE_EQ(eb.h_lower, std::log(2.0) / 2.5);
  EXPECT_DOUBLE_EQ(eb.c_prime, 2.5 * std::sqrt(0.5));
  EXPECT_EQ(eb.samples, 3u);
  EXPECT_EQ(entropy_lower_bound(1, 0.5, {a}).h_lower, 0.0);
  EXPECT_THROW(entropy_lower_bound(2, 0.5, {}), DomainError);
  EXPECT_THROW(entropy_lower_bound(2, 0.5, {ShootResult{}}), DomainError);
}

TEST(Words, PeriodicPrefixAndFormatting) {
  EXPECT_EQ(periodic_prefix({0, 1, 2}, 7), (std::vector<std::size_t>{0, 1, 2, 0, 1, 2, 0}));
  EXPECT_EQ(periodic_prefix({1}, 3), (std::vector<std::size_t>{1, 1, 1}));
  EXPECT_THROW(periodic_prefix({}, 3), ValidationError);
  EXPECT_EQ(parse_word("1,2, 2,3", 3), (std::vector<std::size_t>{0, 1, 1, 2}));
  EXPECT_EQ(format_word({0, 1, 1, 2}), "1,2,2,3");
  EXPECT_THROW(parse_word("1,4", 3), ValidationError);
  EXPECT_THROW(parse_word("0", 3), ValidationError);
  EXPECT_THROW(parse_word("1,x", 3), ValidationError);
  EXPECT_THROW(parse_word("", 3), ValidationError);
}
