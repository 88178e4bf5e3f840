#include "magshift/shooting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "magshift/errors.hpp"

namespace magshift {

namespace {

struct Block {
  std::size_t k;
  int j;
};

std::vector<Block> blocks_of(const std::vector<std::size_t> &word) {
  std::vector<Block> out;
  for (std::size_t s : word) {
    if (!out.empty() && out.back().k == s) {
      ++out.back().j;
    } else {
      out.push_back({s, 1});
    }
  }
  return out;
}

struct Probe {
  bool value = false;
  std::string label;
};

struct PassageRun {
  bool deviated = false;
  std::string why;
  int hits = 0;
  PassageStatus status = PassageStatus::kExited;
  ParticleState exit;
};

struct WSample {
  bool valid = false;
  double w = 0.0;
  double psi = 0.0;
};

class Shooter {
 public:
  Shooter(const ShootingContext &ctx, const std::vector<std::size_t> &word)
      : ctx_(ctx), word_(word), blocks_(blocks_of(word)) {
    const auto &cfg = ctx_.config();
    speed_ = ctx_.analysis().speed();
    escape_radius_ = default_escape_radius(cfg);
    k0_ = blocks_.front().k;
    if (blocks_.size() > 1) {
      const std::size_t k1 = blocks_[1].k;
      for (const Corridor &c : ctx_.report().corridors) {
        if (c.k == k1 && c.l == k0_) phi0_ = c.b_lk.mid();
      }
    } else {
      phi0_ = wrap_angle(ctx_.report().anchor_angles.at(k0_) + kPi);
    }
  }

  ShootResult run() {
    const auto &cfg = ctx_.config();
    const auto &an = ctx_.analysis();
    ShootResult res;
    res.word = word_;
    res.entry_bump = k0_;
    res.entry_angle = phi0_;

    const double rk0 = cfg.bump(k0_).radius();
    double a = -an.at(k0_).sign * rk0 * speed_;
    double b = an.at(k0_).i_plus;

    for (std::size_t m = 0; m < blocks_.size(); ++m) {
      const int j = blocks_[m].j;
      const std::size_t k = blocks_[m].k;
      prefix_.insert(prefix_.end(), static_cast<std::size_t>(j), k);

      auto hits_ge = [&](int target) {
        return [this, m, target](double s) {
          const PassageRun r = run_to(s, m, target);
          if (r.deviated) {
            throw NumericalError(fmt::format(
                "stage {}: bracket collapse at parameter {:.17g} ({})", m + 1, s, r.why));
          }
          const bool reached = r.status != PassageStatus::kExited;
          return Probe{reached, reached ? fmt::format("hits>={}", target)
                                        : fmt::format("hits={}", r.hits)};
        };
      };

      const auto [lo1, hi1] = bisect(hits_ge(j), a, b, m, k, fmt::format("hits>={}", j),
                                     "tangent end", "critical end", res);
      if (res.brackets.back().hi_class == "critical end") {
        throw NumericalError(fmt::format(
            "stage {}: no momentum below the critical value gives {} section hits in bump {} "
            "at double precision",
            m + 1, j, k + 1));
      }
      const Probe at_hi1 = hits_ge(j + 1)(hi1);
      if (at_hi1.value) {
        throw NumericalError(
            fmt::format("stage {}: no parameter with exactly {} section hits resolved", m + 1, j));
      }
      const auto [lo2, hi2] = bisect(hits_ge(j + 1), hi1, b, m, k,
                                     fmt::format("hits>={}", j + 1), at_hi1.label, "critical end",
                                     res);
      (void)lo1;
      (void)hi2;
      const double ja = hi1;
      const double jb = lo2;
      res.brackets.back().a = ja;
      res.brackets.back().b = jb;

      if (m + 1 == blocks_.size()) {
        res.parameter = ja + 0.5 * (jb - ja);
        res.bracket_width = std::abs(jb - ja);
        break;
      }
      const auto window = transport(m, ja, jb, res);
      a = window.first;
      b = window.second;
    }

    res.initial_state = gamma(res.parameter);
    res.realized.clear();
    const PoincareSystem &sys = ctx_.system();
    if (const auto first = sys.entry_to_section_u(k0_, res.initial_state)) {
      const ItineraryResult it = sys.itinerary_of(*first, word_.size());
      res.realized = it.word;
      res.return_times = it.return_times;
    }
    res.verified = res.realized == word_;
    return res;
  }

 private:
  ParticleState gamma(double s) const {
    return entry_state(ctx_.config().bump(k0_), ctx_.analysis().energy, phi0_, s);
  }

  double passage_cap(std::size_t k, int hits) const {
    const double rr = ctx_.config().bump(k).radius();
    const double rp = ctx_.analysis().at(k).r_plus;
    return 8.0 * (hits + 2) * kTwoPi * rr * rr / (rp * speed_);
  }

  PassageRun run_to(double s, std::size_t m, int stop_after) const {
    const auto &cfg = ctx_.config();
    const auto &opt = ctx_.options();
    ParticleState st = gamma(s);
    PassageRun out;
    for (std::size_t i = 0; i <= m; ++i) {
      const std::size_t k = blocks_[i].k;
      const int want = i < m ? blocks_[i].j + 1 : stop_after;
      PassageOptions po;
      po.rtol = opt.rtol;
      po.atol = opt.atol;
      po.section_anchor = ctx_.report().anchors[k];
      po.stop_after_section_hits = want;
      po.t_max = passage_cap(k, want);
      const ExitRecord rec = integrate_in_disc(cfg.bump(k), k, st, po);
      if (i == m) {
        out.hits = rec.section_hits;
        out.status = rec.status;
        out.exit = rec.exit_state;
        return out;
      }
      if (rec.status != PassageStatus::kExited || rec.section_hits != blocks_[i].j) {
        out.deviated = true;
        out.why = fmt::format("block {} gave {} hits instead of {}", i + 1, rec.section_hits,
                              blocks_[i].j);
        return out;
      }
      const Event ev = free_flight(cfg, rec.exit_state, escape_radius_, k);
      if (ev.kind != EventKind::kEnterDisc || ev.bump != blocks_[i + 1].k) {
        out.deviated = true;
        out.why = fmt::format("block {} did not transit to bump {}", i + 1, blocks_[i + 1].k + 1);
        return out;
      }
      st = ev.state;
    }
    return out;
  }

  WSample w_at(double s, std::size_t m) const {
    const auto &cfg = ctx_.config();
    const std::size_t k = blocks_[m].k;
    const std::size_t l = blocks_[m + 1].k;
    const PassageRun r = run_to(s, m, blocks_[m].j + 1);
    WSample out;
    if (r.deviated || r.status != PassageStatus::kExited || r.hits != blocks_[m].j) return out;
    const Vec2 cl = cfg.bump(l).center;
    const Vec2 q = r.exit.q;
    const Vec2 v = r.exit.v;
    if (!(dot(cl - q, v) > 0.0)) return out;
    const Event ev = free_flight(cfg, r.exit, escape_radius_, k);
    if (ev.kind == EventKind::kEnterDisc && ev.bump != l) return out;
    const DistanceWindow win = distance_window(cfg, ctx_.analysis(), l);
    const double d_l = cross(q - cl, v) / speed_;
    out.valid = true;
    out.w = (d_l - win.tangent) / (win.critical - win.tangent);
    out.psi = angle_of(q - cfg.bump(k).center);
    return out;
  }

  template <class Pred>
  std::pair<double, double> bisect(const Pred &pred, double lo, double hi, std::size_t m,
                                   std::size_t k, const std::string &name,
                                   const std::string &lo_label, const std::string &hi_label,
                                   ShootResult &res) const {
    const auto &opt = ctx_.options();
    std::string lo_class = lo_label;
    std::string hi_class = hi_label;
    for (int it = 0; it < opt.max_iterations; ++it) {
      const double mid = lo + 0.5 * (hi - lo);
      if (mid == lo || mid == hi) break;
      if (opt.tol > 0.0 && std::abs(hi - lo) <= opt.tol) break;
      const Probe p = pred(mid);
      if (p.value) {
        hi = mid;
        hi_class = p.label;
      } else {
        lo = mid;
        lo_class = p.label;
      }
    }
    ShootBracket br;
    br.stage = static_cast<int>(m) + 1;
    br.bump = k;
    br.predicate = name;
    br.lo = lo;
    br.hi = hi;
    br.lo_class = lo_class;
    br.hi_class = hi_class;
    br.a = lo;
    br.b = hi;
    br.prefix = prefix_;
    res.brackets.push_back(br);
    return {lo, hi};
  }

  // Finds the sub-interval of the j-interval whose exit lines cross the
  // entry window of the next bump; returns it as (tangent end, critical end).
  std::pair<double, double> transport(std::size_t m, double ja, double jb, ShootResult &res) {
    const auto &opt = ctx_.options();
    // Samples are indexed by r, the fractional distance from the critical
    // end jb. The exit angle varies like log r, so the seed grid mixes
    // linear and logarithmic spacing in r.
    struct Sample {
      double u;
      WSample w;
    };
    auto param = [&](double r) { return jb + r * (ja - jb); };
    const double width = std::abs(jb - ja);
    const double ulp = std::nextafter(std::abs(jb), INFINITY) - std::abs(jb);
    const double decades = std::clamp(std::log10(width / (4.0 * ulp)), 1.0, 17.0);
    std::vector<double> seeds;
    for (int i = 1; i < opt.scan_points; ++i) {
      seeds.push_back(static_cast<double>(i) / opt.scan_points);
      seeds.push_back(std::pow(10.0, -decades * i / opt.scan_points));
    }
    std::sort(seeds.begin(), seeds.end(), std::greater<>());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    std::vector<Sample> samples;
    for (double r : seeds) {
      if (param(r) != jb && param(r) != ja) samples.push_back({r, w_at(param(r), m)});
    }
    if (samples.size() < 2) {
      throw NumericalError(fmt::format("stage {}: hit interval too narrow to scan", m + 1));
    }
    bool changed = true;
    while (changed && static_cast<int>(samples.size()) < opt.max_scan_points) {
      changed = false;
      std::vector<Sample> next;
      for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        next.push_back(samples[i]);
        const Sample &p = samples[i];
        const Sample &q = samples[i + 1];
        if (!p.w.valid || !q.w.valid) continue;
        double dpsi = std::abs(q.w.psi - p.w.psi);
        if (dpsi > kPi) dpsi = kTwoPi - dpsi;
        const bool straddles = (p.w.w < 0.0) != (q.w.w < 0.0) || (p.w.w < 1.0) != (q.w.w < 1.0);
        if (!(dpsi > kPi / 8.0 || (straddles && dpsi > kPi / 64.0))) continue;
        const double r = p.u > 4.0 * q.u ? std::sqrt(p.u * q.u) : 0.5 * (p.u + q.u);
        const double s = param(r);
        if (s == param(p.u) || s == param(q.u)) continue;
        next.push_back({r, w_at(s, m)});
        changed = true;
      }
      next.push_back(samples.back());
      samples.swap(next);
    }

    auto w_ge = [&](double level) {
      return [this, m, level](double s) {
        const WSample w = w_at(s, m);
        if (!w.valid) {
          throw NumericalError(fmt::format(
              "stage {}: exit line undefined at parameter {:.17g} while locating the corridor",
              m + 1, s));
        }
        return Probe{w.w >= level, fmt::format("w={:.6g}", w.w)};
      };
    };

    const std::size_t k = blocks_[m].k;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
      const Sample &p = samples[i];
      const Sample &q = samples[i + 1];
      if (!p.w.valid || !q.w.valid || (p.w.w < 0.0) == (q.w.w < 0.0)) continue;
      const int dir = q.w.w >= 0.0 ? 1 : -1;
      const Sample &out0 = dir > 0 ? p : q;
      const Sample &in0 = dir > 0 ? q : p;
      // Walk into the window until w reaches 1.
      std::optional<std::size_t> t_idx;
      std::size_t last_inside = dir > 0 ? i + 1 : i;
      if (in0.w.w >= 1.0) {
        t_idx = last_inside;
      } else {
        for (std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(last_inside) + dir;
             idx >= 0 && idx < static_cast<std::ptrdiff_t>(samples.size()); idx += dir) {
          const Sample &s = samples[static_cast<std::size_t>(idx)];
          if (!s.w.valid || s.w.w < 0.0) break;
          if (s.w.w >= 1.0) {
            t_idx = static_cast<std::size_t>(idx);
            break;
          }
          last_inside = static_cast<std::size_t>(idx);
        }
      }
      if (!t_idx) continue;

      const auto z0 = bisect(w_ge(0.0), param(out0.u), param(in0.u), m, k, "w>=0",
                             fmt::format("w={:.6g}", out0.w.w), fmt::format("w={:.6g}", in0.w.w),
                             res);
      double false_end = z0.second;
      if (*t_idx != last_inside) false_end = param(samples[last_inside].u);
      const Probe check = w_ge(1.0)(false_end);
      if (check.value) {
        throw NumericalError(fmt::format("stage {}: corridor window collapsed", m + 1));
      }
      const auto z1 = bisect(w_ge(1.0), false_end, param(samples[*t_idx].u), m, k, "w>=1",
                             check.label, fmt::format("w={:.6g}", samples[*t_idx].w.w), res);
      res.brackets.back().a = z0.second;
      res.brackets.back().b = z1.first;
      return {z0.second, z1.first};
    }
    throw NumericalError(fmt::format(
        "stage {}: no exit into the corridor towards bump {} found in the hit interval", m + 1,
        blocks_[m + 1].k + 1));
  }

  const ShootingContext &ctx_;
  std::vector<std::size_t> word_;
  std::vector<Block> blocks_;
  std::vector<std::size_t> prefix_;
  std::size_t k0_ = 0;
  double phi0_ = 0.0;
  double speed_ = 1.0;
  double escape_radius_ = 0.0;
};

}  // namespace

ShootingContext::ShootingContext(const FieldConfig &config, double energy, ShootOptions options)
    : options_(options) {
  EnergyAnalysis analysis = analyze(config, energy);
  report_ = check_general_position(analysis, config);
  if (!report_.holds) {
    std::string what = "configuration is not in general position at this energy";
    for (const auto &v : report_.violations) what += "; " + v.message;
    throw GeometryError(what);
  }
  PoincareOptions po;
  po.rtol = options.rtol;
  po.atol = options.atol;
  system_ = std::make_unique<PoincareSystem>(config, std::move(analysis), report_.anchors, po);
}

ShootResult shoot_prefix(const ShootingContext &ctx, const std::vector<std::size_t> &word) {
  if (word.empty()) throw ValidationError("word must contain at least one symbol");
  for (std::size_t s : word) {
    if (s >= ctx.config().size()) {
      throw ValidationError(fmt::format("symbol {} out of range 1..{}", s + 1, ctx.config().size()));
    }
  }
  Shooter shooter(ctx, word);
  return shooter.run();
}

std::vector<std::size_t> periodic_prefix(const std::vector<std::size_t> &period,
                                         std::size_t length) {
  if (period.empty()) throw ValidationError("period must be nonempty");
  std::vector<std::size_t> out;
  while (out.size() < length) out.push_back(period[out.size() % period.size()]);
  return out;
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("MAGSHIFT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

ShiftReport verify_full_shift(const ShootingContext &ctx, std::size_t length) {
  const std::size_t n = ctx.config().size();
  ShiftReport rep;
  rep.length = length;
  rep.total = 1;
  for (std::size_t i = 0; i < length; ++i) rep.total *= n;

  std::vector<std::optional<ShootResult>> results(rep.total);
  std::vector<std::string> errors(rep.total);
  auto word_of = [&](std::size_t idx) {
    std::vector<std::size_t> w(length);
    for (std::size_t i = length; i-- > 0;) {
      w[i] = idx % n;
      idx /= n;
    }
    return w;
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx = next++; idx < rep.total; idx = next++) {
      try {
        results[idx] = shoot_prefix(ctx, word_of(idx));
      } catch (const std::exception &e) {
        errors[idx] = e.what();
      }
    }
  };
  const unsigned threads = std::min<unsigned>(worker_count(), static_cast<unsigned>(rep.total));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();

  for (std::size_t idx = 0; idx < rep.total; ++idx) {
    if (results[idx] && results[idx]->verified) {
      ++rep.realized;
      rep.max_bracket_width = std::max(rep.max_bracket_width, results[idx]->bracket_width);
      for (double t : results[idx]->return_times) rep.max_return_time = std::max(rep.max_return_time, t);
      rep.results.push_back(*results[idx]);
    } else {
      std::string msg = errors[idx];
      if (results[idx]) {
        msg = fmt::format("re-integration realized {} instead", format_word(results[idx]->realized));
      }
      rep.failures.push_back({word_of(idx), msg});
    }
  }
  return rep;
}

EntropyBound entropy_lower_bound(std::size_t n, double energy,
                                 const std::vector<ShootResult> &samples) {
  EntropyBound out;
  for (const auto &r : samples) {
    for (double t : r.return_times) {
      out.t_sup = std::max(out.t_sup, t);
      ++out.samples;
    }
  }
  if (out.samples == 0) throw DomainError("entropy_lower_bound: no return times to bound");
  out.h_lower = std::log(static_cast<double>(n)) / out.t_sup;
  out.c_prime = out.t_sup * std::sqrt(energy);
  return out;
}

std::string format_word(const std::vector<std::size_t> &word) {
  std::string out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(word[i] + 1);
  }
  return out;
}

std::vector<std::size_t> parse_word(const std::string &text, std::size_t n) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(item, &pos);
    } catch (const std::exception &) {
      throw ValidationError(fmt::format("word: '{}' is not a symbol", item));
    }
    if (pos != item.size() && item.find_first_not_of(' ', pos) != std::string::npos) {
      throw ValidationError(fmt::format("word: '{}' is not a symbol", item));
    }
    if (v < 1 || static_cast<std::size_t>(v) > n) {
      throw ValidationError(fmt::format("word: symbol {} outside 1..{}", v, n));
    }
    out.push_back(static_cast<std::size_t>(v - 1));
  }
  if (out.empty()) throw ValidationError("word: empty");
  return out;
}

}  // namespace magshift
