// Command-line front end: analysis tables, trajectories, general-position
// reports, section scatters, shooting and entropy estimates.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "magshift/config_io.hpp"
#include "magshift/errors.hpp"
#include "magshift/geometry.hpp"
#include "magshift/integrator.hpp"
#include "magshift/plot.hpp"
#include "magshift/poincare.hpp"
#include "magshift/shooting.hpp"
#include "magshift/singlebump.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace magshift;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config;
  double energy = 0.5;
  std::string out;
  double rtol = 1e-10;
  double atol = 1e-12;
};

struct ShootFlags {
  double rtol = 1e-12;
  double atol = 1e-14;
  double bracket = 0.0;
};

json vec_json(const Vec2 &v) { return json::array({v.x, v.y}); }

json state_json(const ParticleState &s) {
  return {{"q", vec_json(s.q)}, {"v", vec_json(s.v)}, {"t", s.t}};
}

json word_json(const std::vector<std::size_t> &w) {
  json a = json::array();
  for (std::size_t s : w) a.push_back(s + 1);
  return a;
}

Vec2 parse_pair(const std::string &text, const std::string &what) {
  std::stringstream ss(text);
  std::string a, b, extra;
  if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || std::getline(ss, extra, ',')) {
    throw ValidationError(fmt::format("{}: expected two comma-separated numbers, got '{}'", what, text));
  }
  try {
    return {std::stod(a), std::stod(b)};
  } catch (const std::exception &) {
    throw ValidationError(fmt::format("{}: not a number pair: '{}'", what, text));
  }
}

void check_positive(double x, const std::string &name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ValidationError(fmt::format("{} must be positive, got {}", name, x));
  }
}

void write_file(const fs::path &path, const std::string &content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  f << content;
}

fs::path out_dir(const Common &c) { return c.out.empty() ? fs::path(".") : fs::path(c.out); }

void emit_json(const Common &c, const std::string &name, const json &doc) {
  const std::string text = doc.dump(2) + "\n";
  std::cout << text;
  if (!c.out.empty()) write_file(out_dir(c) / name, text);
}

FieldConfig load(const Common &c) {
  check_positive(c.energy, "--energy");
  check_positive(c.rtol, "--tol-rtol");
  check_positive(c.atol, "--tol-atol");
  return load_config(c.config);
}

ShootingContext make_context(const FieldConfig &cfg, const Common &c, const ShootFlags &s) {
  check_positive(s.rtol, "--tol-shoot-rtol");
  check_positive(s.atol, "--tol-shoot-atol");
  if (s.bracket < 0.0) throw ValidationError("--tol-bracket must be nonnegative");
  ShootOptions so;
  so.rtol = s.rtol;
  so.atol = s.atol;
  so.tol = s.bracket;
  return ShootingContext(cfg, c.energy, so);
}

json analysis_json(const FieldConfig &cfg, const EnergyAnalysis &an) {
  json bumps = json::array();
  for (std::size_t k = 0; k < cfg.size(); ++k) {
    const BumpAnalysis &b = an.at(k);
    bumps.push_back({{"bump", k + 1},
                     {"center", vec_json(cfg.bump(k).center)},
                     {"radius", cfg.bump(k).radius()},
                     {"E_circ", b.e_circ},
                     {"R_plus", b.r_plus},
                     {"R_minus", b.r_minus},
                     {"circular_radii", b.all_circular_radii},
                     {"sign", b.sign},
                     {"I_plus", b.i_plus},
                     {"alpha_plus", b.alpha_plus},
                     {"F0", cfg.bump(k).profile.flux(0.0)}});
  }
  return {{"energy", an.energy}, {"speed", an.speed()}, {"bumps", bumps}};
}

json report_json(const GeneralPositionReport &rep) {
  json viol = json::array();
  for (const Violation &v : rep.violations) {
    json idx = json::array();
    for (std::size_t i : v.indices) idx.push_back(i + 1);
    viol.push_back({{"condition", v.condition},
                    {"indices", idx},
                    {"witness", vec_json(v.witness)},
                    {"message", v.message}});
  }
  json anchors = json::array();
  for (std::size_t k = 0; k < rep.anchors.size(); ++k) {
    anchors.push_back({{"bump", k + 1},
                       {"point", vec_json(rep.anchors[k])},
                       {"angle", rep.anchor_angles[k]}});
  }
  json arcs = json::array();
  for (const Corridor &c : rep.corridors) {
    arcs.push_back({{"k", c.k + 1},
                    {"l", c.l + 1},
                    {"signs", json::array({c.sign_k, c.sign_l})},
                    {"A_kl", json::array({c.a_kl.start, c.a_kl.end()})},
                    {"B_lk", json::array({c.b_lk.start, c.b_lk.end()})},
                    {"line1", {{"d_k", c.line1.d_k}, {"d_l", c.line1.d_l}}},
                    {"line2", {{"d_k", c.line2.d_k}, {"d_l", c.line2.d_l}}},
                    {"symmetry_derived", c.symmetry_derived}});
  }
  json free = json::array();
  for (std::size_t k = 0; k < rep.free_arcs.size(); ++k) {
    json list = json::array();
    for (const Arc &a : rep.free_arcs[k]) list.push_back(json::array({a.start, a.end()}));
    free.push_back({{"bump", k + 1}, {"arcs", list}});
  }
  return {{"holds", rep.holds},
          {"violations", viol},
          {"anchors", anchors},
          {"arcs", arcs},
          {"free_arcs", free}};
}

json shoot_json(const ShootResult &r) {
  json brackets = json::array();
  for (const ShootBracket &b : r.brackets) {
    brackets.push_back({{"stage", b.stage},
                        {"bump", b.bump + 1},
                        {"predicate", b.predicate},
                        {"lo", b.lo},
                        {"hi", b.hi},
                        {"lo_class", b.lo_class},
                        {"hi_class", b.hi_class},
                        {"a", b.a},
                        {"b", b.b},
                        {"prefix", word_json(b.prefix)}});
  }
  return {{"word", word_json(r.word)},
          {"entry_bump", r.entry_bump + 1},
          {"entry_angle", r.entry_angle},
          {"entry_momentum", r.parameter},
          {"initial_state", state_json(r.initial_state)},
          {"bracket_width", r.bracket_width},
          {"return_times", r.return_times},
          {"realized", word_json(r.realized)},
          {"verified", r.verified},
          {"brackets", brackets}};
}

void print_report(const GeneralPositionReport &rep) {
  std::cerr << fmt::format("general position: {}\n", rep.holds ? "holds" : "fails");
  for (const Violation &v : rep.violations) {
    std::cerr << fmt::format("  condition {}: {} (witness {:.6g}, {:.6g})\n", v.condition,
                             v.message, v.witness.x, v.witness.y);
  }
  for (std::size_t k = 0; k < rep.anchors.size(); ++k) {
    std::cerr << fmt::format("  anchor {}: ({:.6g}, {:.6g}) at angle {:.6g}\n", k + 1,
                             rep.anchors[k].x, rep.anchors[k].y, rep.anchor_angles[k]);
  }
}

void add_common(CLI::App *cmd, Common &c, bool needs_config = true) {
  auto *opt = cmd->add_option("--config", c.config, "field configuration (JSON)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--energy", c.energy, "energy E > 0")->capture_default_str();
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--tol-rtol", c.rtol, "integrator relative tolerance")->capture_default_str();
  cmd->add_option("--tol-atol", c.atol, "integrator absolute tolerance")->capture_default_str();
}

void add_shoot_flags(CLI::App *cmd, ShootFlags &s) {
  cmd->add_option("--tol-shoot-rtol", s.rtol, "shooting relative tolerance")->capture_default_str();
  cmd->add_option("--tol-shoot-atol", s.atol, "shooting absolute tolerance")->capture_default_str();
  cmd->add_option("--tol-bracket", s.bracket, "stop bisection at this width (0: to round-off)")
      ->capture_default_str();
}

int run_analyze(const Common &c) {
  const FieldConfig cfg = load(c);
  const EnergyAnalysis an = analyze(cfg, c.energy);
  const json doc = analysis_json(cfg, an);
  for (const BumpAnalysis &b : an.bumps) {
    std::cerr << fmt::format("E°={:.6g} R+={:.6g} R-={:.6g} sign={:+d} I+={:.6g} alpha+={:.6g}\n",
                             b.e_circ, b.r_plus, b.r_minus, b.sign, b.i_plus, b.alpha_plus);
  }
  emit_json(c, "analysis.json", doc);
  return 0;
}

struct SimFlags {
  std::string q, v;
  int entry = 0;
  double phi = 0.0;
  std::optional<double> momentum;
  double t_max = 0.0;
  int section_hits = 0;
  std::optional<double> capture_band;
};

int run_simulate(const Common &c, const SimFlags &s) {
  const FieldConfig cfg = load(c);
  ParticleState st;
  if (s.entry > 0) {
    if (static_cast<std::size_t>(s.entry) > cfg.size()) {
      throw ValidationError(fmt::format("--entry {} out of range 1..{}", s.entry, cfg.size()));
    }
    if (!s.momentum) throw ValidationError("--entry requires --momentum");
    st = entry_state(cfg.bump(s.entry - 1), c.energy, s.phi, *s.momentum);
  } else {
    if (s.q.empty() || s.v.empty()) throw ValidationError("give --q and --v, or --entry");
    st.q = parse_pair(s.q, "--q");
    st.v = parse_pair(s.v, "--v");
  }
  FlowOptions fo;
  fo.rtol = c.rtol;
  fo.atol = c.atol;
  fo.capture_band = s.capture_band;
  std::optional<GeneralPositionReport> rep;
  try {
    rep = check_general_position(analyze(cfg, energy(st)), cfg);
    fo.anchors = rep->anchors;
  } catch (const DomainError &) {
    // Energy above threshold: no sections, plain flow.
  }
  StopCondition stop;
  stop.section_hits = s.section_hits;
  stop.t_max = s.t_max;
  const Trajectory tr = flow(cfg, st, stop, fo);
  std::ostringstream csv;
  write_trajectory_csv(csv, tr);
  const fs::path dir = out_dir(c);
  write_file(dir / "trajectory.csv", csv.str());
  write_file(dir / "trajectory.svg", render_trajectory_svg(cfg, rep ? &*rep : nullptr, &tr));
  json events = json::array();
  for (const Event &e : tr.events) events.push_back({{"event", event_label(e)}, {"t", e.t}});
  const double e0 = energy(st);
  const double e1 = energy(tr.samples.back());
  const json doc = {{"initial_state", state_json(st)},
                    {"final_state", state_json(tr.samples.back())},
                    {"samples", tr.samples.size()},
                    {"energy_drift", std::abs(e1 - e0) / e0},
                    {"events", events}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int run_check_gp(const Common &c) {
  const FieldConfig cfg = load(c);
  const EnergyAnalysis an = analyze(cfg, c.energy);
  const GeneralPositionReport rep = check_general_position(an, cfg);
  print_report(rep);
  emit_json(c, "check_gp.json", report_json(rep));
  if (!c.out.empty()) write_file(out_dir(c) / "check_gp.svg", render_trajectory_svg(cfg, &rep, nullptr));
  return 0;
}

struct SectionFlags {
  int bump = 1;
  int samples = 16;
  int iterations = 20;
  double decades = 12.0;
};

int run_section(const Common &c, const SectionFlags &s) {
  const FieldConfig cfg = load(c);
  if (s.bump < 1 || static_cast<std::size_t>(s.bump) > cfg.size()) {
    throw ValidationError(fmt::format("--bump {} out of range 1..{}", s.bump, cfg.size()));
  }
  if (s.samples < 1 || s.iterations < 1) throw ValidationError("--samples and --iterations must be >= 1");
  const EnergyAnalysis an = analyze(cfg, c.energy);
  const GeneralPositionReport rep = check_general_position(an, cfg);
  PoincareOptions po;
  po.rtol = c.rtol;
  po.atol = c.atol;
  const PoincareSystem sys(cfg, an, rep.anchors, po);
  const std::size_t k = static_cast<std::size_t>(s.bump - 1);
  const BumpAnalysis &ba = an.at(k);
  const double band = cfg.bump(k).radius() * an.speed();
  const double phi = wrap_angle(rep.anchor_angles[k] + kPi);

  // Seeds enter opposite the anchor with momenta approaching I+ from the
  // transit side, spaced logarithmically so that some of them wind.
  std::string table = "i,k,lambda,direction,t\n";
  std::vector<SectionPoint> all;
  int row = 0;
  for (int i = 0; i < s.samples; ++i) {
    const double gap = std::pow(10.0, -1.0 - s.decades * i / std::max(1, s.samples - 1));
    const double momentum = ba.i_plus - ba.sign * gap * (band + ba.sign * ba.i_plus);
    const ParticleState entry = entry_state(cfg.bump(k), c.energy, phi, momentum);
    auto x = sys.entry_to_section_u(k, entry);
    if (!x) continue;
    double t = x->state.t;
    all.push_back(*x);
    table += fmt::format("{},{},{:.17g},{},{:.17g}\n", row++, x->k + 1, x->lambda, x->direction, t);
    for (int it = 0; it < s.iterations; ++it) {
      const MapResult r = sys.poincare_map(*x);
      if (r.status != MapStatus::kHit) break;
      t += r.return_time;
      x = r.point;
      all.push_back(*x);
      table += fmt::format("{},{},{:.17g},{},{:.17g}\n", row++, x->k + 1, x->lambda, x->direction, t);
    }
  }
  const fs::path dir = out_dir(c);
  write_file(dir / "section.csv", table);
  write_file(dir / "section.svg", render_section_svg(all, cfg, rep.anchors));
  std::cout << table;
  return 0;
}

struct ShootCmd {
  std::string word;
  std::string period;
  std::size_t length = 0;
  bool trajectory = false;
};

int run_shoot(const Common &c, const ShootFlags &sf, const ShootCmd &s) {
  const FieldConfig cfg = load(c);
  const ShootingContext ctx = make_context(cfg, c, sf);
  std::vector<std::size_t> word;
  if (!s.period.empty()) {
    if (s.length == 0) throw ValidationError("--period requires --length");
    word = periodic_prefix(parse_word(s.period, cfg.size()), s.length);
  } else {
    word = parse_word(s.word, cfg.size());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const ShootResult r = shoot_prefix(ctx, word);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << fmt::format("word {} realized {} verified {} width {:.3g} ({:.2f}s)\n",
                           format_word(r.word), format_word(r.realized), r.verified,
                           r.bracket_width, secs);
  emit_json(c, "shoot.json", shoot_json(r));
  if (s.trajectory) {
    FlowOptions fo;
    fo.rtol = sf.rtol;
    fo.atol = sf.atol;
    fo.anchors = ctx.report().anchors;
    StopCondition stop;
    stop.section_hits = static_cast<int>(word.size());
    const Trajectory tr = flow(cfg, r.initial_state, stop, fo);
    std::ostringstream csv;
    write_trajectory_csv(csv, tr);
    write_file(out_dir(c) / "shoot_trajectory.csv", csv.str());
    write_file(out_dir(c) / "shoot_trajectory.svg", render_trajectory_svg(cfg, &ctx.report(), &tr));
  }
  return r.verified ? 0 : kExitNumerical;
}

json shift_json(const ShiftReport &rep) {
  json rows = json::array();
  for (const ShootResult &r : rep.results) {
    rows.push_back({{"word", word_json(r.word)},
                    {"realized", word_json(r.realized)},
                    {"verified", r.verified},
                    {"entry_momentum", r.parameter},
                    {"bracket_width", r.bracket_width},
                    {"return_times", r.return_times}});
  }
  json fails = json::array();
  for (const ShiftFailure &f : rep.failures) {
    fails.push_back({{"word", word_json(f.word)}, {"message", f.message}});
  }
  return {{"length", rep.length},
          {"total", rep.total},
          {"realized", rep.realized},
          {"max_bracket_width", rep.max_bracket_width},
          {"max_return_time", rep.max_return_time},
          {"results", rows},
          {"failures", fails}};
}

int run_verify_shift(const Common &c, const ShootFlags &sf, std::size_t length) {
  if (length < 1) throw ValidationError("--length must be >= 1");
  const FieldConfig cfg = load(c);
  const ShootingContext ctx = make_context(cfg, c, sf);
  const ShiftReport rep = verify_full_shift(ctx, length);
  std::cerr << fmt::format("{:<16} {:<16} {:>8} {:>12}\n", "word", "realized", "ok", "width");
  for (const ShootResult &r : rep.results) {
    std::cerr << fmt::format("{:<16} {:<16} {:>8} {:>12.3g}\n", format_word(r.word),
                             format_word(r.realized), r.verified ? "yes" : "no", r.bracket_width);
  }
  for (const ShiftFailure &f : rep.failures) {
    std::cerr << fmt::format("{:<16} failed: {}\n", format_word(f.word), f.message);
  }
  std::cerr << fmt::format("realized {}/{}; max width {:.3g}; max return time {:.6g}\n",
                           rep.realized, rep.total, rep.max_bracket_width, rep.max_return_time);
  emit_json(c, "verify_shift.json", shift_json(rep));
  return 0;
}

int run_entropy(const Common &c, const ShootFlags &sf, std::size_t length,
                std::optional<double> compare) {
  if (length < 1) throw ValidationError("--length must be >= 1");
  const FieldConfig cfg = load(c);
  auto bound_at = [&](double e) {
    Common cc = c;
    cc.energy = e;
    const ShootingContext ctx = make_context(cfg, cc, sf);
    const ShiftReport rep = verify_full_shift(ctx, length);
    std::vector<ShootResult> ok;
    for (const ShootResult &r : rep.results) {
      if (r.verified) ok.push_back(r);
    }
    return std::make_pair(entropy_lower_bound(cfg.size(), e, ok), rep);
  };
  const auto [b0, rep0] = bound_at(c.energy);
  json doc = {{"n", cfg.size()},
              {"energy", c.energy},
              {"length", length},
              {"realized", rep0.realized},
              {"total", rep0.total},
              {"T_sup", b0.t_sup},
              {"h_lower", b0.h_lower},
              {"c_prime", b0.c_prime},
              {"samples", b0.samples}};
  std::cerr << fmt::format("E={:.6g}: T_sup={:.6g} h_lower={:.6g} c'={:.6g} ({} samples)\n",
                           c.energy, b0.t_sup, b0.h_lower, b0.c_prime, b0.samples);
  if (compare) {
    check_positive(*compare, "--compare-energy");
    const auto [b1, rep1] = bound_at(*compare);
    doc["compare"] = {{"energy", *compare},
                      {"realized", rep1.realized},
                      {"total", rep1.total},
                      {"T_sup", b1.t_sup},
                      {"h_lower", b1.h_lower},
                      {"c_prime", b1.c_prime},
                      {"samples", b1.samples},
                      {"c_prime_ratio", b1.c_prime / b0.c_prime}};
    std::cerr << fmt::format("E={:.6g}: T_sup={:.6g} h_lower={:.6g} c'={:.6g}; ratio {:.4f}\n",
                             *compare, b1.t_sup, b1.h_lower, b1.c_prime, b1.c_prime / b0.c_prime);
  }
  emit_json(c, "entropy.json", doc);
  return 0;
}

struct LevelFlags {
  int bump = 1;
  int grid = 201;
  int levels = 12;
};

int run_levelsets(const Common &c, const LevelFlags &s) {
  const FieldConfig cfg = load(c);
  if (s.bump < 1 || static_cast<std::size_t>(s.bump) > cfg.size()) {
    throw ValidationError(fmt::format("--bump {} out of range 1..{}", s.bump, cfg.size()));
  }
  if (s.grid < 3 || s.levels < 0) throw ValidationError("--grid must be >= 3, --levels >= 0");
  const Bump &b = cfg.bump(static_cast<std::size_t>(s.bump - 1));
  const CircularRadii radii = circular_radii(b, c.energy);
  const CriticalMomentum cm = critical_momentum(b, c.energy);
  const LevelGrid grid = momentum_grid(b, cm.sign, c.energy, s.grid, s.grid);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : grid.values) {
    if (std::isnan(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  std::vector<double> levels;
  for (int i = 1; i <= s.levels; ++i) levels.push_back(lo + (hi - lo) * i / (s.levels + 1));
  std::vector<Vec2> markers = {{radii.r_plus, 0.0}, {radii.r_minus, 0.0}};
  const auto crit = contour_segments(grid, cm.i_plus);
  const double cell = std::hypot((grid.r_max - grid.r_min) / (grid.nr - 1),
                                 (grid.v_max - grid.v_min) / (grid.nv - 1));
  const double miss = distance_to_contour(crit, markers[0]);
  write_file(out_dir(c) / "levelsets.svg", render_levelsets_svg(grid, levels, cm.i_plus, markers));
  const json doc = {{"bump", s.bump},
                    {"energy", c.energy},
                    {"R_plus", radii.r_plus},
                    {"R_minus", radii.r_minus},
                    {"I_plus", cm.i_plus},
                    {"levels", levels},
                    {"grid", s.grid},
                    {"cell_diagonal", cell},
                    {"critical_contour_distance", miss},
                    {"critical_contour_within_cell", miss <= cell}};
  emit_json(c, "levelsets.json", doc);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Charged-particle dynamics in planar fields of disjoint magnetic bumps"};
  app.require_subcommand(1);

  Common common;
  ShootFlags sflags;

  auto *analyze_cmd = app.add_subcommand("analyze", "per-bump E°, R±, I+, alpha+ table");
  add_common(analyze_cmd, common);

  SimFlags sim;
  auto *sim_cmd = app.add_subcommand("simulate", "integrate one trajectory");
  add_common(sim_cmd, common);
  sim_cmd->add_option("--q", sim.q, "start position x,y");
  sim_cmd->add_option("--v", sim.v, "start velocity vx,vy");
  sim_cmd->add_option("--entry", sim.entry, "start on the boundary of this bump (1-based)");
  sim_cmd->add_option("--phi", sim.phi, "boundary angle for --entry");
  sim_cmd->add_option("--momentum", sim.momentum, "entry momentum for --entry");
  sim_cmd->add_option("--t-max", sim.t_max, "duration cap (0: default)");
  sim_cmd->add_option("--section-hits", sim.section_hits, "stop at this many section crossings");
  sim_cmd->add_option("--capture-band", sim.capture_band, "flag capture near R+ within this band");

  auto *gp_cmd = app.add_subcommand("check-gp", "general-position report and anchors");
  add_common(gp_cmd, common);

  SectionFlags sec;
  auto *sec_cmd = app.add_subcommand("section", "Poincaré section crossing table and scatter");
  add_common(sec_cmd, common);
  sec_cmd->add_option("--bump", sec.bump, "section to seed from (1-based)")->capture_default_str();
  sec_cmd->add_option("--samples", sec.samples, "seeds along the section")->capture_default_str();
  sec_cmd->add_option("--iterations", sec.iterations, "map iterations per seed")->capture_default_str();
  sec_cmd->add_option("--decades", sec.decades, "seed momenta span I+ - 10^-1 .. 10^-(1+decades)")
      ->capture_default_str();

  ShootCmd shoot;
  auto *shoot_cmd = app.add_subcommand("shoot", "realize an itinerary by nested bisection");
  add_common(shoot_cmd, common);
  add_shoot_flags(shoot_cmd, sflags);
  auto *word_opt = shoot_cmd->add_option("--word", shoot.word, "itinerary, e.g. 1,2,1");
  auto *period_opt = shoot_cmd->add_option("--period", shoot.period, "periodic word, e.g. 1,2");
  word_opt->excludes(period_opt);
  shoot_cmd->add_option("--length", shoot.length, "prefix length for --period");
  shoot_cmd->add_flag("--trajectory", shoot.trajectory, "also write trajectory CSV and SVG");

  std::size_t length = 2;
  auto *vs_cmd = app.add_subcommand("verify-shift", "realize every word of a given length");
  add_common(vs_cmd, common);
  add_shoot_flags(vs_cmd, sflags);
  vs_cmd->add_option("--length", length, "word length L")->capture_default_str();

  std::optional<double> compare;
  auto *ent_cmd = app.add_subcommand("entropy", "entropy lower bound from return times");
  add_common(ent_cmd, common);
  add_shoot_flags(ent_cmd, sflags);
  ent_cmd->add_option("--length", length, "word length L")->capture_default_str();
  ent_cmd->add_option("--compare-energy", compare, "second energy for the c' scaling check");

  LevelFlags lev;
  auto *lev_cmd = app.add_subcommand("levelsets", "level sets of I in the (r, dr/dt) plane");
  add_common(lev_cmd, common);
  lev_cmd->add_option("--bump", lev.bump, "bump (1-based)")->capture_default_str();
  lev_cmd->add_option("--grid", lev.grid, "grid points per axis")->capture_default_str();
  lev_cmd->add_option("--levels", lev.levels, "number of background contours")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*analyze_cmd) return run_analyze(common);
    if (*sim_cmd) return run_simulate(common, sim);
    if (*gp_cmd) return run_check_gp(common);
    if (*sec_cmd) return run_section(common, sec);
    if (*shoot_cmd) {
      if (shoot.word.empty() && shoot.period.empty()) {
        throw ValidationError("shoot needs --word or --period");
      }
      return run_shoot(common, sflags, shoot);
    }
    if (*vs_cmd) return run_verify_shift(common, sflags, length);
    if (*ent_cmd) return run_entropy(common, sflags, length, compare);
    if (*lev_cmd) return run_levelsets(common, lev);
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DomainError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const GeometryError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError &e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
