#include "magshift/config_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "magshift/errors.hpp"

namespace magshift {

using nlohmann::json;

namespace {

double number_at(const json &j, const std::string &path) {
  if (!j.is_number()) throw ValidationError(fmt::format("{}: expected a number", path));
  return j.get<double>();
}

const json &member(const json &obj, const char *key, const std::string &path) {
  if (!obj.is_object()) throw ValidationError(fmt::format("{}: expected an object", path));
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(fmt::format("{}: missing key \"{}\"", path, key));
  return *it;
}

RadialProfile parse_profile(const json &j, const std::string &path) {
  const json &type = member(j, "type", path);
  if (!type.is_string()) throw ValidationError(fmt::format("{}.type: expected a string", path));
  const std::string kind = type.get<std::string>();
  try {
    if (kind == "piecewise_linear") {
      const json &nodes = member(j, "nodes", path);
      if (!nodes.is_array()) {
        throw ValidationError(fmt::format("{}.nodes: expected an array of [r, B] pairs", path));
      }
      std::vector<ProfileNode> out;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string np = fmt::format("{}.nodes[{}]", path, i);
        if (!nodes[i].is_array() || nodes[i].size() != 2) {
          throw ValidationError(fmt::format("{}: expected a pair [r, B]", np));
        }
        const double r = number_at(nodes[i][0], np + "[0]");
        const double b = number_at(nodes[i][1], np + "[1]");
        if (r < 0.0) throw ValidationError(fmt::format("{}[0]: radius must be >= 0", np));
        out.push_back({r, b});
      }
      return RadialProfile::piecewise_linear(std::move(out));
    }
    if (kind == "constant_disc") {
      const double strength = number_at(member(j, "strength", path), path + ".strength");
      const double plateau = number_at(member(j, "plateau", path), path + ".plateau");
      const double ramp = number_at(member(j, "ramp", path), path + ".ramp");
      return RadialProfile::constant_disc(strength, plateau, ramp);
    }
  } catch (const ValidationError &e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw ValidationError(fmt::format("{}.{}", path, msg));
  }
  throw ValidationError(fmt::format(
      "{}.type: unknown profile type \"{}\" (expected piecewise_linear or constant_disc)", path,
      kind));
}

}  // namespace

FieldConfig parse_config(const json &doc) {
  const json &bumps = member(doc, "bumps", "$");
  if (!bumps.is_array()) throw ValidationError("bumps: expected an array");
  if (bumps.empty()) throw ValidationError("bumps: at least one bump is required");
  std::vector<Bump> out;
  for (std::size_t k = 0; k < bumps.size(); ++k) {
    const std::string path = fmt::format("bumps[{}]", k);
    const json &center = member(bumps[k], "center", path);
    if (!center.is_array() || center.size() != 2) {
      throw ValidationError(fmt::format("{}.center: expected [x, y]", path));
    }
    const Vec2 c{number_at(center[0], path + ".center[0]"),
                 number_at(center[1], path + ".center[1]")};
    out.push_back({c, parse_profile(member(bumps[k], "profile", path), path + ".profile")});
  }
  return FieldConfig(std::move(out));
}

FieldConfig parse_config_text(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ValidationError(fmt::format("JSON parse error at byte {}: {}", e.byte, e.what()));
  }
  return parse_config(doc);
}

FieldConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ValidationError &e) {
    throw ValidationError(fmt::format("{}: {}", path, e.what()));
  }
}

json config_to_json(const FieldConfig &config) {
  json bumps = json::array();
  for (const Bump &b : config.bumps()) {
    json nodes = json::array();
    for (const auto &n : b.profile.nodes()) nodes.push_back({n.r, n.b});
    bumps.push_back({{"center", {b.center.x, b.center.y}},
                     {"profile", {{"type", "piecewise_linear"}, {"nodes", nodes}}}});
  }
  return {{"bumps", bumps}};
}

}  // namespace magshift
