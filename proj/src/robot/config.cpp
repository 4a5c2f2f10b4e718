#include "teleop/robot/config.hpp"

#include <charconv>
#include <sstream>

namespace teleop::robot {

namespace {

constexpr double kDeg = M_PI / 180.0;

}  // namespace

JointConfig parse_joint_text(std::string_view text) {
  JointConfig q;
  int count = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' || text[pos] == ',')) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && text[end] != ' ' && text[end] != '\t' && text[end] != '\n' && text[end] != ',') ++end;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + end, v);
    if (ec != std::errc() || ptr != text.data() + end || count >= kJointCount) {
      throw Error(Errc::validation, "expected six joint angles, got '" + std::string(text) + "'");
    }
    q(count++) = v;
    pos = end;
  }
  if (count != kJointCount) throw Error(Errc::validation, "expected six joint angles, got '" + std::string(text) + "'");
  return q;
}

std::string joint_text(const JointConfig& q) {
  std::string out;
  for (int i = 0; i < kJointCount; ++i) {
    if (i) out += ' ';
    out += xml::format_number(q(i));
  }
  return out;
}

RobotConfig parse_robot_config(const xml::Element& root) {
  if (root.name != "robot") {
    throw Error(Errc::schema, "line " + std::to_string(root.line) + ": expected <robot>, found <" + root.name + ">");
  }
  RobotConfig config;
  xml::StrictElement robot(root);
  if (const auto* joints_el = robot.optional_child("joints")) {
    xml::StrictElement joints(*joints_el);
    const auto rows = joints.children("joint");
    if (rows.size() != static_cast<std::size_t>(kJointCount)) joints.fail("expected exactly six <joint> rows");
    for (int i = 0; i < kJointCount; ++i) {
      xml::StrictElement j(*rows[static_cast<std::size_t>(i)]);
      config.dh.a(i) = j.required_number("a");
      config.dh.d(i) = j.required_number("d");
      config.dh.alpha(i) = j.required_number("alpha_deg") * kDeg;
      config.limits.lower(i) = j.optional_number("min_deg", -170.0) * kDeg;
      config.limits.upper(i) = j.optional_number("max_deg", 170.0) * kDeg;
      if (!(config.limits.lower(i) < config.limits.upper(i))) j.fail("min_deg must be below max_deg");
      j.finish();
    }
    joints.finish();
  }
  if (const auto* motion_el = robot.optional_child("motion")) {
    xml::StrictElement motion(*motion_el);
    config.v_max = motion.optional_number("v_max", config.v_max);
    config.tick_s = motion.optional_number("tick_ms", config.tick_s * 1000.0) / 1000.0;
    if (!(config.v_max > 0.0)) motion.fail("v_max must be positive");
    if (!(config.tick_s > 0.0 && config.tick_s <= 0.1)) motion.fail("tick_ms must be in (0, 100]");
    motion.finish();
  }
  if (const auto* fixtures_el = robot.optional_child("fixtures")) {
    xml::StrictElement fixtures(*fixtures_el);
    config.fixtures.r_on = fixtures.optional_number("r_on", config.fixtures.r_on);
    config.fixtures.r_off = fixtures.optional_number("r_off", config.fixtures.r_off);
    if (!(config.fixtures.r_on > 0.0 && config.fixtures.r_on < config.fixtures.r_off)) {
      fixtures.fail("need 0 < r_on < r_off");
    }
    fixtures.finish();
  }
  if (const auto* home_el = robot.optional_child("home")) {
    xml::StrictElement home(*home_el);
    try {
      config.home = parse_joint_text(home.required("q"));
    } catch (const Error& e) {
      home.fail(e.what());
    }
    if (!config.limits.contains(config.home)) home.fail("home configuration violates joint limits");
    home.finish();
  }
  robot.finish();
  return config;
}

RobotConfig load_robot_config(const std::string& path) { return parse_robot_config(xml::parse_file(path)); }

std::string robot_config_xml(const RobotConfig& config) {
  xml::Writer w;
  w.open("robot");
  w.open("joints");
  for (int i = 0; i < kJointCount; ++i) {
    w.leaf("joint", {{"a", xml::format_number(config.dh.a(i))},
                     {"d", xml::format_number(config.dh.d(i))},
                     {"alpha_deg", xml::format_number(config.dh.alpha(i) / kDeg)},
                     {"min_deg", xml::format_number(config.limits.lower(i) / kDeg)},
                     {"max_deg", xml::format_number(config.limits.upper(i) / kDeg)}});
  }
  w.close("joints");
  w.leaf("motion",
         {{"v_max", xml::format_number(config.v_max)}, {"tick_ms", xml::format_number(config.tick_s * 1000.0)}});
  w.leaf("fixtures",
         {{"r_on", xml::format_number(config.fixtures.r_on)}, {"r_off", xml::format_number(config.fixtures.r_off)}});
  w.leaf("home", {{"q", joint_text(config.home)}});
  w.close("robot");
  return w.str();
}

}  // namespace teleop::robot
