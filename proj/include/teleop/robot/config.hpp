#pragma once

#include <string>
#include <string_view>

#include "teleop/robot/kinematics.hpp"
#include "teleop/xml.hpp"

namespace teleop::robot {

struct FixtureRadii {
  double r_on = 0.10;   // m, activate below
  double r_off = 0.15;  // m, deactivate above
};

struct RobotConfig {
  DhTable<double> dh = default_dh_table();
  JointLimits limits;
  double v_max = 0.5;  // rad/s per joint
  double tick_s = 0.01;
  FixtureRadii fixtures;
  JointConfig home = JointConfig::Zero();
};

/// <robot> document: six <joint> rows under <joints>, optional <motion>,
/// <fixtures> and <home>. Throws Error(schema) with the offending line.
RobotConfig parse_robot_config(const xml::Element& root);
RobotConfig load_robot_config(const std::string& path);
std::string robot_config_xml(const RobotConfig& config);

/// "q1 q2 q3 q4 q5 q6" in radians.
JointConfig parse_joint_text(std::string_view text);
std::string joint_text(const JointConfig& q);

}  // namespace teleop::robot
