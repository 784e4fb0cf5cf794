#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

#include "reconfig/geometry.hpp"
#include "reconfig/symbolic.hpp"

namespace reconfig {

using JointVector = Eigen::Matrix<double, 12, 1>;
using ArmJoints = Eigen::Matrix<double, 6, 1>;

inline constexpr int kArmDof = 6;

/// Two identical arms. Per arm: shoulder yaw/pitch, wrist yaw/pitch, hand roll/pitch.
/// At zero joint angles an arm points straight ahead (+y). The tool frame's x axis is the approach
/// direction, its y axis the pincer closing direction.
struct RobotModel {
    std::array<Vec3, 2> shoulders{Vec3(-0.10, -0.35, 0.30), Vec3(0.10, -0.35, 0.30)};
    double upper_length = 0.30;
    double fore_length = 0.25;
    double tool_length = 0.05;
    double link_radius = 0.02;
    JointVector lower;
    JointVector upper;
    JointVector neutral;

    RobotModel();

    static const std::array<const char*, kArmDof>& arm_joint_names();
    std::string joint_name(int i) const;

    ArmJoints arm(const JointVector& q, Hand h) const { return q.segment<kArmDof>(kArmDof * static_cast<int>(h)); }
    bool within_limits(const JointVector& q, double tol = 0.0) const;
    /// Throws std::invalid_argument on non-positive lengths or inverted limits.
    void check() const;
};

/// Joint origins and axes plus link endpoints of one arm, all in world coordinates.
struct ArmFrames {
    std::array<Vec3, kArmDof> joint_origin;
    std::array<Vec3, kArmDof> joint_axis;
    std::array<Vec3, 4> points; // shoulder, wrist, hand, tool point
    Pose tool;
};

ArmFrames arm_frames(const RobotModel& robot, Hand h, const ArmJoints& q);
Pose forward_kinematics(const RobotModel& robot, Hand h, const ArmJoints& q);

/// Jacobian of a point rigidly attached after joint `last_joint` (inclusive) with respect to the
/// arm's joints. Columns after `last_joint` are zero.
Eigen::Matrix<double, 3, kArmDof> point_jacobian(const ArmFrames& f, const Vec3& p, int last_joint);

/// Link segments as (start, end, index of the last joint moving the segment).
struct LinkSegment {
    Vec3 a;
    Vec3 b;
    int last_joint;
};
std::array<LinkSegment, 3> link_segments(const ArmFrames& f);

} // namespace reconfig
