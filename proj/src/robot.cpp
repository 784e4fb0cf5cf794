#include "reconfig/robot.hpp"

#include <stdexcept>

#include <Eigen/Geometry>

namespace reconfig {

RobotModel::RobotModel()
{
    lower.setConstant(-2.6);
    upper.setConstant(2.6);
    ArmJoints rest;
    rest << 0.0, -0.2, 0.0, 2.2, 0.0, 0.4; // hands tucked in front of the shoulders
    neutral << rest, rest;
}

const std::array<const char*, kArmDof>& RobotModel::arm_joint_names()
{
    static const std::array<const char*, kArmDof> names{"shoulder_yaw", "shoulder_pitch", "wrist_yaw",
                                                        "wrist_pitch", "hand_roll", "hand_pitch"};
    return names;
}

std::string RobotModel::joint_name(int i) const
{
    const std::string arm = i < kArmDof ? "left_" : "right_";
    return arm + arm_joint_names()[static_cast<size_t>(i % kArmDof)];
}

bool RobotModel::within_limits(const JointVector& q, double tol) const
{
    return ((q - lower).array() >= -tol).all() && ((upper - q).array() >= -tol).all();
}

void RobotModel::check() const
{
    if (upper_length <= 0 || fore_length <= 0 || tool_length < 0 || link_radius < 0) {
        throw std::invalid_argument("robot link lengths must be positive");
    }
    if (((upper - lower).array() <= 0).any()) {
        throw std::invalid_argument("robot joint limits must satisfy lower < upper");
    }
    if (!within_limits(neutral)) {
        throw std::invalid_argument("robot neutral posture violates joint limits");
    }
}

ArmFrames arm_frames(const RobotModel& robot, Hand h, const ArmJoints& q)
{
    // Base frame: local x -> world +y, local y -> world -x, local z -> world z.
    Eigen::Matrix3d r;
    r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    Vec3 p = robot.shoulders[static_cast<size_t>(h)];
    const std::array<double, 3> lengths{robot.upper_length, robot.fore_length, robot.tool_length};
    const std::array<int, kArmDof> axis_index{2, 1, 2, 1, 0, 1};

    ArmFrames f;
    f.points[0] = p;
    for (int j = 0; j < kArmDof; ++j) {
        const Vec3 axis = r.col(axis_index[static_cast<size_t>(j)]);
        f.joint_origin[static_cast<size_t>(j)] = p;
        f.joint_axis[static_cast<size_t>(j)] = axis;
        r = Eigen::AngleAxisd(q[j], axis).toRotationMatrix() * r;
        if (j % 2 == 1) {
            p += r.col(0) * lengths[static_cast<size_t>(j / 2)];
            f.points[static_cast<size_t>(j / 2 + 1)] = p;
        }
    }
    f.tool = Pose(p, Quat(r).normalized());
    return f;
}

Pose forward_kinematics(const RobotModel& robot, Hand h, const ArmJoints& q)
{
    return arm_frames(robot, h, q).tool;
}

Eigen::Matrix<double, 3, kArmDof> point_jacobian(const ArmFrames& f, const Vec3& p, int last_joint)
{
    Eigen::Matrix<double, 3, kArmDof> j = Eigen::Matrix<double, 3, kArmDof>::Zero();
    for (int i = 0; i <= last_joint && i < kArmDof; ++i) {
        j.col(i) = f.joint_axis[static_cast<size_t>(i)].cross(p - f.joint_origin[static_cast<size_t>(i)]);
    }
    return j;
}

std::array<LinkSegment, 3> link_segments(const ArmFrames& f)
{
    return {LinkSegment{f.points[0], f.points[1], 1}, LinkSegment{f.points[1], f.points[2], 3},
            LinkSegment{f.points[2], f.points[3], 5}};
}

} // namespace reconfig
