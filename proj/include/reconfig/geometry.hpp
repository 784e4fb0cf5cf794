#pragma once

#include <array>
#include <optional>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace reconfig {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform. Convention: z up, table surface at z = 0, spots along x, y is depth.
struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();

    Pose() = default;
    Pose(Vec3 p, Quat q) : position(std::move(p)), orientation(q) {}

    static Pose identity() { return {}; }
    static Pose translation(double x, double y, double z) { return {Vec3(x, y, z), Quat::Identity()}; }

    /// this * other: maps other's frame into this frame's parent.
    Pose operator*(const Pose& other) const;
    Pose inverse() const;
    Vec3 apply(const Vec3& p) const { return position + orientation * p; }
    Eigen::Matrix3d rotation() const { return orientation.toRotationMatrix(); }

    bool approx_equal(const Pose& other, double pos_tol, double angle_tol_rad) const;
};

/// Angle between two orientations, radians in [0, pi].
double angle_between(const Quat& a, const Quat& b);

/// Rotation about a world axis by angle (radians); thin wrapper for readability at call sites.
Quat axis_angle(const Vec3& axis, double angle);

/// Oriented box. Local x = width, local y = depth, local z = height.
struct Box {
    Pose pose;
    Vec3 half_extents;

    std::array<Vec3, 8> vertices() const;
    Vec3 axis(int i) const { return pose.orientation * Vec3::Unit(i); }
    double volume() const { return 8.0 * half_extents.prod(); }
    /// World-aligned bounds.
    std::pair<Vec3, Vec3> aabb() const;
    bool contains(const Vec3& p, double tol = 0.0) const;
};

/// Exact volume of the intersection of two boxes (convex clipping + divergence theorem).
double overlap_volume(const Box& a, const Box& b);

/// Interval [zmin, zmax] where the vertical line through (x, y) crosses the box, if it does.
std::optional<std::pair<double, double>> vertical_span(const Box& box, double x, double y);

/// Signed distance from a point to the box surface (negative inside).
double signed_distance(const Box& box, const Vec3& p);

/// Gradient of signed_distance with respect to the point.
Vec3 signed_distance_gradient(const Box& box, const Vec3& p);

/// Rounds to a fixed number of significant digits (used for canonical text output).
double round_significant(double value, int digits = 9);

} // namespace reconfig
