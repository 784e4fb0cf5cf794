#include "reconfig/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

namespace reconfig {

Pose Pose::operator*(const Pose& other) const
{
    Pose out;
    out.position = position + orientation * other.position;
    out.orientation = (orientation * other.orientation).normalized();
    return out;
}

Pose Pose::inverse() const
{
    Pose out;
    out.orientation = orientation.conjugate();
    out.position = -(out.orientation * position);
    return out;
}

bool Pose::approx_equal(const Pose& other, double pos_tol, double angle_tol_rad) const
{
    return (position - other.position).norm() <= pos_tol &&
           angle_between(orientation, other.orientation) <= angle_tol_rad;
}

double angle_between(const Quat& a, const Quat& b)
{
    // atan2 of the relative rotation keeps precision for tiny angles, where acos of the dot does not.
    const Quat r = a.normalized().conjugate() * b.normalized();
    return 2.0 * std::atan2(r.vec().norm(), std::abs(r.w()));
}

Quat axis_angle(const Vec3& axis, double angle)
{
    return Quat(Eigen::AngleAxisd(angle, axis.normalized()));
}

std::array<Vec3, 8> Box::vertices() const
{
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
        const Vec3 local((i & 1) ? half_extents.x() : -half_extents.x(),
                         (i & 2) ? half_extents.y() : -half_extents.y(),
                         (i & 4) ? half_extents.z() : -half_extents.z());
        out[static_cast<size_t>(i)] = pose.apply(local);
    }
    return out;
}

std::pair<Vec3, Vec3> Box::aabb() const
{
    const Eigen::Matrix3d r = pose.rotation().cwiseAbs();
    const Vec3 ext = r * half_extents;
    return {pose.position - ext, pose.position + ext};
}

bool Box::contains(const Vec3& p, double tol) const
{
    const Vec3 q = pose.orientation.conjugate() * (p - pose.position);
    return (q.cwiseAbs() - half_extents).maxCoeff() <= tol;
}

namespace {

struct Plane {
    Vec3 normal; // outward
    double offset;
};

std::array<Plane, 6> box_planes(const Box& b)
{
    std::array<Plane, 6> out;
    for (int i = 0; i < 3; ++i) {
        const Vec3 n = b.axis(i);
        const double c = n.dot(b.pose.position);
        out[static_cast<size_t>(2 * i)] = {n, c + b.half_extents[i]};
        out[static_cast<size_t>(2 * i + 1)] = {-n, -c + b.half_extents[i]};
    }
    return out;
}

using Polygon = std::vector<Vec3>;

// Faces wound counter-clockwise seen from outside.
std::array<Polygon, 6> box_faces(const Box& b)
{
    std::array<Polygon, 6> out;
    const Vec3& h = b.half_extents;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const int k = (i + 2) % 3;
        for (int s = 0; s < 2; ++s) {
            const double sign = s == 0 ? 1.0 : -1.0;
            Polygon poly;
            const double uj[4] = {-1, 1, 1, -1};
            const double uk[4] = {-1, -1, 1, 1};
            for (int v = 0; v < 4; ++v) {
                Vec3 local;
                local[i] = sign * h[i];
                local[j] = uj[v] * h[j];
                local[k] = sign * uk[v] * h[k];
                poly.push_back(b.pose.apply(local));
            }
            out[static_cast<size_t>(2 * i + s)] = std::move(poly);
        }
    }
    return out;
}

Polygon clip(const Polygon& poly, const Plane& plane)
{
    constexpr double eps = 1e-12;
    Polygon out;
    if (poly.empty()) {
        return out;
    }
    for (size_t i = 0; i < poly.size(); ++i) {
        const Vec3& a = poly[i];
        const Vec3& b = poly[(i + 1) % poly.size()];
        const double da = plane.normal.dot(a) - plane.offset;
        const double db = plane.normal.dot(b) - plane.offset;
        const bool ina = da <= eps;
        const bool inb = db <= eps;
        if (ina) {
            out.push_back(a);
        }
        if (ina != inb) {
            const double t = da / (da - db);
            out.push_back(a + t * (b - a));
        }
    }
    return out;
}

double signed_volume_term(const Polygon& poly)
{
    if (poly.size() < 3) {
        return 0.0;
    }
    Vec3 area = Vec3::Zero();
    for (size_t i = 0; i < poly.size(); ++i) {
        area += poly[i].cross(poly[(i + 1) % poly.size()]);
    }
    area *= 0.5;
    return poly[0].dot(area) / 3.0;
}

} // namespace

double overlap_volume(const Box& a, const Box& b)
{
    // Cheap rejection on world bounds.
    const auto [amin, amax] = a.aabb();
    const auto [bmin, bmax] = b.aabb();
    if ((amax.array() < bmin.array()).any() || (bmax.array() < amin.array()).any()) {
        return 0.0;
    }
    double volume = 0.0;
    const auto accumulate = [&volume](const Box& faces_of, const Box& clipper) {
        const auto planes = box_planes(clipper);
        for (const auto& face : box_faces(faces_of)) {
            Polygon poly = face;
            for (const auto& pl : planes) {
                poly = clip(poly, pl);
                if (poly.empty()) {
                    break;
                }
            }
            volume += signed_volume_term(poly);
        }
    };
    accumulate(a, b);
    accumulate(b, a);
    return std::max(0.0, volume);
}

std::optional<std::pair<double, double>> vertical_span(const Box& box, double x, double y)
{
    const Quat inv = box.pose.orientation.conjugate();
    const Vec3 origin = inv * (Vec3(x, y, 0.0) - box.pose.position);
    const Vec3 dir = inv * Vec3::UnitZ();
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        const double h = box.half_extents[i];
        if (std::abs(dir[i]) < 1e-12) {
            if (std::abs(origin[i]) > h) {
                return std::nullopt;
            }
            continue;
        }
        double t1 = (-h - origin[i]) / dir[i];
        double t2 = (h - origin[i]) / dir[i];
        if (t1 > t2) {
            std::swap(t1, t2);
        }
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) {
            return std::nullopt;
        }
    }
    return std::make_pair(tmin, tmax);
}

double signed_distance(const Box& box, const Vec3& p)
{
    const Vec3 q = box.pose.orientation.conjugate() * (p - box.pose.position);
    const Vec3 d = q.cwiseAbs() - box.half_extents;
    const double outside = d.cwiseMax(0.0).norm();
    const double inside = std::min(d.maxCoeff(), 0.0);
    return outside + inside;
}

Vec3 signed_distance_gradient(const Box& box, const Vec3& p)
{
    const Vec3 q = box.pose.orientation.conjugate() * (p - box.pose.position);
    const Vec3 d = q.cwiseAbs() - box.half_extents;
    Vec3 g_local = Vec3::Zero();
    const Vec3 pos = d.cwiseMax(0.0);
    const double n = pos.norm();
    if (n > 0.0) {
        for (int i = 0; i < 3; ++i) {
            g_local[i] = (q[i] >= 0.0 ? 1.0 : -1.0) * pos[i] / n;
        }
    } else {
        int axis = 0;
        d.maxCoeff(&axis);
        g_local[axis] = q[axis] >= 0.0 ? 1.0 : -1.0;
    }
    return box.pose.orientation * g_local;
}

double round_significant(double value, int digits)
{
    if (value == 0.0 || !std::isfinite(value)) {
        return value == 0.0 ? 0.0 : value;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
    return std::strtod(buf, nullptr);
}

} // namespace reconfig
