#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "reconfig/geometry.hpp"

namespace reconfig {

struct PhysicsSettings {
    double timestep = 1.0 / 240.0;
    double gravity = 9.81;
    double friction = 0.5;
    double restitution = 0.0;
    int iterations = 30;
    double contact_margin = 0.001; // contacts are generated up to this separation
    double penetration_slop = 0.0005;
    double correction_rate = 0.2;  // fraction of penetration removed per step (position pass only)
    double divergence_speed = 50.0;
};

/// Rigid box in a world with an infinite ground plane at z = 0.
struct RigidBox {
    Vec3 half_extents = Vec3::Constant(0.025);
    double mass = 0.05;
    Pose pose;
    Vec3 velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero();

    Eigen::Matrix3d inertia_body() const;
    double kinetic_energy() const;
};

struct Contact {
    int a = 0;
    int b = -1;          // -1 is the ground
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ(); // pushes body a away from b
    double depth = 0.0;  // penetration; negative when separated
};

/// Contacts between two boxes (empty when separated by more than `margin`).
std::vector<Contact> collide_boxes(const RigidBox& a, const RigidBox& b, double margin);
std::vector<Contact> collide_ground(const RigidBox& a, double margin);

class PhysicsWorld {
public:
    explicit PhysicsWorld(PhysicsSettings settings = {});

    int add(const RigidBox& box);
    const std::vector<RigidBox>& bodies() const { return bodies_; }
    void step();
    double kinetic_energy() const;
    bool diverged() const { return diverged_; }
    size_t contact_count() const { return contacts_.size(); }

private:
    struct SolverContact {
        Contact c;
        Vec3 ra, rb, t1, t2;
        double mass_n = 0, mass_t1 = 0, mass_t2 = 0;
        double jn = 0, jt1 = 0, jt2 = 0, jp = 0;
        double target_vn = 0;
        Vec3 local_a = Vec3::Zero(); // for warm-start matching
    };

    void prepare(SolverContact& sc) const;
    void apply(int body, const Vec3& impulse, const Vec3& r, bool pseudo);

    PhysicsSettings settings_;
    std::vector<RigidBox> bodies_;
    std::vector<Eigen::Matrix3d> inv_inertia_;
    std::vector<Vec3> pseudo_v_, pseudo_w_;
    std::vector<SolverContact> contacts_;
    bool diverged_ = false;
};

} // namespace reconfig
