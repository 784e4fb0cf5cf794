#include "reconfig/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace reconfig {

Eigen::Matrix3d RigidBox::inertia_body() const
{
    const Vec3 l = 2.0 * half_extents;
    const Vec3 sq = l.cwiseProduct(l);
    return (mass / 12.0 * Vec3(sq.y() + sq.z(), sq.x() + sq.z(), sq.x() + sq.y())).asDiagonal();
}

double RigidBox::kinetic_energy() const
{
    const Eigen::Matrix3d r = pose.rotation();
    const Eigen::Matrix3d iw = r * inertia_body() * r.transpose();
    return 0.5 * mass * velocity.squaredNorm() + 0.5 * angular_velocity.dot(iw * angular_velocity);
}

// ---------------------------------------------------------------------------------------------
// Collision

namespace {

struct Frame {
    Vec3 c;
    Eigen::Matrix3d r;
    Vec3 h;
};

Frame frame_of(const RigidBox& b)
{
    return {b.pose.position, b.pose.rotation(), b.half_extents};
}

double projected_radius(const Frame& f, const Vec3& axis)
{
    return f.h.x() * std::abs(f.r.col(0).dot(axis)) + f.h.y() * std::abs(f.r.col(1).dot(axis)) +
           f.h.z() * std::abs(f.r.col(2).dot(axis));
}

// Reference face of `ref` along `axis_index` facing `inc`; clip the incident face of `inc`.
std::vector<Contact> face_contacts(const Frame& ref, int axis_index, const Frame& inc, bool ref_is_a, int ia, int ib,
                                   double margin)
{
    Vec3 n = ref.r.col(axis_index);
    if (n.dot(inc.c - ref.c) < 0) {
        n = -n;
    }
    // Incident face: the face of `inc` most opposed to n.
    int k = 0;
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
        const double d = std::abs(inc.r.col(i).dot(n));
        if (d > best) {
            best = d;
            k = i;
        }
    }
    const Vec3 nf = inc.r.col(k).dot(n) > 0 ? Vec3(-inc.r.col(k)) : Vec3(inc.r.col(k));
    const Vec3 fc = inc.c + nf * inc.h[k];
    const int u = (k + 1) % 3;
    const int v = (k + 2) % 3;
    const Vec3 du = inc.r.col(u) * inc.h[u];
    const Vec3 dv = inc.r.col(v) * inc.h[v];
    std::vector<Vec3> poly{fc + du + dv, fc - du + dv, fc - du - dv, fc + du - dv};

    const int ru = (axis_index + 1) % 3;
    const int rv = (axis_index + 2) % 3;
    for (int side : {ru, rv}) {
        for (double sign : {1.0, -1.0}) {
            const Vec3 pn = sign * ref.r.col(side);
            const double off = pn.dot(ref.c) + ref.h[side];
            std::vector<Vec3> out;
            for (size_t i = 0; i < poly.size(); ++i) {
                const Vec3& p = poly[i];
                const Vec3& q = poly[(i + 1) % poly.size()];
                const double dp = pn.dot(p) - off;
                const double dq = pn.dot(q) - off;
                if (dp <= 0) {
                    out.push_back(p);
                }
                if ((dp < 0) != (dq < 0) && dp != dq) {
                    out.push_back(p + (q - p) * (dp / (dp - dq)));
                }
            }
            poly = std::move(out);
            if (poly.empty()) {
                return {};
            }
        }
    }
    const double face = n.dot(ref.c) + ref.h[axis_index];
    std::vector<Contact> contacts;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Vec3& p = poly[i];
        // Vertices on a clipping plane come back twice.
        if ((p - poly[(i + 1) % poly.size()]).norm() < 1e-7 && poly.size() > 1) {
            continue;
        }
        const double sep = n.dot(p) - face;
        if (sep <= margin) {
            Contact c;
            c.a = ia;
            c.b = ib;
            c.point = p - n * (0.5 * sep);
            c.depth = -sep;
            // n points from ref to inc; the impulse on body a must push it away from b.
            c.normal = ref_is_a ? Vec3(-n) : n;
            contacts.push_back(c);
        }
    }
    return contacts;
}

} // namespace

std::vector<Contact> collide_boxes(const RigidBox& a, const RigidBox& b, double margin)
{
    const Frame fa = frame_of(a);
    const Frame fb = frame_of(b);
    const Vec3 t = fb.c - fa.c;

    double face_a = -std::numeric_limits<double>::infinity();
    double face_b = face_a;
    double edge = face_a;
    int axis_a = 0;
    int axis_b = 0;
    int edge_i = 0;
    int edge_j = 0;
    Vec3 edge_axis = Vec3::Zero();

    for (int i = 0; i < 3; ++i) {
        const Vec3 l = fa.r.col(i);
        const double s = std::abs(t.dot(l)) - (fa.h[i] + projected_radius(fb, l));
        if (s > margin) {
            return {};
        }
        if (s > face_a) {
            face_a = s;
            axis_a = i;
        }
    }
    for (int i = 0; i < 3; ++i) {
        const Vec3 l = fb.r.col(i);
        const double s = std::abs(t.dot(l)) - (fb.h[i] + projected_radius(fa, l));
        if (s > margin) {
            return {};
        }
        if (s > face_b) {
            face_b = s;
            axis_b = i;
        }
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            Vec3 l = fa.r.col(i).cross(fb.r.col(j));
            const double len = l.norm();
            if (len < 1e-6) {
                continue;
            }
            l /= len;
            const double s = std::abs(t.dot(l)) - (projected_radius(fa, l) + projected_radius(fb, l));
            if (s > margin) {
                return {};
            }
            if (s > edge) {
                edge = s;
                edge_i = i;
                edge_j = j;
                edge_axis = l;
            }
        }
    }

    // Prefer face contacts; an edge axis must separate clearly better.
    constexpr double rel = 0.95;
    constexpr double abs_tol = 0.0005;
    const bool use_b = face_b > rel * face_a + abs_tol;
    const double face = use_b ? face_b : face_a;
    if (edge > rel * face + abs_tol) {
        Vec3 l = edge_axis;
        if (t.dot(l) < 0) {
            l = -l;
        }
        Vec3 pa = fa.c;
        Vec3 pb = fb.c;
        for (int k = 0; k < 3; ++k) {
            if (k != edge_i) {
                pa += fa.r.col(k) * (fa.h[k] * (fa.r.col(k).dot(l) > 0 ? 1.0 : -1.0));
            }
            if (k != edge_j) {
                pb += fb.r.col(k) * (fb.h[k] * (fb.r.col(k).dot(l) > 0 ? -1.0 : 1.0));
            }
        }
        const Vec3 da = fa.r.col(edge_i);
        const Vec3 db = fb.r.col(edge_j);
        const Vec3 w = pa - pb;
        const double bdot = da.dot(db);
        const double denom = 1.0 - bdot * bdot;
        double s = 0.0;
        double u = 0.0;
        if (denom > 1e-12) {
            s = (bdot * db.dot(w) - da.dot(w)) / denom;
            u = (db.dot(w) - bdot * da.dot(w)) / denom;
        }
        s = std::clamp(s, -fa.h[edge_i], fa.h[edge_i]);
        u = std::clamp(u, -fb.h[edge_j], fb.h[edge_j]);
        Contact c;
        c.a = 0;
        c.b = 1;
        c.point = 0.5 * ((pa + da * s) + (pb + db * u));
        c.normal = -l;
        c.depth = -edge;
        return {c};
    }
    auto out = use_b ? face_contacts(fb, axis_b, fa, false, 0, 1, margin) : face_contacts(fa, axis_a, fb, true, 0, 1, margin);
    // Two edges meeting along a line (a wedge against a wedge): both face axes touch and either
    // face normal alone would make the contact lopsided, so push along their bisector.
    const Vec3 na = fa.r.col(axis_a) * (t.dot(fa.r.col(axis_a)) > 0 ? 1.0 : -1.0);
    const Vec3 nb = fb.r.col(axis_b) * (t.dot(fb.r.col(axis_b)) > 0 ? 1.0 : -1.0);
    if (std::abs(face_a - face_b) <= abs_tol && na.dot(nb) < 0.999) {
        const Vec3 n = -(na + nb).normalized();
        for (auto& c : out) {
            c.normal = n;
        }
    }
    return out;
}

std::vector<Contact> collide_ground(const RigidBox& a, double margin)
{
    std::vector<Contact> out;
    for (const Vec3& v : Box{a.pose, a.half_extents}.vertices()) {
        if (v.z() <= margin) {
            Contact c;
            c.a = 0;
            c.b = -1;
            c.point = Vec3(v.x(), v.y(), 0.5 * v.z());
            c.normal = Vec3::UnitZ();
            c.depth = -v.z();
            out.push_back(c);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// World

PhysicsWorld::PhysicsWorld(PhysicsSettings settings) : settings_(settings) {}

int PhysicsWorld::add(const RigidBox& box)
{
    bodies_.push_back(box);
    inv_inertia_.emplace_back(Eigen::Matrix3d::Zero());
    pseudo_v_.emplace_back(Vec3::Zero());
    pseudo_w_.emplace_back(Vec3::Zero());
    return static_cast<int>(bodies_.size()) - 1;
}

double PhysicsWorld::kinetic_energy() const
{
    double e = 0.0;
    for (const auto& b : bodies_) {
        e += b.kinetic_energy();
    }
    return e;
}

void PhysicsWorld::apply(int body, const Vec3& impulse, const Vec3& r, bool pseudo)
{
    if (body < 0) {
        return;
    }
    const auto i = static_cast<size_t>(body);
    const double inv_m = 1.0 / bodies_[i].mass;
    if (pseudo) {
        pseudo_v_[i] += impulse * inv_m;
        pseudo_w_[i] += inv_inertia_[i] * r.cross(impulse);
    } else {
        bodies_[i].velocity += impulse * inv_m;
        bodies_[i].angular_velocity += inv_inertia_[i] * r.cross(impulse);
    }
}

void PhysicsWorld::prepare(SolverContact& sc) const
{
    const Contact& c = sc.c;
    const auto& a = bodies_[static_cast<size_t>(c.a)];
    sc.ra = c.point - a.pose.position;
    sc.rb = c.b >= 0 ? Vec3(c.point - bodies_[static_cast<size_t>(c.b)].pose.position) : Vec3::Zero();
    const Vec3 n = c.normal;
    sc.t1 = std::abs(n.x()) < 0.9 ? n.cross(Vec3::UnitX()).normalized() : n.cross(Vec3::UnitY()).normalized();
    sc.t2 = n.cross(sc.t1);
    auto eff = [&](const Vec3& d) {
        double k = 1.0 / a.mass + d.dot((inv_inertia_[static_cast<size_t>(c.a)] * sc.ra.cross(d)).cross(sc.ra));
        if (c.b >= 0) {
            const auto bi = static_cast<size_t>(c.b);
            k += 1.0 / bodies_[bi].mass + d.dot((inv_inertia_[bi] * sc.rb.cross(d)).cross(sc.rb));
        }
        return 1.0 / k;
    };
    sc.mass_n = eff(n);
    sc.mass_t1 = eff(sc.t1);
    sc.mass_t2 = eff(sc.t2);
}

void PhysicsWorld::step()
{
    const double dt = settings_.timestep;
    const size_t n = bodies_.size();
    for (size_t i = 0; i < n; ++i) {
        auto& b = bodies_[i];
        const Eigen::Matrix3d r = b.pose.rotation();
        inv_inertia_[i] = r * b.inertia_body().inverse() * r.transpose();
        b.velocity.z() -= settings_.gravity * dt;
        pseudo_v_[i].setZero();
        pseudo_w_[i].setZero();
    }

    // Contacts, warm-started from the previous step by matching body-local positions.
    std::vector<SolverContact> next;
    auto add_contacts = [&](std::vector<Contact> cs, int a, int b) {
        for (auto& c : cs) {
            c.a = a;
            c.b = b;
            SolverContact sc;
            sc.c = c;
            const auto& ba = bodies_[static_cast<size_t>(a)];
            sc.local_a = ba.pose.orientation.conjugate() * (c.point - ba.pose.position);
            prepare(sc);
            for (const auto& old : contacts_) {
                if (old.c.a == a && old.c.b == b && (old.local_a - sc.local_a).norm() < 0.002) {
                    sc.jn = old.jn;
                    sc.jt1 = old.jt1;
                    sc.jt2 = old.jt2;
                    break;
                }
            }
            next.push_back(sc);
        }
    };
    for (size_t i = 0; i < n; ++i) {
        add_contacts(collide_ground(bodies_[i], settings_.contact_margin), static_cast<int>(i), -1);
        for (size_t j = i + 1; j < n; ++j) {
            add_contacts(collide_boxes(bodies_[i], bodies_[j], settings_.contact_margin), static_cast<int>(i), static_cast<int>(j));
        }
    }
    contacts_ = std::move(next);

    auto rel_velocity = [&](const SolverContact& sc) {
        const auto& a = bodies_[static_cast<size_t>(sc.c.a)];
        Vec3 v = a.velocity + a.angular_velocity.cross(sc.ra);
        if (sc.c.b >= 0) {
            const auto& b = bodies_[static_cast<size_t>(sc.c.b)];
            v -= b.velocity + b.angular_velocity.cross(sc.rb);
        }
        return v;
    };
    auto push = [&](const SolverContact& sc, const Vec3& impulse, bool pseudo) {
        apply(sc.c.a, impulse, sc.ra, pseudo);
        apply(sc.c.b, -impulse, sc.rb, pseudo);
    };

    for (auto& sc : contacts_) {
        const double vn = rel_velocity(sc).dot(sc.c.normal);
        if (sc.c.depth < 0) {
            sc.target_vn = sc.c.depth / dt; // may close the gap within this step
        } else {
            sc.target_vn = vn < -0.5 ? -settings_.restitution * vn : 0.0;
        }
        push(sc, sc.c.normal * sc.jn + sc.t1 * sc.jt1 + sc.t2 * sc.jt2, false);
    }

    for (int it = 0; it < settings_.iterations; ++it) {
        for (auto& sc : contacts_) {
            const Vec3 v = rel_velocity(sc);
            // Friction first, bounded by the current normal impulse.
            const double limit = settings_.friction * sc.jn;
            const double o1 = sc.jt1;
            const double o2 = sc.jt2;
            double j1 = o1 - sc.mass_t1 * v.dot(sc.t1);
            double j2 = o2 - sc.mass_t2 * v.dot(sc.t2);
            const double mag = std::hypot(j1, j2);
            if (mag > limit && mag > 0) {
                j1 *= limit / mag;
                j2 *= limit / mag;
            }
            sc.jt1 = j1;
            sc.jt2 = j2;
            push(sc, sc.t1 * (j1 - o1) + sc.t2 * (j2 - o2), false);

            const double vn = rel_velocity(sc).dot(sc.c.normal);
            const double jn = std::max(0.0, sc.jn + sc.mass_n * (sc.target_vn - vn));
            push(sc, sc.c.normal * (jn - sc.jn), false);
            sc.jn = jn;
        }
    }

    // Penetration recovery through pseudo velocities, which never feed back into momentum.
    for (int it = 0; it < settings_.iterations; ++it) {
        for (auto& sc : contacts_) {
            const double err = sc.c.depth - settings_.penetration_slop;
            if (err <= 0) {
                continue;
            }
            const auto ai = static_cast<size_t>(sc.c.a);
            Vec3 v = pseudo_v_[ai] + pseudo_w_[ai].cross(sc.ra);
            if (sc.c.b >= 0) {
                const auto bi = static_cast<size_t>(sc.c.b);
                v -= pseudo_v_[bi] + pseudo_w_[bi].cross(sc.rb);
            }
            const double target = settings_.correction_rate * err / dt;
            const double jp = std::max(0.0, sc.jp + sc.mass_n * (target - v.dot(sc.c.normal)));
            push(sc, sc.c.normal * (jp - sc.jp), true);
            sc.jp = jp;
        }
    }

    for (size_t i = 0; i < n; ++i) {
        auto& b = bodies_[i];
        if (!b.velocity.allFinite() || !b.angular_velocity.allFinite() || b.velocity.norm() > settings_.divergence_speed ||
            b.angular_velocity.norm() > 20.0 * settings_.divergence_speed) {
            diverged_ = true;
        }
        const Vec3 v = b.velocity + pseudo_v_[i];
        const Vec3 w = b.angular_velocity + pseudo_w_[i];
        b.pose.position += v * dt;
        const Quat dq(0.0, w.x() * 0.5 * dt, w.y() * 0.5 * dt, w.z() * 0.5 * dt);
        Quat q = b.pose.orientation;
        q.coeffs() += (dq * q).coeffs();
        b.pose.orientation = q.normalized();
    }
}

} // namespace reconfig
