#include "reconfig/geometric.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include <Eigen/Cholesky>

namespace reconfig {

namespace {

// ---------------------------------------------------------------------------------------------
// Residuals of the penalty objective for one arm.

struct Residuals {
    Eigen::VectorXd r;
    Eigen::Matrix<double, Eigen::Dynamic, kArmDof> j;
};

constexpr double kSampleSpacing = 0.02;

template <typename F>
void for_each_link_point(const ArmFrames& f, F&& fn)
{
    for (const auto& seg : link_segments(f)) {
        const double len = (seg.b - seg.a).norm();
        const int n = std::max(1, static_cast<int>(std::ceil(len / kSampleSpacing - 1e-6)));
        for (int i = 0; i <= n; ++i) {
            fn(seg.a + (seg.b - seg.a) * (static_cast<double>(i) / n), seg.last_joint);
        }
    }
}

Residuals constraint_residuals(const RobotModel& robot, Hand h, const std::optional<Pose>& target,
                               const std::vector<Box>& obstacles, const IkSettings& s, const ArmJoints& q)
{
    const ArmFrames f = arm_frames(robot, h, q);
    std::vector<double> r;
    std::vector<Eigen::Matrix<double, 1, kArmDof>> rows;

    if (target) {
        const Vec3 p = f.tool.position;
        const Eigen::Matrix<double, 3, kArmDof> jp = point_jacobian(f, p, kArmDof - 1);
        for (int i = 0; i < 3; ++i) {
            r.push_back(p[i] - target->position[i]);
            rows.push_back(jp.row(i));
        }
        const Eigen::Matrix3d rot = f.tool.rotation();
        const Eigen::Matrix3d want = target->rotation();
        for (int c = 0; c < 2; ++c) {
            const Vec3 col = rot.col(c);
            Eigen::Matrix<double, 3, kArmDof> jc;
            for (int k = 0; k < kArmDof; ++k) {
                jc.col(k) = f.joint_axis[static_cast<size_t>(k)].cross(col);
            }
            for (int i = 0; i < 3; ++i) {
                r.push_back(s.orientation_scale * (col[i] - want(i, c)));
                rows.push_back(s.orientation_scale * jc.row(i));
            }
        }
    }

    const int off = kArmDof * static_cast<int>(h);
    for (int k = 0; k < kArmDof; ++k) {
        const double hi = robot.upper[off + k] - s.limit_margin;
        const double lo = robot.lower[off + k] + s.limit_margin;
        Eigen::Matrix<double, 1, kArmDof> row = Eigen::Matrix<double, 1, kArmDof>::Zero();
        if (q[k] > hi) {
            row[k] = 1.0;
            r.push_back(q[k] - hi);
            rows.push_back(row);
        } else if (q[k] < lo) {
            row[k] = -1.0;
            r.push_back(lo - q[k]);
            rows.push_back(row);
        }
    }

    const double need = s.clearance + s.clearance_margin + robot.link_radius;
    for_each_link_point(f, [&](const Vec3& p, int last_joint) {
        for (const auto& box : obstacles) {
            const double d = signed_distance(box, p);
            if (d < need) {
                const Vec3 g = signed_distance_gradient(box, p);
                r.push_back(need - d);
                rows.push_back(-(g.transpose() * point_jacobian(f, p, last_joint)));
            }
        }
    });

    Residuals out;
    out.r = Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
    out.j.resize(static_cast<Eigen::Index>(rows.size()), kArmDof);
    for (size_t i = 0; i < rows.size(); ++i) {
        out.j.row(static_cast<Eigen::Index>(i)) = rows[i];
    }
    return out;
}

struct ArmSolve {
    bool feasible = false;
    ArmJoints q = ArmJoints::Zero();
    std::string violation;
};

std::string fmt(const char* pattern, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

// Hard checks on a candidate; returns the first violated constraint or an empty string.
std::string check_arm(const RobotModel& robot, Hand h, const std::optional<Pose>& target, const std::vector<Box>& obstacles,
                      const std::vector<std::string>& ids, const IkSettings& s, const ArmJoints& q)
{
    if (target) {
        const Pose tool = forward_kinematics(robot, h, q);
        const double pe = (tool.position - target->position).norm();
        if (pe > s.position_tolerance) {
            return "reach: position error " + fmt("%.4g", pe) + " m";
        }
        const double ae = angle_between(tool.orientation, target->orientation);
        if (ae > s.angle_tolerance) {
            return "reach: orientation error " + fmt("%.3g", ae * 180.0 / M_PI) + " deg";
        }
    }
    const int off = kArmDof * static_cast<int>(h);
    for (int k = 0; k < kArmDof; ++k) {
        if (q[k] < robot.lower[off + k] || q[k] > robot.upper[off + k]) {
            return "joint limit: " + robot.joint_name(off + k);
        }
    }
    int closest = -1;
    const double c = arm_clearance(robot, h, q, obstacles, &closest);
    if (c < s.clearance) {
        const std::string who = closest >= 0 && closest < static_cast<int>(ids.size()) ? ids[static_cast<size_t>(closest)] : "block";
        return "clearance: " + fmt("%.4g", c) + " m to " + who;
    }
    return {};
}

double penalty_value(const RobotModel& robot, Hand h, const std::optional<Pose>& target, const std::vector<Box>& obstacles,
                     const IkSettings& s, double weight, const ArmJoints& q)
{
    const ArmJoints dq = q - robot.arm(robot.neutral, h);
    return dq.squaredNorm() + weight * constraint_residuals(robot, h, target, obstacles, s, q).r.squaredNorm();
}

// Levenberg-Marquardt on |q - neutral|^2 + weight |r(q)|^2.
ArmJoints minimize(const RobotModel& robot, Hand h, const std::optional<Pose>& target, const std::vector<Box>& obstacles,
                   const IkSettings& s, double weight, ArmJoints q)
{
    const ArmJoints rest = robot.arm(robot.neutral, h);
    double lambda = 1e-3;
    double value = penalty_value(robot, h, target, obstacles, s, weight, q);
    for (int it = 0; it < s.max_inner_iterations; ++it) {
        const Residuals res = constraint_residuals(robot, h, target, obstacles, s, q);
        const Eigen::Matrix<double, kArmDof, 1> g = (q - rest) + weight * res.j.transpose() * res.r;
        if (g.lpNorm<Eigen::Infinity>() < s.inner_tolerance) {
            break;
        }
        const Eigen::Matrix<double, kArmDof, kArmDof> hess =
            Eigen::Matrix<double, kArmDof, kArmDof>::Identity() + weight * res.j.transpose() * res.j;
        bool improved = false;
        while (lambda < 1e12) {
            Eigen::Matrix<double, kArmDof, kArmDof> a = hess;
            a.diagonal() *= 1.0 + lambda;
            const ArmJoints step = a.ldlt().solve(-g);
            const ArmJoints cand = q + step;
            const double v = penalty_value(robot, h, target, obstacles, s, weight, cand);
            if (v < value) {
                const double gain = value - v;
                q = cand;
                value = v;
                lambda = std::max(lambda / 3.0, 1e-9);
                improved = true;
                if (gain < s.inner_tolerance * (1.0 + value) && step.norm() < 1e-10) {
                    return q;
                }
                break;
            }
            lambda *= 4.0;
        }
        if (!improved) {
            break;
        }
    }
    return q;
}

std::vector<ArmJoints> seeds(const RobotModel& robot, Hand h)
{
    const ArmJoints rest = robot.arm(robot.neutral, h);
    std::vector<ArmJoints> out{rest};
    ArmJoints reach = rest;
    reach[1] = 0.4;
    reach[3] = 1.0;
    out.push_back(reach);
    ArmJoints over = rest;
    over[1] = -0.3;
    over[3] = 1.6;
    over[5] = 1.2;
    out.push_back(over);
    ArmJoints rolled = reach;
    rolled[4] = 1.5;
    out.push_back(rolled);
    rolled[4] = -1.5;
    out.push_back(rolled);
    return out;
}

ArmSolve solve_arm(const RobotModel& robot, Hand h, const std::optional<Pose>& target, const std::vector<Box>& obstacles,
                   const std::vector<std::string>& ids, const IkSettings& s)
{
    ArmSolve first;
    bool have_first = false;
    for (const ArmJoints& seed : seeds(robot, h)) {
        ArmJoints q = seed;
        double weight = s.initial_weight;
        for (int outer = 0; outer < s.outer_iterations; ++outer) {
            q = minimize(robot, h, target, obstacles, s, weight, q);
            weight *= s.weight_growth;
        }
        ArmSolve out;
        out.q = q;
        out.violation = check_arm(robot, h, target, obstacles, ids, s, q);
        out.feasible = out.violation.empty();
        if (out.feasible) {
            return out;
        }
        if (!have_first) {
            first = out;
            have_first = true;
        }
    }
    return first;
}

void append_pose(std::string& key, const Pose& p)
{
    char buf[160];
    const Quat q = p.orientation.w() < 0 ? Quat(-p.orientation.coeffs()) : p.orientation;
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f;", p.position.x(), p.position.y(),
                  p.position.z(), q.w(), q.x(), q.y(), q.z());
    key += buf;
}

} // namespace

double ik_objective(const RobotModel& robot, Hand h, const std::optional<Pose>& target, const std::vector<Box>& obstacles,
                    const IkSettings& settings, double weight, const ArmJoints& q, ArmJoints* grad)
{
    const ArmJoints dq = q - robot.arm(robot.neutral, h);
    const Residuals res = constraint_residuals(robot, h, target, obstacles, settings, q);
    if (grad != nullptr) {
        *grad = 2.0 * dq + 2.0 * weight * res.j.transpose() * res.r;
    }
    return dq.squaredNorm() + weight * res.r.squaredNorm();
}

double arm_clearance(const RobotModel& robot, Hand h, const ArmJoints& q, const std::vector<Box>& obstacles, int* closest)
{
    double best = std::numeric_limits<double>::infinity();
    const ArmFrames f = arm_frames(robot, h, q);
    for_each_link_point(f, [&](const Vec3& p, int) {
        for (size_t i = 0; i < obstacles.size(); ++i) {
            const double d = signed_distance(obstacles[i], p) - robot.link_radius;
            if (d < best) {
                best = d;
                if (closest != nullptr) {
                    *closest = static_cast<int>(i);
                }
            }
        }
    });
    return best;
}

KeyframeSolution solve_keyframe(const RobotModel& robot, const KeyframeRequest& request, const IkSettings& settings)
{
    KeyframeSolution out;
    out.feasible = true;
    for (Hand h : {Hand::Left, Hand::Right}) {
        const auto arm = solve_arm(robot, h, request.hand[static_cast<size_t>(h)], request.obstacles, request.obstacle_ids, settings);
        out.q.segment<kArmDof>(kArmDof * static_cast<int>(h)) = arm.q;
        if (!arm.feasible && out.feasible) {
            out.feasible = false;
            out.violation = std::string(to_string(h)) + ": " + arm.violation;
        }
    }
    return out;
}

KeyframeSolution KeyframeCache::solve(const RobotModel& robot, const KeyframeRequest& request, const IkSettings& settings)
{
    std::string scene;
    for (const auto& b : request.obstacles) {
        append_pose(scene, b.pose);
    }
    KeyframeSolution out;
    out.feasible = true;
    for (Hand h : {Hand::Left, Hand::Right}) {
        const auto& target = request.hand[static_cast<size_t>(h)];
        std::string key = to_string(h);
        key += '|';
        if (target) {
            append_pose(key, *target);
        }
        key += '|' + scene;
        ArmResult res;
        bool found = false;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = arms_.find(key);
            if (it != arms_.end()) {
                res = it->second;
                found = true;
            }
        }
        if (!found) {
            const auto arm = solve_arm(robot, h, target, request.obstacles, request.obstacle_ids, settings);
            res = {arm.feasible, arm.q, arm.violation};
            std::lock_guard<std::mutex> lock(mutex_);
            arms_.emplace(key, res);
        }
        out.q.segment<kArmDof>(kArmDof * static_cast<int>(h)) = res.q;
        if (!res.feasible && out.feasible) {
            out.feasible = false;
            out.violation = std::string(to_string(h)) + ": " + res.violation;
        }
    }
    return out;
}

size_t KeyframeCache::size() const
{
    std::lock_guard<std::mutex> lock(mutex_);
    return arms_.size();
}

// ---------------------------------------------------------------------------------------------
// Snapshots

std::string Snapshot::key() const
{
    std::string k;
    char buf[160];
    for (size_t i = 0; i < pose.size(); ++i) {
        if (!loose[i]) {
            k += "-;";
            continue;
        }
        const Pose& p = pose[i];
        const Quat q = p.orientation.w() < 0 ? Quat(-p.orientation.coeffs()) : p.orientation;
        std::snprintf(buf, sizeof(buf), "%.5f,%.5f,%.5f,%.6f,%.6f,%.6f,%.6f;", p.position.x(), p.position.y(),
                      p.position.z(), q.w(), q.x(), q.y(), q.z());
        k += buf;
    }
    return k;
}

StackConfiguration snapshot_configuration(const std::vector<BlockSpec>& blocks, const Snapshot& snap)
{
    std::vector<BlockSpec> kept;
    std::map<std::string, Pose> poses;
    for (size_t i = 0; i < blocks.size(); ++i) {
        if (snap.loose[i]) {
            kept.push_back(blocks[i]);
            poses[blocks[i].id] = snap.pose[i];
        }
    }
    return StackConfiguration::from_world(kept, poses);
}

// ---------------------------------------------------------------------------------------------
// Plan walking

namespace {

/// Tool poses in a block frame for grasps across a narrow pair of faces.
std::vector<Pose> grasp_candidates(const BlockSpec& spec, double max_width)
{
    const Vec3 half = spec.half_extents();
    std::vector<Pose> out;
    for (int c = 0; c < 3; ++c) {
        if (2.0 * half[c] > max_width + 1e-9) {
            continue;
        }
        for (int k = 0; k < 3; ++k) {
            if (k == c) {
                continue;
            }
            for (double as : {1.0, -1.0}) {
                for (double cs : {1.0, -1.0}) {
                    const Vec3 a = as * Vec3::Unit(k);
                    const Vec3 y = cs * Vec3::Unit(c);
                    Eigen::Matrix3d r;
                    r.col(0) = a;
                    r.col(1) = y;
                    r.col(2) = a.cross(y);
                    out.emplace_back(Vec3::Zero(), Quat(r));
                }
            }
        }
    }
    return out;
}

class PlanWalker {
public:
    PlanWalker(const SymbolicDomain& d, const SymbolicState& start, const Sequence& seq, const Schedule& sched,
               const Problem& problem, const RobotModel* robot, const CompileOptions& options, KeyframeCache* cache)
        : d_(d), seq_(seq), sched_(sched), problem_(problem), robot_(robot), options_(options), cache_(cache), state_(start)
    {
        const int n = d.size();
        for (int i = 0; i < n; ++i) {
            specs_.push_back(problem.target.block(d.name(i)));
            ids_.push_back(d.name(i));
            snap_.pose.push_back(problem.initial.world(d.name(i)));
            snap_.loose.push_back(true);
        }
    }

    GeometricOutcome run()
    {
        GeometricOutcome out;
        out.trajectory.block_ids = ids_;
        out.snapshots.push_back(snap_);
        if (robot_ != nullptr) {
            out.trajectory.keyframes.push_back({0, robot_->neutral, snap_.pose, {}});
        }
        JointVector q_prev = robot_ != nullptr ? robot_->neutral : JointVector::Zero();
        for (int t = 1; t <= sched_.s; ++t) {
            const auto before = snap_;
            const auto holding_before = holding_;
            std::array<std::optional<Pose>, 2> targets;
            std::vector<bool> involved(static_cast<size_t>(d_.size()), false);
            std::vector<std::pair<int, Hand>> grasps;
            try {
                for (size_t i = 0; i < seq_.size(); ++i) {
                    if (sched_.timestamps[i] == t) {
                        apply(static_cast<int>(i), t, targets, involved, grasps, out.placements);
                    }
                }
                check_overlaps(t);
            } catch (const GeometricInfeasible& e) {
                out.failure = e.what();
                out.failed_timestep = t;
                return out;
            }
            if (robot_ != nullptr) {
                KeyframeRequest req;
                for (int b = 0; b < d_.size(); ++b) {
                    if (before.loose[static_cast<size_t>(b)] && snap_.loose[static_cast<size_t>(b)] &&
                        !involved[static_cast<size_t>(b)]) {
                        req.obstacles.push_back({before.pose[static_cast<size_t>(b)], specs_[static_cast<size_t>(b)].half_extents()});
                        req.obstacle_ids.push_back(ids_[static_cast<size_t>(b)]);
                    }
                }
                KeyframeSolution sol;
                if (!solve(req, targets, grasps, sol)) {
                    out.failure = "timestep " + std::to_string(t) + ": " + sol.violation;
                    out.failed_timestep = t;
                    return out;
                }
                // Held blocks follow their hands.
                for (int b = 0; b < d_.size(); ++b) {
                    const auto& hold = holding_[static_cast<size_t>(b)];
                    if (hold.hand >= 0) {
                        const Pose tool = forward_kinematics(*robot_, static_cast<Hand>(hold.hand),
                                                             robot_->arm(sol.q, static_cast<Hand>(hold.hand)));
                        snap_.pose[static_cast<size_t>(b)] = tool * hold.offset;
                    }
                }
                if (options_.build_samples) {
                    add_samples(out.trajectory, t, q_prev, sol.q, before, holding_before);
                }
                out.trajectory.keyframes.push_back({t, sol.q, snap_.pose, targets});
                q_prev = sol.q;
            }
            out.snapshots.push_back(snap_);
        }
        if (robot_ != nullptr && options_.build_samples) {
            out.trajectory.samples.push_back({static_cast<double>(sched_.s), q_prev, snap_.pose});
        }
        out.feasible = true;
        return out;
    }

private:
    struct Hold {
        int hand = -1;
        Pose offset; // block pose in the tool frame
    };

    void apply(int i, int t, std::array<std::optional<Pose>, 2>& targets, std::vector<bool>& involved,
               std::vector<std::pair<int, Hand>>& grasps, std::vector<ResolvedMove>& placements)
    {
        const CompactMove& m = seq_[static_cast<size_t>(i)];
        const int b = m.object;
        const auto bi = static_cast<size_t>(b);
        const auto riders = state_.riders(b);
        involved[bi] = true;
        for (int r : riders) {
            involved[static_cast<size_t>(r)] = true;
        }
        const auto hi = static_cast<size_t>(m.hand);
        if (m.kind == MoveKind::Grasp) {
            grip_[hi] = choose_grasp(i);
            grasps.emplace_back(i, m.hand);
            targets[hi] = snap_.pose[bi] * grip_[hi];
            for (int x : with(b, riders)) {
                snap_.loose[static_cast<size_t>(x)] = false;
                holding_[static_cast<size_t>(x)] = {static_cast<int>(m.hand), (snap_.pose[bi] * grip_[hi]).inverse() * snap_.pose[static_cast<size_t>(x)]};
            }
        } else {
            ResolvedMove rm;
            rm.move_index = i;
            rm.timestamp = t;
            rm.block = ids_[bi];
            rm.pose = resolve(m, riders, rm.spot);
            placements.push_back(rm);
            const Pose delta = rm.pose * snap_.pose[bi].inverse();
            for (int r : riders) {
                snap_.pose[static_cast<size_t>(r)] = delta * snap_.pose[static_cast<size_t>(r)];
            }
            snap_.pose[bi] = rm.pose;
            targets[hi] = rm.pose * grip_[hi];
            for (int x : with(b, riders)) {
                snap_.loose[static_cast<size_t>(x)] = true;
                holding_[static_cast<size_t>(x)] = {};
            }
        }
        state_ = apply_move(d_, state_, m);
    }

    static std::vector<int> with(int b, const std::vector<int>& riders)
    {
        std::vector<int> out{b};
        out.insert(out.end(), riders.begin(), riders.end());
        return out;
    }

    Pose resolve(const CompactMove& m, const std::vector<int>& riders, int& spot) const
    {
        const auto bi = static_cast<size_t>(m.object);
        const BlockSpec& spec = specs_[bi];
        if (m.kind == MoveKind::Fix) {
            return problem_.target.world(ids_[bi]);
        }
        if (m.support == kTableIndex) {
            const auto& spots = problem_.layout.spots;
            for (size_t j = 0; j < spots.size(); ++j) {
                bool free = true;
                for (int k = 0; k < d_.size() && free; ++k) {
                    const auto ki = static_cast<size_t>(k);
                    if (k == m.object || !snap_.loose[ki] || std::find(riders.begin(), riders.end(), k) != riders.end()) {
                        continue;
                    }
                    free = !vertical_span(Box{snap_.pose[ki], specs_[ki].half_extents()}, spots[j], 0.0).has_value();
                }
                if (free) {
                    spot = static_cast<int>(j);
                    return Pose::translation(spots[j], 0.0, spec.height() / 2.0);
                }
            }
            throw GeometricInfeasible("no free table spot for temporary placement of " + ids_[bi]);
        }
        const auto si = static_cast<size_t>(m.support);
        const Box support{snap_.pose[si], specs_[si].half_extents()};
        const double top = support.aabb().second.z();
        return Pose::translation(snap_.pose[si].position.x(), snap_.pose[si].position.y(), top + spec.height() / 2.0);
    }

    // Orientation of `b` when the grasp at move `i` ends: the next release of that block.
    Quat release_orientation(int i) const
    {
        const int b = seq_[static_cast<size_t>(i)].object;
        for (size_t k = static_cast<size_t>(i) + 1; k < seq_.size(); ++k) {
            if (seq_[k].object == b && seq_[k].kind != MoveKind::Grasp) {
                return seq_[k].kind == MoveKind::Fix ? problem_.target.world(ids_[static_cast<size_t>(b)]).orientation
                                                     : Quat::Identity();
            }
        }
        return Quat::Identity();
    }

    std::vector<Pose> ranked_grasps(int i) const
    {
        const CompactMove& m = seq_[static_cast<size_t>(i)];
        const auto bi = static_cast<size_t>(m.object);
        const Pose here = snap_.pose[bi];
        const Quat there = release_orientation(i);
        const Vec3 shoulder = robot_ != nullptr ? robot_->shoulders[static_cast<size_t>(m.hand)] : Vec3(0, -0.35, 0.30);
        const Vec3 dir = (here.position - shoulder).normalized();
        std::vector<std::pair<double, Pose>> scored;
        for (const Pose& g : grasp_candidates(specs_[bi], kMaxGripWidth)) {
            const Eigen::Matrix3d rg = (here.orientation * g.orientation).toRotationMatrix();
            const Eigen::Matrix3d rr = (there * g.orientation).toRotationMatrix();
            if (rg.col(0).z() > 0.3 || rr.col(0).z() > 0.3) {
                continue; // approach from below the table
            }
            const double score = rg.col(0).dot(dir) + rr.col(0).dot(dir) + 0.5 * (rg.col(2).z() + rr.col(2).z());
            scored.emplace_back(score, g);
        }
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<Pose> out;
        for (auto& [_, g] : scored) {
            out.push_back(g);
        }
        return out;
    }

    Pose choose_grasp(int i) const
    {
        const auto ranked = ranked_grasps(i);
        if (ranked.empty()) {
            throw GeometricInfeasible("no grasp available for " + ids_[static_cast<size_t>(seq_[static_cast<size_t>(i)].object)]);
        }
        return ranked.front();
    }

    bool solve(const KeyframeRequest& base, std::array<std::optional<Pose>, 2>& targets,
               const std::vector<std::pair<int, Hand>>& grasps, KeyframeSolution& sol)
    {
        KeyframeRequest req = base;
        req.hand = targets;
        sol = cache_ != nullptr ? cache_->solve(*robot_, req, options_.ik) : solve_keyframe(*robot_, req, options_.ik);
        if (sol.feasible) {
            return true;
        }
        // A failed grasp may succeed with another face pair; later grasps never revisit this one.
        for (const auto& [i, h] : grasps) {
            const auto hi = static_cast<size_t>(h);
            const auto bi = static_cast<size_t>(seq_[static_cast<size_t>(i)].object);
            const Pose block = snap_.pose[bi];
            const auto ranked = ranked_grasps(i);
            for (size_t k = 1; k < ranked.size() && !sol.feasible; ++k) {
                const Pose old_grip = grip_[hi];
                targets[hi] = block * ranked[k];
                req.hand = targets;
                sol = cache_ != nullptr ? cache_->solve(*robot_, req, options_.ik) : solve_keyframe(*robot_, req, options_.ik);
                if (sol.feasible) {
                    grip_[hi] = ranked[k];
                    for (int b = 0; b < d_.size(); ++b) {
                        auto& hold = holding_[static_cast<size_t>(b)];
                        if (hold.hand == static_cast<int>(h)) {
                            // Re-express held blocks in the new tool frame.
                            hold.offset = (block * ranked[k]).inverse() * (block * old_grip) * hold.offset;
                        }
                    }
                }
            }
        }
        return sol.feasible;
    }

    void check_overlaps(int t) const
    {
        for (int a = 0; a < d_.size(); ++a) {
            for (int b = a + 1; b < d_.size(); ++b) {
                const auto ai = static_cast<size_t>(a);
                const auto bi = static_cast<size_t>(b);
                if (!snap_.loose[ai] || !snap_.loose[bi]) {
                    continue;
                }
                const double v = overlap_volume({snap_.pose[ai], specs_[ai].half_extents()}, {snap_.pose[bi], specs_[bi].half_extents()});
                if (v > 1e-9) {
                    throw GeometricInfeasible("timestep " + std::to_string(t) + ": " + ids_[ai] + " overlaps " + ids_[bi]);
                }
            }
        }
    }

    void add_samples(Trajectory& traj, int t, const JointVector& q0, const JointVector& q1, const Snapshot& before,
                     const std::vector<Hold>& holding_before) const
    {
        const int n = std::max(1, options_.samples_per_segment);
        for (int i = 0; i < n; ++i) {
            const double alpha = static_cast<double>(i) / n;
            TrajectorySample s;
            s.time = (t - 1) + alpha;
            s.q = q0 + alpha * (q1 - q0);
            s.block_poses = before.pose;
            for (int b = 0; b < d_.size(); ++b) {
                const auto& hold = holding_before[static_cast<size_t>(b)];
                if (hold.hand >= 0) {
                    const Hand h = static_cast<Hand>(hold.hand);
                    s.block_poses[static_cast<size_t>(b)] = forward_kinematics(*robot_, h, robot_->arm(s.q, h)) * hold.offset;
                }
            }
            traj.samples.push_back(std::move(s));
        }
    }

    static constexpr double kMaxGripWidth = 0.06;

    const SymbolicDomain& d_;
    const Sequence& seq_;
    const Schedule& sched_;
    const Problem& problem_;
    const RobotModel* robot_;
    const CompileOptions& options_;
    KeyframeCache* cache_;

    SymbolicState state_;
    std::vector<BlockSpec> specs_;
    std::vector<std::string> ids_;
    Snapshot snap_;
    std::array<Pose, 2> grip_;
    std::vector<Hold> holding_ = std::vector<Hold>(kMaxBlocks);
};

Sequence to_sequence(const SymbolicDomain& d, const SymbolicPlan& plan)
{
    Sequence seq;
    for (const auto& m : plan.moves) {
        seq.push_back(to_compact(d, m));
    }
    return seq;
}

} // namespace

std::vector<ResolvedMove> resolve_placements(const SymbolicPlan& plan, const Problem& problem)
{
    const auto d = SymbolicDomain::from_problem(problem);
    const Sequence seq = to_sequence(d, plan);
    const SymbolicState start = initial_state(problem, d);
    const Schedule sched = schedule(d, start, seq);
    const CompileOptions options;
    PlanWalker walker(d, start, seq, sched, problem, nullptr, options, nullptr);
    auto out = walker.run();
    if (!out.feasible) {
        throw GeometricInfeasible(out.failure);
    }
    return out.placements;
}

GeometricOutcome compile_sequence(const SymbolicDomain& d, const SymbolicState& start, const Sequence& seq,
                                  const Schedule& sched, const Problem& problem, const RobotModel& robot,
                                  const CompileOptions& options, KeyframeCache* cache)
{
    PlanWalker walker(d, start, seq, sched, problem, &robot, options, cache);
    return walker.run();
}

GeometricOutcome compile_plan(const SymbolicPlan& plan, const Problem& problem, const RobotModel& robot,
                              const CompileOptions& options, KeyframeCache* cache)
{
    const auto d = SymbolicDomain::from_problem(problem);
    const Sequence seq = to_sequence(d, plan);
    const SymbolicState start = initial_state(problem, d);
    const Schedule sched = schedule(d, start, seq);
    return compile_sequence(d, start, seq, sched, problem, robot, options, cache);
}

} // namespace reconfig
