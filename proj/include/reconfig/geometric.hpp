#pragma once

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "reconfig/robot.hpp"
#include "reconfig/scene.hpp"
#include "reconfig/symbolic.hpp"

namespace reconfig {

struct IkSettings {
    double position_tolerance = 1e-3;
    double angle_tolerance = M_PI / 180.0;
    double clearance = 0.005;
    double initial_weight = 10.0;
    double weight_growth = 10.0;
    int outer_iterations = 5;
    double inner_tolerance = 1e-8;
    int max_inner_iterations = 200;
    /// Extra margin the penalty aims for beyond the hard clearance and limit checks.
    double clearance_margin = 1e-3;
    double limit_margin = 1e-2;
    /// Orientation residuals are scaled by this length so that they compete with positions.
    double orientation_scale = 0.1;
};

/// Requirements for one keyframe: an optional tool pose per hand and the blocks the arms must
/// keep clear of (blocks held or carried by a hand are left out by the caller).
struct KeyframeRequest {
    std::array<std::optional<Pose>, 2> hand;
    std::vector<Box> obstacles;
    std::vector<std::string> obstacle_ids;
};

struct KeyframeSolution {
    bool feasible = false;
    JointVector q = JointVector::Zero();
    std::string violation; // empty when feasible
};

/// Penalty objective for one arm: |q - neutral|^2 + weight * sum of squared constraint residuals.
/// `grad` (optional) receives the analytic gradient.
double ik_objective(const RobotModel& robot, Hand h, const std::optional<Pose>& target, const std::vector<Box>& obstacles,
                    const IkSettings& settings, double weight, const ArmJoints& q, ArmJoints* grad);

/// Smallest distance from any sampled link point to any obstacle surface, minus the link radius.
double arm_clearance(const RobotModel& robot, Hand h, const ArmJoints& q, const std::vector<Box>& obstacles,
                     int* closest = nullptr);

KeyframeSolution solve_keyframe(const RobotModel& robot, const KeyframeRequest& request, const IkSettings& settings = {});

/// Memo of per-arm keyframe solves. Solving is a pure function of its inputs, so reuse keeps
/// results identical. Safe for concurrent use.
class KeyframeCache {
public:
    KeyframeSolution solve(const RobotModel& robot, const KeyframeRequest& request, const IkSettings& settings);
    size_t size() const;

private:
    struct ArmResult {
        bool feasible;
        ArmJoints q;
        std::string violation;
    };
    mutable std::mutex mutex_;
    std::map<std::string, ArmResult> arms_;
};

// ---------------------------------------------------------------------------------------------
// Plan compilation

class GeometricInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Block poses at one instant, in problem block order. `loose[i]` is false while block i is held
/// or carried by a held block.
struct Snapshot {
    std::vector<Pose> pose;
    std::vector<bool> loose;

    /// Quantized text key (0.01 mm, 1e-6 quaternion) of the loose blocks.
    std::string key() const;
};

/// Resting blocks of a snapshot as a configuration (held blocks removed).
StackConfiguration snapshot_configuration(const std::vector<BlockSpec>& blocks, const Snapshot& snap);

struct ResolvedMove {
    int move_index = 0;
    int timestamp = 0;
    std::string block;
    Pose pose;          // Place/Fix: resolved world pose of the block
    int spot = -1;      // table spot used by a temporary placement
};

struct Keyframe {
    int timestamp = 0;
    JointVector q = JointVector::Zero();
    std::vector<Pose> block_poses;
    /// Tool poses the solver was asked to reach; empty for an unconstrained hand.
    std::array<std::optional<Pose>, 2> hand_targets;
};

struct TrajectorySample {
    double time = 0.0; // in timesteps; keyframe k sits at time k
    JointVector q = JointVector::Zero();
    std::vector<Pose> block_poses;
};

struct Trajectory {
    std::vector<std::string> block_ids;
    std::vector<Keyframe> keyframes;
    std::vector<TrajectorySample> samples;
};

struct GeometricOutcome {
    bool feasible = false;
    std::string failure;
    int failed_timestep = -1;
    Trajectory trajectory;
    std::vector<ResolvedMove> placements;
    /// One per timestep 0..s: block poses after that timestep's moves.
    std::vector<Snapshot> snapshots;
};

struct CompileOptions {
    int samples_per_segment = 20;
    bool build_samples = true;
    IkSettings ik;
};

/// Per-timestep placement poses for the moves of a plan (Place and Fix moves only).
/// Throws GeometricInfeasible when no table spot is free for a temporary placement.
std::vector<ResolvedMove> resolve_placements(const SymbolicPlan& plan, const Problem& problem);

GeometricOutcome compile_plan(const SymbolicPlan& plan, const Problem& problem, const RobotModel& robot,
                              const CompileOptions& options = {}, KeyframeCache* cache = nullptr);

/// Packed-sequence form used by the pipeline. `d` must come from SymbolicDomain::from_problem.
GeometricOutcome compile_sequence(const SymbolicDomain& d, const SymbolicState& start, const Sequence& seq,
                                  const Schedule& sched, const Problem& problem, const RobotModel& robot,
                                  const CompileOptions& options, KeyframeCache* cache);

} // namespace reconfig
