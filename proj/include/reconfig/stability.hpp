#pragma once

#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "reconfig/geometric.hpp"
#include "reconfig/physics.hpp"
#include "reconfig/scene.hpp"

namespace reconfig {

enum class EnergyAggregation { Sum, Mean, Peak };

EnergyAggregation parse_aggregation(const std::string& s);
std::string to_string(EnergyAggregation a);

struct SimulationParams {
    double duration = 1.0;
    double burn_in = 0.1;
    double energy_threshold = 0.1;
    /// Sum: kinetic energy added over post-burn-in steps. Mean: time integral divided by the
    /// window. Peak: largest post-burn-in value.
    EnergyAggregation aggregation = EnergyAggregation::Sum;
    double displacement_threshold = 0.005;
    bool record_trace = false;
    PhysicsSettings physics;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

enum class StabilityLabel { Stable, Unstable, UnstableRecoverable, UnstableFatal };

std::string to_string(StabilityLabel l);

struct StabilityVerdict {
    StabilityLabel label = StabilityLabel::Stable;
    double measured_energy = 0.0;
    StackConfiguration settled;
    /// Blocks displaced beyond the threshold at some post-burn-in step.
    std::vector<std::string> moved;
    bool diverged = false;
    /// Kinetic energy after every step when requested.
    std::vector<double> trace;
};

/// Simulates the configuration under gravity and labels it Stable or Unstable.
StabilityVerdict check_stability(const StackConfiguration& config, const SimulationParams& params);

/// Recoverable iff every displaced block is actuated at the next timestep and the rest of the
/// plan still reaches the target.
StabilityLabel classify_recoverable(const StabilityVerdict& verdict, const std::set<std::string>& actuated_next,
                                    bool remainder_reaches_target);

/// Memo of verdicts by snapshot key. Safe for concurrent use.
class VerdictCache {
public:
    StabilityVerdict check(const std::vector<BlockSpec>& blocks, const Snapshot& snap, const SimulationParams& params);
    size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, StabilityVerdict> verdicts_;
};

struct FullSolution {
    bool accepted = false;
    /// Index t holds the verdict for the configuration after timestep t; index 0 is the given
    /// initial configuration and is taken as stable.
    std::vector<StabilityVerdict> verdicts;
    int recoverable = 0;
    std::string rejection;
};

/// Judges every per-timestep snapshot of a feasible outcome. `actuated[t]` lists the blocks
/// moved by moves stamped t (index 0 unused).
FullSolution assess_solution(const GeometricOutcome& outcome, const std::vector<BlockSpec>& blocks,
                             const std::vector<std::set<std::string>>& actuated, const SimulationParams& params,
                             VerdictCache* cache = nullptr);

} // namespace reconfig
