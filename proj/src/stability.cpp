#include "reconfig/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reconfig {

EnergyAggregation parse_aggregation(const std::string& s)
{
    if (s == "sum") {
        return EnergyAggregation::Sum;
    }
    if (s == "mean") {
        return EnergyAggregation::Mean;
    }
    if (s == "peak") {
        return EnergyAggregation::Peak;
    }
    throw std::invalid_argument("unknown energy aggregation '" + s + "' (expected sum, mean or peak)");
}

std::string to_string(EnergyAggregation a)
{
    switch (a) {
    case EnergyAggregation::Sum:
        return "sum";
    case EnergyAggregation::Mean:
        return "mean";
    case EnergyAggregation::Peak:
        return "peak";
    }
    return "sum";
}

void SimulationParams::validate() const
{
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) {
            throw std::invalid_argument(std::string("simulation: ") + name + " must be positive");
        }
    };
    positive(duration, "duration");
    positive(energy_threshold, "energy_threshold");
    positive(physics.timestep, "timestep");
    positive(physics.gravity, "gravity");
    positive(physics.friction, "friction");
    positive(displacement_threshold, "displacement_threshold");
    if (burn_in < 0.0 || burn_in >= duration) {
        throw std::invalid_argument("simulation: burn_in must lie in [0, duration)");
    }
    if (physics.restitution < 0.0 || physics.restitution > 1.0) {
        throw std::invalid_argument("simulation: restitution must lie in [0, 1]");
    }
    if (physics.iterations < 1) {
        throw std::invalid_argument("simulation: iterations must be at least 1");
    }
}

std::string to_string(StabilityLabel l)
{
    switch (l) {
    case StabilityLabel::Stable:
        return "stable";
    case StabilityLabel::Unstable:
        return "unstable";
    case StabilityLabel::UnstableRecoverable:
        return "unstableRecoverable";
    case StabilityLabel::UnstableFatal:
        return "unstableFatal";
    }
    return "stable";
}

StabilityVerdict check_stability(const StackConfiguration& config, const SimulationParams& params)
{
    params.validate();
    PhysicsWorld world(params.physics);
    std::vector<std::array<Vec3, 8>> start;
    for (const auto& spec : config.blocks()) {
        RigidBox b;
        b.half_extents = spec.half_extents();
        b.mass = spec.mass;
        b.pose = config.world(spec.id);
        world.add(b);
        start.push_back(Box{b.pose, b.half_extents}.vertices());
    }

    const double dt = params.physics.timestep;
    const int steps = static_cast<int>(std::lround(params.duration / dt));
    const int burn = static_cast<int>(std::lround(params.burn_in / dt));
    std::vector<bool> moved(start.size(), false);
    StabilityVerdict v;
    double sum = 0.0;
    double integral = 0.0;
    double peak = 0.0;
    double previous = 0.0;
    for (int i = 1; i <= steps; ++i) {
        world.step();
        const double e = world.kinetic_energy();
        if (params.record_trace) {
            v.trace.push_back(e);
        }
        if (i > burn) {
            sum += e;
            peak = std::max(peak, e);
            if (i > burn + 1) {
                integral += 0.5 * (e + previous) * dt;
            }
            for (size_t b = 0; b < start.size(); ++b) {
                const auto& body = world.bodies()[b];
                const auto now = Box{body.pose, body.half_extents}.vertices();
                for (size_t k = 0; k < 8 && !moved[b]; ++k) {
                    if ((now[k] - start[b][k]).norm() > params.displacement_threshold) {
                        moved[b] = true;
                    }
                }
            }
        }
        previous = e;
        if (world.diverged()) {
            v.diverged = true;
            break;
        }
    }

    switch (params.aggregation) {
    case EnergyAggregation::Sum:
        v.measured_energy = sum;
        break;
    case EnergyAggregation::Mean: {
        const double window = static_cast<double>(std::max(1, steps - burn - 1)) * dt;
        v.measured_energy = integral / window;
        break;
    }
    case EnergyAggregation::Peak:
        v.measured_energy = peak;
        break;
    }
    v.label = (!v.diverged && v.measured_energy <= params.energy_threshold) ? StabilityLabel::Stable
                                                                             : StabilityLabel::Unstable;

    std::map<std::string, Pose> settled;
    for (size_t b = 0; b < start.size(); ++b) {
        const auto& id = config.blocks()[b].id;
        settled[id] = world.bodies()[b].pose;
        if (moved[b]) {
            v.moved.push_back(id);
        }
    }
    v.settled = StackConfiguration::from_world(config.blocks(), settled);
    return v;
}

StabilityLabel classify_recoverable(const StabilityVerdict& verdict, const std::set<std::string>& actuated_next,
                                    bool remainder_reaches_target)
{
    if (verdict.label == StabilityLabel::Stable) {
        return StabilityLabel::Stable;
    }
    if (!remainder_reaches_target || verdict.diverged) {
        return StabilityLabel::UnstableFatal;
    }
    for (const auto& id : verdict.moved) {
        if (!actuated_next.count(id)) {
            return StabilityLabel::UnstableFatal;
        }
    }
    return StabilityLabel::UnstableRecoverable;
}

StabilityVerdict VerdictCache::check(const std::vector<BlockSpec>& blocks, const Snapshot& snap,
                                     const SimulationParams& params)
{
    const std::string key = snap.key();
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = verdicts_.find(key);
        if (it != verdicts_.end()) {
            return it->second;
        }
    }
    StabilityVerdict v = check_stability(snapshot_configuration(blocks, snap), params);
    v.trace.clear();
    std::lock_guard<std::mutex> lock(mutex_);
    return verdicts_.emplace(key, std::move(v)).first->second;
}

size_t VerdictCache::size() const
{
    std::lock_guard<std::mutex> lock(mutex_);
    return verdicts_.size();
}

FullSolution assess_solution(const GeometricOutcome& outcome, const std::vector<BlockSpec>& blocks,
                             const std::vector<std::set<std::string>>& actuated, const SimulationParams& params,
                             VerdictCache* cache)
{
    FullSolution out;
    if (!outcome.feasible) {
        out.rejection = "geometrically infeasible: " + outcome.failure;
        return out;
    }
    const int s = static_cast<int>(outcome.snapshots.size()) - 1;
    out.verdicts.resize(outcome.snapshots.size());
    if (!outcome.snapshots.empty()) {
        out.verdicts[0].settled = snapshot_configuration(blocks, outcome.snapshots[0]);
    }
    out.accepted = true;
    for (int t = 1; t <= s; ++t) {
        const Snapshot& snap = outcome.snapshots[static_cast<size_t>(t)];
        StabilityVerdict v = cache ? cache->check(blocks, snap, params)
                                   : check_stability(snapshot_configuration(blocks, snap), params);
        if (v.label == StabilityLabel::Unstable) {
            static const std::set<std::string> none;
            const auto& next = static_cast<size_t>(t + 1) < actuated.size() ? actuated[static_cast<size_t>(t + 1)] : none;
            v.label = classify_recoverable(v, next, t < s);
            if (v.label == StabilityLabel::UnstableRecoverable) {
                ++out.recoverable;
            } else if (out.accepted) {
                out.accepted = false;
                out.rejection = "timestep " + std::to_string(t) + ": fatal instability (energy " +
                                std::to_string(v.measured_energy) + " J)";
            }
        }
        out.verdicts[static_cast<size_t>(t)] = std::move(v);
    }
    return out;
}

} // namespace reconfig
