#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reconfig/stability.hpp"
#include "reconfig/symbolic.hpp"

namespace reconfig {

enum class ScoreSource { Symbolic, Full };

struct ModelVariant {
    ScoreSource source = ScoreSource::Full;
    SolutionMode set = SolutionMode::Efficient;

    /// symbolic-efficient, symbolic-inefficient, full-efficient or full-inefficient.
    std::string name() const;
    /// Accepts the four names above; "universal" may stand for "inefficient".
    static ModelVariant parse(const std::string& name);
    static std::vector<ModelVariant> all();

    bool operator==(const ModelVariant&) const = default;
};

struct SolutionScore {
    int problem_index = 0;
    int solution_index = 0;
    int s = 0;
    double f = 0.0;
    Handedness handedness = Handedness::OneHand;
};

/// f = s + 0.5 per multi-block move + 0.5 per recoverable instability.
double metabolic_cost(int s, int multi_block_moves, int recoverable);
double metabolic_cost(const Schedule& sched, const FullSolution& solution);

struct Prediction {
    int problem_id = 0;
    std::string variant;
    /// Empty when the variant has no solutions for the problem.
    std::optional<double> pr_one_hand;
    int n_one_hand = 0;
    int n_all = 0;
};

/// Share of exp(-score / temperature) mass on one-hand solutions, scoring with s for symbolic
/// variants and f for full ones.
Prediction pr_one_hand(int problem_id, const std::vector<SolutionScore>& scores, const ModelVariant& variant,
                       double temperature = 1.0);

} // namespace reconfig
