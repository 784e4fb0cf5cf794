#pragma once

#include <functional>
#include <string>
#include <vector>

#include "reconfig/choice.hpp"
#include "reconfig/config.hpp"

namespace reconfig {

struct StepVerdict {
    StabilityLabel label = StabilityLabel::Stable;
    double energy = 0.0;
    std::vector<std::string> moved;
};

/// One symbolic solution carried through the later stages.
struct SolutionRecord {
    Sequence sequence;
    int s = 0;
    Handedness handedness = Handedness::OneHand;
    int multi_block_moves = 0;
    bool compiled = false; // geometric and physical stages were run
    bool feasible = false;
    std::string failure;
    bool accepted = false;
    int recoverable = 0;
    double f = 0.0;
    /// Index t: configuration after timestep t (index 0 is the given initial configuration).
    std::vector<StepVerdict> verdicts;
};

struct ProblemRun {
    int problem_id = 0;
    SolutionMode mode = SolutionMode::Efficient;
    SymbolicDomain domain{{}, {}};
    SymbolicState start;
    std::vector<SolutionRecord> solutions;
    int final_length = 0;
    long nodes = 0;
    bool budget_exhausted = false;
    std::string diagnostic;

    int accepted_count() const;
};

/// Caches shared by every run over one problem set. Keyframe solves depend only on the robot,
/// IK settings and request; verdicts only on the snapshot and simulation parameters.
struct PipelineCaches {
    KeyframeCache keyframes;
    VerdictCache verdicts;
};

/// Enumerates a problem's symbolic solutions in `mode` and, when `physical`, compiles each one
/// and judges its stability. Solutions keep discovery order.
ProblemRun run_problem(const Problem& problem, const Config& config, SolutionMode mode, bool physical,
                       PipelineCaches& caches);

/// Symbolic variants score every symbolic solution with s; full variants score accepted
/// solutions with f.
std::vector<SolutionScore> variant_scores(const ProblemRun& run, ScoreSource source);

/// Full geometric outcome of one stored solution, with trajectory samples.
GeometricOutcome compile_solution(const ProblemRun& run, const SolutionRecord& sol, const Problem& problem,
                                  const Config& config, KeyframeCache* cache = nullptr);

/// Runs `work(i)` for i in [0, n) on up to `jobs` threads. Exceptions are rethrown after all
/// workers stop (the one from the lowest index wins).
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& work);

/// Predictions of the given variants for every problem, grouped by variant in the given order.
std::vector<Prediction> run_variants(const std::vector<Problem>& problems, const std::vector<ModelVariant>& variants,
                                     const Config& config, int jobs);

} // namespace reconfig
