#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "reconfig/pipeline.hpp"

namespace reconfig {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StoredSolution {
    int id = 0; // position in the stored order
    SymbolicPlan plan;
    int multi_block_moves = 0;
    bool compiled = false;
    bool feasible = false;
    bool accepted = false;
    int recoverable = 0;
    double f = 0.0;
    std::string failure;
    std::vector<StepVerdict> verdicts;
};

/// A problem's solution set as written by `solve`: ordered by s, then canonical key.
struct StoredSet {
    int problem_id = 0;
    SolutionMode mode = SolutionMode::Efficient;
    HandsMode hands = HandsMode::Both;
    bool physical = false;
    int final_length = 0;
    long nodes = 0;
    bool budget_exhausted = false;
    std::string diagnostic;
    std::vector<StoredSolution> solutions;
};

StoredSet store(const ProblemRun& run, HandsMode hands, bool physical);
std::vector<SolutionScore> stored_scores(const StoredSet& set, ScoreSource source);

/// A solution file is kSolutionFileHead, the sets' JSON joined by ",\n", then kSolutionFileTail.
inline constexpr const char* kSolutionFileHead = "{\"solution_sets\": [\n";
inline constexpr const char* kSolutionFileTail = "\n]}\n";
std::string solution_set_json(const StoredSet& set);
std::string solution_file_json(const std::vector<StoredSet>& sets);
std::vector<StoredSet> parse_solution_file(const std::string& text);
std::vector<StoredSet> load_solution_file(const std::filesystem::path& path);

/// Columns: problem_id,variant,pr_one_hand,n_one_hand,n_all; an undefined prediction is left empty.
std::string predictions_csv(const std::vector<Prediction>& predictions);
std::vector<Prediction> parse_predictions_csv(const std::string& text);
std::vector<Prediction> load_predictions_csv(const std::filesystem::path& path);

/// Correlation rows (variant,target,r,lo,hi,n,replicates), a blank line, then pairwise rows
/// (a,b,target,p_one_sided).
std::string comparison_csv(const ComparisonResult& result, int iterations);

/// One row per keyframe (and per interpolated sample when `samples`): timestep, time, kind,
/// twelve joint values, then x,y,z,qw,qx,qy,qz for every block.
std::string trajectory_csv(const Trajectory& trajectory, bool samples);

/// Reads a whole file; the message of the thrown FormatError names the path.
std::string read_text(const std::filesystem::path& path);

} // namespace reconfig
