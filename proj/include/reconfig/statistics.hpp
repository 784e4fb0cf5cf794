#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reconfig/choice.hpp"

namespace reconfig {

/// Pearson correlation; empty when either series has zero variance or fewer than two points.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct BehavioralRecord {
    int problem_id = 0;
    std::optional<double> p_one_hand_lab;
    std::optional<double> mean_judgment_online;
    std::optional<int> n_lab;
    std::optional<int> n_online;
};

/// Header: problem_id,p_one_hand_lab,mean_judgment_online,n_lab,n_online. Empty fields are
/// missing values. Throws std::runtime_error naming the line on malformed input.
std::vector<BehavioralRecord> parse_behavioral_csv(const std::string& text);
std::vector<BehavioralRecord> load_behavioral_csv(const std::filesystem::path& path);

struct BootstrapSettings {
    int iterations = 10'000;
    std::uint64_t seed = 1;
    double level = 0.95;
};

/// Problem indices of every bootstrap replicate, drawn with replacement.
std::vector<std::vector<size_t>> bootstrap_indices(size_t n, const BootstrapSettings& settings);

struct CorrelationReport {
    std::string variant;
    std::string target; // "lab" or "online"
    std::optional<double> r;
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
    /// Replicate correlations (degenerate replicates left out).
    std::vector<double> replicates;
};

/// Percentile interval over resampled problems; the interval is widened to contain r.
CorrelationReport bootstrap_correlation(const std::vector<double>& prediction, const std::vector<double>& data,
                                        const std::vector<std::vector<size_t>>& indices, double level);

struct PairwiseTest {
    std::string a;
    std::string b;
    std::string target;
    /// One-sided: share of replicates in which r(a) does not exceed r(b).
    double p = 0.0;
};

struct ComparisonResult {
    std::vector<CorrelationReport> reports;
    std::vector<PairwiseTest> pairwise;
};

/// Correlates every variant's predictions with each behavioral series over the problems both
/// cover. All variants share the same bootstrap replicates per series. Throws
/// std::runtime_error when problem ids do not match or fewer than three problems remain.
ComparisonResult compare(const std::vector<Prediction>& predictions, const std::vector<BehavioralRecord>& data,
                         const BootstrapSettings& settings);

} // namespace reconfig
