#include "reconfig/choice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reconfig {

std::string ModelVariant::name() const
{
    return std::string(source == ScoreSource::Symbolic ? "symbolic-" : "full-") +
           (set == SolutionMode::Efficient ? "efficient" : "inefficient");
}

ModelVariant ModelVariant::parse(const std::string& name)
{
    const auto dash = name.find('-');
    if (dash != std::string::npos) {
        const std::string head = name.substr(0, dash);
        const std::string tail = name.substr(dash + 1);
        ModelVariant v;
        if (head == "symbolic") {
            v.source = ScoreSource::Symbolic;
        } else if (head == "full") {
            v.source = ScoreSource::Full;
        } else {
            throw std::invalid_argument("unknown variant '" + name + "'");
        }
        try {
            v.set = solution_mode_from_string(tail);
        } catch (const std::exception&) {
            throw std::invalid_argument("unknown variant '" + name + "'");
        }
        return v;
    }
    throw std::invalid_argument("unknown variant '" + name + "'");
}

std::vector<ModelVariant> ModelVariant::all()
{
    return {{ScoreSource::Symbolic, SolutionMode::Efficient},
            {ScoreSource::Symbolic, SolutionMode::Universal},
            {ScoreSource::Full, SolutionMode::Efficient},
            {ScoreSource::Full, SolutionMode::Universal}};
}

double metabolic_cost(int s, int multi_block_moves, int recoverable)
{
    return s + 0.5 * multi_block_moves + 0.5 * recoverable;
}

double metabolic_cost(const Schedule& sched, const FullSolution& solution)
{
    const auto multi = std::count_if(sched.carried.begin(), sched.carried.end(), [](int c) { return c >= 1; });
    int recoverable = 0;
    for (const auto& v : solution.verdicts) {
        recoverable += v.label == StabilityLabel::UnstableRecoverable;
    }
    return metabolic_cost(sched.s, static_cast<int>(multi), recoverable);
}

Prediction pr_one_hand(int problem_id, const std::vector<SolutionScore>& scores, const ModelVariant& variant,
                       double temperature)
{
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("temperature must be positive");
    }
    Prediction p;
    p.problem_id = problem_id;
    p.variant = variant.name();
    p.n_all = static_cast<int>(scores.size());
    if (scores.empty()) {
        return p;
    }
    auto score = [&](const SolutionScore& x) { return variant.source == ScoreSource::Symbolic ? double(x.s) : x.f; };
    double lowest = score(scores.front());
    for (const auto& x : scores) {
        lowest = std::min(lowest, score(x));
    }
    double one = 0.0;
    double total = 0.0;
    for (const auto& x : scores) {
        const double w = std::exp(-(score(x) - lowest) / temperature);
        total += w;
        if (x.handedness == Handedness::OneHand) {
            one += w;
            ++p.n_one_hand;
        }
    }
    p.pr_one_hand = p.n_one_hand == p.n_all ? 1.0 : one / total;
    return p;
}

} // namespace reconfig
