#include "reconfig/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace reconfig {

int ProblemRun::accepted_count() const
{
    return static_cast<int>(std::count_if(solutions.begin(), solutions.end(), [](const SolutionRecord& r) { return r.accepted; }));
}

namespace {

std::vector<std::set<std::string>> actuated_by_timestep(const SymbolicDomain& d, const Sequence& seq, const Schedule& sched)
{
    std::vector<std::set<std::string>> out(static_cast<size_t>(sched.s + 1));
    for (size_t i = 0; i < seq.size(); ++i) {
        out[static_cast<size_t>(sched.timestamps[i])].insert(d.name(seq[i].object));
    }
    return out;
}

} // namespace

ProblemRun run_problem(const Problem& problem, const Config& config, SolutionMode mode, bool physical, PipelineCaches& caches)
{
    ProblemRun run;
    run.problem_id = problem.id;
    run.mode = mode;
    run.domain = SymbolicDomain::from_problem(problem, config.contacts);
    run.start = initial_state(problem, run.domain, config.contacts);

    SearchOptions opts = config.search;
    opts.mode = mode;
    std::vector<Sequence> found;
    if (opts.search == SearchKind::Mcts) {
        long used = 0;
        found = mcts_search(run.domain, run.start, opts, &used);
        run.nodes = used;
        run.final_length = opts.max_length;
    } else {
        SequenceSet set = enumerate_sequences(run.domain, run.start, opts);
        found = std::move(set.sequences);
        run.final_length = set.final_length;
        run.nodes = set.nodes;
        run.budget_exhausted = set.budget_exhausted;
        run.diagnostic = set.diagnostic;
    }

    CompileOptions compile = config.compile;
    compile.build_samples = false;
    const auto& blocks = problem.initial.blocks();
    run.solutions.reserve(found.size());
    for (auto& seq : found) {
        SolutionRecord rec;
        const Schedule sched = schedule(run.domain, run.start, seq);
        rec.s = sched.s;
        rec.handedness = sched.handedness;
        rec.multi_block_moves = static_cast<int>(std::count_if(sched.carried.begin(), sched.carried.end(), [](int c) { return c >= 1; }));
        rec.f = rec.s;
        if (physical) {
            rec.compiled = true;
            const GeometricOutcome g =
                compile_sequence(run.domain, run.start, seq, sched, problem, config.robot, compile, &caches.keyframes);
            rec.feasible = g.feasible;
            if (!g.feasible) {
                rec.failure = g.failure;
            } else {
                const FullSolution full =
                    assess_solution(g, blocks, actuated_by_timestep(run.domain, seq, sched), config.simulation, &caches.verdicts);
                rec.accepted = full.accepted;
                rec.failure = full.rejection;
                rec.recoverable = full.recoverable;
                rec.f = metabolic_cost(sched, full);
                for (const auto& v : full.verdicts) {
                    rec.verdicts.push_back({v.label, v.measured_energy, v.moved});
                }
            }
        }
        rec.sequence = std::move(seq);
        run.solutions.push_back(std::move(rec));
    }
    return run;
}

std::vector<SolutionScore> variant_scores(const ProblemRun& run, ScoreSource source)
{
    std::vector<SolutionScore> out;
    for (size_t j = 0; j < run.solutions.size(); ++j) {
        const auto& r = run.solutions[j];
        if (source == ScoreSource::Full && !r.accepted) {
            continue;
        }
        SolutionScore x;
        x.problem_index = run.problem_id;
        x.solution_index = static_cast<int>(j);
        x.s = r.s;
        x.f = r.f;
        x.handedness = r.handedness;
        out.push_back(x);
    }
    return out;
}

GeometricOutcome compile_solution(const ProblemRun& run, const SolutionRecord& sol, const Problem& problem,
                                  const Config& config, KeyframeCache* cache)
{
    const Schedule sched = schedule(run.domain, run.start, sol.sequence);
    CompileOptions compile = config.compile;
    compile.build_samples = true;
    return compile_sequence(run.domain, run.start, sol.sequence, sched, problem, config.robot, compile, cache);
}

void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& work)
{
    const size_t workers = std::min(n, static_cast<size_t>(std::max(1, jobs)));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<size_t> next{0};
    auto loop = [&] {
        for (size_t i = next++; i < n; i = next++) {
            try {
                work(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        loop();
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w) {
            pool.emplace_back(loop);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::vector<Prediction> run_variants(const std::vector<Problem>& problems, const std::vector<ModelVariant>& variants,
                                     const Config& config, int jobs)
{
    // Which solution sets are needed, and whether any full variant uses them.
    std::map<SolutionMode, bool> needed;
    for (const auto& v : variants) {
        needed[v.set] = needed[v.set] || v.source == ScoreSource::Full;
    }
    PipelineCaches caches;
    std::vector<std::vector<Prediction>> per_problem(problems.size());
    parallel_for(problems.size(), jobs, [&](size_t i) {
        std::map<SolutionMode, ProblemRun> runs;
        for (const auto& [mode, physical] : needed) {
            runs.emplace(mode, run_problem(problems[i], config, mode, physical, caches));
        }
        for (const auto& v : variants) {
            per_problem[i].push_back(
                pr_one_hand(problems[i].id, variant_scores(runs.at(v.set), v.source), v, config.temperature));
        }
    });
    std::vector<Prediction> out;
    for (size_t v = 0; v < variants.size(); ++v) {
        for (const auto& rows : per_problem) {
            out.push_back(rows[v]);
        }
    }
    return out;
}

} // namespace reconfig
