#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "reconfig/export.hpp"

using namespace reconfig;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
};

/// Collects a command's whole output and writes it once, to stdout for "-".
class Output {
public:
    explicit Output(std::string path) : path_(std::move(path))
    {
        if (path_ != "-") {
            file_.open(path_, std::ios::binary | std::ios::trunc);
            if (!file_) {
                throw FormatError("cannot write " + path_);
            }
        }
    }

    std::ostream& stream() { return path_ == "-" ? std::cout : file_; }

    void close()
    {
        stream().flush();
        if (!stream()) {
            throw FormatError("write failed: " + path_);
        }
    }

private:
    std::string path_;
    std::ofstream file_;
};

Config load_settings(const Globals& g)
{
    Config c = g.config.empty() ? Config{} : load_config(g.config);
    if (g.seed) {
        c.search.seed = *g.seed;
        c.bootstrap.seed = *g.seed;
    }
    return c;
}

int jobs_of(const Globals& g)
{
    return g.jobs > 0 ? g.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<ModelVariant> parse_variants(const std::string& name)
{
    if (name == "all") {
        return ModelVariant::all();
    }
    try {
        return {ModelVariant::parse(name)};
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::vector<SolutionMode> parse_modes(const std::string& mode)
{
    if (mode == "both") {
        return {SolutionMode::Efficient, SolutionMode::Universal};
    }
    try {
        return {solution_mode_from_string(mode)};
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::vector<Problem> select(const ProblemSet& set, const std::vector<int>& ids)
{
    if (ids.empty()) {
        return set.problems;
    }
    std::vector<Problem> out;
    for (int id : ids) {
        auto it = std::find_if(set.problems.begin(), set.problems.end(), [&](const Problem& p) { return p.id == id; });
        if (it == set.problems.end()) {
            throw UsageError("no problem with id " + std::to_string(id));
        }
        out.push_back(*it);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------

struct SolveArgs {
    std::string problems;
    std::string mode = "efficient";
    std::string hands;
    bool symbolic_only = false;
    std::vector<int> ids;
    std::string out = "-";
};

void run_solve(const Globals& g, const SolveArgs& a)
{
    Config config = load_settings(g);
    if (!a.hands.empty()) {
        try {
            config.search.hands = hands_mode_from_string(a.hands);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    const auto modes = parse_modes(a.mode);
    const auto set = load_problem_set(a.problems, config.contacts);
    const auto problems = select(set, a.ids);
    const bool physical = !a.symbolic_only;

    Output out(a.out);
    PipelineCaches caches;
    const size_t n = problems.size() * modes.size();
    std::vector<std::string> chunks(n);
    parallel_for(n, jobs_of(g), [&](size_t i) {
        const auto run = run_problem(problems[i / modes.size()], config, modes[i % modes.size()], physical, caches);
        chunks[i] = solution_set_json(store(run, config.search.hands, physical));
    });
    auto& os = out.stream();
    os << kSolutionFileHead;
    for (size_t i = 0; i < n; ++i) {
        os << (i ? ",\n" : "") << chunks[i];
    }
    os << kSolutionFileTail;
    out.close();
}

// ---------------------------------------------------------------------------------------------

struct PredictArgs {
    std::string problems;
    std::string solutions;
    std::string variant = "all";
    std::string out = "-";
};

std::vector<Prediction> predict_from_file(const std::vector<StoredSet>& sets, const std::vector<ModelVariant>& variants,
                                          double temperature)
{
    std::vector<int> ids;
    std::map<std::pair<int, SolutionMode>, const StoredSet*> index;
    for (const auto& s : sets) {
        if (std::find(ids.begin(), ids.end(), s.problem_id) == ids.end()) {
            ids.push_back(s.problem_id);
        }
        index[{s.problem_id, s.mode}] = &s;
    }
    std::vector<Prediction> out;
    for (const auto& v : variants) {
        for (int id : ids) {
            auto it = index.find({id, v.set});
            if (it == index.end()) {
                throw FormatError("solution file has no " + std::string(to_string(v.set)) + " set for problem " +
                                  std::to_string(id) + " (needed by " + v.name() + ")");
            }
            out.push_back(pr_one_hand(id, stored_scores(*it->second, v.source), v, temperature));
        }
    }
    return out;
}

void run_predict(const Globals& g, const PredictArgs& a)
{
    const Config config = load_settings(g);
    const auto variants = parse_variants(a.variant);
    if (a.problems.empty() == a.solutions.empty()) {
        throw UsageError("predict needs exactly one of --problems and --solutions");
    }
    std::vector<Prediction> preds;
    if (!a.solutions.empty()) {
        preds = predict_from_file(load_solution_file(a.solutions), variants, config.temperature);
    } else {
        const auto set = load_problem_set(a.problems, config.contacts);
        preds = run_variants(set.problems, variants, config, jobs_of(g));
    }
    Output out(a.out);
    out.stream() << predictions_csv(preds);
    out.close();
}

// ---------------------------------------------------------------------------------------------

struct CompareArgs {
    std::string predictions;
    std::string behavior;
    int iterations = 0;
    std::string out = "-";
};

void run_compare(const Globals& g, const CompareArgs& a)
{
    const Config config = load_settings(g);
    BootstrapSettings bs = config.bootstrap;
    if (a.iterations > 0) {
        bs.iterations = a.iterations;
    }
    const auto preds = load_predictions_csv(a.predictions);
    const auto data = load_behavioral_csv(a.behavior);
    const auto result = compare(preds, data, bs);
    Output out(a.out);
    out.stream() << comparison_csv(result, bs.iterations);
    out.close();
}

// ---------------------------------------------------------------------------------------------

struct RenderArgs {
    std::string solutions;
    std::string problems;
    int problem = 0;
    int solution = 0;
    std::string mode;
    bool samples = false;
    std::string out = "-";
};

void run_render(const Globals& g, const RenderArgs& a)
{
    const Config config = load_settings(g);
    const auto problem_set = load_problem_set(a.problems, config.contacts);
    const auto problem = select(problem_set, {a.problem}).front();
    const auto sets = load_solution_file(a.solutions);
    const StoredSolution* found = nullptr;
    for (const auto& s : sets) {
        if (s.problem_id != a.problem || (!a.mode.empty() && to_string(s.mode) != a.mode)) {
            continue;
        }
        for (const auto& x : s.solutions) {
            if (x.id == a.solution) {
                found = &x;
            }
        }
        if (found != nullptr) {
            break;
        }
    }
    if (found == nullptr) {
        throw UsageError("no solution " + std::to_string(a.solution) + " for problem " + std::to_string(a.problem));
    }
    CompileOptions options = config.compile;
    options.build_samples = a.samples;
    const auto outcome = compile_plan(found->plan, problem, config.robot, options);
    if (!outcome.feasible) {
        std::cerr << "note: solution is geometrically infeasible (" << outcome.failure << "); rendering the prefix\n";
    }
    Output out(a.out);
    out.stream() << trajectory_csv(outcome.trajectory, a.samples);
    out.close();
}

// ---------------------------------------------------------------------------------------------

struct ValidateArgs {
    std::string problems;
};

void run_validate(const Globals& g, const ValidateArgs& a)
{
    const Config config = load_settings(g);
    if (!g.config.empty()) {
        std::cout << "config " << g.config << ": ok\n";
    }
    if (a.problems.empty()) {
        return;
    }
    const auto set = load_problem_set(a.problems, config.contacts);
    for (const auto& p : set.problems) {
        const auto domain = SymbolicDomain::from_problem(p, config.contacts);
        const auto start = initial_state(p, domain, config.contacts);
        int placed = 0;
        for (int b = 0; b < domain.size(); ++b) {
            placed += start.at_target(domain, b);
        }
        std::cout << "problem " << p.id << ": ok (" << domain.size() << " blocks, " << placed << " already in place)\n";
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Plans and scores block-stack re-configuration problems for a two-armed robot."};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON parameter file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "seed for stochastic search and the bootstrap");
    app.add_option("--jobs", g.jobs, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "enumerate, compile and simulate solutions");
    s->add_option("--problems", solve.problems, "problem file")->required();
    s->add_option("--mode", solve.mode, "efficient, universal or both");
    s->add_option("--hands", solve.hands, "both, one or two");
    s->add_option("--problem", solve.ids, "restrict to these problem ids");
    s->add_flag("--symbolic-only", solve.symbolic_only, "skip the geometric and physical stages");
    s->add_option("-o,--out", solve.out, "output file (- for stdout)");

    PredictArgs predict;
    auto* p = app.add_subcommand("predict", "Pr(one hand) per problem and model variant");
    p->add_option("--problems", predict.problems, "problem file (runs the pipeline)");
    p->add_option("--solutions", predict.solutions, "solution file written by solve");
    p->add_option("--variant", predict.variant, "symbolic-efficient, symbolic-inefficient, full-efficient, full-inefficient or all");
    p->add_option("-o,--out", predict.out, "output file (- for stdout)");

    CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "correlate predictions with behavioral data");
    c->add_option("--predictions", cmp.predictions, "predictions file")->required();
    c->add_option("--behavior", cmp.behavior, "behavioral data file")->required();
    c->add_option("--iterations", cmp.iterations, "bootstrap iterations (default from config)")->check(CLI::PositiveNumber);
    c->add_option("-o,--out", cmp.out, "output file (- for stdout)");

    RenderArgs render;
    auto* r = app.add_subcommand("render", "export one solution's keyframes for plotting");
    r->add_option("--solutions", render.solutions, "solution file")->required();
    r->add_option("--problems", render.problems, "problem file")->required();
    r->add_option("--problem", render.problem, "problem id")->required();
    r->add_option("--solution", render.solution, "solution id within the problem's set")->required();
    r->add_option("--mode", render.mode, "pick the efficient or universal set when both are present");
    r->add_flag("--samples", render.samples, "include interpolated samples between keyframes");
    r->add_option("-o,--out", render.out, "output file (- for stdout)");

    ValidateArgs validate;
    auto* v = app.add_subcommand("validate", "check a problem file and/or the --config file");
    v->add_option("--problems", validate.problems, "problem file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*s) {
            run_solve(g, solve);
        } else if (*p) {
            run_predict(g, predict);
        } else if (*c) {
            run_compare(g, cmp);
        } else if (*r) {
            run_render(g, render);
        } else if (*v) {
            run_validate(g, validate);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
