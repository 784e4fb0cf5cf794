#include "reconfig/export.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace reconfig {

using json = nlohmann::ordered_json;

namespace {

const char* hands_name(HandsMode h)
{
    return h == HandsMode::One ? "one" : h == HandsMode::Two ? "two" : "both";
}

StabilityLabel label_from_string(const std::string& s)
{
    for (auto l : {StabilityLabel::Stable, StabilityLabel::Unstable, StabilityLabel::UnstableRecoverable,
                   StabilityLabel::UnstableFatal}) {
        if (to_string(l) == s) {
            return l;
        }
    }
    throw FormatError("unknown stability label '" + s + "'");
}

Handedness handedness_from_string(const std::string& s)
{
    if (s == to_string(Handedness::OneHand)) {
        return Handedness::OneHand;
    }
    if (s == to_string(Handedness::TwoHand)) {
        return Handedness::TwoHand;
    }
    throw FormatError("unknown handedness '" + s + "'");
}

std::string number(double v)
{
    std::ostringstream os;
    os << std::setprecision(9) << round_significant(v);
    return os.str();
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

json move_json(const Move& m)
{
    return json::array({to_string(m.kind), m.object, m.support.empty() ? json(nullptr) : json(m.support),
                        to_string(m.actuator), m.timestamp});
}

Move move_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 5) {
        throw FormatError("a move must be [kind, object, support, actuator, timestamp]");
    }
    Move m;
    m.kind = move_kind_from_string(j[0].get<std::string>());
    m.object = j[1].get<std::string>();
    m.support = j[2].is_null() ? std::string() : j[2].get<std::string>();
    m.actuator = hand_from_string(j[3].get<std::string>());
    m.timestamp = j[4].get<int>();
    return m;
}

} // namespace

StoredSet store(const ProblemRun& run, HandsMode hands, bool physical)
{
    StoredSet set;
    set.problem_id = run.problem_id;
    set.mode = run.mode;
    set.hands = hands;
    set.physical = physical;
    set.final_length = run.final_length;
    set.nodes = run.nodes;
    set.budget_exhausted = run.budget_exhausted;
    set.diagnostic = run.diagnostic;
    std::vector<std::pair<std::string, StoredSolution>> keyed;
    keyed.reserve(run.solutions.size());
    for (const auto& r : run.solutions) {
        StoredSolution x;
        x.plan = to_plan(run.domain, run.start, r.sequence);
        x.multi_block_moves = r.multi_block_moves;
        x.compiled = r.compiled;
        x.feasible = r.feasible;
        x.accepted = r.accepted;
        x.recoverable = r.recoverable;
        x.f = r.f;
        x.failure = r.failure;
        x.verdicts = r.verdicts;
        keyed.emplace_back(canonical_form(x.plan), std::move(x));
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        return a.second.plan.s != b.second.plan.s ? a.second.plan.s < b.second.plan.s : a.first < b.first;
    });
    for (auto& [_, x] : keyed) {
        x.id = static_cast<int>(set.solutions.size());
        set.solutions.push_back(std::move(x));
    }
    return set;
}

std::vector<SolutionScore> stored_scores(const StoredSet& set, ScoreSource source)
{
    if (source == ScoreSource::Full && !set.physical) {
        throw FormatError("problem " + std::to_string(set.problem_id) + ": solution set has no physical results");
    }
    std::vector<SolutionScore> out;
    for (const auto& x : set.solutions) {
        if (source == ScoreSource::Full && !x.accepted) {
            continue;
        }
        out.push_back({set.problem_id, x.id, x.plan.s, x.f, x.plan.handedness});
    }
    return out;
}

std::string solution_set_json(const StoredSet& set)
{
    // One solution per line keeps large files greppable without the cost of full indentation.
    std::string out;
    {
        json head;
        head["problem_id"] = set.problem_id;
        head["mode"] = to_string(set.mode);
        head["hands"] = hands_name(set.hands);
        head["physical"] = set.physical;
        head["final_length"] = set.final_length;
        head["nodes"] = set.nodes;
        head["budget_exhausted"] = set.budget_exhausted;
        head["diagnostic"] = set.diagnostic;
        std::string h = head.dump();
        h.pop_back();
        out += h + ", \"solutions\": [";
        for (const auto& x : set.solutions) {
            json j;
            j["id"] = x.id;
            j["s"] = x.plan.s;
            j["handedness"] = to_string(x.plan.handedness);
            json moves = json::array();
            for (const auto& m : x.plan.moves) {
                moves.push_back(move_json(m));
            }
            j["moves"] = std::move(moves);
            j["multi_block_moves"] = x.multi_block_moves;
            if (set.physical) {
                j["feasible"] = x.feasible;
                j["accepted"] = x.accepted;
                j["recoverable"] = x.recoverable;
                j["f"] = x.f;
                j["failure"] = x.failure;
                json log = json::array();
                for (size_t t = 0; t < x.verdicts.size(); ++t) {
                    const auto& v = x.verdicts[t];
                    log.push_back({{"timestep", t}, {"label", to_string(v.label)}, {"energy", round_significant(v.energy)}, {"moved", v.moved}});
                }
                j["verdicts"] = std::move(log);
            }
            out += (&x == &set.solutions.front() ? "\n  " : ",\n  ") + j.dump();
        }
        out += set.solutions.empty() ? "]}" : "\n]}";
    }
    return out;
}

std::string solution_file_json(const std::vector<StoredSet>& sets)
{
    std::string out = kSolutionFileHead;
    for (size_t i = 0; i < sets.size(); ++i) {
        out += (i ? ",\n" : "") + solution_set_json(sets[i]);
    }
    return out + kSolutionFileTail;
}

std::vector<StoredSet> parse_solution_file(const std::string& text)
{
    std::vector<StoredSet> out;
    try {
        const json root = json::parse(text);
        for (const auto& js : root.at("solution_sets")) {
            StoredSet set;
            set.problem_id = js.at("problem_id").get<int>();
            set.mode = solution_mode_from_string(js.at("mode").get<std::string>());
            set.hands = hands_mode_from_string(js.at("hands").get<std::string>());
            set.physical = js.at("physical").get<bool>();
            set.final_length = js.at("final_length").get<int>();
            set.nodes = js.at("nodes").get<long>();
            set.budget_exhausted = js.at("budget_exhausted").get<bool>();
            set.diagnostic = js.at("diagnostic").get<std::string>();
            for (const auto& j : js.at("solutions")) {
                StoredSolution x;
                x.id = j.at("id").get<int>();
                x.plan.s = j.at("s").get<int>();
                x.plan.handedness = handedness_from_string(j.at("handedness").get<std::string>());
                for (const auto& m : j.at("moves")) {
                    x.plan.moves.push_back(move_from_json(m));
                }
                x.multi_block_moves = j.at("multi_block_moves").get<int>();
                x.f = x.plan.s;
                if (set.physical) {
                    x.compiled = true;
                    x.feasible = j.at("feasible").get<bool>();
                    x.accepted = j.at("accepted").get<bool>();
                    x.recoverable = j.at("recoverable").get<int>();
                    x.f = j.at("f").get<double>();
                    x.failure = j.at("failure").get<std::string>();
                    for (const auto& v : j.at("verdicts")) {
                        x.verdicts.push_back({label_from_string(v.at("label").get<std::string>()), v.at("energy").get<double>(),
                                              v.at("moved").get<std::vector<std::string>>()});
                    }
                }
                set.solutions.push_back(std::move(x));
            }
            out.push_back(std::move(set));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("solution file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("solution file: ") + e.what());
    }
    return out;
}

std::vector<StoredSet> load_solution_file(const std::filesystem::path& path)
{
    try {
        return parse_solution_file(read_text(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string predictions_csv(const std::vector<Prediction>& predictions)
{
    std::string out = "problem_id,variant,pr_one_hand,n_one_hand,n_all\n";
    for (const auto& p : predictions) {
        out += std::to_string(p.problem_id) + "," + p.variant + "," + (p.pr_one_hand ? number(*p.pr_one_hand) : "") + "," +
               std::to_string(p.n_one_hand) + "," + std::to_string(p.n_all) + "\n";
    }
    return out;
}

std::vector<Prediction> parse_predictions_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "problem_id,variant,pr_one_hand,n_one_hand,n_all") {
        throw FormatError("predictions: expected header problem_id,variant,pr_one_hand,n_one_hand,n_all");
    }
    std::vector<Prediction> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        const std::string where = "predictions line " + std::to_string(lineno);
        if (cells.size() != 5) {
            throw FormatError(where + ": expected 5 fields");
        }
        try {
            Prediction p;
            p.problem_id = std::stoi(cells[0]);
            p.variant = cells[1];
            if (!cells[2].empty()) {
                p.pr_one_hand = std::stod(cells[2]);
                if (*p.pr_one_hand < 0.0 || *p.pr_one_hand > 1.0) {
                    throw FormatError(where + ": pr_one_hand outside [0, 1]");
                }
            }
            p.n_one_hand = std::stoi(cells[3]);
            p.n_all = std::stoi(cells[4]);
            out.push_back(p);
        } catch (const std::logic_error&) {
            throw FormatError(where + ": malformed number");
        }
    }
    return out;
}

std::vector<Prediction> load_predictions_csv(const std::filesystem::path& path)
{
    try {
        return parse_predictions_csv(read_text(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string comparison_csv(const ComparisonResult& result, int iterations)
{
    std::string out = "variant,target,r,lo,hi,n,replicates\n";
    for (const auto& r : result.reports) {
        out += r.variant + "," + r.target + "," + (r.r ? number(*r.r) : "") + "," + (r.r ? number(r.lo) : "") + "," +
               (r.r ? number(r.hi) : "") + "," + std::to_string(r.n) + "," + std::to_string(r.replicates.size()) + "/" +
               std::to_string(iterations) + "\n";
    }
    out += "\na,b,target,p_one_sided\n";
    for (const auto& t : result.pairwise) {
        out += t.a + "," + t.b + "," + t.target + "," + number(t.p) + "\n";
    }
    return out;
}

std::string trajectory_csv(const Trajectory& trajectory, bool samples)
{
    std::string out = "timestep,time,kind";
    for (const char* arm : {"l", "r"}) {
        for (int i = 0; i < kArmDof; ++i) {
            out += ",q" + std::string(arm) + std::to_string(i);
        }
    }
    for (const auto& id : trajectory.block_ids) {
        for (const char* c : {"x", "y", "z", "qw", "qx", "qy", "qz"}) {
            out += "," + id + "_" + c;
        }
    }
    out += "\n";
    auto row = [&](int timestep, double time, const char* kind, const JointVector& q, const std::vector<Pose>& poses) {
        out += std::to_string(timestep) + "," + number(time) + "," + kind;
        for (int i = 0; i < q.size(); ++i) {
            out += "," + number(q[i]);
        }
        for (const auto& p : poses) {
            const auto& o = p.orientation;
            for (double v : {p.position.x(), p.position.y(), p.position.z(), o.w(), o.x(), o.y(), o.z()}) {
                out += "," + number(v);
            }
        }
        out += "\n";
    };
    if (!samples) {
        for (const auto& k : trajectory.keyframes) {
            row(k.timestamp, k.timestamp, "keyframe", k.q, k.block_poses);
        }
        return out;
    }
    // Samples and keyframes merged by time; a keyframe precedes a sample at the same time.
    size_t k = 0;
    for (const auto& s : trajectory.samples) {
        while (k < trajectory.keyframes.size() && trajectory.keyframes[k].timestamp <= s.time) {
            const auto& kf = trajectory.keyframes[k++];
            row(kf.timestamp, kf.timestamp, "keyframe", kf.q, kf.block_poses);
        }
        if (std::abs(s.time - std::round(s.time)) > 1e-12) {
            row(static_cast<int>(std::ceil(s.time)), s.time, "sample", s.q, s.block_poses);
        }
    }
    for (; k < trajectory.keyframes.size(); ++k) {
        const auto& kf = trajectory.keyframes[k];
        row(kf.timestamp, kf.timestamp, "keyframe", kf.q, kf.block_poses);
    }
    return out;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace reconfig
