#include "reconfig/symbolic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace reconfig {

const char* to_string(MoveKind k)
{
    switch (k) {
    case MoveKind::Grasp: return "Grasp";
    case MoveKind::Place: return "Place";
    case MoveKind::Fix: return "Fix";
    }
    return "?";
}

const char* to_string(Hand h)
{
    return h == Hand::Left ? kHandL : kHandR;
}

MoveKind move_kind_from_string(const std::string& s)
{
    if (s == "Grasp") return MoveKind::Grasp;
    if (s == "Place") return MoveKind::Place;
    if (s == "Fix") return MoveKind::Fix;
    throw std::invalid_argument("unknown move kind '" + s + "'");
}

Hand hand_from_string(const std::string& s)
{
    if (s == kHandL) return Hand::Left;
    if (s == kHandR) return Hand::Right;
    throw std::invalid_argument("unknown actuator '" + s + "'");
}

const char* to_string(Handedness h)
{
    return h == Handedness::OneHand ? "oneHand" : "twoHand";
}

const char* to_string(SolutionMode m)
{
    return m == SolutionMode::Efficient ? "efficient" : "universal";
}

SolutionMode solution_mode_from_string(const std::string& s)
{
    if (s == "efficient") return SolutionMode::Efficient;
    if (s == "universal" || s == "inefficient") return SolutionMode::Universal;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

HandsMode hands_mode_from_string(const std::string& s)
{
    if (s == "one") return HandsMode::One;
    if (s == "two") return HandsMode::Two;
    if (s == "both") return HandsMode::Both;
    throw std::invalid_argument("unknown hands setting '" + s + "'");
}

SearchKind search_kind_from_string(const std::string& s)
{
    if (s == "exhaustive") return SearchKind::Exhaustive;
    if (s == "mcts") return SearchKind::Mcts;
    throw std::invalid_argument("unknown search '" + s + "'");
}

std::string describe(const Move& m)
{
    std::string out = std::string(to_string(m.kind)) + "(" + m.object;
    if (m.kind != MoveKind::Grasp) {
        out += ", " + m.support;
    }
    out += ", " + std::string(to_string(m.actuator)) + ")";
    return out;
}

std::string canonical_form(const std::vector<Move>& moves)
{
    std::string key;
    for (const auto& m : moves) {
        if (!key.empty()) {
            key += '|';
        }
        key += to_string(m.kind);
        key += ':' + m.object + ':' + m.support + ':' + to_string(m.actuator);
    }
    return key;
}

std::string canonical_form(const SymbolicPlan& plan)
{
    return canonical_form(plan.moves);
}

void sort_plans(std::vector<SymbolicPlan>& plans)
{
    std::vector<std::pair<std::string, SymbolicPlan>> keyed;
    keyed.reserve(plans.size());
    for (auto& p : plans) {
        keyed.emplace_back(canonical_form(p), std::move(p));
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.second.s != b.second.s) {
            return a.second.s < b.second.s;
        }
        return a.first < b.first;
    });
    plans.clear();
    for (auto& [_, p] : keyed) {
        plans.push_back(std::move(p));
    }
}

// ---------------------------------------------------------------------------------------------
// Domain and state

SymbolicDomain::SymbolicDomain(std::vector<std::string> blocks, std::vector<int> target_support)
    : blocks_(std::move(blocks)), target_support_(std::move(target_support))
{
    if (blocks_.size() != target_support_.size()) {
        throw std::invalid_argument("target supporter list does not match block list");
    }
    if (blocks_.size() > static_cast<size_t>(kMaxBlocks)) {
        throw std::invalid_argument("too many blocks for the symbolic planner");
    }
}

int SymbolicDomain::index_of(const std::string& id) const
{
    if (id == kTable) {
        return kTableIndex;
    }
    for (size_t i = 0; i < blocks_.size(); ++i) {
        if (blocks_[i] == id) {
            return static_cast<int>(i);
        }
    }
    throw std::invalid_argument("unknown block '" + id + "'");
}

namespace {

int support_index(const std::vector<BlockSpec>& blocks, const std::string& id)
{
    if (id == kTable) {
        return kTableIndex;
    }
    for (size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].id == id) {
            return static_cast<int>(i);
        }
    }
    throw SceneError("unknown supporter '" + id + "'");
}

} // namespace

SymbolicDomain SymbolicDomain::from_problem(const Problem& problem, const ContactTolerances& tol)
{
    const auto graph = derive_support_graph(problem.target, tol);
    std::vector<std::string> names;
    std::vector<int> targets;
    for (const auto& b : problem.target.blocks()) {
        names.push_back(b.id);
        targets.push_back(support_index(problem.target.blocks(), graph.primary(b.id)));
    }
    return SymbolicDomain(std::move(names), std::move(targets));
}

bool SymbolicState::operator==(const SymbolicState& o) const
{
    if (count != o.count || held != o.held) {
        return false;
    }
    for (int i = 0; i < count; ++i) {
        if (!(slots[static_cast<size_t>(i)] == o.slots[static_cast<size_t>(i)])) {
            return false;
        }
    }
    return true;
}

bool SymbolicState::is_rider_of(int x, int carrier) const
{
    int cur = x;
    for (int steps = 0; steps <= count; ++steps) {
        const auto& s = slot(cur);
        if (s.in_hand || s.where == kTableIndex) {
            return false;
        }
        if (s.where == carrier) {
            return true;
        }
        cur = s.where;
    }
    return false;
}

std::vector<int> SymbolicState::riders(int carrier) const
{
    std::vector<int> out;
    for (int i = 0; i < count; ++i) {
        if (i != carrier && is_rider_of(i, carrier)) {
            out.push_back(i);
        }
    }
    return out;
}

bool SymbolicState::grounded(int b) const
{
    int cur = b;
    for (int steps = 0; steps <= count; ++steps) {
        const auto& s = slot(cur);
        if (s.in_hand) {
            return false;
        }
        if (s.where == kTableIndex) {
            return true;
        }
        cur = s.where;
    }
    return false;
}

bool SymbolicState::top_free(int s) const
{
    for (int i = 0; i < count; ++i) {
        if (!slot(i).in_hand && slot(i).where == s) {
            return false;
        }
    }
    return true;
}

bool SymbolicState::at_target(const SymbolicDomain& d, int b) const
{
    int cur = b;
    for (int steps = 0; steps <= count; ++steps) {
        const auto& s = slot(cur);
        if (s.in_hand || !s.rel_ok || s.where != d.target_support(cur)) {
            return false;
        }
        if (s.where == kTableIndex) {
            return true;
        }
        cur = s.where;
    }
    return false;
}

bool SymbolicState::is_goal(const SymbolicDomain& d) const
{
    if (held[0] != -1 || held[1] != -1) {
        return false;
    }
    for (int i = 0; i < count; ++i) {
        if (!at_target(d, i)) {
            return false;
        }
    }
    return true;
}

SymbolicState SymbolicState::make(const std::vector<int>& supports, const std::vector<bool>& in_place)
{
    SymbolicState st;
    st.count = static_cast<int>(supports.size());
    for (int i = 0; i < st.count; ++i) {
        auto& s = st.slot(i);
        s.in_hand = false;
        s.where = static_cast<std::int8_t>(supports[static_cast<size_t>(i)]);
        s.rel_ok = in_place[static_cast<size_t>(i)];
        s.fixed = false;
    }
    return st;
}

SymbolicState initial_state(const Problem& problem, const SymbolicDomain& domain, const ContactTolerances& tol)
{
    constexpr double kPosTol = 1e-3;
    const double kAngTol = M_PI / 180.0;
    const auto graph = derive_support_graph(problem.initial, tol);
    std::vector<int> supports;
    std::vector<bool> in_place;
    for (int i = 0; i < domain.size(); ++i) {
        const std::string& id = domain.name(i);
        const std::string sup = graph.primary(id);
        const int si = sup == kTable ? kTableIndex : domain.index_of(sup);
        supports.push_back(si);
        bool ok = si == domain.target_support(i);
        if (ok) {
            Pose rel0 = problem.initial.world(id);
            Pose rel1 = problem.target.world(id);
            if (si != kTableIndex) {
                rel0 = problem.initial.world(sup).inverse() * rel0;
                rel1 = problem.target.world(sup).inverse() * rel1;
            }
            ok = rel0.approx_equal(rel1, kPosTol, kAngTol);
        }
        in_place.push_back(ok);
    }
    return SymbolicState::make(supports, in_place);
}

// ---------------------------------------------------------------------------------------------
// Transitions

namespace {

bool hand_allowed(HandsMode hands, Hand h)
{
    // A single actuator stands in for one-handed solving; the hands are symmetric.
    return hands != HandsMode::One || h == Hand::Right;
}

bool can_grasp(const SymbolicState& st, int b, Hand h)
{
    const auto& s = st.slot(b);
    if (st.held[static_cast<size_t>(h)] != -1 || s.in_hand || s.fixed || !st.grounded(b)) {
        return false;
    }
    for (int r : st.riders(b)) {
        if (st.slot(r).fixed) {
            return false; // a fixed block never moves again
        }
    }
    return true;
}

bool can_place(const SymbolicState& st, int b, int support, Hand h)
{
    if (st.held[static_cast<size_t>(h)] != b) {
        return false;
    }
    if (support == kTableIndex) {
        return true;
    }
    return support != b && !st.is_rider_of(support, b) && st.grounded(support) && st.top_free(support);
}

bool can_fix(const SymbolicDomain& d, const SymbolicState& st, int b, int support, Hand h)
{
    if (st.held[static_cast<size_t>(h)] != b || support != d.target_support(b)) {
        return false;
    }
    if (support == kTableIndex) {
        return true;
    }
    return st.at_target(d, support) && st.top_free(support);
}

} // namespace

std::vector<CompactMove> legal_moves(const SymbolicDomain& d, const SymbolicState& st, SolutionMode mode, HandsMode hands)
{
    std::vector<CompactMove> out;
    const int n = st.count;
    for (int b = 0; b < n; ++b) {
        for (Hand h : {Hand::Left, Hand::Right}) {
            if (hand_allowed(hands, h) && can_grasp(st, b, h)) {
                out.push_back({MoveKind::Grasp, static_cast<std::int8_t>(b), kTableIndex, h});
            }
        }
    }
    for (Hand h : {Hand::Left, Hand::Right}) {
        const int b = st.held[static_cast<size_t>(h)];
        if (b < 0 || !hand_allowed(hands, h)) {
            continue;
        }
        std::vector<CompactMove> fixes;
        for (int s = kTableIndex; s < n; ++s) {
            if (can_fix(d, st, b, s, h)) {
                fixes.push_back({MoveKind::Fix, static_cast<std::int8_t>(b), static_cast<std::int8_t>(s), h});
            }
        }
        if (mode == SolutionMode::Universal || fixes.empty()) {
            for (int s = kTableIndex; s < n; ++s) {
                if (can_place(st, b, s, h)) {
                    out.push_back({MoveKind::Place, static_cast<std::int8_t>(b), static_cast<std::int8_t>(s), h});
                }
            }
        }
        out.insert(out.end(), fixes.begin(), fixes.end());
    }
    return out;
}

SymbolicState apply_move(const SymbolicDomain& d, const SymbolicState& st, const CompactMove& m)
{
    SymbolicState next = st;
    const int b = m.object;
    if (b < 0 || b >= st.count) {
        throw IllegalMove("move references an unknown block");
    }
    const auto hi = static_cast<size_t>(m.hand);
    switch (m.kind) {
    case MoveKind::Grasp:
        if (!can_grasp(st, b, m.hand)) {
            throw IllegalMove("Grasp precondition violated for block " + d.name(b));
        }
        next.slot(b) = {true, static_cast<std::int8_t>(m.hand), false, false};
        next.held[hi] = static_cast<std::int8_t>(b);
        break;
    case MoveKind::Place:
        if (!can_place(st, b, m.support, m.hand)) {
            throw IllegalMove("Place precondition violated for block " + d.name(b));
        }
        next.slot(b) = {false, m.support, false, false};
        next.held[hi] = -1;
        break;
    case MoveKind::Fix:
        if (!can_fix(d, st, b, m.support, m.hand)) {
            throw IllegalMove("Fix precondition violated for block " + d.name(b));
        }
        next.slot(b) = {false, m.support, true, true};
        next.held[hi] = -1;
        break;
    }
    return next;
}

Move to_move(const SymbolicDomain& d, const CompactMove& m)
{
    Move out;
    out.kind = m.kind;
    out.object = d.name(m.object);
    out.support = m.kind == MoveKind::Grasp ? std::string() : d.support_name(m.support);
    out.actuator = m.hand;
    return out;
}

CompactMove to_compact(const SymbolicDomain& d, const Move& m)
{
    CompactMove out;
    out.kind = m.kind;
    out.object = static_cast<std::int8_t>(d.index_of(m.object));
    out.support = m.kind == MoveKind::Grasp ? static_cast<std::int8_t>(kTableIndex)
                                            : static_cast<std::int8_t>(d.index_of(m.support));
    out.hand = m.actuator;
    return out;
}

// ---------------------------------------------------------------------------------------------
// Scheduling
//
// Moves are taken in sequence order. Each move touches a set of blocks: the moved block, the
// blocks riding on it, and the movable support it leaves (Grasp) or lands on (Place/Fix). A move
// starts one step after the latest earlier move by the same actuator or touching any of these
// blocks. Two moves sharing a timestep therefore use different hands and disjoint blocks.

Handedness handedness_of(const Sequence& seq)
{
    bool left = false;
    bool right = false;
    for (const auto& m : seq) {
        (m.hand == Hand::Left ? left : right) = true;
    }
    return left && right ? Handedness::TwoHand : Handedness::OneHand;
}

Schedule schedule(const SymbolicDomain& d, const SymbolicState& start, const Sequence& seq)
{
    Schedule out;
    SymbolicState st = start;
    std::array<int, 2> hand_time{0, 0};
    std::array<int, kMaxBlocks> block_time{};
    out.timestamps.reserve(seq.size());
    out.carried.reserve(seq.size());
    for (const auto& m : seq) {
        if (m.object < 0 || m.object >= st.count) {
            throw IllegalMove("move references an unknown block");
        }
        const auto riders = st.riders(m.object);
        std::vector<int> touched{m.object};
        touched.insert(touched.end(), riders.begin(), riders.end());
        const auto& slot = st.slot(m.object);
        const int support = m.kind == MoveKind::Grasp ? (slot.in_hand ? kTableIndex : slot.where) : m.support;
        if (support != kTableIndex) {
            touched.push_back(support);
        }
        int t = hand_time[static_cast<size_t>(m.hand)];
        for (int b : touched) {
            t = std::max(t, block_time[static_cast<size_t>(b)]);
        }
        ++t;
        st = apply_move(d, st, m);
        hand_time[static_cast<size_t>(m.hand)] = t;
        for (int b : touched) {
            block_time[static_cast<size_t>(b)] = t;
        }
        out.timestamps.push_back(t);
        out.carried.push_back(static_cast<int>(riders.size()));
        out.s = std::max(out.s, t);
    }
    out.handedness = handedness_of(seq);
    return out;
}

SymbolicPlan to_plan(const SymbolicDomain& d, const SymbolicState& start, const Sequence& seq)
{
    const Schedule sched = schedule(d, start, seq);
    SymbolicPlan plan;
    plan.s = sched.s;
    plan.handedness = sched.handedness;
    for (size_t i = 0; i < seq.size(); ++i) {
        Move m = to_move(d, seq[i]);
        m.timestamp = sched.timestamps[i];
        m.carried = sched.carried[i];
        plan.moves.push_back(std::move(m));
    }
    return plan;
}

SymbolicPlan assign_timestamps(const SymbolicDomain& d, const SymbolicState& start, const std::vector<Move>& moves)
{
    Sequence seq;
    for (const auto& m : moves) {
        seq.push_back(to_compact(d, m));
    }
    return to_plan(d, start, seq);
}

// ---------------------------------------------------------------------------------------------
// Exhaustive enumeration
//
// A solution is a sequence that reaches the goal for the first time at its last move and never
// revisits a symbolic state. Every solution alternates grasps and releases, so its length is
// even; the depth cap therefore grows one grasp/release pair at a time.

namespace {

class DepthLimitedSearch {
public:
    DepthLimitedSearch(const SymbolicDomain& d, const SearchOptions& opts, long budget)
        : d_(d), opts_(opts), budget_(budget)
    {
    }

    bool run(const SymbolicState& start, int limit)
    {
        limit_ = limit;
        found_.clear();
        path_states_.assign(1, start);
        path_moves_.clear();
        return descend(start);
    }

    std::vector<Sequence>& found() { return found_; }
    long nodes() const { return nodes_; }

private:
    bool descend(const SymbolicState& st)
    {
        if (static_cast<int>(path_moves_.size()) >= limit_) {
            return true;
        }
        auto moves = legal_moves(d_, st, opts_.mode, opts_.hands);
        if (opts_.reverse_expansion) {
            std::reverse(moves.begin(), moves.end());
        }
        for (const auto& m : moves) {
            if (++nodes_ > budget_) {
                return false;
            }
            SymbolicState next = apply_move(d_, st, m);
            if (std::find(path_states_.begin(), path_states_.end(), next) != path_states_.end()) {
                continue;
            }
            path_moves_.push_back(m);
            bool ok = true;
            if (next.is_goal(d_)) {
                if (opts_.hands != HandsMode::Two || handedness_of(path_moves_) == Handedness::TwoHand) {
                    found_.push_back(path_moves_);
                }
            } else {
                path_states_.push_back(next);
                ok = descend(next);
                path_states_.pop_back();
            }
            path_moves_.pop_back();
            if (!ok) {
                return false;
            }
        }
        return true;
    }

    const SymbolicDomain& d_;
    const SearchOptions& opts_;
    long budget_;
    long nodes_ = 0;
    int limit_ = 0;
    std::vector<SymbolicState> path_states_;
    Sequence path_moves_;
    std::vector<Sequence> found_;
};

} // namespace

SequenceSet enumerate_sequences(const SymbolicDomain& d, const SymbolicState& start, const SearchOptions& opts)
{
    if (opts.budget <= 0) {
        throw std::invalid_argument("search budget must be positive");
    }
    SequenceSet result;
    if (start.is_goal(d)) {
        result.sequences.emplace_back();
        result.diagnostic = "initial configuration already matches the target";
        return result;
    }

    if (opts.search == SearchKind::Mcts) {
        long used = 0;
        for (auto& seq : mcts_search(d, start, opts, &used)) {
            if (opts.hands != HandsMode::Two || handedness_of(seq) == Handedness::TwoHand) {
                result.sequences.push_back(std::move(seq));
            }
        }
        result.nodes = used;
        result.final_length = opts.max_length;
        if (result.sequences.empty()) {
            result.diagnostic = "no solution found within " + std::to_string(opts.budget) + " iterations";
        }
        return result;
    }

    long remaining = opts.budget;
    int limit = 1;
    // Find the minimal length with any solution.
    for (; limit <= opts.max_length; ++limit) {
        DepthLimitedSearch search(d, opts, remaining);
        const bool complete = search.run(start, limit);
        remaining -= search.nodes();
        result.nodes += search.nodes();
        if (!complete) {
            result.budget_exhausted = true;
            result.diagnostic = "node budget exhausted at depth " + std::to_string(limit);
            return result;
        }
        if (!search.found().empty()) {
            result.sequences = std::move(search.found());
            break;
        }
    }
    if (result.sequences.empty()) {
        result.final_length = opts.max_length;
        result.diagnostic = "no solution up to length " + std::to_string(opts.max_length);
        return result;
    }
    // Deepen one grasp/release pair at a time until nothing new appears.
    while (limit + 2 <= opts.max_length) {
        DepthLimitedSearch search(d, opts, remaining);
        const bool complete = search.run(start, limit + 2);
        remaining -= search.nodes();
        result.nodes += search.nodes();
        if (!complete) {
            result.budget_exhausted = true;
            result.diagnostic = "node budget exhausted at depth " + std::to_string(limit + 2) +
                                "; keeping solutions up to depth " + std::to_string(limit);
            break;
        }
        const bool grew = search.found().size() > result.sequences.size();
        limit += 2;
        result.sequences = std::move(search.found());
        if (!grew) {
            break;
        }
    }
    if (limit + 2 > opts.max_length && result.diagnostic.empty()) {
        result.diagnostic = "reached length cap " + std::to_string(opts.max_length);
    }
    result.final_length = limit;
    return result;
}

EnumerationResult enumerate_plans(const SymbolicDomain& d, const SymbolicState& start, const SearchOptions& opts)
{
    SequenceSet seqs = enumerate_sequences(d, start, opts);
    EnumerationResult result;
    result.final_length = seqs.final_length;
    result.nodes = seqs.nodes;
    result.budget_exhausted = seqs.budget_exhausted;
    result.diagnostic = std::move(seqs.diagnostic);
    result.plans.reserve(seqs.sequences.size());
    for (const auto& seq : seqs.sequences) {
        result.plans.push_back(to_plan(d, start, seq));
    }
    sort_plans(result.plans);
    return result;
}

EnumerationResult enumerate_plans(const Problem& problem, const SearchOptions& opts, const ContactTolerances& tol)
{
    const auto d = SymbolicDomain::from_problem(problem, tol);
    const auto start = initial_state(problem, d, tol);
    return enumerate_plans(d, start, opts);
}

} // namespace reconfig
