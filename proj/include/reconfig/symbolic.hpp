#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reconfig/scene.hpp"

namespace reconfig {

enum class MoveKind : std::uint8_t { Grasp, Place, Fix };
enum class Hand : std::uint8_t { Left = 0, Right = 1 };

const char* to_string(MoveKind k);
const char* to_string(Hand h);
MoveKind move_kind_from_string(const std::string& s);
Hand hand_from_string(const std::string& s);

struct Move {
    MoveKind kind = MoveKind::Grasp;
    std::string object;
    std::string support; // empty for Grasp
    Hand actuator = Hand::Right;
    int timestamp = 0;   // 0 until scheduled
    int carried = 0;     // blocks riding on `object` when the move happens

    bool same_action(const Move& o) const
    {
        return kind == o.kind && object == o.object && support == o.support && actuator == o.actuator;
    }
};

std::string describe(const Move& m);

enum class Handedness { OneHand, TwoHand };
const char* to_string(Handedness h);

struct SymbolicPlan {
    std::vector<Move> moves;
    Handedness handedness = Handedness::OneHand;
    int s = 0; // complexity score: final timestamp
};

/// Untimed sequence of (kind, object, support, actuator); two plans are duplicates iff keys match.
std::string canonical_form(const SymbolicPlan& plan);
std::string canonical_form(const std::vector<Move>& moves);

enum class SolutionMode { Efficient, Universal };
enum class HandsMode { One, Two, Both };
enum class SearchKind { Exhaustive, Mcts };

const char* to_string(SolutionMode m);
SolutionMode solution_mode_from_string(const std::string& s);
HandsMode hands_mode_from_string(const std::string& s);
SearchKind search_kind_from_string(const std::string& s);

inline constexpr int kMaxBlocks = 8;
inline constexpr int kTableIndex = -1;

/// Symbolic abstraction of a problem: block names and each block's target supporter.
class SymbolicDomain {
public:
    static SymbolicDomain from_problem(const Problem& problem, const ContactTolerances& tol = {});

    /// Builds a domain directly. `target_support[i]` is kTableIndex or a block index.
    SymbolicDomain(std::vector<std::string> blocks, std::vector<int> target_support);

    int size() const { return static_cast<int>(blocks_.size()); }
    const std::string& name(int i) const { return blocks_.at(static_cast<size_t>(i)); }
    int index_of(const std::string& id) const;
    int target_support(int b) const { return target_support_.at(static_cast<size_t>(b)); }
    std::string support_name(int s) const { return s == kTableIndex ? std::string(kTable) : name(s); }

private:
    std::vector<std::string> blocks_;
    std::vector<int> target_support_;
};

/// Per-block location (on a support or in a hand), final flag, and whether the block's placement
/// relative to its current support already matches the target.
struct SymbolicState {
    struct Slot {
        bool in_hand = false;
        std::int8_t where = kTableIndex; // support index, or hand index when in_hand
        bool rel_ok = false;
        bool fixed = false;

        bool operator==(const Slot&) const = default;
    };

    int count = 0;
    std::array<Slot, kMaxBlocks> slots{};
    std::array<std::int8_t, 2> held{-1, -1};

    bool operator==(const SymbolicState& o) const;

    const Slot& slot(int b) const { return slots[static_cast<size_t>(b)]; }
    Slot& slot(int b) { return slots[static_cast<size_t>(b)]; }

    bool is_rider_of(int x, int carrier) const;
    std::vector<int> riders(int carrier) const;
    bool grounded(int b) const;
    bool top_free(int s) const;
    bool at_target(const SymbolicDomain& d, int b) const;
    bool is_goal(const SymbolicDomain& d) const;

    /// Builds the initial state; `in_place[i]` marks blocks whose initial placement relative to
    /// their supporter already equals the target one.
    static SymbolicState make(const std::vector<int>& supports, const std::vector<bool>& in_place);
};

/// Compact move used inside the search.
struct CompactMove {
    MoveKind kind;
    std::int8_t object;
    std::int8_t support; // kTableIndex or block; unused for Grasp
    Hand hand;

    bool operator==(const CompactMove&) const = default;
};

class IllegalMove : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Initial symbolic state of a problem.
SymbolicState initial_state(const Problem& problem, const SymbolicDomain& domain, const ContactTolerances& tol = {});

std::vector<CompactMove> legal_moves(const SymbolicDomain& d, const SymbolicState& state, SolutionMode mode,
                                     HandsMode hands = HandsMode::Both);
/// Throws IllegalMove when the move's preconditions do not hold.
SymbolicState apply_move(const SymbolicDomain& d, const SymbolicState& state, const CompactMove& move);

Move to_move(const SymbolicDomain& d, const CompactMove& m);
CompactMove to_compact(const SymbolicDomain& d, const Move& m);

using Sequence = std::vector<CompactMove>;

struct Schedule {
    std::vector<int> timestamps;
    std::vector<int> carried;
    int s = 0;
    Handedness handedness = Handedness::OneHand;
};

/// Greedy earliest-start schedule; see the implementation for the dependency rule.
/// Throws IllegalMove if the sequence is not legal from `start`.
Schedule schedule(const SymbolicDomain& d, const SymbolicState& start, const Sequence& seq);
SymbolicPlan assign_timestamps(const SymbolicDomain& d, const SymbolicState& start, const std::vector<Move>& moves);
SymbolicPlan to_plan(const SymbolicDomain& d, const SymbolicState& start, const Sequence& seq);
Handedness handedness_of(const Sequence& seq);

struct SearchOptions {
    SolutionMode mode = SolutionMode::Efficient;
    HandsMode hands = HandsMode::Both;
    SearchKind search = SearchKind::Exhaustive;
    long budget = 20'000'000;     // node expansions (exhaustive) or iterations (mcts)
    int max_length = 12;          // hard cap on untimed sequence length
    std::uint64_t seed = 1;       // mcts only
    double exploration = 1.41421356237; // mcts UCT constant
    bool reverse_expansion = false;      // exhaustive: iterate children in reverse order
};

struct SequenceSet {
    std::vector<Sequence> sequences; // distinct, in discovery order
    int final_length = 0;            // depth cap at termination
    long nodes = 0;
    bool budget_exhausted = false;
    std::string diagnostic;
};

/// Untimed solution sequences; the packed form used for large solution sets.
SequenceSet enumerate_sequences(const SymbolicDomain& d, const SymbolicState& start, const SearchOptions& opts);

struct EnumerationResult {
    std::vector<SymbolicPlan> plans; // sorted by s, then canonical key
    int final_length = 0;
    long nodes = 0;
    bool budget_exhausted = false;
    std::string diagnostic;
};

EnumerationResult enumerate_plans(const Problem& problem, const SearchOptions& opts, const ContactTolerances& tol = {});
EnumerationResult enumerate_plans(const SymbolicDomain& d, const SymbolicState& start, const SearchOptions& opts);

/// Solution sequences (untimed) found by Monte Carlo tree search; used by enumerate_plans.
std::vector<Sequence> mcts_search(const SymbolicDomain& d, const SymbolicState& start,
                                                  const SearchOptions& opts, long* iterations_used);

/// Sorts by s ascending, then canonical key.
void sort_plans(std::vector<SymbolicPlan>& plans);

} // namespace reconfig
