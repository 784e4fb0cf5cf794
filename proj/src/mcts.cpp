#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <random>

#include "reconfig/symbolic.hpp"

namespace reconfig {

namespace {

struct TreeNode {
    SymbolicState state;
    std::vector<CompactMove> untried;
    std::vector<std::pair<CompactMove, std::unique_ptr<TreeNode>>> children;
    TreeNode* parent = nullptr;
    int depth = 0;
    long visits = 0;
    double reward = 0.0;
    bool terminal = false;
};

std::string key_of(const std::vector<CompactMove>& seq)
{
    std::string k;
    for (const auto& m : seq) {
        k += static_cast<char>(m.kind);
        k += static_cast<char>(m.object + 1);
        k += static_cast<char>(m.support + 1);
        k += static_cast<char>(m.hand);
    }
    return k;
}

bool on_path(const TreeNode* node, const SymbolicState& s)
{
    for (; node != nullptr; node = node->parent) {
        if (node->state == s) {
            return true;
        }
    }
    return false;
}

} // namespace

std::vector<Sequence> mcts_search(const SymbolicDomain& d, const SymbolicState& start,
                                 const SearchOptions& opts, long* iterations_used)
{
    std::mt19937_64 rng(opts.seed);
    std::map<std::string, std::vector<CompactMove>> found;

    auto make_node = [&](const SymbolicState& s, TreeNode* parent, int depth) {
        auto n = std::make_unique<TreeNode>();
        n->state = s;
        n->parent = parent;
        n->depth = depth;
        n->terminal = s.is_goal(d) || depth >= opts.max_length;
        if (!n->terminal) {
            for (const auto& m : legal_moves(d, s, opts.mode, opts.hands)) {
                if (!on_path(n.get(), apply_move(d, s, m))) {
                    n->untried.push_back(m);
                }
            }
            std::shuffle(n->untried.begin(), n->untried.end(), rng);
        }
        return n;
    };

    auto root = make_node(start, nullptr, 0);
    long it = 0;
    for (; it < opts.budget; ++it) {
        // Selection
        TreeNode* node = root.get();
        std::vector<CompactMove> path;
        while (!node->terminal && node->untried.empty() && !node->children.empty()) {
            double best = -std::numeric_limits<double>::infinity();
            size_t pick = 0;
            for (size_t i = 0; i < node->children.size(); ++i) {
                const TreeNode& c = *node->children[i].second;
                const double v = c.reward / static_cast<double>(c.visits) +
                                 opts.exploration * std::sqrt(std::log(static_cast<double>(node->visits)) /
                                                              static_cast<double>(c.visits));
                if (v > best) {
                    best = v;
                    pick = i;
                }
            }
            path.push_back(node->children[pick].first);
            node = node->children[pick].second.get();
        }
        // Expansion
        if (!node->terminal && !node->untried.empty()) {
            const CompactMove m = node->untried.back();
            node->untried.pop_back();
            auto child = make_node(apply_move(d, node->state, m), node, node->depth + 1);
            path.push_back(m);
            node->children.emplace_back(m, std::move(child));
            node = node->children.back().second.get();
        }
        // Rollout
        double reward = 0.0;
        SymbolicState s = node->state;
        std::vector<SymbolicState> visited;
        for (const TreeNode* p = node; p != nullptr; p = p->parent) {
            visited.push_back(p->state);
        }
        std::vector<CompactMove> seq = path;
        while (true) {
            if (s.is_goal(d)) {
                found.emplace(key_of(seq), seq);
                reward = 1.0 - static_cast<double>(seq.size()) / (2.0 * opts.max_length);
                break;
            }
            if (static_cast<int>(seq.size()) >= opts.max_length) {
                break;
            }
            std::vector<std::pair<CompactMove, SymbolicState>> options;
            for (const auto& m : legal_moves(d, s, opts.mode, opts.hands)) {
                SymbolicState n = apply_move(d, s, m);
                if (std::find(visited.begin(), visited.end(), n) == visited.end()) {
                    options.emplace_back(m, n);
                }
            }
            if (options.empty()) {
                break;
            }
            std::uniform_int_distribution<size_t> pick(0, options.size() - 1);
            const auto& [m, n] = options[pick(rng)];
            seq.push_back(m);
            s = n;
            visited.push_back(s);
        }
        // Backpropagation
        for (TreeNode* p = node; p != nullptr; p = p->parent) {
            ++p->visits;
            p->reward += reward;
        }
        if (root->untried.empty() && root->children.empty()) {
            ++it;
            break;
        }
    }
    if (iterations_used != nullptr) {
        *iterations_used = it;
    }
    std::vector<Sequence> out;
    for (auto& [_, seq] : found) {
        out.push_back(std::move(seq));
    }
    return out;
}

} // namespace reconfig
