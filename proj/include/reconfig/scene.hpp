#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "reconfig/geometry.hpp"

namespace reconfig {

inline constexpr const char* kTable = "table";
inline constexpr const char* kHandL = "handL";
inline constexpr const char* kHandR = "handR";

/// Raised for malformed or invalid problem files; the message names the problem id and field.
class SceneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BlockSpec {
    std::string id;
    std::string color;
    // height, width, depth (meters)
    Vec3 dims = Vec3(0.10, 0.05, 0.05);
    double mass = 0.05;

    double height() const { return dims[0]; }
    double width() const { return dims[1]; }
    double depth() const { return dims[2]; }
    /// Half extents in the block frame (x = width, y = depth, z = height).
    Vec3 half_extents() const { return Vec3(width(), depth(), height()) * 0.5; }
    /// Inertia tensor about the center of mass in the block frame (uniform density).
    Eigen::Matrix3d inertia() const;
};

/// Parent-relative frame tree rooted at the table. Hands are leaf frames parented to the table.
class FrameTree {
public:
    struct Node {
        std::string id;
        std::string parent; // empty for the root
        Pose relative;
    };

    FrameTree();

    /// Adds a node or replaces its parent/relative pose.
    void set(const std::string& id, const std::string& parent, const Pose& relative);
    /// Moves a node under a new parent keeping its world pose.
    void reparent(const std::string& id, const std::string& new_parent);

    bool contains(const std::string& id) const;
    const Node& node(const std::string& id) const;
    const std::vector<Node>& nodes() const { return nodes_; }
    std::string parent_of(const std::string& id) const { return node(id).parent; }

    /// Throws SceneError on cycles or dangling parents.
    void check_structure() const;

private:
    std::vector<Node> nodes_;
};

/// Composition of relative poses along the path from the root to `node`.
Pose world_pose(const FrameTree& tree, const std::string& node);

struct TableLayout {
    std::vector<double> spots{-0.15, 0.0, 0.15};
    Eigen::Vector2d boundary_min{-0.30, -0.12};
    Eigen::Vector2d boundary_max{0.30, 0.12};

    bool inside(double x, double y) const;
};

class StackConfiguration {
public:
    StackConfiguration() = default;
    StackConfiguration(std::vector<BlockSpec> blocks, FrameTree tree);

    /// Builds a configuration with every block parented to the table at the given world poses.
    static StackConfiguration from_world(std::vector<BlockSpec> blocks, const std::map<std::string, Pose>& poses);

    const std::vector<BlockSpec>& blocks() const { return blocks_; }
    const FrameTree& tree() const { return tree_; }
    const BlockSpec& block(const std::string& id) const;
    bool has_block(const std::string& id) const;

    Pose world(const std::string& id) const { return world_pose(tree_, id); }
    Box box(const std::string& id) const;
    std::map<std::string, Pose> world_poses() const;

    /// Configuration with only the listed blocks removed (e.g. held by a hand).
    StackConfiguration without(const std::set<std::string>& ids) const;

    /// Throws SceneError naming `context` on interpenetration or blocks below the table.
    void validate(const std::string& context) const;

private:
    std::vector<BlockSpec> blocks_;
    FrameTree tree_;
};

struct Problem {
    int id = 0;
    StackConfiguration initial;
    StackConfiguration target;
    TableLayout layout;
};

struct ContactTolerances {
    double max_gap = 0.002;
    double min_area = 1e-5;
    double grid_step = 0.0005;
};

struct SupportContact {
    std::string supporter;
    double area = 0.0;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    Eigen::Vector2d lo = Eigen::Vector2d::Zero();
    Eigen::Vector2d hi = Eigen::Vector2d::Zero();
    bool lateral = false; // against the side of the supporter; area is not measured
};

class SupportGraph {
public:
    /// supported block -> contacts with its supporters (table or block)
    std::map<std::string, std::vector<SupportContact>> contacts;

    std::set<std::string> supporters(const std::string& block) const;
    bool has_edge(const std::string& block, const std::string& supporter) const;
    size_t edge_count() const;
    /// Supporter whose contact region holds the center of mass; otherwise the nearest contact,
    /// ties broken by larger area. Empty when unsupported.
    std::string primary(const std::string& block) const;

    /// Horizontal projection of each block's center of mass.
    std::map<std::string, Eigen::Vector2d> com_xy;
};

SupportGraph derive_support_graph(const StackConfiguration& config, const ContactTolerances& tol = {});

/// Throws SceneError naming `context` if some block is unsupported or the primary supporters
/// form a cycle.
void check_support_graph(const SupportGraph& graph, const StackConfiguration& config, const std::string& context);

struct ProblemSet {
    TableLayout layout;
    std::vector<BlockSpec> blocks;
    std::vector<Problem> problems;
};

ProblemSet parse_problem_set(const std::string& text, const ContactTolerances& tol = {});
ProblemSet load_problem_set(const std::filesystem::path& path, const ContactTolerances& tol = {});
/// Canonical text: fixed field order, numbers with 9 significant digits.
std::string serialize_problem_set(const ProblemSet& set);

} // namespace reconfig
