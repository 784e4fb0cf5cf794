#include "reconfig/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace reconfig {

using json = nlohmann::ordered_json;

Eigen::Matrix3d BlockSpec::inertia() const
{
    const double x = width();
    const double y = depth();
    const double z = height();
    Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
    out(0, 0) = mass * (y * y + z * z) / 12.0;
    out(1, 1) = mass * (x * x + z * z) / 12.0;
    out(2, 2) = mass * (x * x + y * y) / 12.0;
    return out;
}

// ---------------------------------------------------------------------------------------------
// FrameTree

FrameTree::FrameTree()
{
    nodes_.push_back({kTable, "", Pose::identity()});
    nodes_.push_back({kHandL, kTable, Pose::identity()});
    nodes_.push_back({kHandR, kTable, Pose::identity()});
}

void FrameTree::set(const std::string& id, const std::string& parent, const Pose& relative)
{
    if (id == kTable) {
        throw SceneError("the table is the fixed root and cannot be re-parented");
    }
    for (auto& n : nodes_) {
        if (n.id == id) {
            n.parent = parent;
            n.relative = relative;
            return;
        }
    }
    nodes_.push_back({id, parent, relative});
}

void FrameTree::reparent(const std::string& id, const std::string& new_parent)
{
    const Pose w = world_pose(*this, id);
    const Pose p = world_pose(*this, new_parent);
    set(id, new_parent, p.inverse() * w);
}

bool FrameTree::contains(const std::string& id) const
{
    return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.id == id; });
}

const FrameTree::Node& FrameTree::node(const std::string& id) const
{
    for (const auto& n : nodes_) {
        if (n.id == id) {
            return n;
        }
    }
    throw SceneError("unknown frame '" + id + "'");
}

void FrameTree::check_structure() const
{
    for (const auto& n : nodes_) {
        std::string cur = n.id;
        size_t steps = 0;
        while (cur != kTable) {
            if (!contains(cur)) {
                throw SceneError("frame '" + n.id + "' has unknown ancestor '" + cur + "'");
            }
            cur = node(cur).parent;
            if (cur.empty() || ++steps > nodes_.size()) {
                throw SceneError("frame '" + n.id + "' is not connected to the table (cycle or missing root)");
            }
        }
    }
}

Pose world_pose(const FrameTree& tree, const std::string& node)
{
    Pose out = Pose::identity();
    std::string cur = node;
    size_t steps = 0;
    while (true) {
        const auto& n = tree.node(cur);
        out = n.relative * out;
        if (n.parent.empty()) {
            break;
        }
        cur = n.parent;
        if (++steps > tree.nodes().size()) {
            throw SceneError("cycle in frame tree at '" + node + "'");
        }
    }
    return out;
}

bool TableLayout::inside(double x, double y) const
{
    return x >= boundary_min.x() && x <= boundary_max.x() && y >= boundary_min.y() && y <= boundary_max.y();
}

// ---------------------------------------------------------------------------------------------
// StackConfiguration

StackConfiguration::StackConfiguration(std::vector<BlockSpec> blocks, FrameTree tree)
    : blocks_(std::move(blocks)), tree_(std::move(tree))
{
}

StackConfiguration StackConfiguration::from_world(std::vector<BlockSpec> blocks, const std::map<std::string, Pose>& poses)
{
    FrameTree tree;
    for (const auto& b : blocks) {
        const auto it = poses.find(b.id);
        if (it == poses.end()) {
            throw SceneError("no pose for block '" + b.id + "'");
        }
        tree.set(b.id, kTable, it->second);
    }
    return StackConfiguration(std::move(blocks), std::move(tree));
}

const BlockSpec& StackConfiguration::block(const std::string& id) const
{
    for (const auto& b : blocks_) {
        if (b.id == id) {
            return b;
        }
    }
    throw SceneError("unknown block '" + id + "'");
}

bool StackConfiguration::has_block(const std::string& id) const
{
    return std::any_of(blocks_.begin(), blocks_.end(), [&](const BlockSpec& b) { return b.id == id; });
}

Box StackConfiguration::box(const std::string& id) const
{
    return Box{world(id), block(id).half_extents()};
}

std::map<std::string, Pose> StackConfiguration::world_poses() const
{
    std::map<std::string, Pose> out;
    for (const auto& b : blocks_) {
        out[b.id] = world(b.id);
    }
    return out;
}

StackConfiguration StackConfiguration::without(const std::set<std::string>& ids) const
{
    std::vector<BlockSpec> kept;
    FrameTree tree;
    for (const auto& b : blocks_) {
        if (ids.count(b.id) == 0) {
            kept.push_back(b);
        }
    }
    for (const auto& b : kept) {
        const std::string parent = tree_.parent_of(b.id);
        if (ids.count(parent) != 0) {
            tree.set(b.id, kTable, world(b.id));
        } else {
            tree.set(b.id, parent, tree_.node(b.id).relative);
        }
    }
    return StackConfiguration(std::move(kept), std::move(tree));
}

void StackConfiguration::validate(const std::string& context) const
{
    tree_.check_structure();
    constexpr double kMaxOverlap = 1e-9;
    constexpr double kBelowTol = 1e-6;
    for (size_t i = 0; i < blocks_.size(); ++i) {
        const auto& bi = blocks_[i];
        if ((bi.dims.array() <= 0.0).any()) {
            throw SceneError(context + ": block " + bi.id + ": dims must be strictly positive");
        }
        const Pose p = world(bi.id);
        if (std::abs(p.orientation.norm() - 1.0) > 1e-9) {
            throw SceneError(context + ": block " + bi.id + ": orientation is not a unit quaternion");
        }
        const Box a = box(bi.id);
        for (const auto& v : a.vertices()) {
            if (v.z() < -kBelowTol) {
                throw SceneError(context + ": block " + bi.id + ": position is below the table surface");
            }
        }
        for (size_t j = i + 1; j < blocks_.size(); ++j) {
            const double vol = overlap_volume(a, box(blocks_[j].id));
            if (vol > kMaxOverlap) {
                throw SceneError(context + ": blocks " + bi.id + " and " + blocks_[j].id + " interpenetrate");
            }
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Support graph

std::set<std::string> SupportGraph::supporters(const std::string& block) const
{
    std::set<std::string> out;
    const auto it = contacts.find(block);
    if (it != contacts.end()) {
        for (const auto& c : it->second) {
            out.insert(c.supporter);
        }
    }
    return out;
}

bool SupportGraph::has_edge(const std::string& block, const std::string& supporter) const
{
    return supporters(block).count(supporter) != 0;
}

size_t SupportGraph::edge_count() const
{
    size_t n = 0;
    for (const auto& [_, cs] : contacts) {
        n += cs.size();
    }
    return n;
}

std::string SupportGraph::primary(const std::string& block) const
{
    const auto it = contacts.find(block);
    if (it == contacts.end() || it->second.empty()) {
        return {};
    }
    const auto& cs = it->second;
    if (cs.size() == 1) {
        return cs.front().supporter;
    }
    const Eigen::Vector2d com = com_xy.at(block);
    std::vector<const SupportContact*> holding;
    for (const auto& c : cs) {
        if ((com.array() >= c.lo.array()).all() && (com.array() <= c.hi.array()).all()) {
            holding.push_back(&c);
        }
    }
    if (holding.size() == 1) {
        return holding.front()->supporter;
    }
    std::vector<const SupportContact*> pool;
    if (holding.empty()) {
        for (const auto& c : cs) {
            pool.push_back(&c);
        }
    } else {
        pool = holding;
    }
    std::sort(pool.begin(), pool.end(), [&](const SupportContact* a, const SupportContact* b) {
        const double da = (a->centroid - com).norm();
        const double db = (b->centroid - com).norm();
        if (std::abs(da - db) > 1e-9) {
            return da < db;
        }
        if (std::abs(a->area - b->area) > 1e-12) {
            return a->area > b->area;
        }
        return a->supporter < b->supporter;
    });
    return pool.front()->supporter;
}

namespace {

std::optional<SupportContact> measure_contact(const Box& upper, const std::optional<Box>& lower,
                                              const std::string& lower_id, const ContactTolerances& tol)
{
    auto [umin, umax] = upper.aabb();
    double x0 = umin.x();
    double x1 = umax.x();
    double y0 = umin.y();
    double y1 = umax.y();
    if (lower) {
        const auto [lmin, lmax] = lower->aabb();
        x0 = std::max(x0, lmin.x());
        x1 = std::min(x1, lmax.x());
        y0 = std::max(y0, lmin.y());
        y1 = std::min(y1, lmax.y());
        if (x0 >= x1 || y0 >= y1) {
            return std::nullopt;
        }
        // Quick vertical rejection.
        if (umin.z() - lmax.z() > tol.max_gap) {
            return std::nullopt;
        }
    } else if (umin.z() > tol.max_gap) {
        return std::nullopt;
    }
    const double step = tol.grid_step;
    const int nx = std::max(1, static_cast<int>(std::ceil((x1 - x0) / step)));
    const int ny = std::max(1, static_cast<int>(std::ceil((y1 - y0) / step)));
    const double sx = (x1 - x0) / nx;
    const double sy = (y1 - y0) / ny;
    size_t count = 0;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    Eigen::Vector2d lo(1e9, 1e9);
    Eigen::Vector2d hi(-1e9, -1e9);
    for (int i = 0; i < nx; ++i) {
        const double x = x0 + (i + 0.5) * sx;
        for (int j = 0; j < ny; ++j) {
            const double y = y0 + (j + 0.5) * sy;
            const auto su = vertical_span(upper, x, y);
            if (!su) {
                continue;
            }
            double top = 0.0;
            if (lower) {
                const auto sl = vertical_span(*lower, x, y);
                if (!sl) {
                    continue;
                }
                top = sl->second;
            }
            const double gap = su->first - top;
            if (gap < -tol.max_gap || gap > tol.max_gap) {
                continue;
            }
            ++count;
            const Eigen::Vector2d p(x, y);
            sum += p;
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    }
    const double area = static_cast<double>(count) * sx * sy;
    if (count == 0 || area < tol.min_area) {
        return std::nullopt;
    }
    SupportContact c;
    c.supporter = lower_id;
    c.area = area;
    c.centroid = sum / static_cast<double>(count);
    c.lo = lo - Eigen::Vector2d(sx, sy) * 0.5;
    c.hi = hi + Eigen::Vector2d(sx, sy) * 0.5;
    return c;
}

/// Surface points of `leaning` within the gap of `other`, for a block resting against the side
/// of another rather than on top of it.
std::optional<SupportContact> measure_lateral_contact(const Box& leaning, const Box& other, const std::string& other_id,
                                                      const ContactTolerances& tol)
{
    const auto [amin, amax] = leaning.aabb();
    const auto [bmin, bmax] = other.aabb();
    if (((amin.array() - bmax.array()) > tol.max_gap).any() || ((bmin.array() - amax.array()) > tol.max_gap).any()) {
        return std::nullopt;
    }
    const double step = 4.0 * tol.grid_step;
    const Vec3& h = leaning.half_extents;
    size_t count = 0;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    Eigen::Vector2d lo(1e9, 1e9);
    Eigen::Vector2d hi(-1e9, -1e9);
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3;
        const int v = (axis + 2) % 3;
        const int nu = std::max(1, static_cast<int>(std::ceil(2.0 * h[u] / step)));
        const int nv = std::max(1, static_cast<int>(std::ceil(2.0 * h[v] / step)));
        for (double side : {-1.0, 1.0}) {
            for (int i = 0; i <= nu; ++i) {
                for (int j = 0; j <= nv; ++j) {
                    Vec3 local;
                    local[axis] = side * h[axis];
                    local[u] = -h[u] + 2.0 * h[u] * i / nu;
                    local[v] = -h[v] + 2.0 * h[v] * j / nv;
                    const Vec3 p = leaning.pose.apply(local);
                    if (std::abs(signed_distance(other, p)) > tol.max_gap) {
                        continue;
                    }
                    ++count;
                    sum += p.head<2>();
                    lo = lo.cwiseMin(p.head<2>());
                    hi = hi.cwiseMax(p.head<2>());
                }
            }
        }
    }
    if (count == 0) {
        return std::nullopt;
    }
    SupportContact c;
    c.supporter = other_id;
    c.lateral = true;
    c.centroid = sum / static_cast<double>(count);
    c.lo = lo;
    c.hi = hi;
    return c;
}

bool over_contact(const Eigen::Vector2d& com, const std::vector<SupportContact>& cs)
{
    return std::any_of(cs.begin(), cs.end(), [&](const SupportContact& c) {
        return (com.array() >= c.lo.array()).all() && (com.array() <= c.hi.array()).all();
    });
}

} // namespace

SupportGraph derive_support_graph(const StackConfiguration& config, const ContactTolerances& tol)
{
    SupportGraph g;
    for (const auto& a : config.blocks()) {
        const Box ba = config.box(a.id);
        g.com_xy[a.id] = ba.pose.position.head<2>();
        auto& list = g.contacts[a.id];
        if (auto c = measure_contact(ba, std::nullopt, kTable, tol)) {
            list.push_back(*c);
        }
        for (const auto& s : config.blocks()) {
            if (s.id == a.id) {
                continue;
            }
            if (auto c = measure_contact(ba, config.box(s.id), s.id, tol)) {
                list.push_back(*c);
            }
        }
        // A block whose center of mass is not over any contact beneath it leans on its neighbours.
        if (!list.empty() && !over_contact(g.com_xy[a.id], list)) {
            for (const auto& s : config.blocks()) {
                if (s.id == a.id || std::any_of(list.begin(), list.end(), [&](const SupportContact& c) { return c.supporter == s.id; })) {
                    continue;
                }
                if (auto c = measure_lateral_contact(ba, config.box(s.id), s.id, tol)) {
                    list.push_back(*c);
                }
            }
        }
    }
    return g;
}

void check_support_graph(const SupportGraph& graph, const StackConfiguration& config, const std::string& context)
{
    for (const auto& b : config.blocks()) {
        if (graph.supporters(b.id).empty()) {
            throw SceneError(context + ": block " + b.id + " is floating (no supporter)");
        }
    }
    // Acyclicity: depth-first search over supported -> supporter edges.
    std::map<std::string, int> mark;
    std::function<void(const std::string&)> visit = [&](const std::string& id) {
        if (id == kTable) {
            return;
        }
        if (mark[id] == 1) {
            throw SceneError(context + ": support cycle through block " + id);
        }
        if (mark[id] == 2) {
            return;
        }
        mark[id] = 1;
        // Mutual leaning is allowed; only the primary supporters must form a tree.
        const std::string p = graph.primary(id);
        if (!p.empty()) {
            visit(p);
        }
        mark[id] = 2;
    };
    for (const auto& b : config.blocks()) {
        visit(b.id);
    }
}

// ---------------------------------------------------------------------------------------------
// Problem files

namespace {

double number_at(const json& j, const std::string& context)
{
    if (!j.is_number()) {
        throw SceneError(context + ": expected a number");
    }
    return j.get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec_at(const json& j, const std::string& context)
{
    if (!j.is_array() || j.size() != N) {
        throw SceneError(context + ": expected an array of " + std::to_string(N) + " numbers");
    }
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) {
        v[i] = number_at(j[static_cast<size_t>(i)], context);
    }
    return v;
}

const json& field(const json& obj, const char* key, const std::string& context)
{
    if (!obj.is_object() || !obj.contains(key)) {
        throw SceneError(context + ": missing field '" + key + "'");
    }
    return obj.at(key);
}

StackConfiguration parse_configuration(const json& arr, const std::vector<BlockSpec>& blocks, const std::string& context)
{
    if (!arr.is_array()) {
        throw SceneError(context + ": expected an array of placements");
    }
    FrameTree tree;
    std::set<std::string> seen;
    for (const auto& entry : arr) {
        const std::string id = field(entry, "block", context).get<std::string>();
        const std::string ctx = context + ": block " + id;
        if (!std::any_of(blocks.begin(), blocks.end(), [&](const BlockSpec& b) { return b.id == id; })) {
            throw SceneError(ctx + ": unknown block id");
        }
        if (!seen.insert(id).second) {
            throw SceneError(ctx + ": duplicate placement");
        }
        const std::string parent = field(entry, "parent", ctx).get<std::string>();
        if (parent != kTable && !std::any_of(blocks.begin(), blocks.end(), [&](const BlockSpec& b) { return b.id == parent; })) {
            throw SceneError(ctx + ": parent '" + parent + "' is neither the table nor a block");
        }
        if (parent == id) {
            throw SceneError(ctx + ": block cannot be its own parent");
        }
        const Vec3 pos = vec_at<3>(field(entry, "position", ctx), ctx + ": position");
        const Eigen::Vector4d q = vec_at<4>(field(entry, "orientation", ctx), ctx + ": orientation");
        if (std::abs(q.norm() - 1.0) > 1e-6) {
            throw SceneError(ctx + ": orientation is not a unit quaternion");
        }
        Quat quat(q[0], q[1], q[2], q[3]);
        quat.normalize();
        tree.set(id, parent, Pose(pos, quat));
    }
    for (const auto& b : blocks) {
        if (seen.count(b.id) == 0) {
            throw SceneError(context + ": block " + b.id + ": missing placement");
        }
    }
    try {
        tree.check_structure();
    } catch (const SceneError& e) {
        throw SceneError(context + ": " + e.what());
    }
    return StackConfiguration(blocks, std::move(tree));
}

json configuration_json(const StackConfiguration& config)
{
    json arr = json::array();
    for (const auto& b : config.blocks()) {
        const auto& node = config.tree().node(b.id);
        const Pose& p = node.relative;
        json e;
        e["block"] = b.id;
        e["parent"] = node.parent;
        e["position"] = {round_significant(p.position.x()), round_significant(p.position.y()),
                         round_significant(p.position.z())};
        e["orientation"] = {round_significant(p.orientation.w()), round_significant(p.orientation.x()),
                            round_significant(p.orientation.y()), round_significant(p.orientation.z())};
        arr.push_back(std::move(e));
    }
    return arr;
}

} // namespace

ProblemSet parse_problem_set(const std::string& text, const ContactTolerances& tol)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SceneError(std::string("parse failure: ") + e.what());
    }
    ProblemSet set;
    try {
        const json& layout = field(root, "layout", "layout");
        set.layout.spots.clear();
        const json& spots = field(layout, "spots", "layout");
        if (!spots.is_array() || spots.size() != 3) {
            throw SceneError("layout: spots: expected three x-coordinates");
        }
        for (const auto& s : spots) {
            set.layout.spots.push_back(number_at(s, "layout: spots"));
        }
        const json& boundary = field(layout, "boundary", "layout");
        set.layout.boundary_min = vec_at<2>(field(boundary, "min", "layout: boundary"), "layout: boundary: min");
        set.layout.boundary_max = vec_at<2>(field(boundary, "max", "layout: boundary"), "layout: boundary: max");
        for (size_t i = 0; i < set.layout.spots.size(); ++i) {
            if (!set.layout.inside(set.layout.spots[i], 0.0)) {
                throw SceneError("layout: spots: spot " + std::to_string(i + 1) + " lies outside the boundary");
            }
            for (size_t j = i + 1; j < set.layout.spots.size(); ++j) {
                if (set.layout.spots[i] == set.layout.spots[j]) {
                    throw SceneError("layout: spots: spots must be distinct");
                }
            }
        }

        const json& blocks = field(root, "blocks", "blocks");
        if (!blocks.is_array() || blocks.empty()) {
            throw SceneError("blocks: expected a non-empty array");
        }
        std::set<std::string> ids;
        for (const auto& b : blocks) {
            BlockSpec spec;
            spec.id = field(b, "id", "blocks").get<std::string>();
            const std::string ctx = "blocks: " + spec.id;
            if (spec.id == kTable || spec.id == kHandL || spec.id == kHandR) {
                throw SceneError(ctx + ": reserved id");
            }
            if (!ids.insert(spec.id).second) {
                throw SceneError(ctx + ": duplicate block id");
            }
            spec.color = b.contains("color") ? b.at("color").get<std::string>() : "";
            spec.dims = vec_at<3>(field(b, "dims", ctx), ctx + ": dims");
            spec.mass = number_at(field(b, "mass", ctx), ctx + ": mass");
            if ((spec.dims.array() <= 0.0).any() || spec.mass <= 0.0) {
                throw SceneError(ctx + ": dims and mass must be strictly positive");
            }
            set.blocks.push_back(spec);
        }

        std::set<int> problem_ids;
        for (const auto& p : field(root, "problems", "problems")) {
            Problem prob;
            prob.id = field(p, "id", "problems").get<int>();
            const std::string ctx = "problem " + std::to_string(prob.id);
            if (!problem_ids.insert(prob.id).second) {
                throw SceneError(ctx + ": duplicate problem id");
            }
            prob.layout = set.layout;
            prob.initial = parse_configuration(field(p, "initial", ctx), set.blocks, ctx + ": initial");
            prob.target = parse_configuration(field(p, "target", ctx), set.blocks, ctx + ": target");
            for (const auto* which : {"initial", "target"}) {
                const auto& cfg = std::string(which) == "initial" ? prob.initial : prob.target;
                const std::string cctx = ctx + ": " + which;
                cfg.validate(cctx);
                check_support_graph(derive_support_graph(cfg, tol), cfg, cctx);
            }
            set.problems.push_back(std::move(prob));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SceneError(std::string("malformed problem file: ") + e.what());
    }
    return set;
}

ProblemSet load_problem_set(const std::filesystem::path& path, const ContactTolerances& tol)
{
    std::ifstream in(path);
    if (!in) {
        throw SceneError("cannot open problem file '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem_set(ss.str(), tol);
}

std::string serialize_problem_set(const ProblemSet& set)
{
    json root;
    json layout;
    json spots = json::array();
    for (double s : set.layout.spots) {
        spots.push_back(round_significant(s));
    }
    layout["spots"] = spots;
    layout["boundary"]["min"] = {round_significant(set.layout.boundary_min.x()),
                                 round_significant(set.layout.boundary_min.y())};
    layout["boundary"]["max"] = {round_significant(set.layout.boundary_max.x()),
                                 round_significant(set.layout.boundary_max.y())};
    root["layout"] = layout;
    json blocks = json::array();
    for (const auto& b : set.blocks) {
        json jb;
        jb["id"] = b.id;
        jb["color"] = b.color;
        jb["dims"] = {round_significant(b.dims[0]), round_significant(b.dims[1]), round_significant(b.dims[2])};
        jb["mass"] = round_significant(b.mass);
        blocks.push_back(jb);
    }
    root["blocks"] = blocks;
    json problems = json::array();
    for (const auto& p : set.problems) {
        json jp;
        jp["id"] = p.id;
        jp["initial"] = configuration_json(p.initial);
        jp["target"] = configuration_json(p.target);
        problems.push_back(jp);
    }
    root["problems"] = problems;
    return root.dump(2) + "\n";
}

} // namespace reconfig
