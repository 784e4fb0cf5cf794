#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "reconfig/scene.hpp"

using namespace reconfig;

namespace {

const std::string kHeader = R"({"layout": {"spots": [-0.15, 0.0, 0.15], "boundary": {"min": [-0.3, -0.12], "max": [0.3, 0.12]}},
 "blocks": [{"id": "b1", "color": "red", "dims": [0.1, 0.05, 0.05], "mass": 0.05},
            {"id": "b2", "color": "yellow", "dims": [0.1, 0.05, 0.05], "mass": 0.05},
            {"id": "b3", "color": "blue", "dims": [0.1, 0.05, 0.05], "mass": 0.05}],
 "problems": [)";

std::string placement(const std::string& b, const std::string& parent, double x, double z)
{
    return R"({"block": ")" + b + R"(", "parent": ")" + parent + R"(", "position": [)" + std::to_string(x) + ", 0, " +
           std::to_string(z) + R"(], "orientation": [1, 0, 0, 0]})";
}

std::string one_problem(const std::string& initial, const std::string& target)
{
    return kHeader + R"({"id": 1, "initial": [)" + initial + R"(], "target": [)" + target + "]}]}";
}

const std::string kFlat = placement("b1", "table", -0.15, 0.05) + ", " + placement("b2", "table", 0.0, 0.05) + ", " +
                          placement("b3", "table", 0.15, 0.05);

// Rotation about z by a as an explicit matrix.
Eigen::Matrix3d rot_z(double a)
{
    Eigen::Matrix3d r;
    r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return r;
}

// Block rotated by -a about y, lowest edge on the table, top edge touching the vertical plane
// x = x_face from the +x side.
Pose leaning_against(double x_face, double a)
{
    const double c = 0.025 * std::cos(a) + 0.05 * std::sin(a);
    const double z = 0.025 * std::sin(a) + 0.05 * std::cos(a);
    return Pose(Vec3(x_face + c, 0, z), Quat(Eigen::AngleAxisd(-a, Vec3::UnitY())));
}

} // namespace

TEST_CASE("world poses compose along the frame tree")
{
    FrameTree tree;
    tree.set("a", kTable, Pose::translation(0.1, 0, 0.025));
    CHECK((world_pose(tree, "a").position - Vec3(0.1, 0, 0.025)).norm() < 1e-15);

    tree.set("b", "a", Pose::translation(0, 0, 0.05));
    CHECK((world_pose(tree, "b").position - Vec3(0.1, 0, 0.075)).norm() < 1e-15);

    // Parent turned 90 degrees about the vertical: a child offset along the parent's x lies
    // along world +y. Cross-checked against an explicit rotation matrix.
    tree.set("r", kTable, Pose(Vec3(0.02, -0.01, 0.05), axis_angle(Vec3::UnitZ(), M_PI / 2)));
    tree.set("c", "r", Pose::translation(0.05, 0, 0));
    const Vec3 expected = Vec3(0.02, -0.01, 0.05) + rot_z(M_PI / 2) * Vec3(0.05, 0, 0);
    CHECK((world_pose(tree, "c").position - expected).norm() < 1e-12);
    CHECK((world_pose(tree, "c").position - Vec3(0.02, 0.04, 0.05)).norm() < 1e-12);

    CHECK_THROWS_AS(world_pose(tree, "nope"), SceneError);
}

TEST_CASE("re-parenting keeps world poses")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto random_pose = [&] {
        Quat q(u(rng), u(rng), u(rng), u(rng));
        q.normalize();
        return Pose(Vec3(u(rng), u(rng), u(rng)) * 0.2, q);
    };
    for (int trial = 0; trial < 50; ++trial) {
        FrameTree tree;
        tree.set("n0", kTable, random_pose());
        tree.set("n1", "n0", random_pose());
        tree.set("n2", "n1", random_pose());
        tree.set("n3", "n0", random_pose());
        std::map<std::string, Pose> before;
        for (const char* id : {"n0", "n1", "n2", "n3"}) {
            before[id] = world_pose(tree, id);
        }
        tree.reparent("n2", "n3");
        tree.reparent("n1", kTable);
        for (const auto& [id, p] : before) {
            const Pose now = world_pose(tree, id);
            CHECK((now.position - p.position).norm() < 1e-9);
            CHECK(angle_between(now.orientation, p.orientation) < 1e-9);
        }
        CHECK(tree.parent_of("n2") == "n3");
    }
}

TEST_CASE("support graph")
{
    const auto specs = fixtures::blocks(3);

    SUBCASE("blocks on the three spots")
    {
        const auto g = derive_support_graph(fixtures::columns(specs, {{-0.15, {"b1"}}, {0.0, {"b2"}}, {0.15, {"b3"}}}));
        CHECK(g.edge_count() == 3);
        for (const char* b : {"b1", "b2", "b3"}) {
            CHECK(g.supporters(b) == std::set<std::string>{kTable});
        }
    }
    SUBCASE("tower")
    {
        const auto cfg = fixtures::columns(specs, {{0.15, {"b1", "b2", "b3"}}});
        const auto g = derive_support_graph(cfg);
        CHECK(g.edge_count() == 3);
        CHECK(g.supporters("b1") == std::set<std::string>{kTable});
        CHECK(g.supporters("b2") == std::set<std::string>{"b1"});
        CHECK(g.supporters("b3") == std::set<std::string>{"b2"});
        CHECK_NOTHROW(check_support_graph(g, cfg, "tower"));
        // The whole 5 x 5 cm end face carries the block above.
        CHECK(g.contacts.at("b2").front().area == doctest::Approx(0.0025).epsilon(0.02));
    }
    SUBCASE("leaning block has two supporters")
    {
        const double a = 35.0 * M_PI / 180.0;
        const auto cfg = StackConfiguration::from_world(
            specs, {{"b2", fixtures::upright(0.0)}, {"b3", fixtures::upright(0.0, 1)}, {"b1", leaning_against(0.025, a)}});
        CHECK_NOTHROW(cfg.validate("lean"));
        // The analytic pose touches the table and b2 and no more.
        const Box b1 = cfg.box("b1");
        double lowest = 1.0;
        for (const Vec3& v : b1.vertices()) {
            lowest = std::min(lowest, v.z());
        }
        CHECK(std::abs(lowest) < 1e-12);
        const auto g = derive_support_graph(cfg);
        CHECK(g.supporters("b1") == std::set<std::string>{kTable, "b2"});
        CHECK(g.primary("b1") == kTable);
        CHECK_NOTHROW(check_support_graph(g, cfg, "lean"));
    }
    SUBCASE("two blocks leaning on each other")
    {
        const double a = 30.0 * M_PI / 180.0;
        const double c = 0.025 * std::cos(a) + 0.05 * std::sin(a);
        const double z = 0.025 * std::sin(a) + 0.05 * std::cos(a);
        const auto cfg = StackConfiguration::from_world(
            specs, {{"b1", Pose(Vec3(-c, 0, z), Quat(Eigen::AngleAxisd(a, Vec3::UnitY())))},
                    {"b2", Pose(Vec3(c, 0, z), Quat(Eigen::AngleAxisd(-a, Vec3::UnitY())))},
                    {"b3", fixtures::upright(0.15)}});
        const auto g = derive_support_graph(cfg);
        CHECK(g.supporters("b1") == std::set<std::string>{kTable, "b2"});
        CHECK(g.supporters("b2") == std::set<std::string>{kTable, "b1"});
        // Mutual leaning is not a cycle: both rest primarily on the table.
        CHECK_NOTHROW(check_support_graph(g, cfg, "tent"));
    }
    SUBCASE("invariant under horizontal translation")
    {
        const auto base = fixtures::columns(specs, {{-0.15, {"b1", "b2"}}, {0.15, {"b3"}}});
        std::map<std::string, Pose> shifted;
        for (const auto& [id, p] : base.world_poses()) {
            shifted[id] = Pose(p.position + Vec3(0.031, -0.017, 0), p.orientation);
        }
        const auto g0 = derive_support_graph(base);
        const auto g1 = derive_support_graph(StackConfiguration::from_world(specs, shifted));
        for (const auto& b : specs) {
            CHECK(g0.supporters(b.id) == g1.supporters(b.id));
        }
    }
    SUBCASE("floating block")
    {
        std::map<std::string, Pose> poses{{"b1", fixtures::upright(-0.15)}, {"b2", fixtures::upright(0.0)},
                                          {"b3", Pose::translation(0.15, 0, 0.2)}};
        const auto cfg = StackConfiguration::from_world(specs, poses);
        CHECK_THROWS_WITH_AS(check_support_graph(derive_support_graph(cfg), cfg, "x"), doctest::Contains("b3 is floating"),
                             SceneError);
    }
}

TEST_CASE("problem files")
{
    SUBCASE("one problem with all blocks on the table")
    {
        const auto set = parse_problem_set(one_problem(kFlat, kFlat));
        REQUIRE(set.problems.size() == 1);
        for (const auto& n : set.problems[0].initial.tree().nodes()) {
            if (n.id != kTable) {
                CHECK(n.parent == kTable);
            }
        }
    }
    SUBCASE("block below the table")
    {
        const std::string bad = placement("b1", "table", -0.15, -1.0) + ", " + placement("b2", "table", 0.0, 0.05) + ", " +
                                placement("b3", "table", 0.15, 0.05);
        CHECK_THROWS_WITH_AS(parse_problem_set(one_problem(bad, kFlat)), doctest::Contains("problem 1: initial: block b1"),
                             SceneError);
    }
    SUBCASE("interpenetration and floating blocks name the problem")
    {
        const std::string overlap = placement("b1", "table", 0.0, 0.05) + ", " + placement("b2", "table", 0.01, 0.05) + ", " +
                                    placement("b3", "table", 0.15, 0.05);
        CHECK_THROWS_WITH_AS(parse_problem_set(one_problem(kFlat, overlap)), doctest::Contains("problem 1: target"), SceneError);
        const std::string floating = placement("b1", "table", -0.15, 0.05) + ", " + placement("b2", "table", 0.0, 0.05) + ", " +
                                     placement("b3", "table", 0.15, 0.3);
        CHECK_THROWS_WITH_AS(parse_problem_set(one_problem(floating, kFlat)), doctest::Contains("floating"), SceneError);
    }
    SUBCASE("parent-relative positions")
    {
        const std::string stacked = placement("b1", "table", 0.0, 0.05) + ", " + placement("b2", "b1", 0.0, 0.1) + ", " +
                                    placement("b3", "table", 0.15, 0.05);
        const auto set = parse_problem_set(one_problem(stacked, kFlat));
        CHECK((set.problems[0].initial.world("b2").position - Vec3(0, 0, 0.15)).norm() < 1e-12);
    }
    SUBCASE("malformed text and missing files")
    {
        CHECK_THROWS_AS(parse_problem_set("{not json"), SceneError);
        CHECK_THROWS_WITH_AS(load_problem_set("/no/such/problems.json"), doctest::Contains("/no/such/problems.json"), SceneError);
    }
    SUBCASE("bundled set loads and round-trips")
    {
        const auto set = load_problem_set(RECONFIG_DATA_DIR "/sample_problems.json");
        REQUIRE(set.problems.size() == 10);
        for (size_t i = 0; i < set.problems.size(); ++i) {
            CHECK(set.problems[i].id == static_cast<int>(i + 1));
        }
        const std::string once = serialize_problem_set(set);
        const std::string twice = serialize_problem_set(parse_problem_set(once));
        CHECK(once == twice);
    }
}
