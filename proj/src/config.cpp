#include "reconfig/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace reconfig {

using json = nlohmann::ordered_json;

namespace {

json vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json arm(const JointVector& q, Hand h)
{
    json a = json::array();
    for (int i = 0; i < kArmDof; ++i) {
        a.push_back(q[kArmDof * static_cast<int>(h) + i]);
    }
    return a;
}

/// Applies the fields of one section, rejecting keys no handler claims.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name))
    {
        if (!j_.is_object()) {
            throw ConfigError("config: " + name_ + " must be an object");
        }
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: " + name_ + "." + key + " has the wrong type");
        }
    }

    void custom(const std::string& key, const std::function<void(const json&)>& apply)
    {
        seen_.insert(key);
        if (j_.contains(key)) {
            try {
                apply(j_.at(key));
            } catch (const json::exception&) {
                throw ConfigError("config: " + name_ + "." + key + " has the wrong type or shape");
            } catch (const std::invalid_argument& e) {
                throw ConfigError("config: " + name_ + "." + key + ": " + e.what());
            }
        }
    }

    void finish() const
    {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError("config: unknown key " + name_ + "." + key);
            }
        }
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

Vec3 read_vec3(const json& j)
{
    if (!j.is_array() || j.size() != 3) {
        throw std::invalid_argument("expected three numbers");
    }
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

void read_arms(const json& j, JointVector& q)
{
    // Either one six-vector for both arms or {"left": [...], "right": [...]}.
    auto fill = [&](const json& a, int offset) {
        if (!a.is_array() || a.size() != kArmDof) {
            throw std::invalid_argument("expected six joint values");
        }
        for (int i = 0; i < kArmDof; ++i) {
            q[offset + i] = a[static_cast<size_t>(i)].get<double>();
        }
    };
    if (j.is_array()) {
        fill(j, 0);
        fill(j, kArmDof);
    } else if (j.is_object() && j.size() == 2 && j.contains("left") && j.contains("right")) {
        fill(j.at("left"), 0);
        fill(j.at("right"), kArmDof);
    } else {
        throw std::invalid_argument("expected a six-vector or {left, right}");
    }
}

} // namespace

void Config::validate() const
{
    if (search.max_length < 0 || search.max_length > 40) {
        throw ConfigError("config: search.max_length must lie in [0, 40]");
    }
    if (search.budget < 1) {
        throw ConfigError("config: search.budget must be positive");
    }
    if (!(temperature > 0.0)) {
        throw ConfigError("config: choice.temperature must be positive");
    }
    if (bootstrap.iterations < 1 || !(bootstrap.level > 0.0 && bootstrap.level < 1.0)) {
        throw ConfigError("config: bootstrap needs iterations >= 1 and level in (0, 1)");
    }
    if (compile.samples_per_segment < 1) {
        throw ConfigError("config: trajectory.samples_per_segment must be at least 1");
    }
    if (!(compile.ik.position_tolerance > 0.0 && compile.ik.angle_tolerance > 0.0 && compile.ik.clearance >= 0.0)) {
        throw ConfigError("config: ik tolerances must be positive");
    }
    try {
        simulation.validate();
        robot.check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

Config parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        throw ConfigError("config: top level must be an object");
    }
    Config c;
    static const std::set<std::string> sections{"search", "contacts", "robot", "ik", "trajectory", "simulation", "choice", "bootstrap"};
    for (const auto& [key, _] : root.items()) {
        if (!sections.count(key)) {
            throw ConfigError("config: unknown section " + key);
        }
    }
    if (root.contains("search")) {
        Section s(root["search"], "search");
        s.custom("mode", [&](const json& j) { c.search.mode = solution_mode_from_string(j.get<std::string>()); });
        s.custom("hands", [&](const json& j) { c.search.hands = hands_mode_from_string(j.get<std::string>()); });
        s.custom("search", [&](const json& j) { c.search.search = search_kind_from_string(j.get<std::string>()); });
        s.get("budget", c.search.budget);
        s.get("max_length", c.search.max_length);
        s.get("seed", c.search.seed);
        s.get("exploration", c.search.exploration);
        s.finish();
    }
    if (root.contains("contacts")) {
        Section s(root["contacts"], "contacts");
        s.get("max_gap", c.contacts.max_gap);
        s.get("min_area", c.contacts.min_area);
        s.get("grid_step", c.contacts.grid_step);
        s.finish();
    }
    if (root.contains("robot")) {
        Section s(root["robot"], "robot");
        s.custom("left_shoulder", [&](const json& j) { c.robot.shoulders[0] = read_vec3(j); });
        s.custom("right_shoulder", [&](const json& j) { c.robot.shoulders[1] = read_vec3(j); });
        s.get("upper_length", c.robot.upper_length);
        s.get("fore_length", c.robot.fore_length);
        s.get("tool_length", c.robot.tool_length);
        s.get("link_radius", c.robot.link_radius);
        s.custom("lower", [&](const json& j) { read_arms(j, c.robot.lower); });
        s.custom("upper", [&](const json& j) { read_arms(j, c.robot.upper); });
        s.custom("neutral", [&](const json& j) { read_arms(j, c.robot.neutral); });
        s.finish();
    }
    if (root.contains("ik")) {
        Section s(root["ik"], "ik");
        auto& ik = c.compile.ik;
        s.get("position_tolerance", ik.position_tolerance);
        double degrees = ik.angle_tolerance * 180.0 / M_PI;
        s.get("angle_tolerance_deg", degrees);
        ik.angle_tolerance = degrees * M_PI / 180.0;
        s.get("clearance", ik.clearance);
        s.get("initial_weight", ik.initial_weight);
        s.get("weight_growth", ik.weight_growth);
        s.get("outer_iterations", ik.outer_iterations);
        s.get("max_inner_iterations", ik.max_inner_iterations);
        s.finish();
    }
    if (root.contains("trajectory")) {
        Section s(root["trajectory"], "trajectory");
        s.get("samples_per_segment", c.compile.samples_per_segment);
        s.finish();
    }
    if (root.contains("simulation")) {
        Section s(root["simulation"], "simulation");
        auto& sim = c.simulation;
        s.get("duration", sim.duration);
        s.get("burn_in", sim.burn_in);
        s.get("energy_threshold", sim.energy_threshold);
        s.custom("aggregation", [&](const json& j) { sim.aggregation = parse_aggregation(j.get<std::string>()); });
        s.get("displacement_threshold", sim.displacement_threshold);
        s.get("timestep", sim.physics.timestep);
        s.get("gravity", sim.physics.gravity);
        s.get("friction", sim.physics.friction);
        s.get("restitution", sim.physics.restitution);
        s.get("iterations", sim.physics.iterations);
        s.finish();
    }
    if (root.contains("choice")) {
        Section s(root["choice"], "choice");
        s.get("temperature", c.temperature);
        s.finish();
    }
    if (root.contains("bootstrap")) {
        Section s(root["bootstrap"], "bootstrap");
        s.get("iterations", c.bootstrap.iterations);
        s.get("seed", c.bootstrap.seed);
        s.get("level", c.bootstrap.level);
        s.finish();
    }
    c.validate();
    return c;
}

Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const Config& c)
{
    json j;
    j["search"] = {{"mode", to_string(c.search.mode)},
                   {"hands", c.search.hands == HandsMode::One ? "one" : c.search.hands == HandsMode::Two ? "two" : "both"},
                   {"search", c.search.search == SearchKind::Mcts ? "mcts" : "exhaustive"},
                   {"budget", c.search.budget},
                   {"max_length", c.search.max_length},
                   {"seed", c.search.seed},
                   {"exploration", c.search.exploration}};
    j["contacts"] = {{"max_gap", c.contacts.max_gap}, {"min_area", c.contacts.min_area}, {"grid_step", c.contacts.grid_step}};
    j["robot"] = {{"left_shoulder", vec3(c.robot.shoulders[0])},
                  {"right_shoulder", vec3(c.robot.shoulders[1])},
                  {"upper_length", c.robot.upper_length},
                  {"fore_length", c.robot.fore_length},
                  {"tool_length", c.robot.tool_length},
                  {"link_radius", c.robot.link_radius},
                  {"lower", {{"left", arm(c.robot.lower, Hand::Left)}, {"right", arm(c.robot.lower, Hand::Right)}}},
                  {"upper", {{"left", arm(c.robot.upper, Hand::Left)}, {"right", arm(c.robot.upper, Hand::Right)}}},
                  {"neutral", {{"left", arm(c.robot.neutral, Hand::Left)}, {"right", arm(c.robot.neutral, Hand::Right)}}}};
    const auto& ik = c.compile.ik;
    j["ik"] = {{"position_tolerance", ik.position_tolerance},
               {"angle_tolerance_deg", ik.angle_tolerance * 180.0 / M_PI},
               {"clearance", ik.clearance},
               {"initial_weight", ik.initial_weight},
               {"weight_growth", ik.weight_growth},
               {"outer_iterations", ik.outer_iterations},
               {"max_inner_iterations", ik.max_inner_iterations}};
    j["trajectory"] = {{"samples_per_segment", c.compile.samples_per_segment}};
    const auto& sim = c.simulation;
    j["simulation"] = {{"duration", sim.duration},
                       {"burn_in", sim.burn_in},
                       {"energy_threshold", sim.energy_threshold},
                       {"aggregation", to_string(sim.aggregation)},
                       {"displacement_threshold", sim.displacement_threshold},
                       {"timestep", sim.physics.timestep},
                       {"gravity", sim.physics.gravity},
                       {"friction", sim.physics.friction},
                       {"restitution", sim.physics.restitution},
                       {"iterations", sim.physics.iterations}};
    j["choice"] = {{"temperature", c.temperature}};
    j["bootstrap"] = {{"iterations", c.bootstrap.iterations}, {"seed", c.bootstrap.seed}, {"level", c.bootstrap.level}};
    return j.dump(2) + "\n";
}

} // namespace reconfig
