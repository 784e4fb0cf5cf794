#pragma once

#include <map>
#include <string>
#include <vector>

#include "reconfig/scene.hpp"

namespace fixtures {

using namespace reconfig;

inline std::vector<BlockSpec> blocks(int n)
{
    static const char* colors[] = {"red", "yellow", "blue", "green"};
    std::vector<BlockSpec> out;
    for (int i = 0; i < n; ++i) {
        BlockSpec b;
        b.id = "b" + std::to_string(i + 1);
        b.color = colors[i % 4];
        out.push_back(b);
    }
    return out;
}

/// Upright block standing on the table at x (bottom at z = 0), raised by `level` block heights.
inline Pose upright(double x, int level = 0, double y = 0.0)
{
    return Pose::translation(x, y, 0.05 + 0.10 * level);
}

/// Columns of block ids, bottom first, standing upright at the listed table spots.
inline StackConfiguration columns(const std::vector<BlockSpec>& specs,
                                  const std::vector<std::pair<double, std::vector<std::string>>>& cols)
{
    std::map<std::string, Pose> poses;
    for (const auto& [x, ids] : cols) {
        for (size_t i = 0; i < ids.size(); ++i) {
            poses[ids[i]] = upright(x, static_cast<int>(i));
        }
    }
    return StackConfiguration::from_world(specs, poses);
}

inline Problem problem(int id, StackConfiguration initial, StackConfiguration target)
{
    Problem p;
    p.id = id;
    p.initial = std::move(initial);
    p.target = std::move(target);
    return p;
}

} // namespace fixtures

#include "oracles.hpp"

namespace fixtures {

inline StackConfiguration from_columns(const std::vector<BlockSpec>& specs, const std::vector<oracles::Column>& cols)
{
    std::vector<std::pair<double, std::vector<std::string>>> placed;
    for (const auto& c : cols) {
        placed.push_back({-0.15 + 0.15 * c.spot, c.ids});
    }
    return columns(specs, placed);
}

} // namespace fixtures
