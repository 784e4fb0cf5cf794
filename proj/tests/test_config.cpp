#include <doctest.h>

#include "reconfig/config.hpp"

using namespace reconfig;

TEST_CASE("defaults")
{
    const Config c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.simulation.duration == 1.0);
    CHECK(c.simulation.burn_in == 0.1);
    CHECK(c.simulation.energy_threshold == 0.1);
    CHECK(c.temperature == 1.0);
    CHECK(c.compile.ik.position_tolerance == 1e-3);
    CHECK(c.compile.ik.clearance == 0.005);
}

TEST_CASE("round trip")
{
    const Config d;
    CHECK(config_to_json(parse_config(config_to_json(d))) == config_to_json(d));

    Config c;
    c.search.mode = SolutionMode::Universal;
    c.search.hands = HandsMode::One;
    c.search.max_length = 9;
    c.simulation.duration = 2.5;
    c.simulation.aggregation = EnergyAggregation::Peak;
    c.robot.upper_length = 0.31;
    c.temperature = 0.5;
    c.bootstrap.seed = 77;
    const Config back = parse_config(config_to_json(c));
    CHECK(back.search.mode == SolutionMode::Universal);
    CHECK(back.search.hands == HandsMode::One);
    CHECK(back.search.max_length == 9);
    CHECK(back.simulation.duration == 2.5);
    CHECK(back.simulation.aggregation == EnergyAggregation::Peak);
    CHECK(back.robot.upper_length == 0.31);
    CHECK(back.temperature == 0.5);
    CHECK(back.bootstrap.seed == 77);
    CHECK(config_to_json(back) == config_to_json(c));
}

TEST_CASE("bundled config file equals the defaults")
{
    CHECK(config_to_json(load_config(RECONFIG_DATA_DIR "/config.json")) == config_to_json(Config{}));
}

TEST_CASE("partial files override only what they name")
{
    const Config c = parse_config(R"({"simulation": {"duration": 2.0}, "choice": {"temperature": 0.25}})");
    CHECK(c.simulation.duration == 2.0);
    CHECK(c.simulation.burn_in == 0.1);
    CHECK(c.temperature == 0.25);
    CHECK(c.search.max_length == Config{}.search.max_length);
}

TEST_CASE("bad files")
{
    CHECK_THROWS_WITH_AS(parse_config(R"({"simulation": {"durationn": 2.0}})"), doctest::Contains("simulation.durationn"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"physics": {}})"), doctest::Contains("unknown section physics"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"search": {"max_length": "long"}})"), doctest::Contains("search.max_length"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"choice": {"temperature": 0}})"), doctest::Contains("temperature"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"simulation": {"burn_in": 2.0}})"), doctest::Contains("config:"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"bootstrap": {"level": 1.5}})"), doctest::Contains("bootstrap"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"search": {"mode": "lazy"}})"), doctest::Contains("search.mode"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[1, 2]"), doctest::Contains("top level"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("{oops"), doctest::Contains("invalid JSON"), ConfigError);
    CHECK_THROWS_WITH_AS(load_config("/no/such/config.json"), doctest::Contains("/no/such/config.json"), ConfigError);
}
