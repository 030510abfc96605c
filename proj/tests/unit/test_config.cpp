#include <doctest.h>

#include <cmath>

#include "peierls/config.hpp"

using namespace peierls;

namespace {

std::string key_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

}  // namespace

TEST_CASE("minimal document materializes every default") {
    const RunConfig c = parse_config(R"({"schema_version": 1})");
    CHECK(c.model == "qwz");
    CHECK(c.nk == 64);
    CHECK(c.k0 == 1);
    CHECK(c.L == 64);
    REQUIRE(c.eps_list.size() == 5);
    CHECK(c.eps_list[0] == doctest::Approx(2 * M_PI / 64));
    CHECK(flux_quanta(c) == std::vector<int>{1, 2, 3, 4, 5});
    CHECK(config_fingerprint(c) == config_fingerprint(default_config()));
}

TEST_CASE("effective configuration round-trips") {
    const RunConfig c = parse_config(R"({"schema_version": 1, "model": "harper", "frame": {"seed": 7},
        "magnetic": {"eps_list": [0.19634954084936207], "c": 0.5}, "box": {"L": 32}})");
    const RunConfig back = parse_config(effective_config_json(c));
    CHECK(config_fingerprint(back) == config_fingerprint(c));
    CHECK(back.seed == 7);
    CHECK(flux_quanta(back) == std::vector<int>{1});
}

TEST_CASE("fingerprint tracks results-relevant keys only") {
    RunConfig a = default_config(), b = default_config();
    b.output = "elsewhere";
    CHECK(config_fingerprint(a) == config_fingerprint(b));
    b.seed = 3;
    CHECK(config_fingerprint(a) != config_fingerprint(b));
    CHECK(config_fingerprint(a).size() == 16);
}

TEST_CASE("errors name the offending key") {
    CHECK(key_of(R"({"schema_version": 1, "family": {"k0": 0}})") == "family.k0");
    CHECK(key_of(R"({"schema_version": 1, "family": {"k0": 3}})") == "family.k0");
    CHECK(key_of(R"({"schema_version": 1, "family": {"k0": "one"}})") == "family.k0");
    CHECK(key_of(R"({"schema_version": 1, "family": {"kk": 1}})") == "family.kk");
    CHECK(key_of(R"({"schema_version": 1, "colour": 1})") == "colour");
    CHECK(key_of(R"({"family": {"k0": 1}})") == "schema_version");
    CHECK(key_of(R"({"schema_version": 2})") == "schema_version");
    CHECK(key_of(R"({"schema_version": 1, "model": "nonexistent_model.json"})") == "model");
    CHECK(key_of(R"({"schema_version": 1, "magnetic": {"eps_list": [0.1]}})") == "magnetic.eps_list");
    CHECK(key_of(R"({"schema_version": 1, "box": {"boundary": "open"}})") == "box.boundary");
    CHECK(key_of(R"({"schema_version": 1, "frame": {"wannier_radius": 40}})") == "frame.wannier_radius");
    CHECK(key_of(R"({"schema_version": 1, "magnetic": {"fluct": {"modes": [{"wavevector": [0.1, 0], "amplitude": [1, 0]}]}}})") ==
          "magnetic.fluct.modes[0].wavevector");
    CHECK(key_of(R"({"schema_version": 1, "window": {"delta": -1}})") == "window.delta");
    CHECK(key_of("{not json") == "<document>");
}

TEST_CASE("pipeline options follow the configuration") {
    const RunConfig c = parse_config(R"({"schema_version": 1, "frame": {"nB_start": 3, "A_min": 0.01},
        "truncation": {"kernel_radius": 10, "hopping_radius": 9}, "window": {"delta": 0.4}})");
    const PipelineOptions o = pipeline_options(c);
    CHECK(o.nB_start == 3);
    CHECK(o.a_min == 0.01);
    CHECK(o.kernel_radius == 10);
    CHECK(o.hopping_radius == 9);
    CHECK(o.delta == 0.4);
    CHECK(o.fluct.modes.size() == 2);
}
