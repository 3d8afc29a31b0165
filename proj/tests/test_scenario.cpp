#include <string>

#include <doctest.h>

#include "halmarket/scenario.hpp"

using namespace halmarket;

namespace {

const char* kMinimalScenario = R"(
[population]
v_high = 3
alpha_high = 10
v_low = 1
alpha_low = 1.5
mu = 0.5

[model A]
wholesale_fee = 0.05
baseline_hallucination = 0.20

[params]
delta = 0.95
beta = 0.70

[cost]
a = 0.125
gamma = 2
)";

std::string with_line(const std::string& base, const std::string& section,
                      const std::string& extra) {
    std::string text = base;
    const std::size_t pos = text.find(section);
    REQUIRE(pos != std::string::npos);
    const std::size_t eol = text.find('\n', pos);
    text.insert(eol + 1, extra + "\n");
    return text;
}

}  // namespace

TEST_CASE("bundled preset carries the reference parameter block") {
    const Scenario sc = load_scenario(std::string(HALMARKET_SCENARIO_DIR) + "/paper_3_3.scenario");
    CHECK(sc.low.value == 1.0);
    CHECK(sc.low.aversion == 1.5);
    CHECK(sc.high.value == 3.0);
    CHECK(sc.high.aversion == 10.0);
    CHECK(sc.beta.value() == 0.70);
    CHECK(sc.cost.coefficient == 0.125);
    CHECK(sc.cost.exponent == 2.0);
    CHECK(sc.delta.value() == 0.95);
    REQUIRE(sc.catalog.models.size() == 2);
    CHECK(sc.catalog.models[0].id == "A");
    CHECK(sc.catalog.models[0].baseline_hallucination == 0.20);
    CHECK(sc.catalog.models[0].wholesale_fee == 0.05);
    CHECK(sc.catalog.models[1].id == "B");
    CHECK(sc.catalog.models[1].baseline_hallucination == 0.13);
    CHECK(sc.catalog.models[1].wholesale_fee == 0.30);
    CHECK(sc.mu.value() == 0.5);
    CHECK(sc.delta_list == std::vector<double>{0.75, 0.85, 0.95});
    CHECK(sc.beta_list == std::vector<double>{0.50, 0.60, 0.70});
    CHECK_FALSE(sc.mu_grid.empty());
}

TEST_CASE("scenario round-trips through emit and parse") {
    Scenario sc = load_scenario(std::string(HALMARKET_SCENARIO_DIR) + "/paper_3_3.scenario");
    sc.sim.deviation_period = 4;
    const Scenario again = parse_scenario(emit_scenario(sc), "roundtrip");

    CHECK(again.high.value == sc.high.value);
    CHECK(again.high.aversion == sc.high.aversion);
    CHECK(again.low.value == sc.low.value);
    CHECK(again.low.aversion == sc.low.aversion);
    CHECK(again.mu == sc.mu);
    CHECK(again.mu_grid == sc.mu_grid);
    CHECK(again.delta == sc.delta);
    CHECK(again.delta_list == sc.delta_list);
    CHECK(again.beta == sc.beta);
    CHECK(again.beta_list == sc.beta_list);
    CHECK(again.cost.coefficient == sc.cost.coefficient);
    CHECK(again.cost.exponent == sc.cost.exponent);
    REQUIRE(again.catalog.models.size() == sc.catalog.models.size());
    for (std::size_t i = 0; i < sc.catalog.models.size(); ++i) {
        CHECK(again.catalog.models[i].id == sc.catalog.models[i].id);
        CHECK(again.catalog.models[i].wholesale_fee == sc.catalog.models[i].wholesale_fee);
        CHECK(again.catalog.models[i].baseline_hallucination ==
              sc.catalog.models[i].baseline_hallucination);
    }
    CHECK(again.solver.effort_grid_points == sc.solver.effort_grid_points);
    CHECK(again.solver.refine_tolerance == sc.solver.refine_tolerance);
    CHECK(again.solver.h_floor == sc.solver.h_floor);
    CHECK(again.sim.cohort_size == sc.sim.cohort_size);
    CHECK(again.sim.seed == sc.sim.seed);
    CHECK(again.sim.deviation_period == sc.sim.deviation_period);
}

TEST_CASE("minimal scenario parses with defaults") {
    const Scenario sc = parse_scenario(kMinimalScenario, "minimal");
    CHECK(sc.solver.effort_grid_points == 2048);
    CHECK(sc.sim.cohort_size == 100000);
    CHECK(sc.mu_grid.empty());
    CHECK(sc.population().mu == 0.5);
    CHECK(sc.market_params().delta == 0.95);
}

TEST_CASE("parser addresses errors by line and field") {
    SUBCASE("unknown key") {
        const std::string text = with_line(kMinimalScenario, "[population]", "velocity = 3");
        CHECK_THROWS_WITH_AS(parse_scenario(text, "s"),
                             doctest::Contains("velocity"), ValidationError);
        try {
            parse_scenario(text, "s");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("s:3") != std::string::npos);  // line-addressed
        }
    }

    SUBCASE("unknown section") {
        const std::string text = std::string(kMinimalScenario) + "\n[pricing]\nx = 1\n";
        CHECK_THROWS_WITH_AS(parse_scenario(text, "s"), doctest::Contains("[pricing]"),
                             ValidationError);
    }

    SUBCASE("unparseable number") {
        std::string text = kMinimalScenario;
        const auto pos = text.find("delta = 0.95");
        text.replace(pos, 12, "delta = fast");
        CHECK_THROWS_WITH_AS(parse_scenario(text, "s"), doctest::Contains("delta"),
                             ValidationError);
    }

    SUBCASE("duplicate key") {
        const std::string text = with_line(kMinimalScenario, "[cost]", "a = 0.2");
        CHECK_THROWS_WITH_AS(parse_scenario(text, "s"), doctest::Contains("duplicate"),
                             ValidationError);
    }

    SUBCASE("violated population invariant names the field") {
        std::string text = kMinimalScenario;
        const auto pos = text.find("v_high = 3");
        text.replace(pos, 10, "v_high = 0.5");  // below v_low
        CHECK_THROWS_WITH_AS(parse_scenario(text, "s"), doctest::Contains("v_high"),
                             ValidationError);
    }

    SUBCASE("missing model field") {
        std::string text = kMinimalScenario;
        const auto pos = text.find("wholesale_fee = 0.05\n");
        text.erase(pos, 21);
        CHECK_THROWS_WITH_AS(parse_scenario(text, "s"), doctest::Contains("wholesale_fee"),
                             ValidationError);
    }

    SUBCASE("key before any section") {
        CHECK_THROWS_AS(parse_scenario("mu = 0.5\n", "s"), ValidationError);
    }
}

TEST_CASE("missing file raises an io error") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/path.scenario"), IoError);
}

TEST_CASE("scalar accessors explain what is missing") {
    std::string text = kMinimalScenario;
    const auto pos = text.find("delta = 0.95");
    text.replace(pos, 12, "delta_list = 0.8, 0.9");
    const Scenario sc = parse_scenario(text, "s");
    CHECK_THROWS_WITH_AS(sc.market_params(), doctest::Contains("delta"), ValidationError);
}

TEST_CASE("grid parsing") {
    const std::vector<double> ranged = parse_grid("0.1:0.5:0.1");
    REQUIRE(ranged.size() == 5);
    for (std::size_t i = 0; i < ranged.size(); ++i)
        CHECK(ranged[i] == doctest::Approx(0.1 + 0.1 * static_cast<double>(i)).epsilon(1e-12));
    CHECK(parse_grid("1, 2, 3") == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(parse_grid("0.75") == std::vector<double>{0.75});
    CHECK_THROWS_AS(parse_grid("0.5:0.1:0.1"), ValidationError);
    CHECK_THROWS_AS(parse_grid("a,b"), ValidationError);
    CHECK_THROWS_AS(parse_grid("0.1:0.5:0"), ValidationError);
    CHECK_THROWS_AS(parse_grid(""), ValidationError);
}
