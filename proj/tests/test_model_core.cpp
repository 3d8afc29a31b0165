#include <cmath>
#include <random>

#include <doctest.h>

#include "halmarket/model_core.hpp"
#include "test_support.hpp"

using namespace halmarket;
using namespace testsup;

namespace {

// independent oracle arithmetic, kept apart from the library implementation
double oracle_h(double h0, double beta, double e) { return h0 * std::exp(-beta * e); }

double oracle_rent_factor(double h0, double beta, double e, double delta) {
    const double h = oracle_h(h0, beta, e);
    return (1.0 - delta * (1.0 - h)) / (delta * (h0 - h));
}

}  // namespace

TEST_CASE("hallucination probability follows the exponential technology") {
    const UpstreamModel a = model_a();
    const UpstreamModel b = model_b();

    CHECK(hallucination_prob(a, 0.0, 0.70) == 0.20);  // identity case, exp(0) = 1
    CHECK(hallucination_prob(a, 1.0, 0.70) == doctest::Approx(oracle_h(0.20, 0.70, 1.0)).epsilon(1e-14));
    CHECK(hallucination_prob(a, 1.0, 0.70) == doctest::Approx(0.099317).epsilon(1e-5));
    CHECK(hallucination_prob(b, 2.0, 0.70) == doctest::Approx(oracle_h(0.13, 0.70, 2.0)).epsilon(1e-14));
    CHECK(hallucination_prob(b, 2.0, 0.70) == doctest::Approx(0.032046).epsilon(1e-4));

    CHECK_THROWS_AS(hallucination_prob(a, -0.1, 0.70), std::domain_error);
    CHECK_THROWS_AS(hallucination_prob(a, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(hallucination_prob(a, 1.0, -0.5), std::domain_error);
}

TEST_CASE("hallucination probability monotonicity") {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> h0_dist(0.01, 0.8);
    std::uniform_real_distribution<double> beta_dist(0.1, 2.0);
    std::uniform_real_distribution<double> e_dist(0.0, 10.0);
    for (int i = 0; i < 500; ++i) {
        const double h0 = h0_dist(rng);
        const double beta = beta_dist(rng);
        UpstreamModel m{"m", 0.1, h0};
        double e1 = e_dist(rng), e2 = e_dist(rng);
        if (e1 > e2) std::swap(e1, e2);
        const double h1 = hallucination_prob(m, e1, beta);
        const double h2 = hallucination_prob(m, e2, beta);
        CHECK(hallucination_prob(m, 0.0, beta) == h0);  // exact at zero effort
        CHECK(h1 > 0.0);
        CHECK(h1 <= h0);
        if (e1 < e2) CHECK(h1 > h2);  // strictly decreasing in effort

        UpstreamModel higher{"m2", 0.1, std::min(0.99, h0 * 1.1)};
        CHECK(hallucination_prob(higher, e1, beta) > h1);  // strictly increasing in h0
    }
}

TEST_CASE("effort cost") {
    const CostFunction c = quadratic_cost();
    CHECK(effort_cost(c, 0.0) == 0.0);
    CHECK(effort_cost(c, 2.0) == 0.5);
    CHECK(effort_cost(c, 1.0) == 0.125);
    CHECK_THROWS_AS(effort_cost(c, -1e-9), std::domain_error);
}

TEST_CASE("per-period utility") {
    CHECK(per_period_utility({1.0, 1.5}, 0.20, 0.05) == doctest::Approx(0.45).epsilon(1e-14));
    CHECK(per_period_utility({3.0, 10.0}, 0.20, 0.05) == doctest::Approx(0.35).epsilon(1e-14));
    CHECK(per_period_utility({1.0, 1.5}, 0.0, 0.0) == 1.0);
    CHECK_THROWS_AS(per_period_utility({1.0, 1.5}, -0.01, 0.0), std::domain_error);
    CHECK_THROWS_AS(per_period_utility({1.0, 1.5}, 1.01, 0.0), std::domain_error);
}

TEST_CASE("lifetime value discounts by survival-adjusted factor") {
    // delta = 0 collapses to one period
    CHECK(lifetime_value({1.0, 1.5}, 0.20, 0.05, 0.0) == doctest::Approx(0.45).epsilon(1e-14));

    // worked example at the enforcement-price contract
    const double h = oracle_h(0.20, 0.70, 1.0);
    const double p = 0.363632;
    const double expected = ((1.0 - h) * 1.0 - h * 1.5 - p) / (1.0 - 0.95 * (1.0 - h));
    CHECK(lifetime_value({1.0, 1.5}, h, p, 0.95) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(2.6884).epsilon(1e-4));

    // zero per-period utility stays zero for any horizon weighting
    const double v = 1.0, alpha = 1.5, h2 = 0.3;
    const double p0 = (1.0 - h2) * v - h2 * alpha;  // makes U = 0
    CHECK(lifetime_value({v, alpha}, h2, p0, 0.7) == 0.0);
}

TEST_CASE("rent factor") {
    const UpstreamModel a = model_a();
    const MarketParams p = reference_params();

    CHECK(rent_factor(a, 1.0, p) ==
          doctest::Approx(oracle_rent_factor(0.20, 0.70, 1.0, 0.95)).epsilon(1e-14));
    CHECK(rent_factor(a, 1.0, p) == doctest::Approx(1.50918).epsilon(1e-5));

    // e -> infinity limit: h -> 0, R -> (1-delta)/(delta*h0)
    const double limit = (1.0 - 0.95) / (0.95 * 0.20);
    CHECK(rent_factor(a, 40.0, p) == doctest::Approx(limit).epsilon(1e-9));
    CHECK(limit == doctest::Approx(0.26316).epsilon(1e-4));

    CHECK_THROWS_AS(rent_factor(a, 0.0, p), SingularInputError);
    CHECK_THROWS_AS(rent_factor(a, 1.0, MarketParams{0.0, 0.70}), SingularInputError);
}

TEST_CASE("enforcement price") {
    const UpstreamModel a = model_a();
    const UpstreamModel b = model_b();
    const CostFunction c = quadratic_cost();
    const MarketParams p = reference_params();

    CHECK(enforcement_price(a, 0.0, c, p) == 0.05);  // exactly k at zero effort
    CHECK(enforcement_price(b, 0.0, c, p) == 0.30);

    const double expected = 0.05 + 0.125 * (1.0 + oracle_rent_factor(0.20, 0.70, 1.0, 0.95));
    CHECK(enforcement_price(a, 1.0, c, p) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(0.36365).epsilon(1e-4));

    CHECK_THROWS_AS(enforcement_price(a, 1.0, c, MarketParams{0.0, 0.70}),
                    InfeasibleEnforcementError);
}

TEST_CASE("monotone pass-through of effort cost into the price") {
    const UpstreamModel a = model_a();
    const MarketParams p = reference_params();
    double last = 0.0;
    for (double coeff : {0.05, 0.1, 0.2, 0.4}) {
        const CostFunction c{coeff, 2.0};
        const double price = enforcement_price(a, 1.0, c, p);  // R fixed, c rising
        CHECK(price > last);
        last = price;
    }
    CHECK(enforcement_price(a, 0.0, CostFunction{0.4, 2.0}, p) == a.wholesale_fee);
}

TEST_CASE("continuation value") {
    const UpstreamModel a = model_a();
    const CostFunction c = quadratic_cost();
    const MarketParams p = reference_params();

    const double h = oracle_h(0.20, 0.70, 1.0);
    const Contract stated{a, 0.363632, 1.0};
    const double expected = (0.363632 - 0.05 - 0.125) / (1.0 - 0.95 * (1.0 - h));
    CHECK(continuation_value(stated, c, p) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(1.30675).epsilon(1e-4));

    CHECK(continuation_value(Contract{a, 0.05, 0.0}, c, p) == 0.0);  // zero margin

    // at the enforcement price the IC wedge funds the cost exactly
    const Contract binding{a, enforcement_price(a, 1.0, c, p), 1.0};
    const double vc = continuation_value(binding, c, p);
    CHECK(std::abs(0.95 * (0.20 - h) * vc - 0.125) < 1e-12);
}

TEST_CASE("incentive compatibility check") {
    const UpstreamModel a = model_a();
    const CostFunction c = quadratic_cost();
    const MarketParams p = reference_params();

    const IcCheck at_zero = ic_holds(Contract{a, 0.4, 0.0}, c, p);
    CHECK(at_zero.holds);
    CHECK(at_zero.slack == 0.0);

    const IcCheck at_binding =
        ic_holds(Contract{a, enforcement_price(a, 1.0, c, p), 1.0}, c, p);
    CHECK(at_binding.holds);
    CHECK(std::abs(at_binding.slack) < 1e-10);

    // pricing at the wholesale fee with positive effort: the margin is -c(e),
    // so the continuation value itself is negative and the slack falls below -c
    const IcCheck no_margin = ic_holds(Contract{a, 0.05, 1.0}, c, p);
    CHECK_FALSE(no_margin.holds);
    const double h = oracle_h(0.20, 0.70, 1.0);
    const double vc = -0.125 / (1.0 - 0.95 * (1.0 - h));
    const double expected_slack = 0.95 * (0.20 - h) * vc - 0.125;
    CHECK(no_margin.slack == doctest::Approx(expected_slack).epsilon(1e-12));
    CHECK(no_margin.slack < -0.125);
}

TEST_CASE("IC slack is zero at the enforcement price for random draws") {
    std::mt19937_64 rng(20240811);
    std::uniform_real_distribution<double> h0_dist(0.05, 0.5);
    std::uniform_real_distribution<double> k_dist(0.01, 0.5);
    std::uniform_real_distribution<double> e_dist(0.05, 5.0);
    std::uniform_real_distribution<double> delta_dist(0.05, 0.99);
    std::uniform_real_distribution<double> beta_dist(0.2, 1.5);
    std::uniform_real_distribution<double> a_dist(0.02, 0.4);
    for (int i = 0; i < 200; ++i) {
        const UpstreamModel m{"m", k_dist(rng), h0_dist(rng)};
        const CostFunction c{a_dist(rng), 2.0};
        const MarketParams params{delta_dist(rng), beta_dist(rng)};
        const double e = e_dist(rng);
        const Contract contract{m, enforcement_price(m, e, c, params), e};
        const IcCheck check = ic_holds(contract, c, params);
        CHECK(std::abs(check.slack) < 1e-10);
    }
}

TEST_CASE("welfare") {
    const UpstreamModel a = model_a();
    const CostFunction c = quadratic_cost();
    const UserPopulation pop = reference_population(0.5);

    SUBCASE("worked value at e = 1") {
        const double h = oracle_h(0.20, 0.70, 1.0);
        const double v_avg = 2.0, alpha_avg = 5.75;
        const double denom = 1.0 - 0.95 * (1.0 - h);
        const double expected =
            ((1.0 - h) * v_avg - h * alpha_avg - 0.05 - 0.125) / denom -
            0.125 / (0.95 * (0.20 - h));
        CHECK(welfare(a, 1.0, pop, c, reference_params()) ==
              doctest::Approx(expected).epsilon(1e-14));
        CHECK(expected == doctest::Approx(6.0038).epsilon(1e-4));
    }

    SUBCASE("zero effort at delta = 0 collapses to the spot objective") {
        const double u_high = per_period_utility(pop.high, 0.20, 0.05);
        const double u_low = per_period_utility(pop.low, 0.20, 0.05);
        const double w = welfare(a, 0.0, pop, c, MarketParams{0.0, 0.70});
        CHECK(w == doctest::Approx(0.5 * u_high + 0.5 * u_low).epsilon(1e-14));
        CHECK(w == doctest::Approx(0.40).epsilon(1e-12));
    }

    SUBCASE("rent-term identity for random draws") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> h0_dist(0.05, 0.5);
        std::uniform_real_distribution<double> e_dist(0.05, 5.0);
        std::uniform_real_distribution<double> delta_dist(0.05, 0.99);
        std::uniform_real_distribution<double> beta_dist(0.2, 1.5);
        for (int i = 0; i < 200; ++i) {
            const UpstreamModel m{"m", 0.1, h0_dist(rng)};
            const MarketParams params{delta_dist(rng), beta_dist(rng)};
            const double e = e_dist(rng);
            const double ce = effort_cost(c, e);
            const double h = hallucination_prob(m, e, params.beta);
            const double denom = 1.0 - params.delta * (1.0 - h);
            const double via_rent_factor = ce * rent_factor(m, e, params) / denom;
            const double simplified = ce / (params.delta * (m.baseline_hallucination - h));
            CHECK(std::abs(via_rent_factor - simplified) <= 1e-12 * std::abs(simplified));
        }
    }

    SUBCASE("rent term vanishes continuously as effort goes to zero") {
        const MarketParams params = reference_params();
        const double w0 = welfare(a, 0.0, pop, c, params);
        const double w_small = welfare(a, 1e-3, pop, c, params);
        const double w_tiny = welfare(a, 1e-6, pop, c, params);
        const double slope = std::abs(w_small - w0) / 1e-3;
        CHECK(std::abs(w_small - w0) <= 1e-3 * slope * (1.0 + 1e-9));
        CHECK(std::abs(w_tiny - w0) <= 1e-3 * slope);
    }
}

TEST_CASE("activity threshold delta_lower") {
    const UpstreamModel a = model_a();
    const CostFunction c = quadratic_cost();
    const UserType low{1.0, 1.5};

    SUBCASE("worked value at e = 1 (k_m enters the margin)") {
        const double h = oracle_h(0.20, 0.70, 1.0);
        const double margin = (1.0 - h) * 1.0 - h * 1.5 - 0.05 - 0.125;
        const double bracket = (1.0 - h) + (0.20 - h) * margin / 0.125;
        const DeltaLower dl = delta_lower(a, 1.0, low, c, 0.70);
        CHECK(dl.feasible);
        CHECK(dl.value == doctest::Approx(1.0 / bracket).epsilon(1e-14));
        CHECK(dl.value == doctest::Approx(0.732494).epsilon(1e-5));
    }

    SUBCASE("zero low-type margin leaves delta_lower above one") {
        // choose the cost coefficient so the margin is exactly zero at e = 1
        const double h = oracle_h(0.20, 0.70, 1.0);
        const double margin_gross = (1.0 - h) * 1.0 - h * 1.5 - 0.05;
        const CostFunction tuned{margin_gross, 2.0};  // c(1) = margin_gross
        const DeltaLower dl = delta_lower(a, 1.0, low, tuned, 0.70);
        CHECK_FALSE(dl.feasible);
        CHECK(dl.value == doctest::Approx(1.0 / (1.0 - h)).epsilon(1e-12));
        CHECK(dl.value > 1.0);
    }

    SUBCASE("deeply negative margin admits no discount factor at all") {
        const UserType poor{0.1, 1.5};
        const DeltaLower dl = delta_lower(a, 0.1, poor, c, 0.70);
        CHECK_FALSE(dl.feasible);
        CHECK(std::isinf(dl.value));
    }

    CHECK_THROWS_AS(delta_lower(a, 0.0, low, c, 0.70), SingularInputError);
}

TEST_CASE("delta_lower marks exactly where low-type participation turns feasible") {
    // delta >= delta_lower(m, e) iff V_L >= 0 at the enforcement price
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const UserType low{1.0, 1.5};
    int checked = 0;
    for (int i = 0; i < 400; ++i) {
        const UpstreamModel m{"m", 0.02 + 0.4 * unit(rng), 0.05 + 0.4 * unit(rng)};
        const CostFunction cost{0.02 + 0.3 * unit(rng), 2.0};
        const MarketParams params{0.05 + 0.94 * unit(rng), 0.3 + 1.0 * unit(rng)};
        const double e = 0.05 + 3.0 * unit(rng);

        const double p = enforcement_price(m, e, cost, params);
        const double h = hallucination_prob(m, e, params.beta);
        const double v_low = lifetime_value(low, h, p, params.delta);
        if (std::abs(v_low) < 1e-9) continue;  // too close to the boundary to classify

        const DeltaLower dl = delta_lower(m, e, low, cost, params.beta);
        CHECK((params.delta >= dl.value) == (v_low >= 0.0));
        ++checked;
    }
    CHECK(checked > 300);
}

TEST_CASE("binding type classification") {
    const UserPopulation pop = reference_population();
    CHECK(pop.sensitivity_ratio() == doctest::Approx(4.25).epsilon(1e-15));
    const double threshold = 1.0 / 5.25;
    CHECK(binding_threshold(pop) == doctest::Approx(threshold).epsilon(1e-15));

    CHECK(binding_type(pop, 0.20) == BindingType::High);
    CHECK(binding_type(pop, 0.05) == BindingType::Low);
    CHECK(binding_type(pop, threshold) == BindingType::Both);
    CHECK(binding_type(pop, threshold + 5e-13) == BindingType::Both);  // inside tolerance
    CHECK(binding_type(pop, threshold + 1e-10) == BindingType::High);
}

TEST_CASE("utility gap changes sign exactly at the binding threshold") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> v_low_dist(0.2, 2.0);
    std::uniform_real_distribution<double> gap_dist(0.1, 5.0);
    for (int i = 0; i < 500; ++i) {
        UserPopulation pop;
        pop.low = {v_low_dist(rng), v_low_dist(rng)};
        pop.high = {pop.low.value + gap_dist(rng), pop.low.aversion + gap_dist(rng)};
        pop.mu = 0.5;
        const double h = unit(rng);
        const double price = unit(rng);
        const double u_low = per_period_utility(pop.low, h, price);
        const double u_high = per_period_utility(pop.high, h, price);
        const double threshold = binding_threshold(pop);
        if (std::abs(h - threshold) < 1e-9) continue;
        CHECK(((u_low - u_high) > 0.0) == (h > threshold));

        // V ordering matches U ordering under the shared denominator
        const double delta = 0.9;
        const double denom = 1.0 - delta * (1.0 - h);
        CHECK(((u_low / denom - u_high / denom) > 0.0) == ((u_low - u_high) > 0.0));
    }
}

TEST_CASE("domain type validation") {
    CHECK_THROWS_AS((UserType{0.0, 1.0}.validate()), ValidationError);
    CHECK_THROWS_AS((UserType{1.0, -1.0}.validate()), ValidationError);

    UserPopulation bad = reference_population();
    bad.high.value = 0.5;  // below the low type
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    UserPopulation edge = reference_population();
    edge.mu = 0.0;
    CHECK_THROWS_AS(edge.validate(), ValidationError);
    CHECK_NOTHROW(edge.validate(/*allow_mu_endpoints=*/true));

    CHECK_THROWS_AS((UpstreamModel{"x", 0.0, 0.2}.validate()), ValidationError);
    CHECK_THROWS_AS((UpstreamModel{"x", 0.1, 1.0}.validate()), ValidationError);

    ModelCatalog empty;
    CHECK_THROWS_AS(empty.validate(), ConfigError);

    ModelCatalog dup;
    dup.models = {UpstreamModel{"a", 0.1, 0.2}, UpstreamModel{"b", 0.1, 0.3}};
    CHECK_THROWS_AS(dup.validate(), ValidationError);  // shared fee
    dup.models = {UpstreamModel{"a", 0.1, 0.2}, UpstreamModel{"b", 0.2, 0.2}};
    CHECK_THROWS_AS(dup.validate(), ValidationError);  // shared baseline rate

    CHECK_THROWS_AS((CostFunction{0.125, 1.5}.validate()), ValidationError);
    CHECK_THROWS_AS((CostFunction{-1.0, 2.0}.validate()), ValidationError);
    CHECK_THROWS_AS((MarketParams{1.0, 0.7}.validate()), ValidationError);
    CHECK_THROWS_AS((MarketParams{0.5, 0.0}.validate()), ValidationError);
}
