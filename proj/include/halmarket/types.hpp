#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace halmarket {

// Error taxonomy. The CLI maps these onto exit statuses; library code throws.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input in a region where the requested quantity is undefined (e.g. the rent
// factor at zero effort, where the incentive wedge h0 - h collapses).
struct SingularInputError : std::domain_error {
    explicit SingularInputError(const std::string& msg) : std::domain_error(msg) {}
};

// No positive verification effort can be enforced (delta = 0 spot regime).
struct InfeasibleEnforcementError : std::domain_error {
    explicit InfeasibleEnforcementError(const std::string& msg) : std::domain_error(msg) {}
};

/// One user segment: payoff per correct answer and disutility per hallucination.
struct UserType {
    double value = 0.0;     // v: utils per correct answer
    double aversion = 0.0;  // alpha: utils lost per hallucinated answer

    void validate(const std::string& label = "user") const;
};

/// Two-segment market: high- and low-criticality users mixed with share mu.
struct UserPopulation {
    UserType high;
    UserType low;
    double mu = 0.5;  // population share of the high type

    double value_avg() const { return mu * high.value + (1.0 - mu) * low.value; }
    double aversion_avg() const { return mu * high.aversion + (1.0 - mu) * low.aversion; }

    /// Sensitivity ratio kappa = (alpha_H - alpha_L) / (v_H - v_L).
    double sensitivity_ratio() const { return (high.aversion - low.aversion) / (high.value - low.value); }

    // mu endpoints are admissible only as sweep limits, not for equilibrium analysis.
    void validate(bool allow_mu_endpoints = false) const;
};

/// An upstream model offering: per-call fee and baseline hallucination rate.
struct UpstreamModel {
    std::string id;
    double wholesale_fee = 0.0;           // k_m, currency units per call
    double baseline_hallucination = 0.0;  // h0(m) in (0,1)

    void validate() const;
};

struct ModelCatalog {
    std::vector<UpstreamModel> models;

    void validate() const;
    const UpstreamModel* find(const std::string& id) const;
    double min_baseline_hallucination() const;
};

/// Convex verification cost c(e) = coefficient * e^exponent, c(0) = 0.
struct CostFunction {
    double coefficient = 0.125;
    double exponent = 2.0;

    double operator()(double effort) const { return coefficient * std::pow(effort, exponent); }

    void validate() const;
};

struct MarketParams {
    double delta = 0.95;  // common discount factor, [0,1)
    double beta = 0.70;   // verification efficacy, > 0

    void validate() const;
};

/// A posted relational contract: upstream model, per-period price, per-period effort.
struct Contract {
    UpstreamModel model;
    double price = 0.0;
    double effort = 0.0;

    void validate() const;
};

/// Which type's participation constraint binds at a given hallucination rate.
enum class BindingType { High, Low, Both };

const char* to_string(BindingType b);

struct EquilibriumResult {
    bool active = false;
    Contract contract;
    double hallucination_rate = 0.0;  // h(m*, e*)
    double welfare = 0.0;             // W(m*, e*)
    double value_high = 0.0;          // V_H at the contract
    double value_low = 0.0;           // V_L at the contract
    double agent_value = 0.0;         // V_C at the contract
    double rent_factor = 0.0;         // R(m*, e*); stored as 0 when effort == 0 (rent term vanishes)
    double delta_lower = 0.0;         // activity threshold; 0 when effort == 0 (no patience needed)
    BindingType binding_type = BindingType::Both;
    double kappa = 0.0;

    // true when no positive-effort contract was sustainable and the solve
    // degenerated to the best participating zero-effort contract
    bool zero_effort_fallback = false;
    // true when the reported effort came from the participation-restricted
    // search rather than the unconstrained welfare maximizer
    bool participation_constrained = false;
};

}  // namespace halmarket
