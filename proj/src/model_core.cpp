#include "halmarket/model_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace halmarket {

namespace {

constexpr double kBindingTieTolerance = 1e-12;

[[noreturn]] void fail_validation(const std::string& field, const std::string& why) {
    throw ValidationError(field + ": " + why);
}

}  // namespace

void UserType::validate(const std::string& label) const {
    if (!(value > 0.0) || !std::isfinite(value))
        fail_validation(label + ".v", "payoff per correct answer must be > 0");
    if (!(aversion > 0.0) || !std::isfinite(aversion))
        fail_validation(label + ".alpha", "hallucination disutility must be > 0");
}

void UserPopulation::validate(bool allow_mu_endpoints) const {
    high.validate("population.high");
    low.validate("population.low");
    if (!(high.value > low.value))
        fail_validation("population", "v_high must exceed v_low");
    if (!(high.aversion > low.aversion))
        fail_validation("population", "alpha_high must exceed alpha_low");
    if (!std::isfinite(mu)) fail_validation("population.mu", "must be finite");
    if (allow_mu_endpoints) {
        if (mu < 0.0 || mu > 1.0) fail_validation("population.mu", "must lie in [0,1]");
    } else if (!(mu > 0.0 && mu < 1.0)) {
        fail_validation("population.mu", "must lie strictly in (0,1)");
    }
}

void UpstreamModel::validate() const {
    if (id.empty()) fail_validation("model.id", "must be non-empty");
    if (!(wholesale_fee > 0.0) || !std::isfinite(wholesale_fee))
        fail_validation("model[" + id + "].wholesale_fee", "must be > 0");
    if (!(baseline_hallucination > 0.0 && baseline_hallucination < 1.0))
        fail_validation("model[" + id + "].baseline_hallucination", "must lie in (0,1)");
}

void ModelCatalog::validate() const {
    if (models.empty()) throw ConfigError("catalog: must contain at least one model");
    for (const auto& m : models) m.validate();
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (std::size_t j = i + 1; j < models.size(); ++j) {
            if (models[i].id == models[j].id)
                fail_validation("catalog", "duplicate model id '" + models[i].id + "'");
            if (models[i].wholesale_fee == models[j].wholesale_fee)
                fail_validation("catalog", "models '" + models[i].id + "' and '" + models[j].id +
                                               "' share a wholesale fee; fees must be distinct");
            if (models[i].baseline_hallucination == models[j].baseline_hallucination)
                fail_validation("catalog", "models '" + models[i].id + "' and '" + models[j].id +
                                               "' share a baseline hallucination rate; rates must "
                                               "be distinct");
        }
    }
}

const UpstreamModel* ModelCatalog::find(const std::string& id) const {
    for (const auto& m : models)
        if (m.id == id) return &m;
    return nullptr;
}

double ModelCatalog::min_baseline_hallucination() const {
    double lo = 1.0;
    for (const auto& m : models) lo = std::min(lo, m.baseline_hallucination);
    return lo;
}

void CostFunction::validate() const {
    if (!(coefficient > 0.0) || !std::isfinite(coefficient))
        fail_validation("cost.a", "must be > 0");
    if (!(exponent >= 2.0) || !std::isfinite(exponent))
        fail_validation("cost.gamma", "must be >= 2");
}

void MarketParams::validate() const {
    if (!(delta >= 0.0 && delta < 1.0))
        fail_validation("params.delta", "discount factor must lie in [0,1)");
    if (!(beta > 0.0) || !std::isfinite(beta))
        fail_validation("params.beta", "verification efficacy must be > 0");
}

void Contract::validate() const {
    model.validate();
    if (!(effort >= 0.0)) fail_validation("contract.effort", "must be >= 0");
    if (!std::isfinite(price)) fail_validation("contract.price", "must be finite");
}

const char* to_string(BindingType b) {
    switch (b) {
        case BindingType::High: return "High";
        case BindingType::Low: return "Low";
        case BindingType::Both: return "Both";
    }
    return "?";
}

double hallucination_prob(const UpstreamModel& model, double effort, double beta) {
    if (!(effort >= 0.0)) throw std::domain_error("hallucination_prob: effort must be >= 0");
    if (!(beta > 0.0)) throw std::domain_error("hallucination_prob: beta must be > 0");
    return model.baseline_hallucination * std::exp(-beta * effort);
}

double effort_cost(const CostFunction& cost, double effort) {
    if (!(effort >= 0.0)) throw std::domain_error("effort_cost: effort must be >= 0");
    if (effort == 0.0) return 0.0;
    return cost(effort);
}

double per_period_utility(const UserType& user, double hallucination, double price) {
    if (!(hallucination >= 0.0 && hallucination <= 1.0))
        throw std::domain_error("per_period_utility: hallucination probability outside [0,1]");
    return (1.0 - hallucination) * user.value - hallucination * user.aversion - price;
}

double lifetime_value(const UserType& user, double hallucination, double price, double delta) {
    const double u = per_period_utility(user, hallucination, price);
    if (!(delta >= 0.0 && delta < 1.0))
        throw std::domain_error("lifetime_value: delta must lie in [0,1)");
    return u / (1.0 - delta * (1.0 - hallucination));
}

double rent_factor(const UpstreamModel& model, double effort, const MarketParams& params) {
    if (effort == 0.0)
        throw SingularInputError(
            "rent_factor: undefined at zero effort (h0 - h vanishes); the rent term's limit is 0");
    if (params.delta == 0.0)
        throw SingularInputError("rent_factor: undefined at delta = 0");
    if (!(effort > 0.0)) throw std::domain_error("rent_factor: effort must be >= 0");
    const double h = hallucination_prob(model, effort, params.beta);
    const double wedge = model.baseline_hallucination - h;
    return (1.0 - params.delta * (1.0 - h)) / (params.delta * wedge);
}

double enforcement_price(const UpstreamModel& model, double effort, const CostFunction& cost,
                         const MarketParams& params) {
    if (effort == 0.0) return model.wholesale_fee;
    if (params.delta == 0.0)
        throw InfeasibleEnforcementError(
            "enforcement_price: no positive effort is sustainable at delta = 0");
    return model.wholesale_fee + effort_cost(cost, effort) * (1.0 + rent_factor(model, effort, params));
}

double continuation_value(const Contract& contract, const CostFunction& cost,
                          const MarketParams& params) {
    const double h = hallucination_prob(contract.model, contract.effort, params.beta);
    const double margin = contract.price - contract.model.wholesale_fee - effort_cost(cost, contract.effort);
    return margin / (1.0 - params.delta * (1.0 - h));
}

IcCheck ic_holds(const Contract& contract, const CostFunction& cost, const MarketParams& params) {
    const double h = hallucination_prob(contract.model, contract.effort, params.beta);
    const double wedge = contract.model.baseline_hallucination - h;
    const double vc = continuation_value(contract, cost, params);
    const double slack = params.delta * wedge * vc - effort_cost(cost, contract.effort);
    return IcCheck{slack >= 0.0, slack};
}

double welfare(const UpstreamModel& model, double effort, const UserPopulation& pop,
               const CostFunction& cost, const MarketParams& params) {
    const double h = hallucination_prob(model, effort, params.beta);
    const double c = effort_cost(cost, effort);
    const double surplus = (1.0 - h) * pop.value_avg() - h * pop.aversion_avg() -
                           model.wholesale_fee - c;
    const double denom = 1.0 - params.delta * (1.0 - h);
    double rent_term = 0.0;  // continuous limit at effort 0
    if (effort > 0.0) {
        if (params.delta == 0.0)
            throw InfeasibleEnforcementError("welfare: positive effort requires delta > 0");
        // algebraic simplification of c(e)*R / (1 - delta*(1-h))
        rent_term = c / (params.delta * (model.baseline_hallucination - h));
    }
    return surplus / denom - rent_term;
}

DeltaLower delta_lower(const UpstreamModel& model, double effort, const UserType& low,
                       const CostFunction& cost, double beta) {
    if (effort == 0.0)
        throw SingularInputError(
            "delta_lower: undefined at zero effort (a spot contract needs no patience)");
    if (!(effort > 0.0)) throw std::domain_error("delta_lower: effort must be >= 0");
    const double h = hallucination_prob(model, effort, beta);
    const double c = effort_cost(cost, effort);
    const double wedge = model.baseline_hallucination - h;
    const double low_margin =
        (1.0 - h) * low.value - h * low.aversion - model.wholesale_fee - c;
    const double bracket = (1.0 - h) + wedge * low_margin / c;
    if (bracket <= 0.0) return DeltaLower{false, std::numeric_limits<double>::infinity()};
    const double threshold = 1.0 / bracket;
    return DeltaLower{threshold < 1.0, threshold};
}

double binding_threshold(const UserPopulation& pop) {
    return 1.0 / (1.0 + pop.sensitivity_ratio());
}

BindingType binding_type(const UserPopulation& pop, double hallucination) {
    if (!(hallucination >= 0.0 && hallucination <= 1.0))
        throw std::domain_error("binding_type: hallucination probability outside [0,1]");
    const double threshold = binding_threshold(pop);
    if (std::abs(hallucination - threshold) <= kBindingTieTolerance) return BindingType::Both;
    return hallucination > threshold ? BindingType::High : BindingType::Low;
}

}  // namespace halmarket
