#pragma once

#include "halmarket/types.hpp"

namespace halmarket {

/// Hallucination probability h(m,e) = h0(m) * exp(-beta * e).
double hallucination_prob(const UpstreamModel& model, double effort, double beta);

/// Verification cost c(e). Throws on negative effort.
double effort_cost(const CostFunction& cost, double effort);

/// Expected per-period user utility U = (1-h)*v - h*alpha - p.
double per_period_utility(const UserType& user, double hallucination, double price);

/// Discounted lifetime user value V = U / (1 - delta*(1-h)).
double lifetime_value(const UserType& user, double hallucination, double price, double delta);

/// Rent factor R(m,e) = (1 - delta*(1-h)) / (delta*(h0 - h)).
/// Defined only for effort > 0 and delta > 0; the rent *term* c(e)*R tends to 0
/// as effort vanishes, but R itself is singular there.
double rent_factor(const UpstreamModel& model, double effort, const MarketParams& params);

/// Minimum price that sustains the given effort: p = k_m + c(e)*(1 + R(m,e)).
/// At effort 0 this is exactly k_m (the rent term limit is 0).
double enforcement_price(const UpstreamModel& model, double effort, const CostFunction& cost,
                         const MarketParams& params);

/// Agent's present value of relational rents V_C = (p - k_m - c(e)) / (1 - delta*(1-h)).
double continuation_value(const Contract& contract, const CostFunction& cost,
                          const MarketParams& params);

struct IcCheck {
    bool holds = false;
    double slack = 0.0;  // delta*(h0 - h)*V_C - c(e); nonnegative iff the constraint holds
};

/// One-shot deviation check: c(e) <= delta*(h(m,0) - h(m,e))*V_C.
IcCheck ic_holds(const Contract& contract, const CostFunction& cost, const MarketParams& params);

/// Planner objective: user surplus net of the agent's discounted incentive rent,
///   W = [(1-h)*v_avg - h*alpha_avg - k_m - c(e)] / (1 - delta*(1-h)) - c(e)/(delta*(h0-h)),
/// with the rent term taken as 0 at effort 0 (its continuous limit).
double welfare(const UpstreamModel& model, double effort, const UserPopulation& pop,
               const CostFunction& cost, const MarketParams& params);

struct DeltaLower {
    bool feasible = false;  // true iff some delta < 1 sustains this (m, e)
    double value = 0.0;     // threshold discount factor; +inf when no delta works at all
};

/// Activity threshold: the smallest discount factor at which the low type's
/// participation survives the enforcement price at positive effort.
DeltaLower delta_lower(const UpstreamModel& model, double effort, const UserType& low,
                       const CostFunction& cost, double beta);

/// Participation threshold in h: 1 / (1 + kappa).
double binding_threshold(const UserPopulation& pop);

/// Which type's participation constraint binds at hallucination rate h.
BindingType binding_type(const UserPopulation& pop, double hallucination);

}  // namespace halmarket
