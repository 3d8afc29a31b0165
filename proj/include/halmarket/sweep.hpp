#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "halmarket/scenario.hpp"
#include "halmarket/types.hpp"

namespace halmarket {

enum class SweepAxis { Mu, Delta, Beta };

const char* to_string(SweepAxis axis);
SweepAxis parse_axis(std::string_view name);

struct SweepRequest {
    SweepAxis axis = SweepAxis::Mu;
    std::vector<double> grid;
    // secondary axis: one row per grid point per value of this parameter's
    // scenario list; absent means a single pass at the scalar values
    std::optional<SweepAxis> by;
    std::optional<std::string> forced_model;  // restrict the catalog to one id
    int threads = 1;
};

struct SweepRow {
    double mu = 0.0;
    double delta = 0.0;
    double beta = 0.0;
    EquilibriumResult result;
};

/// Solves the (possibly forced-model) equilibrium at every grid point. Rows are
/// ordered secondary-axis-major, grid-minor; delta = 0 points route to the spot
/// benchmark.
std::vector<SweepRow> run_sweep(const Scenario& scenario, const SweepRequest& request);

inline constexpr const char* kSweepCsvHeader =
    "mu,delta,beta,model,effort,price,hallucination,welfare,v_high,v_low,delta_lower,binding,"
    "active";

/// Fixed-schema CSV: header above, one row per sweep row, 12 significant
/// digits, LF line endings.
std::string sweep_csv(const std::vector<SweepRow>& rows);

void write_file(const std::filesystem::path& path, std::string_view content);

struct CrossingReport {
    bool found = false;
    double mu_star = 0.0;  // bisected to 1e-6 when found
    int sign_changes = 0;  // on the scan grid
    std::string model_low;   // welfare winner left of the crossing
    std::string model_high;  // welfare winner right of the crossing
};

/// Locates where the forced-model welfare curves of two catalog entries cross,
/// scanning mu_scan for sign changes and bisecting the first bracket.
CrossingReport find_welfare_crossing(const Scenario& scenario, const std::string& model_a,
                                     const std::string& model_b, std::span<const double> mu_scan,
                                     int threads = 1);

}  // namespace halmarket
