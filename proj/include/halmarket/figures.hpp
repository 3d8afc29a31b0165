#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "halmarket/scenario.hpp"
#include "halmarket/sweep.hpp"

namespace halmarket {

struct FiguresReport {
    std::vector<std::filesystem::path> written;
    // bisected model-switch point, computed when the catalog holds >= 2 models
    std::optional<CrossingReport> crossing;
    std::vector<std::string> warnings;
};

/// Emits three CSVs and their charts into out_dir:
///   effort_by_delta.{csv,svg}   equilibrium effort over mu, one series per delta
///   effort_by_beta.{csv,svg}    equilibrium effort over mu, one series per beta
///   welfare_by_model.{csv,svg}  forced-model welfare over mu with the switch marked
/// Charts are rendered strictly from the CSV files after writing them.
FiguresReport make_figures(const Scenario& scenario, const std::filesystem::path& out_dir,
                           int threads = 1);

}  // namespace halmarket
