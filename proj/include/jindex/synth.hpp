#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jindex/dataset.hpp"
#include "jindex/panel.hpp"

namespace jindex::synth {

enum class ErrorStructure { Iid, Ar1 };

/// Data-generating process for synthetic journal panels:
///   y_it = a_i + sum_j slope_j * x_jit + e_it
/// with a_i ~ N(0, journal_effect_sd^2), regressors standard normal with the
/// given correlation to a_i, and iid or stationary AR(1) errors. All draws
/// are counter-based functions of (seed, journal, year, variable), so
/// generation is order-independent.
struct DgpSpec {
    int n_journals = 100;
    int n_years = 6;
    int first_year = 2013;
    std::string response = "y";
    std::vector<std::pair<std::string, double>> slopes;  // regressor name -> coefficient
    double journal_effect_sd = 0.0;
    double effect_regressor_corr = 0.0;
    double noise_sd = 1.0;
    ErrorStructure errors = ErrorStructure::Iid;
    double ar1_rho = 0.0;
    uint64_t seed = 0;
};

struct GroundTruth {
    DgpSpec spec;
    Eigen::VectorXd journal_effects;  // a_i per journal
};

struct SynthResult {
    PanelDataset panel;
    GroundTruth truth;
};

SynthResult generate(const DgpSpec& spec);

/// The same sample in estimation layout, skipping the CSV round trip.
panel::PanelData generate_panel_data(const DgpSpec& spec, Eigen::VectorXd* effects = nullptr);

std::string spec_to_json_string(const DgpSpec& spec);
DgpSpec spec_from_json_string(const std::string& text);
std::string truth_to_json_string(const GroundTruth& truth);

}  // namespace jindex::synth
