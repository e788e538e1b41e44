#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jindex/dataset.hpp"

namespace jindex::panel {

enum class Effects { Pooled, Fixed, FixedTime, Random };

std::string to_string(Effects e);
Effects effects_from_string(const std::string& s);

struct PanelSpec {
    std::string response;
    std::vector<std::string> regressors;
    Effects effects = Effects::Pooled;
    bool gls = false;
};

/// Long-format estimation sample: one row per (journal, year) observation.
struct PanelData {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;               // regressor columns, no intercept
    std::vector<int> group;          // per-row journal id
    std::vector<int> time;           // per-row year
    std::vector<std::string> names;  // X column names
    std::vector<std::string> group_labels;  // optional, indexed by group id
};

PanelData make_panel_data(const PanelDataset& d, const std::string& response,
                          const std::vector<std::string>& regressors);

/// Subtracts journal means from the response and every regressor column.
PanelData within_transform(const PanelData& data);

struct Coef {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    std::string stars;
};

struct TestResult {
    std::string name;
    double statistic = 0.0;
    double dof = 0.0;
    double dof2 = 0.0;  // F tests only
    double p_value = 1.0;
    bool degenerate = false;
    bool pseudo_inverse = false;
};

struct PanelFit {
    PanelSpec spec;
    std::string estimator;
    std::vector<Coef> coefficients;      // intercept/time dummies included as applicable
    std::vector<std::string> slope_names;  // regressors only, fit order
    double r_squared = 0.0;
    bool within_r_squared = false;       // true for fixed-effects fits
    int n_obs = 0;
    int n_groups = 0;
    int n_dropped_groups = 0;            // single-observation or unbalanced journals
    double rss = 0.0;
    double sigma2 = 0.0;
    double df_resid = 0.0;
    double theta = 0.0;                  // random effects quasi-demeaning weight (mean)
    bool omega_ridged = false;           // FGLS covariance was ridge-regularized

    Eigen::VectorXd fitted;              // original scale, estimation-row order
    Eigen::VectorXd residuals;
    std::vector<int> group;              // estimation rows kept
    std::vector<int> time;
    std::vector<std::string> group_labels;
    std::map<int, double> fixed_effects;  // group id -> alpha_i (fixed effects fits)

    Eigen::MatrixXd slope_vcov;          // slopes only, slope_names order

    std::optional<TestResult> f_fixed_effects;
    std::optional<TestResult> hausman_test;
    std::optional<TestResult> lm_test;

    const Coef* coefficient(const std::string& name) const;
};

PanelFit fit(const PanelData& data, const PanelSpec& spec);
PanelFit fit(const PanelDataset& d, const PanelSpec& spec);

/// Random-effects fit with the Swamy-Arora theta replaced by a fixed value;
/// theta 0 reproduces pooled OLS and theta near 1 approaches the within fit.
PanelFit fit_random_effects(const PanelData& data, const PanelSpec& spec,
                            std::optional<double> theta_override);

/// F = [(RSS_p - RSS_f)/(J-1)] / [RSS_f/(N-J-k)], the null being that all
/// journal effects are equal.
TestResult f_test_fixed_effects(const PanelFit& pooled, const PanelFit& fixed);

/// Hausman specification test over the common slopes. The covariance
/// difference is inverted through its positive eigenvalues, so the statistic
/// is non-negative; the flag records when that pseudo-inverse was required.
TestResult hausman(const PanelFit& fixed, const PanelFit& random);

/// Breusch-Pagan LM score test for random effects from pooled residuals
/// (Baltagi-Li form for unbalanced panels), chi-squared with 1 dof.
TestResult lm_test_random_effects(const PanelFit& pooled);

/// Two-step feasible GLS: spec-level OLS residuals, a T x T within-journal
/// residual covariance averaged over journals, then GLS on the transformed
/// data. Journals without the full year window are dropped.
PanelFit fgls(const PanelData& data, const PanelSpec& spec);
PanelFit fgls(const PanelDataset& d, const PanelSpec& spec);
PanelFit fgls_with_omega(const PanelData& data, const PanelSpec& spec,
                         const Eigen::MatrixXd& omega);

/// Human-readable table in the journal-regression layout: estimate with
/// stars, standard error beneath, observations and R2 at the foot.
std::string format_table(const PanelFit& fit);

std::string fit_to_json_string(const PanelFit& fit);
PanelFit fit_from_json_string(const std::string& text);

}  // namespace jindex::panel
