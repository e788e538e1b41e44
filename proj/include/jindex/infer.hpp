#pragma once

#include <map>
#include <string>
#include <vector>

#include "jindex/dataset.hpp"
#include "jindex/panel.hpp"

namespace jindex::infer {

struct ModelTerm {
    std::string variable;
    double coefficient = 0.0;
    std::string coefficient_text;  // verbatim transcription, preserved digit-for-digit
    double std_error = 0.0;
    std::string std_error_text;
    std::string stars;
};

/// A named linear model applied at inference time. Built-in models carry the
/// published cross-database coefficients; model_from_fit wraps a PanelFit.
struct CoefficientModel {
    std::string model_id;
    int version = 1;
    std::string target;  // "SJR", "IF", or a fitted response name
    std::vector<ModelTerm> terms;
    std::string fixed_effect_note;  // non-empty when alpha_i = 0 is assumed
    std::string provenance;
};

const std::vector<std::string>& builtin_model_ids();
const CoefficientModel& builtin_model(const std::string& model_id);

/// Plain-text model exchange format, one term per line:
///   model_id target variable coefficient std_error stars
/// '#' starts a comment; '-' marks an unstarred term.
CoefficientModel parse_model_text(const std::string& text);
std::string model_to_text(const CoefficientModel& model);

struct Row {
    std::string journal;
    int year = 0;
    std::map<std::string, double> numeric;
    std::map<std::string, std::string> labels;  // categorical levels, e.g. quartiles
};

struct TermContribution {
    std::string variable;
    double value = 0.0;
    double coefficient = 0.0;
    double contribution = 0.0;
    std::string stars;
    bool missing = false;
};

struct EstimationEntry {
    std::string journal;
    int year = 0;
    double estimate = 0.0;
    std::vector<TermContribution> contributions;  // sums exactly to estimate
    std::vector<std::string> missing_variables;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const;
};

struct EstimateOptions {
    bool allow_partial = false;    // missing inputs contribute 0 and are flagged
    bool significant_only = false; // drop unstarred terms
};

/// estimate = sum of coefficient_j * value_j over the model terms. Quartile
/// levels in Row::labels expand to the matching indicator terms; a term named
/// year<N> matches the row's year.
EstimationEntry estimate(const CoefficientModel& model, const Row& row,
                         const EstimateOptions& options = {});

struct EstimationReport {
    std::string model_id;
    std::string target;
    std::vector<EstimationEntry> entries;
    long count = 0;
    double mean_estimate = 0.0;
    std::map<std::string, long> flag_counts;
};

/// One entry per observed (journal, year). Missing values flag entries
/// rather than fail; absent columns fail upfront unless allow_partial.
EstimationReport estimate_batch(const CoefficientModel& model, const PanelDataset& d,
                                const EstimateOptions& options = {});

/// Slope terms (plus intercept and time dummies where present) of a fit;
/// journal effects are dropped and recorded in the caveat note.
CoefficientModel model_from_fit(const panel::PanelFit& fit);

std::string report_to_json_string(const EstimationReport& report);
std::string report_to_csv_string(const EstimationReport& report);

}  // namespace jindex::infer
