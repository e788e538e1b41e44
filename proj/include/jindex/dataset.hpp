#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jindex {

enum class VarSource { Scopus, Wos, Derived };
enum class VarKind { QualityNumeric, CategoricalArea, CategoricalOther, Boolean };

std::string to_string(VarSource s);
std::string to_string(VarKind k);

struct VariableMeta {
    std::string name;
    VarSource source = VarSource::Derived;
    VarKind kind = VarKind::QualityNumeric;
    std::string description;
    std::vector<std::string> levels;  // categorical and boolean variables only

    bool is_categorical() const { return kind != VarKind::QualityNumeric; }
};

/// Rectangular journal x year x variable table. Categorical cells hold the
/// index of their level in VariableMeta::levels. Immutable once built; the
/// pipeline operations below all return new datasets.
class PanelDataset {
public:
    PanelDataset() = default;
    PanelDataset(std::vector<std::string> journals, std::vector<int> years,
                 std::vector<VariableMeta> variables);

    int n_journals() const { return static_cast<int>(journals_.size()); }
    int n_years() const { return static_cast<int>(years_.size()); }
    int n_variables() const { return static_cast<int>(variables_.size()); }

    const std::vector<std::string>& journals() const { return journals_; }
    const std::vector<int>& years() const { return years_; }
    const std::vector<VariableMeta>& variables() const { return variables_; }
    const VariableMeta& variable(int v) const { return variables_.at(v); }

    int journal_index(std::string_view name) const;  // -1 when absent
    int year_index(int year) const;                  // -1 when absent
    int variable_index(std::string_view name) const; // exact match, -1 when absent
    int find_variable(std::string_view name) const;  // case/punctuation-insensitive

    double value(int j, int y, int v) const { return values_(cell(j, y), v); }
    bool is_missing(int j, int y, int v) const { return !present_(cell(j, y), v); }
    const std::string& level_label(int j, int y, int v) const;

    void set(int j, int y, int v, double value);
    void set_missing(int j, int y, int v);

    /// True when any variable is observed for the pair.
    bool has_observation(int j, int y) const;

    /// Set when a filtering step produced an empty panel.
    bool empty_warning() const { return empty_warning_; }
    void set_empty_warning(bool w) { empty_warning_ = w; }

    /// Complete-case extraction: one row per (journal, year) where every
    /// requested variable is present, in journal-major year order.
    struct Pooled {
        Eigen::MatrixXd values;       // rows x variables
        std::vector<int> journal;     // row -> journal index
        std::vector<int> year;        // row -> year index
        std::vector<std::string> names;
    };
    Pooled pooled(const std::vector<std::string>& variable_names) const;

    int add_variable(VariableMeta meta);  // appended all-missing
    int add_level(int v, const std::string& label);

private:
    int cell(int j, int y) const { return j * n_years() + y; }

    std::vector<std::string> journals_;
    std::vector<int> years_;
    std::vector<VariableMeta> variables_;
    Eigen::MatrixXd values_;                                   // (J*Y) x V
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> present_;  // same shape
    bool empty_warning_ = false;
};

struct DescriptiveRow {
    std::string variable;
    double mean, median, sd, min, max;
    long n;
};
using DescriptiveStats = std::vector<DescriptiveRow>;

/// Case-fold, trim, collapse internal whitespace. The default journal join key.
std::string normalize_title(std::string_view title);

struct MergeKey {
    std::string id_variable;  // empty -> normalized journal title
};

/// Inner join on journal identity; union of years and variables. A cell is
/// populated from whichever side observed it.
PanelDataset merge(const PanelDataset& a, const PanelDataset& b, const MergeKey& key = {});

struct YearRange {
    int first;
    int last;
};

/// Keeps exactly the journals with no missing value for any variable in any
/// year of the range. The result is balanced; an empty result sets the
/// warning flag rather than failing.
PanelDataset keep_complete(const PanelDataset& d, YearRange range);

/// Sample statistics (sd with n-1 denominator) per quality-numeric variable.
DescriptiveStats describe(const PanelDataset& d);

/// Replaces each categorical variable having L levels with L-1 zero/one
/// indicators named <variable><level>. The baseline defaults to the
/// lexicographically first level.
PanelDataset encode_categoricals(const PanelDataset& d,
                                 const std::map<std::string, std::string>& baselines = {});

/// IF(j;T) = citations to the previous two years / articles in those years.
double impact_factor(double citations_to_prev2, double articles_prev2);

/// Semantic equality: categoricals compared by level label, numerics by value.
bool semantically_equal(const PanelDataset& a, const PanelDataset& b);

}  // namespace jindex
