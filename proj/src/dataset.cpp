#include "jindex/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "jindex/util.hpp"

namespace jindex {

std::string to_string(VarSource s) {
    switch (s) {
        case VarSource::Scopus: return "scopus";
        case VarSource::Wos: return "wos";
        case VarSource::Derived: return "derived";
    }
    return "?";
}

std::string to_string(VarKind k) {
    switch (k) {
        case VarKind::QualityNumeric: return "quality_numeric";
        case VarKind::CategoricalArea: return "categorical_area";
        case VarKind::CategoricalOther: return "categorical_other";
        case VarKind::Boolean: return "boolean";
    }
    return "?";
}

PanelDataset::PanelDataset(std::vector<std::string> journals, std::vector<int> years,
                           std::vector<VariableMeta> variables)
    : journals_(std::move(journals)), years_(std::move(years)), variables_(std::move(variables)) {
    {
        std::set<std::string> seen;
        for (const auto& v : variables_)
            if (!seen.insert(v.name).second)
                throw std::invalid_argument("duplicate variable name: " + v.name);
    }
    if (!std::is_sorted(years_.begin(), years_.end()))
        throw std::invalid_argument("years must be ascending");
    const Eigen::Index rows = static_cast<Eigen::Index>(journals_.size()) *
                              static_cast<Eigen::Index>(years_.size());
    values_ = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(variables_.size()));
    present_.setConstant(rows, static_cast<Eigen::Index>(variables_.size()), false);
}

int PanelDataset::journal_index(std::string_view name) const {
    for (size_t i = 0; i < journals_.size(); ++i)
        if (journals_[i] == name) return static_cast<int>(i);
    return -1;
}

int PanelDataset::year_index(int year) const {
    auto it = std::lower_bound(years_.begin(), years_.end(), year);
    if (it == years_.end() || *it != year) return -1;
    return static_cast<int>(it - years_.begin());
}

int PanelDataset::variable_index(std::string_view name) const {
    for (size_t i = 0; i < variables_.size(); ++i)
        if (variables_[i].name == name) return static_cast<int>(i);
    return -1;
}

int PanelDataset::find_variable(std::string_view name) const {
    const std::string key = util::match_key(name);
    for (size_t i = 0; i < variables_.size(); ++i)
        if (util::match_key(variables_[i].name) == key) return static_cast<int>(i);
    return -1;
}

const std::string& PanelDataset::level_label(int j, int y, int v) const {
    const VariableMeta& meta = variables_.at(v);
    if (!meta.is_categorical())
        throw std::logic_error("level_label on numeric variable " + meta.name);
    const int idx = static_cast<int>(value(j, y, v));
    return meta.levels.at(idx);
}

void PanelDataset::set(int j, int y, int v, double value) {
    if (!std::isfinite(value))
        throw std::invalid_argument("non-finite value for variable " + variables_.at(v).name);
    values_(cell(j, y), v) = value;
    present_(cell(j, y), v) = true;
}

void PanelDataset::set_missing(int j, int y, int v) {
    values_(cell(j, y), v) = 0.0;
    present_(cell(j, y), v) = false;
}

bool PanelDataset::has_observation(int j, int y) const {
    for (int v = 0; v < n_variables(); ++v)
        if (present_(cell(j, y), v)) return true;
    return false;
}

PanelDataset::Pooled PanelDataset::pooled(const std::vector<std::string>& variable_names) const {
    Pooled out;
    std::vector<int> vidx;
    for (const auto& name : variable_names) {
        int v = find_variable(name);
        if (v < 0) throw std::invalid_argument("unknown variable: " + name);
        vidx.push_back(v);
        out.names.push_back(variables_[v].name);
    }
    std::vector<Eigen::Index> rows;
    for (int j = 0; j < n_journals(); ++j) {
        for (int y = 0; y < n_years(); ++y) {
            bool complete = true;
            for (int v : vidx)
                if (!present_(cell(j, y), v)) { complete = false; break; }
            if (!complete) continue;
            rows.push_back(cell(j, y));
            out.journal.push_back(j);
            out.year.push_back(y);
        }
    }
    out.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(vidx.size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < vidx.size(); ++c)
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                values_(rows[r], vidx[c]);
    return out;
}

int PanelDataset::add_variable(VariableMeta meta) {
    if (variable_index(meta.name) >= 0)
        throw std::invalid_argument("duplicate variable name: " + meta.name);
    variables_.push_back(std::move(meta));
    values_.conservativeResize(Eigen::NoChange, values_.cols() + 1);
    values_.col(values_.cols() - 1).setZero();
    present_.conservativeResize(Eigen::NoChange, present_.cols() + 1);
    present_.col(present_.cols() - 1).setConstant(false);
    return n_variables() - 1;
}

int PanelDataset::add_level(int v, const std::string& label) {
    VariableMeta& meta = variables_.at(v);
    for (size_t i = 0; i < meta.levels.size(); ++i)
        if (meta.levels[i] == label) return static_cast<int>(i);
    if (meta.kind == VarKind::Boolean && meta.levels.size() >= 2)
        throw std::invalid_argument("boolean variable " + meta.name +
                                    " has more than two levels (new: '" + label + "')");
    meta.levels.push_back(label);
    return static_cast<int>(meta.levels.size()) - 1;
}

std::string normalize_title(std::string_view title) {
    std::string out;
    bool pending_space = false;
    for (char c : title) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(util::lower_ascii(c));
    }
    return out;
}

namespace {

// Maps each journal to its join key, erroring on collisions.
std::unordered_map<std::string, int> join_keys(const PanelDataset& d, const MergeKey& key,
                                               const char* side) {
    std::unordered_map<std::string, int> out;
    std::vector<std::string> collisions;
    if (key.id_variable.empty()) {
        for (int j = 0; j < d.n_journals(); ++j) {
            const std::string k = normalize_title(d.journals()[j]);
            if (!out.emplace(k, j).second)
                collisions.push_back(d.journals()[out[k]] + " / " + d.journals()[j]);
        }
    } else {
        const int v = d.find_variable(key.id_variable);
        if (v < 0)
            throw std::invalid_argument(std::string("join id variable not found on ") + side +
                                        " side: " + key.id_variable);
        if (!d.variable(v).is_categorical())
            throw std::invalid_argument("join id variable must be categorical (string-valued): " +
                                        key.id_variable);
        for (int j = 0; j < d.n_journals(); ++j) {
            // Use the id from the first year where it is observed.
            std::string k;
            for (int y = 0; y < d.n_years() && k.empty(); ++y)
                if (!d.is_missing(j, y, v)) k = normalize_title(d.level_label(j, y, v));
            if (k.empty()) continue;
            if (!out.emplace(k, j).second)
                collisions.push_back(d.journals()[out[k]] + " / " + d.journals()[j]);
        }
    }
    if (!collisions.empty()) {
        std::ostringstream msg;
        msg << "ambiguous join on " << side << " side; colliding journals:";
        for (const auto& c : collisions) msg << " [" << c << "]";
        throw std::runtime_error(msg.str());
    }
    return out;
}

}  // namespace

PanelDataset merge(const PanelDataset& a, const PanelDataset& b, const MergeKey& key) {
    const auto keys_a = join_keys(a, key, "left");
    const auto keys_b = join_keys(b, key, "right");

    std::vector<std::string> key_of_a(a.n_journals());
    for (const auto& [k, j] : keys_a) key_of_a[j] = k;

    // Journals: a-side order, restricted to matches on both sides.
    std::vector<std::pair<int, int>> matched;  // (a index, b index)
    for (int j = 0; j < a.n_journals(); ++j) {
        if (key_of_a[j].empty()) continue;
        auto it = keys_b.find(key_of_a[j]);
        if (it != keys_b.end()) matched.emplace_back(j, it->second);
    }

    std::vector<int> years;
    std::set<int> year_set(a.years().begin(), a.years().end());
    year_set.insert(b.years().begin(), b.years().end());
    years.assign(year_set.begin(), year_set.end());

    // Union of variables; the b-side copy of an explicit join column is
    // dropped, any other name clash is an error (raised by the constructor).
    const int b_id_var = key.id_variable.empty() ? -1 : b.find_variable(key.id_variable);
    std::vector<VariableMeta> vars = a.variables();
    std::vector<int> b_vars;  // b column -> output column
    for (int v = 0; v < b.n_variables(); ++v) {
        if (v == b_id_var && a.find_variable(key.id_variable) >= 0) {
            b_vars.push_back(-1);
            continue;
        }
        b_vars.push_back(static_cast<int>(vars.size()));
        vars.push_back(b.variables()[v]);
    }

    std::vector<std::string> journals;
    journals.reserve(matched.size());
    for (const auto& [ja, jb] : matched) journals.push_back(a.journals()[ja]);

    PanelDataset out(std::move(journals), std::move(years), std::move(vars));
    for (size_t m = 0; m < matched.size(); ++m) {
        const auto [ja, jb] = matched[m];
        const int jo = static_cast<int>(m);
        for (int yo = 0; yo < out.n_years(); ++yo) {
            const int year = out.years()[yo];
            const int ya = a.year_index(year);
            const int yb = b.year_index(year);
            if (ya >= 0)
                for (int v = 0; v < a.n_variables(); ++v)
                    if (!a.is_missing(ja, ya, v)) {
                        if (a.variable(v).is_categorical()) {
                            int lvl = out.add_level(v, a.level_label(ja, ya, v));
                            out.set(jo, yo, v, lvl);
                        } else {
                            out.set(jo, yo, v, a.value(ja, ya, v));
                        }
                    }
            if (yb >= 0)
                for (int v = 0; v < b.n_variables(); ++v) {
                    const int vo = b_vars[v];
                    if (vo < 0 || b.is_missing(jb, yb, v)) continue;
                    if (b.variable(v).is_categorical()) {
                        int lvl = out.add_level(vo, b.level_label(jb, yb, v));
                        out.set(jo, yo, vo, lvl);
                    } else {
                        out.set(jo, yo, vo, b.value(jb, yb, v));
                    }
                }
        }
    }
    out.set_empty_warning(out.n_journals() == 0);
    return out;
}

PanelDataset keep_complete(const PanelDataset& d, YearRange range) {
    if (range.first > range.last) throw std::invalid_argument("empty year range");
    std::vector<int> year_idx;
    for (int y = range.first; y <= range.last; ++y) {
        int i = d.year_index(y);
        if (i < 0)
            throw std::invalid_argument("year " + std::to_string(y) + " not present in panel");
        year_idx.push_back(i);
    }

    std::vector<int> keep;
    for (int j = 0; j < d.n_journals(); ++j) {
        bool complete = true;
        for (int yi : year_idx) {
            for (int v = 0; v < d.n_variables(); ++v)
                if (d.is_missing(j, yi, v)) { complete = false; break; }
            if (!complete) break;
        }
        if (complete) keep.push_back(j);
    }

    std::vector<std::string> journals;
    for (int j : keep) journals.push_back(d.journals()[j]);
    std::vector<int> years(year_idx.size());
    for (size_t i = 0; i < year_idx.size(); ++i) years[i] = d.years()[year_idx[i]];

    // Levels are re-collected so categorical indices stay dense after filtering.
    std::vector<VariableMeta> vars = d.variables();
    for (auto& v : vars)
        if (v.is_categorical()) v.levels.clear();

    PanelDataset out(std::move(journals), std::move(years), std::move(vars));
    for (size_t jo = 0; jo < keep.size(); ++jo)
        for (size_t yo = 0; yo < year_idx.size(); ++yo)
            for (int v = 0; v < d.n_variables(); ++v) {
                if (d.variable(v).is_categorical()) {
                    int lvl = out.add_level(v, d.level_label(keep[jo], year_idx[yo], v));
                    out.set(static_cast<int>(jo), static_cast<int>(yo), v, lvl);
                } else {
                    out.set(static_cast<int>(jo), static_cast<int>(yo), v,
                            d.value(keep[jo], year_idx[yo], v));
                }
            }
    out.set_empty_warning(out.n_journals() == 0);
    return out;
}

DescriptiveStats describe(const PanelDataset& d) {
    DescriptiveStats stats;
    for (int v = 0; v < d.n_variables(); ++v) {
        if (d.variable(v).kind != VarKind::QualityNumeric) continue;
        std::vector<double> xs;
        for (int j = 0; j < d.n_journals(); ++j)
            for (int y = 0; y < d.n_years(); ++y)
                if (!d.is_missing(j, y, v)) xs.push_back(d.value(j, y, v));
        if (xs.empty())
            throw std::invalid_argument("describe: variable " + d.variable(v).name +
                                        " has no observations");
        std::sort(xs.begin(), xs.end());
        const long n = static_cast<long>(xs.size());
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        const double median =
            (n % 2 == 1) ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
        stats.push_back({d.variable(v).name, mean, median, sd, xs.front(), xs.back(), n});
    }
    return stats;
}

PanelDataset encode_categoricals(const PanelDataset& d,
                                 const std::map<std::string, std::string>& baselines) {
    for (const auto& [name, level] : baselines) {
        const int v = d.find_variable(name);
        if (v < 0) throw std::invalid_argument("baseline for unknown variable: " + name);
        const auto& levels = d.variable(v).levels;
        if (std::find(levels.begin(), levels.end(), level) == levels.end())
            throw std::invalid_argument("baseline level '" + level + "' not present in " + name);
    }

    std::vector<VariableMeta> vars;
    for (int v = 0; v < d.n_variables(); ++v) {
        const VariableMeta& meta = d.variable(v);
        if (!meta.is_categorical()) {
            vars.push_back(meta);
            continue;
        }
        if (meta.levels.size() < 2)
            throw std::invalid_argument("categorical variable " + meta.name +
                                        " has fewer than two levels");
        std::vector<std::string> sorted_levels = meta.levels;
        std::sort(sorted_levels.begin(), sorted_levels.end());
        std::string baseline = sorted_levels.front();
        if (auto it = baselines.find(meta.name); it != baselines.end()) baseline = it->second;

        for (const auto& level : sorted_levels) {
            if (level == baseline) continue;
            VariableMeta ind;
            ind.name = meta.name + level;
            ind.source = meta.source;
            ind.kind = VarKind::QualityNumeric;
            ind.description = meta.name + " == " + level + " indicator (baseline " + baseline + ")";
            vars.push_back(std::move(ind));
        }
    }

    PanelDataset out(d.journals(), d.years(), std::move(vars));
    // Copy numeric columns, fill indicators.
    int out_v = 0;
    for (int v = 0; v < d.n_variables(); ++v) {
        const VariableMeta& meta = d.variable(v);
        if (!meta.is_categorical()) {
            for (int j = 0; j < d.n_journals(); ++j)
                for (int y = 0; y < d.n_years(); ++y)
                    if (!d.is_missing(j, y, v)) out.set(j, y, out_v, d.value(j, y, v));
            ++out_v;
            continue;
        }
        std::vector<std::string> sorted_levels = meta.levels;
        std::sort(sorted_levels.begin(), sorted_levels.end());
        std::string baseline = sorted_levels.front();
        if (auto it = baselines.find(meta.name); it != baselines.end()) baseline = it->second;
        for (const auto& level : sorted_levels) {
            if (level == baseline) continue;
            for (int j = 0; j < d.n_journals(); ++j)
                for (int y = 0; y < d.n_years(); ++y) {
                    if (d.is_missing(j, y, v)) continue;
                    out.set(j, y, out_v, d.level_label(j, y, v) == level ? 1.0 : 0.0);
                }
            ++out_v;
        }
    }
    out.set_empty_warning(d.empty_warning());
    return out;
}

double impact_factor(double citations_to_prev2, double articles_prev2) {
    if (citations_to_prev2 < 0.0 || articles_prev2 < 0.0)
        throw std::invalid_argument("impact_factor: counts must be non-negative");
    if (articles_prev2 == 0.0)
        throw std::invalid_argument("impact_factor undefined: no articles in the window");
    return citations_to_prev2 / articles_prev2;
}

bool semantically_equal(const PanelDataset& a, const PanelDataset& b) {
    if (a.n_journals() != b.n_journals() || a.n_years() != b.n_years() ||
        a.n_variables() != b.n_variables())
        return false;
    if (a.journals() != b.journals() || a.years() != b.years()) return false;
    for (int v = 0; v < a.n_variables(); ++v) {
        if (a.variable(v).name != b.variable(v).name) return false;
        if (a.variable(v).is_categorical() != b.variable(v).is_categorical()) return false;
    }
    for (int j = 0; j < a.n_journals(); ++j)
        for (int y = 0; y < a.n_years(); ++y)
            for (int v = 0; v < a.n_variables(); ++v) {
                if (a.is_missing(j, y, v) != b.is_missing(j, y, v)) return false;
                if (a.is_missing(j, y, v)) continue;
                if (a.variable(v).is_categorical()) {
                    if (a.level_label(j, y, v) != b.level_label(j, y, v)) return false;
                } else if (a.value(j, y, v) != b.value(j, y, v)) {
                    return false;
                }
            }
    return true;
}

}  // namespace jindex
