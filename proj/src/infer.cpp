#include "jindex/infer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "jindex/util.hpp"

namespace jindex::infer {

namespace {

constexpr const char* kFixedEffectNote =
    "journal fixed effects are not published; estimates assume alpha_i = 0 "
    "(levels are uncertain, cross-journal comparisons are unaffected)";

// Published GLS journal-panel coefficients, transcribed once. Standard
// errors are absolute values; '-' marks an unstarred term.
constexpr const char* kTable5 = R"(# coefficient model table5_sjr_full v1 (n=21063, R2=0.9791)
table5_sjr_full SJR JournalImpactFactor 0.4158 0.0246 ***
table5_sjr_full SJR EigenfactorScore 20.0722 2.4869 ***
table5_sjr_full SJR ImpactFactorWithoutJournalSelfCites -0.3042 0.0247 ***
table5_sjr_full SJR 5YearImpactFactor -0.0245 0.008 ***
table5_sjr_full SJR ImmediacyIndex -0.0043 0.007 -
table5_sjr_full SJR CitableItems 0.00008 0.00002 ***
table5_sjr_full SJR ArticleInfluenceScore 1.3082 0.0016 ***
table5_sjr_full SJR AverageJournalImpactFactorPercentile 0.0012 0.0003 ***
table5_sjr_full SJR NormalizedEigenfactor -0.1326 0.0248 ***
)";

constexpr const char* kTable6 = R"(# coefficient model table6_if_full v1 (n=21063, R2=0.986)
table6_if_full IF Rank 0.00002 0.00002 -
table6_if_full IF SJR 0.1977 0.0082 *
table6_if_full IF TotalDocs 0.0002 0.00006 ***
table6_if_full IF TotalDocs3years 0.0011 0.0001 ***
table6_if_full IF TotalRefs -0.000004 0.000001 **
table6_if_full IF TotalCites3years 0.00006 0 ***
table6_if_full IF CitableDocs3years -0.0005 0.0001 ***
table6_if_full IF CitesDoc2years 0.8183 0.018 ***
table6_if_full IF RefDoc 0.00005 0.00018 -
table6_if_full IF CitesDoc4Years -0.0608 0.007 ***
table6_if_full IF SelfCites3Years -0.0001 0.00002 **
table6_if_full IF UncitedDocs3Years 0.00084 0.0001 ***
table6_if_full IF InternationalCollaboration 0.0002 0.0004 -
table6_if_full IF CitesDoc3Years 0.035 0.007 ***
table6_if_full IF SJRBESTQuartileQ2 0.011 0.009 -
table6_if_full IF SJRBESTQuartileQ3 0.017 0.017 -
table6_if_full IF SJRBESTQuartileQ4 0.015 0.0323 -
)";

constexpr const char* kTable7 = R"(# coefficient model table7_sjr_reduced v1 (n=21063, R2=0.9771)
table7_sjr_reduced SJR JournalImpactFactor 0.4312 0.0042 ***
table7_sjr_reduced SJR EigenfactorScore 8.3814 0.4973 ***
table7_sjr_reduced SJR ImmediacyIndex -0.0038 0.007 -
table7_sjr_reduced SJR CitableItems 0.00019 0.00003 ***
table7_sjr_reduced SJR ArticleInfluenceScore 0.9741 0.0013 ***
)";

constexpr const char* kTable8 = R"(# coefficient model table8_if_reduced v1 (n=21063, R2=0.986)
table8_if_reduced IF Rank 0.00002 0.00002 -
table8_if_reduced IF SJR 0.0014 0.0072 -
table8_if_reduced IF CitesDoc2years 0.7887 0.0041 ***
table8_if_reduced IF InternationalCollaboration 0.00387 0.00032 ***
table8_if_reduced IF TotalCites3years 0.000009 0.000004 **
table8_if_reduced IF RefDoc -0.00005 0.0004 -
table8_if_reduced IF SJRBESTQuartileQ2 0.0009 0.009 -
table8_if_reduced IF SJRBESTQuartileQ3 0.015 0.018 -
table8_if_reduced IF SJRBESTQuartileQ4 0.021 0.0325 -
)";

double parse_strict(const std::string& text, const char* what) {
    double out;
    const char* b = text.data();
    const char* e = text.data() + text.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc{} || p != e)
        throw std::invalid_argument(std::string("model text: bad ") + what + " '" + text + "'");
    return out;
}

std::map<std::string, CoefficientModel> build_registry() {
    std::map<std::string, CoefficientModel> reg;
    for (const char* text : {kTable5, kTable6, kTable7, kTable8}) {
        CoefficientModel m = parse_model_text(text);
        m.fixed_effect_note = kFixedEffectNote;
        m.provenance = "embedded:" + m.model_id;
        reg.emplace(m.model_id, std::move(m));
    }
    return reg;
}

const std::map<std::string, CoefficientModel>& registry() {
    static const std::map<std::string, CoefficientModel> reg = build_registry();
    return reg;
}

bool is_intercept(const std::string& name) {
    return name == "(Intercept)" || util::iequals(name, "_intercept");
}

// year2014-style terms resolve against the row's year.
bool year_term(const std::string& name, int& year_out) {
    if (name.size() < 5 || name.compare(0, 4, "year") != 0) return false;
    const char* b = name.data() + 4;
    const char* e = name.data() + name.size();
    auto [p, ec] = std::from_chars(b, e, year_out);
    return ec == std::errc{} && p == e;
}

struct Resolved {
    double value = 0.0;
    bool found = false;
};

Resolved resolve(const std::string& variable, const Row& row) {
    if (is_intercept(variable)) return {1.0, true};
    int year;
    if (year_term(variable, year)) return {row.year == year ? 1.0 : 0.0, true};
    const std::string key = util::match_key(variable);
    for (const auto& [name, value] : row.numeric)
        if (util::match_key(name) == key) return {value, true};
    // Categorical expansion: a label (K, v) supplies every indicator K<level>.
    for (const auto& [name, level] : row.labels) {
        const std::string base = util::match_key(name);
        if (key.size() > base.size() && key.compare(0, base.size(), base) == 0)
            return {key == base + util::match_key(level) ? 1.0 : 0.0, true};
    }
    return {};
}

}  // namespace

const std::vector<std::string>& builtin_model_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        for (const auto& [id, _] : registry()) v.push_back(id);
        return v;
    }();
    return ids;
}

const CoefficientModel& builtin_model(const std::string& model_id) {
    const auto& reg = registry();
    auto it = reg.find(model_id);
    if (it == reg.end()) {
        std::string known;
        for (const auto& id : builtin_model_ids()) known += " " + id;
        throw std::invalid_argument("unknown model '" + model_id + "'; built-ins:" + known);
    }
    return it->second;
}

CoefficientModel parse_model_text(const std::string& text) {
    CoefficientModel m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto trimmed = util::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        std::istringstream fields{std::string(trimmed)};
        std::string model_id, target, variable, coef, se, stars;
        if (!(fields >> model_id >> target >> variable >> coef >> se >> stars))
            throw std::invalid_argument("model text: malformed line '" + std::string(trimmed) +
                                        "'");
        std::string extra;
        if (fields >> extra)
            throw std::invalid_argument("model text: trailing tokens on line '" +
                                        std::string(trimmed) + "'");
        if (m.model_id.empty()) {
            m.model_id = model_id;
            m.target = target;
        } else if (m.model_id != model_id || m.target != target) {
            throw std::invalid_argument("model text: mixed model ids in one file");
        }
        ModelTerm t;
        t.variable = variable;
        t.coefficient_text = coef;
        t.coefficient = parse_strict(coef, "coefficient");
        t.std_error_text = se;
        t.std_error = parse_strict(se, "standard error");
        if (t.std_error < 0.0)
            throw std::invalid_argument("model text: negative standard error for " + variable);
        t.stars = stars == "-" ? "" : stars;
        if (!t.stars.empty() && t.stars != "*" && t.stars != "**" && t.stars != "***")
            throw std::invalid_argument("model text: bad stars token '" + stars + "'");
        m.terms.push_back(std::move(t));
    }
    if (m.terms.empty()) throw std::invalid_argument("model text: no terms");
    return m;
}

std::string model_to_text(const CoefficientModel& model) {
    std::ostringstream os;
    for (const auto& t : model.terms) {
        const std::string coef =
            t.coefficient_text.empty() ? util::format_double(t.coefficient) : t.coefficient_text;
        const std::string se =
            t.std_error_text.empty() ? util::format_double(t.std_error) : t.std_error_text;
        os << model.model_id << ' ' << model.target << ' ' << t.variable << ' ' << coef << ' '
           << se << ' ' << (t.stars.empty() ? "-" : t.stars) << '\n';
    }
    return os.str();
}

bool EstimationEntry::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

EstimationEntry estimate(const CoefficientModel& model, const Row& row,
                         const EstimateOptions& options) {
    EstimationEntry entry;
    entry.journal = row.journal;
    entry.year = row.year;

    for (const auto& term : model.terms) {
        if (options.significant_only && term.stars.empty()) continue;
        TermContribution tc;
        tc.variable = term.variable;
        tc.coefficient = term.coefficient;
        tc.stars = term.stars;
        const Resolved r = resolve(term.variable, row);
        if (r.found) {
            tc.value = r.value;
            tc.contribution = term.coefficient * r.value;
        } else {
            tc.missing = true;
            entry.missing_variables.push_back(term.variable);
        }
        entry.contributions.push_back(std::move(tc));
    }

    if (!entry.missing_variables.empty() && !options.allow_partial) {
        std::string gaps;
        for (const auto& v : entry.missing_variables) gaps += " " + v;
        throw std::invalid_argument("estimate: missing input variables:" + gaps);
    }

    double sum = 0.0;
    for (const auto& tc : entry.contributions) sum += tc.contribution;
    entry.estimate = sum;

    if (!entry.missing_variables.empty()) entry.flags.push_back("partial_inputs");
    if (!model.fixed_effect_note.empty()) entry.flags.push_back("fixed_effect_assumed_zero");
    if (entry.estimate < 0.0) entry.flags.push_back("negative_estimate");
    return entry;
}

EstimationReport estimate_batch(const CoefficientModel& model, const PanelDataset& d,
                                const EstimateOptions& options) {
    // Schema check first: every term must be resolvable against some column.
    std::vector<std::string> unresolvable;
    for (const auto& term : model.terms) {
        if (options.significant_only && term.stars.empty()) continue;
        if (is_intercept(term.variable)) continue;
        int y;
        if (year_term(term.variable, y)) continue;
        if (d.find_variable(term.variable) >= 0) continue;
        bool expandable = false;
        const std::string key = util::match_key(term.variable);
        for (const auto& meta : d.variables()) {
            const std::string base = util::match_key(meta.name);
            if (meta.is_categorical() && key.size() > base.size() &&
                key.compare(0, base.size(), base) == 0) {
                expandable = true;
                break;
            }
        }
        if (!expandable) unresolvable.push_back(term.variable);
    }
    if (!unresolvable.empty() && !options.allow_partial) {
        std::string gaps;
        for (const auto& v : unresolvable) gaps += " " + v;
        throw std::invalid_argument("estimate_batch: dataset schema lacks variables:" + gaps);
    }

    EstimateOptions row_options = options;
    row_options.allow_partial = true;  // per-row gaps flag entries, they do not fail the batch

    EstimationReport report;
    report.model_id = model.model_id;
    report.target = model.target;
    double sum = 0.0;
    for (int j = 0; j < d.n_journals(); ++j) {
        for (int y = 0; y < d.n_years(); ++y) {
            if (!d.has_observation(j, y)) continue;
            Row row;
            row.journal = d.journals()[j];
            row.year = d.years()[y];
            for (int v = 0; v < d.n_variables(); ++v) {
                if (d.is_missing(j, y, v)) continue;
                const auto& meta = d.variable(v);
                if (meta.is_categorical())
                    row.labels[meta.name] = d.level_label(j, y, v);
                else
                    row.numeric[meta.name] = d.value(j, y, v);
            }
            EstimationEntry entry = estimate(model, row, row_options);
            sum += entry.estimate;
            for (const auto& f : entry.flags) ++report.flag_counts[f];
            report.entries.push_back(std::move(entry));
        }
    }
    report.count = static_cast<long>(report.entries.size());
    report.mean_estimate = report.count > 0 ? sum / static_cast<double>(report.count) : 0.0;
    return report;
}

CoefficientModel model_from_fit(const panel::PanelFit& fit) {
    CoefficientModel m;
    m.model_id = "fit_" + util::lower(fit.spec.response) + "_" + to_string(fit.spec.effects) +
                 (fit.spec.gls ? "_gls" : "");
    m.target = fit.spec.response;
    m.provenance = "fit:" + fit.estimator;
    for (const auto& c : fit.coefficients) {
        ModelTerm t;
        t.variable = c.name;
        t.coefficient = c.estimate;
        t.std_error = c.std_error;
        t.stars = c.stars;
        m.terms.push_back(std::move(t));
    }
    if (fit.spec.effects == panel::Effects::Fixed ||
        fit.spec.effects == panel::Effects::FixedTime)
        m.fixed_effect_note =
            "journal fixed effects from the source fit are omitted; estimates assume alpha_i = 0";
    return m;
}

std::string report_to_json_string(const EstimationReport& report) {
    nlohmann::json j;
    j["model_id"] = report.model_id;
    j["target"] = report.target;
    j["count"] = report.count;
    j["mean_estimate"] = report.mean_estimate;
    j["flag_counts"] = report.flag_counts;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : report.entries) {
        nlohmann::json je;
        je["journal"] = e.journal;
        je["year"] = e.year;
        je["estimate"] = e.estimate;
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& tc : e.contributions)
            terms.push_back({{"variable", tc.variable},
                             {"value", tc.value},
                             {"coefficient", tc.coefficient},
                             {"contribution", tc.contribution},
                             {"stars", tc.stars},
                             {"missing", tc.missing}});
        je["contributions"] = std::move(terms);
        je["missing_variables"] = e.missing_variables;
        je["flags"] = e.flags;
        entries.push_back(std::move(je));
    }
    j["entries"] = std::move(entries);
    return j.dump(2);
}

std::string report_to_csv_string(const EstimationReport& report) {
    std::ostringstream os;
    os << "journal,year,estimate,missing_variables,flags\n";
    auto joined = [](const std::vector<std::string>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + v[i];
        return s;
    };
    for (const auto& e : report.entries) {
        std::string journal = e.journal;
        if (journal.find(',') != std::string::npos || journal.find('"') != std::string::npos) {
            std::string quoted = "\"";
            for (char c : journal) {
                if (c == '"') quoted += '"';
                quoted += c;
            }
            journal = quoted + "\"";
        }
        os << journal << ',' << e.year << ',' << util::format_double(e.estimate) << ','
           << joined(e.missing_variables) << ',' << joined(e.flags) << '\n';
    }
    return os.str();
}

}  // namespace jindex::infer
