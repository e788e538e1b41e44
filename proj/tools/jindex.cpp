// jindex: cross-database journal-index toolkit.
//
// Pipeline: ingest SCOPUS/WOS exports into a clean journal-year panel, select
// predictive variables (lasso paths, random-forest importances), prune
// correlation clusters, fit panel regressions with diagnostics, and estimate
// the index one database lacks from the variables of the other.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "jindex/correlate.hpp"
#include "jindex/csv.hpp"
#include "jindex/dataset.hpp"
#include "jindex/forest.hpp"
#include "jindex/infer.hpp"
#include "jindex/lasso.hpp"
#include "jindex/panel.hpp"
#include "jindex/synth.hpp"
#include "jindex/util.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::json;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Collected run state: primary output path, named outputs, config echo,
// input checksums. Outputs are buffered and written together so a failed run
// leaves a .failed marker instead of partial results.
struct Run {
    std::string subcommand;
    std::string out_path;  // empty -> primary report to stdout, no manifest
    std::map<std::string, std::string> config;
    std::map<std::string, std::string> input_checksums;
    std::vector<std::pair<std::string, std::string>> outputs;  // path -> content
    std::string stdout_text;

    void note_input(const std::string& path, const std::string& content) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                      static_cast<unsigned long long>(jindex::util::fnv1a64(content)));
        input_checksums[path] = buf;
    }
    std::string read_input(const std::string& path) {
        std::string content = slurp(path);
        note_input(path, content);
        return content;
    }
    void add_output(const std::string& path, std::string content) {
        outputs.emplace_back(path, std::move(content));
    }
    /// Sibling path with a different extension, e.g. report.json -> report.csv.
    static std::string with_extension(const std::string& path, const std::string& ext) {
        std::filesystem::path p(path);
        p.replace_extension(ext);
        return p.string();
    }

    void finish() {
        if (out_path.empty()) {
            std::cout << stdout_text;
            return;
        }
        for (const auto& [path, content] : outputs) {
            std::ofstream out(path, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + path);
            out << content;
        }
        json manifest;
        manifest["tool"] = "jindex";
        manifest["version"] = kVersion;
        manifest["subcommand"] = subcommand;
        manifest["config"] = config;
        manifest["inputs"] = input_checksums;
        json outs = json::array();
        for (const auto& [path, _] : outputs) outs.push_back(path);
        manifest["outputs"] = std::move(outs);
        std::ofstream mf(out_path + ".manifest.json", std::ios::binary);
        if (!mf) throw std::runtime_error("cannot write manifest for " + out_path);
        mf << manifest.dump(2) << '\n';
        if (!stdout_text.empty()) std::cout << stdout_text;
    }
    void mark_failed(const std::string& message) const {
        if (out_path.empty()) return;
        std::ofstream f(out_path + ".failed", std::ios::binary);
        f << message << '\n';
    }
};

jindex::PanelDataset load_panel_input(Run& run, const std::string& path) {
    const std::string content = run.read_input(path);
    std::istringstream in(content);
    return jindex::read_panel_csv(in, path);
}

struct YearRangeOption {
    std::optional<jindex::YearRange> range;
};

jindex::YearRange parse_year_range(const std::string& s) {
    const auto parts = jindex::util::split(s, ':');
    if (parts.size() != 2)
        throw CLI::ValidationError("--years", "expected A:B, got '" + s + "'");
    try {
        return {std::stoi(parts[0]), std::stoi(parts[1])};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--years", "expected integer years in '" + s + "'");
    }
}

// Feature selection for lasso/forest: encode categoricals, then take every
// numeric variable from the requested source(s) except the response.
struct FeatureMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> names;
};

FeatureMatrix build_features(const jindex::PanelDataset& raw, const std::string& target,
                             const std::string& features) {
    const std::string response = jindex::util::iequals(target, "sjr") ? "SJR"
                                 : jindex::util::iequals(target, "if")
                                     ? "JournalImpactFactor"
                                     : target;
    const jindex::PanelDataset d = jindex::encode_categoricals(raw);
    const int rv = d.find_variable(response);
    if (rv < 0) throw std::runtime_error("target variable not in panel: " + response);

    std::vector<std::string> names;
    for (const auto& meta : d.variables()) {
        if (jindex::util::iequals(meta.name, d.variable(rv).name)) continue;
        const bool want = features == "all" ||
                          ((features == "scopus" || features == "both") &&
                           meta.source == jindex::VarSource::Scopus) ||
                          ((features == "wos" || features == "both") &&
                           meta.source == jindex::VarSource::Wos);
        if (want && !meta.is_categorical()) names.push_back(meta.name);
    }
    if (names.empty()) throw std::runtime_error("no feature variables match --features " + features);

    std::vector<std::string> all{d.variable(rv).name};
    all.insert(all.end(), names.begin(), names.end());
    auto pooled = d.pooled(all);
    if (pooled.values.rows() == 0) throw std::runtime_error("no complete rows for the feature set");

    FeatureMatrix fm;
    fm.y = pooled.values.col(0);
    fm.X = pooled.values.rightCols(pooled.values.cols() - 1);
    fm.names = names;
    return fm;
}

json lasso_point_json(const jindex::lasso::PathPoint& pt) {
    return {{"lambda", pt.lambda},
            {"active_count", pt.active_count},
            {"train_mse", pt.train_mse},
            {"frac_var_explained", pt.frac_var_explained}};
}

void attach_diagnostics(jindex::panel::PanelFit& fit, const jindex::panel::PanelData& data) {
    using namespace jindex::panel;
    try {
        PanelSpec pooled_spec = fit.spec;
        pooled_spec.effects = Effects::Pooled;
        pooled_spec.gls = false;
        const PanelFit pooled =
            fit.spec.effects == Effects::Pooled && !fit.spec.gls ? fit : jindex::panel::fit(data, pooled_spec);
        fit.lm_test = lm_test_random_effects(pooled);
        if (fit.spec.effects == Effects::Fixed && !fit.spec.gls) {
            fit.f_fixed_effects = f_test_fixed_effects(pooled, fit);
            PanelSpec respec = fit.spec;
            respec.effects = Effects::Random;
            fit.hausman_test = hausman(fit, jindex::panel::fit(data, respec));
        } else if (fit.spec.effects == Effects::Random) {
            PanelSpec fespec = fit.spec;
            fespec.effects = Effects::Fixed;
            const PanelFit fe = jindex::panel::fit(data, fespec);
            fit.f_fixed_effects = f_test_fixed_effects(pooled, fe);
            fit.hausman_test = hausman(fe, fit);
        }
    } catch (const std::exception& e) {
        std::cerr << "warning: diagnostics unavailable: " << e.what() << '\n';
    }
}

int run_ingest(Run& run, const std::string& scopus, const std::string& wos,
               const std::string& years, const std::string& join_id,
               const std::vector<std::string>& categorical, char sc_delim, char sc_decimal,
               char wos_delim, char wos_decimal, bool encode) {
    std::optional<jindex::PanelDataset> panel;
    jindex::CsvOptions sc_opts{sc_delim, sc_decimal, categorical};
    jindex::CsvOptions wos_opts{wos_delim, wos_decimal, categorical};
    if (!scopus.empty()) {
        run.note_input(scopus, slurp(scopus));
        panel = jindex::load_csv(scopus, jindex::CsvSchema::Scopus, sc_opts);
    }
    if (!wos.empty()) {
        run.note_input(wos, slurp(wos));
        auto w = jindex::load_csv(wos, jindex::CsvSchema::Wos, wos_opts);
        panel = panel ? jindex::merge(*panel, w, {join_id}) : std::move(w);
    }
    if (!panel) throw std::runtime_error("ingest needs --scopus and/or --wos");
    if (!years.empty()) panel = jindex::keep_complete(*panel, parse_year_range(years));
    if (panel->empty_warning()) std::cerr << "warning: resulting panel is empty\n";
    if (encode) panel = jindex::encode_categoricals(*panel);
    run.add_output(run.out_path, jindex::panel_csv_string(*panel));
    std::cerr << "panel: " << panel->n_journals() << " journals x " << panel->n_years()
              << " years x " << panel->n_variables() << " variables\n";
    return 0;
}

int run_describe(Run& run, const std::string& panel_path) {
    const auto d = load_panel_input(run, panel_path);
    const auto stats = jindex::describe(d);
    json j;
    j["n_journals"] = d.n_journals();
    j["n_years"] = d.n_years();
    json vars = json::array();
    for (const auto& row : stats)
        vars.push_back({{"variable", row.variable},
                        {"mean", row.mean},
                        {"median", row.median},
                        {"sd", row.sd},
                        {"min", row.min},
                        {"max", row.max},
                        {"n", row.n}});
    j["variables"] = std::move(vars);
    const std::string text = j.dump(2) + "\n";
    if (run.out_path.empty())
        run.stdout_text = text;
    else
        run.add_output(run.out_path, text);
    return 0;
}

int run_lasso(Run& run, const std::string& panel_path, const std::string& target,
              const std::string& features, int folds, uint64_t seed, int num_lambdas,
              double lambda_ratio, double tol, int max_sweeps, int first_k, int threads) {
    const auto d = load_panel_input(run, panel_path);
    FeatureMatrix fm = build_features(d, target, features);
    jindex::lasso::LassoProblem problem(fm.X, fm.y, fm.names);
    for (int j : problem.dropped_columns())
        std::cerr << "warning: dropping constant column " << fm.names[j] << '\n';

    const auto path = jindex::lasso::path(problem, num_lambdas, lambda_ratio, tol, max_sweeps);
    const auto cv = jindex::lasso::cross_validate(problem, folds, num_lambdas, lambda_ratio, seed,
                                                  nullptr, tol, max_sweeps, threads);
    const auto order = jindex::lasso::first_k_variables(path, first_k);

    json j;
    j["target"] = target;
    j["features"] = features;
    j["n_rows"] = problem.n_rows();
    j["n_columns"] = problem.n_columns();
    j["lambda_min"] = cv.lambda_min;
    j["lambda_sparse"] = cv.lambda_sparse;
    json grid = json::array();
    for (size_t i = 0; i < path.points.size(); ++i) {
        json pt = lasso_point_json(path.points[i]);
        pt["cv_mse"] = cv.cv_mse[i];
        pt["cv_se"] = cv.cv_se[i];
        grid.push_back(std::move(pt));
    }
    j["path"] = std::move(grid);
    json act = json::array();
    for (int c : order.columns) act.push_back(fm.names[c]);
    j["activation_order"] = std::move(act);
    j["activation_order_truncated"] = order.truncated;
    json sparse_active = json::array();
    const auto sparse_fit = jindex::lasso::solve(problem, cv.lambda_sparse, tol, max_sweeps);
    for (int c = 0; c < problem.n_columns(); ++c)
        if (sparse_fit.slopes[c] != 0.0)
            sparse_active.push_back(
                {{"variable", fm.names[c]}, {"coefficient", sparse_fit.slopes[c]}});
    j["selected_at_lambda_sparse"] = std::move(sparse_active);

    std::ostringstream csv;
    csv << "lambda,active_count,train_mse,cv_mse,cv_se,frac_var_explained\n";
    for (size_t i = 0; i < path.points.size(); ++i) {
        const auto& pt = path.points[i];
        csv << jindex::util::format_double(pt.lambda) << ',' << pt.active_count << ','
            << jindex::util::format_double(pt.train_mse) << ','
            << jindex::util::format_double(cv.cv_mse[i]) << ','
            << jindex::util::format_double(cv.cv_se[i]) << ','
            << jindex::util::format_double(pt.frac_var_explained) << '\n';
    }

    const std::string text = j.dump(2) + "\n";
    if (run.out_path.empty()) {
        run.stdout_text = text;
    } else {
        run.add_output(run.out_path, text);
        run.add_output(Run::with_extension(run.out_path, ".csv"), csv.str());
    }
    return 0;
}

int run_forest(Run& run, const std::string& panel_path, const std::string& target,
               const std::string& features, int trees, uint64_t seed, double threshold, int mtry,
               int min_split, int max_depth, int threads, const std::string& save_forest) {
    const auto d = load_panel_input(run, panel_path);
    FeatureMatrix fm = build_features(d, target, features);

    jindex::forest::ForestParams params;
    params.n_trees = trees;
    params.tree.mtry = mtry;
    params.tree.min_samples_split = min_split;
    params.tree.max_depth = max_depth;
    params.n_threads = threads;
    const auto forest = jindex::forest::fit_forest(fm.X, fm.y, params, seed);
    const auto table = jindex::forest::importance(forest, fm.X, fm.y, seed, fm.names);
    const auto selected = jindex::forest::select_relevant(table, threshold);

    json j;
    j["target"] = target;
    j["features"] = features;
    j["n_trees"] = trees;
    j["oob_mse"] = forest.oob_mse;
    j["n_never_oob"] = forest.n_never_oob;
    j["threshold"] = threshold;
    json imp = json::array();
    for (size_t v = 0; v < fm.names.size(); ++v)
        imp.push_back({{"variable", fm.names[v]},
                       {"mse_reduction", table.mse_reduction[static_cast<Eigen::Index>(v)]},
                       {"purity_gain", table.purity_gain[static_cast<Eigen::Index>(v)]}});
    j["importance"] = std::move(imp);
    json sel = json::array();
    for (int v : selected) sel.push_back(fm.names[v]);
    j["selected"] = std::move(sel);

    std::ostringstream csv;
    csv << "variable,mse_reduction,purity_gain\n";
    for (size_t v = 0; v < fm.names.size(); ++v)
        csv << fm.names[v] << ','
            << jindex::util::format_double(table.mse_reduction[static_cast<Eigen::Index>(v)])
            << ','
            << jindex::util::format_double(table.purity_gain[static_cast<Eigen::Index>(v)])
            << '\n';

    const std::string text = j.dump(2) + "\n";
    if (run.out_path.empty()) {
        run.stdout_text = text;
    } else {
        run.add_output(run.out_path, text);
        run.add_output(Run::with_extension(run.out_path, ".csv"), csv.str());
        if (!save_forest.empty()) run.add_output(save_forest, forest.to_json_string());
    }
    return 0;
}

int run_corr(Run& run, const std::string& panel_path, const std::string& matrix_path,
             const std::vector<std::string>& vars, double threshold,
             const std::vector<std::string>& representatives) {
    jindex::correlate::CorrelationMatrix m;
    std::optional<jindex::PanelDataset> d;
    if (!matrix_path.empty()) {
        const std::string content = run.read_input(matrix_path);
        std::istringstream in(content);
        auto [names, values] = jindex::read_matrix_csv(in);
        m = {std::move(names), std::move(values)};
    } else {
        d = load_panel_input(run, panel_path);
        std::vector<std::string> use = vars;
        if (use.empty())
            for (const auto& meta : d->variables())
                if (!meta.is_categorical()) use.push_back(meta.name);
        m = jindex::correlate::correlation_matrix(*d, use);
    }

    auto partition = jindex::correlate::cluster(m, threshold);
    for (const auto& want : representatives) {
        bool found = false;
        for (auto& g : partition.groups)
            for (int member : g.members)
                if (jindex::util::iequals(m.names[member], want)) {
                    g.representative = member;
                    found = true;
                }
        if (!found) throw std::runtime_error("representative override not in matrix: " + want);
    }

    json j;
    j["threshold"] = threshold;
    json groups = json::array();
    for (const auto& g : partition.groups) {
        json members = json::array();
        for (int v : g.members) members.push_back(m.names[v]);
        groups.push_back(
            {{"members", std::move(members)}, {"representative", m.names[g.representative]}});
    }
    j["clusters"] = std::move(groups);
    if (d) {
        json vifs = json::array();
        for (const auto& e : jindex::correlate::vif(*d, vars.empty() ? m.names : vars)) {
            json entry{{"variable", e.name}, {"infinite", e.infinite}};
            if (e.infinite)
                entry["vif"] = nullptr;
            else
                entry["vif"] = e.vif;
            vifs.push_back(std::move(entry));
        }
        j["vif"] = std::move(vifs);
    }

    std::ostringstream matrix_csv;
    jindex::write_matrix_csv(m.names, m.values, matrix_csv);

    const std::string text = j.dump(2) + "\n";
    if (run.out_path.empty()) {
        run.stdout_text = text;
    } else {
        run.add_output(run.out_path, text);
        run.add_output(Run::with_extension(run.out_path, ".csv"), matrix_csv.str());
    }
    return 0;
}

int run_fit(Run& run, const std::string& panel_path, const std::string& spec_path,
            const std::string& response, const std::vector<std::string>& regressors,
            const std::string& effects, bool gls) {
    const auto d = load_panel_input(run, panel_path);
    jindex::panel::PanelSpec spec;
    if (!spec_path.empty()) {
        const auto j = json::parse(run.read_input(spec_path));
        spec.response = j.value("response", "");
        if (j.contains("regressors"))
            spec.regressors = j["regressors"].get<std::vector<std::string>>();
        if (j.contains("effects"))
            spec.effects = jindex::panel::effects_from_string(j["effects"].get<std::string>());
        spec.gls = j.value("gls", false);
    }
    if (!response.empty()) spec.response = response;
    if (!regressors.empty()) spec.regressors = regressors;
    if (!effects.empty()) spec.effects = jindex::panel::effects_from_string(effects);
    if (gls) spec.gls = true;
    if (spec.response.empty() || spec.regressors.empty())
        throw std::runtime_error("fit needs a response and regressors (--spec or flags)");
    if (spec.gls && spec.effects == jindex::panel::Effects::Random)
        throw CLI::ValidationError("--gls", "GLS cannot be combined with --effects random");

    const auto data = jindex::panel::make_panel_data(d, spec.response, spec.regressors);
    auto fit = spec.gls ? jindex::panel::fgls(data, spec) : jindex::panel::fit(data, spec);
    attach_diagnostics(fit, data);

    run.stdout_text = jindex::panel::format_table(fit);
    if (!run.out_path.empty())
        run.add_output(run.out_path, jindex::panel::fit_to_json_string(fit) + "\n");
    return 0;
}

int run_estimate(Run& run, const std::string& model_arg, const std::string& input_path,
                 const std::string& input_schema, bool allow_partial, bool significant_only) {
    jindex::infer::CoefficientModel model;
    if (model_arg.rfind("fit:", 0) == 0) {
        const std::string path = model_arg.substr(4);
        model = jindex::infer::model_from_fit(
            jindex::panel::fit_from_json_string(run.read_input(path)));
    } else if (model_arg.rfind("file:", 0) == 0) {
        const std::string path = model_arg.substr(5);
        model = jindex::infer::parse_model_text(run.read_input(path));
    } else {
        model = jindex::infer::builtin_model(model_arg);
    }

    jindex::PanelDataset d;
    if (input_schema == "panel") {
        d = load_panel_input(run, input_path);
    } else {
        run.note_input(input_path, slurp(input_path));
        const auto schema =
            input_schema == "wos" ? jindex::CsvSchema::Wos : jindex::CsvSchema::Scopus;
        d = jindex::load_csv(input_path, schema, {});
    }

    jindex::infer::EstimateOptions options;
    options.allow_partial = allow_partial;
    options.significant_only = significant_only;
    const auto report = jindex::infer::estimate_batch(model, d, options);

    const std::string text = jindex::infer::report_to_json_string(report) + "\n";
    if (run.out_path.empty()) {
        run.stdout_text = text;
    } else {
        run.add_output(run.out_path, text);
        run.add_output(Run::with_extension(run.out_path, ".csv"),
                       jindex::infer::report_to_csv_string(report));
    }
    return 0;
}

int run_synth(Run& run, const std::string& spec_path, uint64_t seed, bool seed_given) {
    auto spec = jindex::synth::spec_from_json_string(run.read_input(spec_path));
    if (seed_given) spec.seed = seed;
    const auto result = jindex::synth::generate(spec);
    run.add_output(run.out_path, jindex::panel_csv_string(result.panel));
    run.add_output(run.out_path + ".truth.json",
                   jindex::synth::truth_to_json_string(result.truth) + "\n");
    return 0;
}

// JSON config file: an object of flag name -> value, applied before the
// command-line flags so explicit flags win.
std::vector<std::string> config_args(const std::string& path) {
    const auto j = json::parse(slurp(path));
    if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
    std::vector<std::string> args;
    for (const auto& [key, value] : j.items()) {
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + key);
            continue;
        }
        std::string text;
        if (value.is_string())
            text = value.get<std::string>();
        else if (value.is_array()) {
            for (const auto& item : value) {
                if (!text.empty()) text += ",";
                text += item.is_string() ? item.get<std::string>() : item.dump();
            }
        } else
            text = value.dump();
        args.push_back("--" + key + "=" + text);
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jindex - infer journal impact indexes across databases"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Run run;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Merge SCOPUS/WOS CSVs into a canonical panel");
    std::string in_scopus, in_wos, in_years, in_join;
    std::vector<std::string> in_categorical;
    std::string sc_delim = ";", sc_decimal = ",", wos_delim = ",", wos_decimal = ".";
    bool in_encode = false;
    ingest->add_option("--scopus", in_scopus, "SCOPUS-shaped CSV");
    ingest->add_option("--wos", in_wos, "WOS-shaped CSV");
    ingest->add_option("--years", in_years, "Keep journals complete over A:B");
    ingest->add_option("--join-id", in_join, "Join on this id column instead of titles");
    ingest->add_option("--categorical", in_categorical, "Extra categorical columns")
        ->delimiter(',');
    ingest->add_option("--scopus-delimiter", sc_delim, "Field delimiter (default ';')");
    ingest->add_option("--scopus-decimal", sc_decimal, "Decimal mark (default ',')");
    ingest->add_option("--wos-delimiter", wos_delim, "Field delimiter (default ',')");
    ingest->add_option("--wos-decimal", wos_decimal, "Decimal mark (default '.')");
    ingest->add_flag("--encode", in_encode, "Expand categoricals to indicators");
    ingest->add_option("--out", run.out_path, "Output panel CSV")->required();

    // describe
    auto* describe = app.add_subcommand("describe", "Descriptive statistics of a panel");
    std::string de_panel;
    describe->add_option("--panel", de_panel, "Canonical panel CSV")->required();
    describe->add_option("--out", run.out_path, "Output JSON (default stdout)");

    // lasso
    auto* lasso = app.add_subcommand("lasso", "Regularization path and cross-validated lambda");
    std::string la_panel, la_target = "if", la_features = "scopus";
    int la_folds = 5, la_lambdas = 100, la_sweeps = 1000000, la_first_k = 10, la_threads = 1;
    double la_ratio = 1e-3, la_tol = 1e-7;
    uint64_t la_seed = 0;
    lasso->add_option("--panel", la_panel, "Canonical panel CSV")->required();
    lasso->add_option("--target", la_target, "sjr | if | <variable>");
    lasso->add_option("--features", la_features, "scopus | wos | both | all")
        ->check(CLI::IsMember({"scopus", "wos", "both", "all"}));
    lasso->add_option("--folds", la_folds, "CV folds (default 5)");
    lasso->add_option("--seed", la_seed, "Fold-assignment seed")->envname("JINDEX_SEED");
    lasso->add_option("--num-lambdas", la_lambdas, "Grid size (default 100)");
    lasso->add_option("--lambda-ratio", la_ratio, "Grid span (default 1e-3)");
    lasso->add_option("--tol", la_tol, "Convergence tolerance (default 1e-7)");
    lasso->add_option("--max-sweeps", la_sweeps, "Sweep cap");
    lasso->add_option("--first-k", la_first_k, "Activation-order length (default 10)");
    lasso->add_option("--threads", la_threads, "CV fold workers");
    lasso->add_option("--out", run.out_path, "Output JSON (a .csv sibling holds plot data)");

    // forest
    auto* forest = app.add_subcommand("forest", "Random-forest variable importances");
    std::string fo_panel, fo_target = "if", fo_features = "scopus", fo_save;
    int fo_trees = 300, fo_mtry = 0, fo_min_split = 5, fo_depth = 0, fo_threads = 1;
    double fo_threshold = 5.0;
    uint64_t fo_seed = 0;
    forest->add_option("--panel", fo_panel, "Canonical panel CSV")->required();
    forest->add_option("--target", fo_target, "sjr | if | <variable>");
    forest->add_option("--features", fo_features, "scopus | wos | both | all")
        ->check(CLI::IsMember({"scopus", "wos", "both", "all"}));
    forest->add_option("--trees", fo_trees, "Number of trees (default 300)");
    forest->add_option("--seed", fo_seed, "Master seed")->envname("JINDEX_SEED");
    forest->add_option("--threshold", fo_threshold, "Selection threshold on both axes (default 5)");
    forest->add_option("--mtry", fo_mtry, "Variables per split (default ceil(p/3))");
    forest->add_option("--min-samples-split", fo_min_split, "Minimum node size to split");
    forest->add_option("--max-depth", fo_depth, "Depth cap (0 = unlimited)");
    forest->add_option("--threads", fo_threads, "Tree workers");
    forest->add_option("--save-forest", fo_save, "Also save the trained forest (JSON)");
    forest->add_option("--out", run.out_path, "Output JSON (a .csv sibling holds plot data)");

    // corr
    auto* corr = app.add_subcommand("corr", "Correlation matrix, clusters, VIF");
    std::string co_panel, co_matrix;
    std::vector<std::string> co_vars, co_reps;
    double co_threshold = 0.85;
    corr->add_option("--panel", co_panel, "Canonical panel CSV");
    corr->add_option("--matrix", co_matrix, "Precomputed square correlation CSV");
    corr->add_option("--vars", co_vars, "Variables (default: all numeric)")->delimiter(',');
    corr->add_option("--threshold", co_threshold, "Cluster edge threshold (default 0.85)");
    corr->add_option("--representative", co_reps, "Force cluster representatives")
        ->delimiter(',');
    corr->add_option("--out", run.out_path, "Output JSON (a .csv sibling holds the matrix)");

    // fit
    auto* fit = app.add_subcommand("fit", "Panel regression with diagnostics");
    std::string fi_panel, fi_spec, fi_response, fi_effects;
    std::vector<std::string> fi_regressors;
    bool fi_gls = false;
    fit->add_option("--panel", fi_panel, "Canonical panel CSV")->required();
    fit->add_option("--spec", fi_spec, "JSON spec {response, regressors, effects, gls}");
    fit->add_option("--response", fi_response, "Response variable");
    fit->add_option("--regressors", fi_regressors, "Regressor list")->delimiter(',');
    fit->add_option("--effects", fi_effects, "pooled | fixed | fixed_time | random")
        ->check(CLI::IsMember({"pooled", "fixed", "fixed_time", "random"}));
    fit->add_flag("--gls", fi_gls, "Two-step feasible GLS");
    fit->add_option("--out", run.out_path, "Fit JSON output");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "Apply a coefficient model to journal rows");
    std::string es_model = "table8_if_reduced", es_input, es_schema = "scopus";
    bool es_partial = false, es_significant = false;
    estimate->add_option("--model", es_model,
                         "Built-in id, fit:PATH (fit JSON), or file:PATH (model text)");
    estimate->add_option("--input", es_input, "Input CSV")->required();
    estimate->add_option("--input-schema", es_schema, "scopus | wos | panel")
        ->check(CLI::IsMember({"scopus", "wos", "panel"}));
    estimate->add_flag("--allow-partial", es_partial, "Missing inputs contribute 0, flagged");
    estimate->add_flag("--significant-only", es_significant, "Drop unstarred terms");
    estimate->add_option("--out", run.out_path, "Report JSON (a .csv sibling holds estimates)");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic panel from a DGP spec");
    std::string sy_spec;
    uint64_t sy_seed = 0;
    synth->add_option("--spec", sy_spec, "DGP spec JSON")->required();
    auto* sy_seed_opt = synth->add_option("--seed", sy_seed, "Override the spec seed")
                            ->envname("JINDEX_SEED");
    synth->add_option("--out", run.out_path, "Output panel CSV (+ .truth.json sidecar)")
        ->required();

    // JSON config support: inject config-file values before the user's flags.
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    for (auto* sub : app.get_subcommands({}))
        sub->add_option("--config", config_path, "JSON config file (flags win)");
    if (!config_path.empty() && !args.empty()) {
        try {
            const auto extra = config_args(config_path);
            args.insert(args.begin() + 1, extra.begin(), extra.end());
            for (auto* sub : app.get_subcommands({}))
                for (auto* opt : sub->get_options())
                    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }

    try {
        std::vector<const char*> cargs{argv[0]};
        for (const auto& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    auto char_of = [](const std::string& s, const char* flag) {
        if (s.size() != 1) throw std::runtime_error(std::string(flag) + " expects one character");
        return s[0];
    };

    try {
        int rc = 1;
        if (app.got_subcommand(ingest)) {
            run.subcommand = "ingest";
            run.config = {{"scopus", in_scopus}, {"wos", in_wos},         {"years", in_years},
                          {"join_id", in_join},  {"encode", in_encode ? "true" : "false"},
                          {"out", run.out_path}};
            rc = run_ingest(run, in_scopus, in_wos, in_years, in_join, in_categorical,
                            char_of(sc_delim, "--scopus-delimiter"),
                            char_of(sc_decimal, "--scopus-decimal"),
                            char_of(wos_delim, "--wos-delimiter"),
                            char_of(wos_decimal, "--wos-decimal"), in_encode);
        } else if (app.got_subcommand(describe)) {
            run.subcommand = "describe";
            run.config = {{"panel", de_panel}, {"out", run.out_path}};
            rc = run_describe(run, de_panel);
        } else if (app.got_subcommand(lasso)) {
            run.subcommand = "lasso";
            run.config = {{"panel", la_panel},
                          {"target", la_target},
                          {"features", la_features},
                          {"folds", std::to_string(la_folds)},
                          {"seed", std::to_string(la_seed)},
                          {"num_lambdas", std::to_string(la_lambdas)},
                          {"lambda_ratio", jindex::util::format_double(la_ratio)},
                          {"tol", jindex::util::format_double(la_tol)},
                          {"first_k", std::to_string(la_first_k)},
                          {"out", run.out_path}};
            rc = run_lasso(run, la_panel, la_target, la_features, la_folds, la_seed, la_lambdas,
                           la_ratio, la_tol, la_sweeps, la_first_k, la_threads);
        } else if (app.got_subcommand(forest)) {
            run.subcommand = "forest";
            run.config = {{"panel", fo_panel},
                          {"target", fo_target},
                          {"features", fo_features},
                          {"trees", std::to_string(fo_trees)},
                          {"seed", std::to_string(fo_seed)},
                          {"threshold", jindex::util::format_double(fo_threshold)},
                          {"mtry", std::to_string(fo_mtry)},
                          {"min_samples_split", std::to_string(fo_min_split)},
                          {"max_depth", std::to_string(fo_depth)},
                          {"out", run.out_path}};
            rc = run_forest(run, fo_panel, fo_target, fo_features, fo_trees, fo_seed, fo_threshold,
                            fo_mtry, fo_min_split, fo_depth, fo_threads, fo_save);
        } else if (app.got_subcommand(corr)) {
            run.subcommand = "corr";
            std::string vars;
            for (const auto& v : co_vars) vars += (vars.empty() ? "" : ",") + v;
            run.config = {{"panel", co_panel},
                          {"matrix", co_matrix},
                          {"vars", vars},
                          {"threshold", jindex::util::format_double(co_threshold)},
                          {"out", run.out_path}};
            rc = run_corr(run, co_panel, co_matrix, co_vars, co_threshold, co_reps);
        } else if (app.got_subcommand(fit)) {
            run.subcommand = "fit";
            std::string regs;
            for (const auto& r : fi_regressors) regs += (regs.empty() ? "" : ",") + r;
            run.config = {{"panel", fi_panel},   {"spec", fi_spec},
                          {"response", fi_response}, {"regressors", regs},
                          {"effects", fi_effects},   {"gls", fi_gls ? "true" : "false"},
                          {"out", run.out_path}};
            rc = run_fit(run, fi_panel, fi_spec, fi_response, fi_regressors, fi_effects, fi_gls);
        } else if (app.got_subcommand(estimate)) {
            run.subcommand = "estimate";
            run.config = {{"model", es_model},
                          {"input", es_input},
                          {"input_schema", es_schema},
                          {"allow_partial", es_partial ? "true" : "false"},
                          {"significant_only", es_significant ? "true" : "false"},
                          {"out", run.out_path}};
            rc = run_estimate(run, es_model, es_input, es_schema, es_partial, es_significant);
        } else if (app.got_subcommand(synth)) {
            run.subcommand = "synth";
            run.config = {{"spec", sy_spec},
                          {"seed", sy_seed_opt->count() ? std::to_string(sy_seed) : "from-spec"},
                          {"out", run.out_path}};
            rc = run_synth(run, sy_spec, sy_seed, sy_seed_opt->count() > 0);
        }
        if (rc == 0) run.finish();
        return rc;
    } catch (const std::exception& e) {
        run.mark_failed(e.what());
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
