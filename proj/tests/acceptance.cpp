// Acceptance suite: every criterion prints one PASS/FAIL line and the binary
// exits nonzero if any run criterion fails. Run a single criterion with
// --only N (ctest registers them individually).

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jindex/correlate.hpp"
#include "jindex/csv.hpp"
#include "jindex/dataset.hpp"
#include "jindex/forest.hpp"
#include "jindex/infer.hpp"
#include "jindex/lasso.hpp"
#include "jindex/panel.hpp"
#include "jindex/prob.hpp"
#include "jindex/rng.hpp"
#include "jindex/synth.hpp"

using namespace jindex;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            detail = what;
        }
    }
};

std::string source_dir() {
    const char* env = std::getenv("JINDEX_SOURCE_DIR");
    return env ? env : "..";
}

MatrixXd gaussian_matrix(int n, int p, uint64_t seed) {
    rng::Stream s(rng::key(seed, 0xa11ce));
    MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = s.normal();
    return X;
}

VectorXd gaussian_vector(int n, uint64_t seed) {
    rng::Stream s(rng::key(seed, 0xb0b));
    VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = s.normal();
    return y;
}

MatrixXd orthonormal_design(int n, int p, uint64_t seed) {
    MatrixXd A = gaussian_matrix(n, p, seed);
    A.rowwise() -= A.colwise().mean();
    Eigen::HouseholderQR<MatrixXd> qr(A);
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, p);
    return std::sqrt(static_cast<double>(n)) * Q;
}

// ---- criterion 1: orthonormal soft-threshold oracle ------------------------

Check criterion_1() {
    Check c;
    const int n = 64, p = 8;
    for (int inst = 0; inst < 20; ++inst) {
        MatrixXd X = orthonormal_design(n, p, 1000 + inst);
        VectorXd y = 2.0 * gaussian_vector(n, 2000 + inst);
        lasso::LassoProblem prob(X, y);
        const VectorXd yc = y.array() - y.mean();
        const VectorXd beta_ols = X.transpose() * yc / static_cast<double>(n);
        const double lmax = lasso::lambda_max(prob);
        for (double frac : {0.9, 0.6, 0.35, 0.15, 0.05}) {
            const double lambda = frac * lmax;
            const auto sol = lasso::solve(prob, lambda, 1e-13);
            for (int j = 0; j < p; ++j) {
                const double b = beta_ols[j];
                const double want = std::copysign(std::max(std::fabs(b) - lambda, 0.0), b);
                c.require(std::fabs(sol.slopes[j] - want) <= 1e-10,
                          "instance " + std::to_string(inst) + " column " + std::to_string(j) +
                              " off by " + std::to_string(std::fabs(sol.slopes[j] - want)));
            }
        }
    }
    return c;
}

// ---- criterion 2: OLS boundary and the all-zero boundary --------------------

Check criterion_2() {
    Check c;
    for (int inst = 0; inst < 10; ++inst) {
        MatrixXd X = gaussian_matrix(30, 5, 3000 + inst);
        VectorXd beta(5);
        beta << 1.0, -2.0, 0.5, 0.0, 3.0;
        VectorXd y = X * beta + 0.1 * gaussian_vector(30, 4000 + inst);
        lasso::LassoProblem prob(X, y);

        MatrixXd Z(30, 6);
        Z.col(0).setOnes();
        Z.rightCols(5) = X;
        const VectorXd full = (Z.transpose() * Z).ldlt().solve(Z.transpose() * y);
        const auto at0 = lasso::solve(prob, 0.0, 1e-13, 500000);
        for (int j = 0; j < 5; ++j)
            c.require(std::fabs(at0.slopes[j] - full[j + 1]) <= 1e-8,
                      "lambda=0 coefficient " + std::to_string(j) + " disagrees with the normal equations");
        c.require(std::fabs(at0.intercept - full[0]) <= 1e-8, "lambda=0 intercept disagrees");

        const double lmax = lasso::lambda_max(prob);
        for (double mult : {1.0, 1.7}) {
            const auto sol = lasso::solve(prob, mult * lmax, 1e-12);
            for (int j = 0; j < 5; ++j)
                c.require(sol.slopes[j] == 0.0, "slope not exactly zero at lambda >= lambda_max");
        }
    }
    return c;
}

// ---- criterion 3: variable-selection recovery -------------------------------

Check criterion_3() {
    Check c;
    int exact = 0, first = 0;
    for (int s = 0; s < 100; ++s) {
        rng::Stream g(rng::key(31000 + s, 1));
        MatrixXd X(200, 10);
        VectorXd e(200);
        for (int i = 0; i < 200; ++i) {
            for (int j = 0; j < 10; ++j) X(i, j) = g.normal();
            e[i] = g.normal();
        }
        VectorXd y = 3.0 * X.col(0) + 0.5 * e;
        lasso::LassoProblem p(X, y);
        const auto cv = lasso::cross_validate(p, 5, 60, 1e-3, 31000 + s);
        const auto sol = lasso::solve(p, cv.lambda_sparse, 1e-9);
        bool only_true = sol.slopes[0] != 0.0;
        for (int j = 1; j < 10; ++j) only_true = only_true && sol.slopes[j] == 0.0;
        if (only_true) ++exact;

        const auto path = lasso::path(p, 60, 1e-3);
        const auto order = lasso::first_k_variables(path, 1);
        if (!order.columns.empty() && order.columns[0] == 0) ++first;
    }
    c.require(exact >= 90, "lambda_sparse recovered exactly the true variable in only " +
                               std::to_string(exact) + "/100 seeds");
    c.require(first >= 95, "true variable entered first in only " + std::to_string(first) +
                               "/100 seeds");
    c.detail = c.ok ? "exact " + std::to_string(exact) + "/100, first " + std::to_string(first) +
                          "/100"
                    : c.detail;
    return c;
}

// ---- criterion 4: forest importance discrimination + thread determinism -----

Check criterion_4() {
    Check c;
    int good = 0;
    for (int s = 0; s < 50; ++s) {
        rng::Stream g(rng::key(52000 + s, 2));
        MatrixXd X(500, 10);
        VectorXd e(500);
        for (int i = 0; i < 500; ++i) {
            for (int j = 0; j < 10; ++j) X(i, j) = g.normal();
            e[i] = g.normal();
        }
        VectorXd y = 2.0 * X.col(0) + 0.2 * e;
        forest::ForestParams params;
        params.n_trees = 200;
        params.tree.mtry = 10;
        params.n_threads = 2;
        const auto f = forest::fit_forest(X, y, params, 52000 + s);
        const auto t = forest::importance(f, X, y, 52000 + s);
        bool ok = t.mse_reduction[0] == 100.0 && t.purity_gain[0] == 100.0;
        for (int v = 1; v < 10; ++v)
            ok = ok && t.mse_reduction[v] < 5.0 && t.purity_gain[v] < 5.0;
        if (ok) ++good;
    }
    c.require(good >= 48, "importance discriminated in only " + std::to_string(good) + "/50 seeds");

    // bitwise reproducibility across thread counts
    MatrixXd X = gaussian_matrix(400, 8, 61);
    VectorXd y = 1.5 * X.col(3) + 0.3 * gaussian_vector(400, 62);
    forest::ForestParams params;
    params.n_trees = 64;
    std::string reference;
    for (int threads : {1, 4, 8}) {
        params.n_threads = threads;
        const auto f = forest::fit_forest(X, y, params, 99);
        const std::string json = f.to_json_string();
        if (reference.empty())
            reference = json;
        else
            c.require(json == reference,
                      "forest differs between 1 and " + std::to_string(threads) + " threads");
    }
    if (c.ok) c.detail = "discrimination " + std::to_string(good) + "/50, 1/4/8-thread bitwise equal";
    return c;
}

// ---- criterion 5: tree impurity accounting ----------------------------------

Check criterion_5() {
    Check c;
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        MatrixXd X = gaussian_matrix(300, 6, 7000 + seed);
        VectorXd y = X.col(1) - 2.0 * X.col(4) + 0.4 * gaussian_vector(300, 7100 + seed);
        forest::ForestParams params;
        params.n_trees = 40;
        const auto f = forest::fit_forest(X, y, params, seed);
        const auto table = forest::importance(f, X, y, seed);

        VectorXd rewalked = VectorXd::Zero(6);
        for (const auto& tree : f.trees) {
            VectorXd gains = VectorXd::Zero(6);
            for (const auto& nd : tree.nodes) {
                if (nd.is_leaf()) continue;
                const double decrease =
                    nd.impurity - tree.nodes[nd.left].impurity - tree.nodes[nd.right].impurity;
                c.require(decrease >= 0.0, "negative split impurity decrease");
                gains[nd.var] += decrease;
            }
            rewalked += gains;
        }
        for (int v = 0; v < 6; ++v)
            c.require(table.purity_gain_raw[v] == rewalked[v],
                      "purity gain differs from the re-walked total for variable " +
                          std::to_string(v));
    }
    return c;
}

// ---- criterion 6: published-matrix clustering -------------------------------

Check criterion_6() {
    Check c;
    const auto [names, values] =
        load_matrix_csv(source_dir() + "/data/if_scopus_correlations.csv");
    const correlate::CorrelationMatrix m{names, values};
    const auto partition = correlate::cluster(m, 0.85);

    const std::vector<std::vector<std::string>> expected = {
        {"JournalImpactFactor", "CitesDocs2years", "CitesDoc3Years"},
        {"NonCitableDocs"},
        {"ExternalCites3Years", "TotalCites3years"},
        {"CitedDocs", "TotalDocs", "TotalDocs3Years", "TotalRefs", "CitableDocs3years"},
        {"InternationalCollaboration"},
        {"RefDoc"}};
    c.require(partition.groups.size() == expected.size(),
              "expected 6 clusters, got " + std::to_string(partition.groups.size()));
    if (c.ok)
        for (size_t g = 0; g < expected.size(); ++g) {
            std::vector<std::string> got;
            for (int v : partition.groups[g].members) got.push_back(names[v]);
            c.require(got == expected[g], "cluster " + std::to_string(g) + " differs");
        }
    return c;
}

// ---- criterion 7: fixed-effects equivalences --------------------------------

Check criterion_7() {
    Check c;
    for (uint64_t seed : {11ull, 12ull, 13ull, 14ull, 15ull}) {
        synth::DgpSpec spec;
        spec.n_journals = 20;
        spec.n_years = 6;
        spec.slopes = {{"x1", 2.0}, {"x2", -1.0}};
        spec.journal_effect_sd = 1.5;
        spec.effect_regressor_corr = 0.4;
        spec.noise_sd = 1.0;
        spec.seed = seed;
        const auto data = synth::generate_panel_data(spec);

        // LSDV oracle
        const int n = static_cast<int>(data.y.size());
        MatrixXd Z = MatrixXd::Zero(n, 2 + 20);
        Z.leftCols(2) = data.X;
        for (int r = 0; r < n; ++r) Z(r, 2 + data.group[r]) = 1.0;
        const VectorXd beta = Z.colPivHouseholderQr().solve(data.y);

        const auto fe = panel::fit(data, {"y", {"x1", "x2"}, panel::Effects::Fixed, false});
        c.require(std::fabs(fe.coefficient("x1")->estimate - beta[0]) <= 1e-8 &&
                      std::fabs(fe.coefficient("x2")->estimate - beta[1]) <= 1e-8,
                  "within slopes differ from LSDV beyond 1e-8");

        // demeaned means
        const auto dm = panel::within_transform(data);
        std::set<int> ids(dm.group.begin(), dm.group.end());
        for (int id : ids) {
            double ysum = 0.0;
            VectorXd xsum = VectorXd::Zero(2);
            int count = 0;
            for (int r = 0; r < n; ++r)
                if (dm.group[r] == id) {
                    ysum += dm.y[r];
                    xsum += dm.X.row(r).transpose();
                    ++count;
                }
            c.require(std::fabs(ysum / count) <= 1e-10, "demeaned response mean above 1e-10");
            for (int k = 0; k < 2; ++k)
                c.require(std::fabs(xsum[k] / count) <= 1e-10,
                          "demeaned regressor mean above 1e-10");
        }

        // per-journal constant shifts
        auto shifted = data;
        for (int r = 0; r < n; ++r) shifted.y[r] += 4.0 - 0.5 * shifted.group[r];
        const auto fe2 = panel::fit(shifted, {"y", {"x1", "x2"}, panel::Effects::Fixed, false});
        c.require(std::fabs(fe2.coefficient("x1")->estimate - fe.coefficient("x1")->estimate) <=
                          1e-8 &&
                      std::fabs(fe2.coefficient("x2")->estimate -
                                fe.coefficient("x2")->estimate) <= 1e-8,
                  "per-journal shifts moved a slope beyond 1e-8");
    }
    return c;
}

// ---- criterion 8: F / Hausman calibration ------------------------------------

Check criterion_8() {
    Check c;
    auto rates = [&](double effect_sd, double corr) {
        int f_rej = 0, h_rej = 0;
        for (int s = 0; s < 200; ++s) {
            synth::DgpSpec spec;
            spec.n_journals = 200;
            spec.n_years = 6;
            spec.slopes = {{"x1", 2.0}};
            spec.journal_effect_sd = effect_sd;
            spec.effect_regressor_corr = corr;
            spec.noise_sd = 1.0;
            spec.seed = 777000 + static_cast<uint64_t>(s);
            const auto data = synth::generate_panel_data(spec);
            const auto po = panel::fit(data, {"y", {"x1"}, panel::Effects::Pooled, false});
            const auto fe = panel::fit(data, {"y", {"x1"}, panel::Effects::Fixed, false});
            const auto re = panel::fit(data, {"y", {"x1"}, panel::Effects::Random, false});
            if (panel::f_test_fixed_effects(po, fe).p_value < 0.05) ++f_rej;
            if (panel::hausman(fe, re).p_value < 0.05) ++h_rej;
        }
        return std::pair<double, double>{f_rej / 2.0, h_rej / 2.0};  // percent
    };

    const auto [f_null, h_spurious] = rates(0.0, 0.0);   // no effects at all: F null
    const auto [f_power0, h_null] = rates(1.0, 0.0);     // effects independent of x: Hausman null
    const auto [f_power, h_power] = rates(1.0, 0.6);     // correlated effects: both alternatives

    c.require(f_null >= 2.0 && f_null <= 8.0,
              "F-test null rejection " + std::to_string(f_null) + "% outside 5% +/- 3");
    c.require(h_null >= 2.0 && h_null <= 8.0,
              "Hausman null rejection " + std::to_string(h_null) + "% outside 5% +/- 3");
    c.require(f_power >= 90.0, "F-test power " + std::to_string(f_power) + "% below 90%");
    c.require(h_power >= 90.0, "Hausman power " + std::to_string(h_power) + "% below 90%");
    if (c.ok) {
        std::ostringstream os;
        os << "F null " << f_null << "%, Hausman null " << h_null << "%, power " << f_power
           << "%/" << h_power << "%";
        c.detail = os.str();
    }
    return c;
}

// ---- criterion 9: GLS identity and efficiency --------------------------------

Check criterion_9() {
    Check c;
    // identity covariance reproduces OLS
    synth::DgpSpec spec;
    spec.n_journals = 30;
    spec.n_years = 5;
    spec.slopes = {{"x1", 2.0}};
    spec.journal_effect_sd = 1.0;
    spec.effect_regressor_corr = 0.3;
    spec.noise_sd = 1.0;
    spec.seed = 29;
    const auto data = synth::generate_panel_data(spec);
    const MatrixXd eye = MatrixXd::Identity(5, 5);
    for (auto effects : {panel::Effects::Pooled, panel::Effects::Fixed}) {
        const auto ols = panel::fit(data, {"y", {"x1"}, effects, false});
        const auto gls = panel::fgls_with_omega(data, {"y", {"x1"}, effects, true}, eye);
        c.require(std::fabs(gls.coefficient("x1")->estimate - ols.coefficient("x1")->estimate) <=
                      1e-10,
                  "identity-omega GLS differs from OLS beyond 1e-10");
    }

    // efficiency under AR(1) errors
    std::vector<double> ols_est, gls_est;
    for (int s = 0; s < 200; ++s) {
        synth::DgpSpec ar;
        ar.n_journals = 60;
        ar.n_years = 6;
        ar.slopes = {{"x1", 1.0}};
        ar.journal_effect_sd = 0.0;
        ar.noise_sd = 1.0;
        ar.errors = synth::ErrorStructure::Ar1;
        ar.ar1_rho = 0.7;
        ar.seed = 9000 + static_cast<uint64_t>(s);
        const auto d = synth::generate_panel_data(ar);
        ols_est.push_back(
            panel::fit(d, {"y", {"x1"}, panel::Effects::Pooled, false}).coefficient("x1")->estimate);
        gls_est.push_back(
            panel::fgls(d, {"y", {"x1"}, panel::Effects::Pooled, true}).coefficient("x1")->estimate);
    }
    auto variance = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return ss / static_cast<double>(v.size() - 1);
    };
    const double vo = variance(ols_est);
    const double vg = variance(gls_est);
    c.require(vg <= vo, "FGLS sampling variance " + std::to_string(vg) + " exceeds OLS " +
                            std::to_string(vo));
    if (c.ok) {
        std::ostringstream os;
        os << "var(FGLS)/var(OLS) = " << vg / vo;
        c.detail = os.str();
    }
    return c;
}

// ---- criterion 10: embedded-model fidelity ------------------------------------

Check criterion_10() {
    Check c;
    for (const auto& id : infer::builtin_model_ids()) {
        std::ifstream in(source_dir() + "/data/models/" + id + ".txt");
        c.require(in.good(), "missing transcription fixture for " + id);
        if (!in.good()) continue;
        std::vector<std::string> expected;
        std::string line;
        while (std::getline(in, line)) {
            std::string t(line);
            while (!t.empty() && (t.back() == '\r' || t.back() == '\n')) t.pop_back();
            if (t.empty() || t.front() == '#') continue;
            expected.push_back(t);
        }
        std::istringstream embedded(infer::model_to_text(infer::builtin_model(id)));
        std::vector<std::string> got;
        while (std::getline(embedded, line)) got.push_back(line);
        c.require(got == expected, "embedded model " + id + " differs from its fixture");
    }

    infer::Row row;
    row.labels["SJRBestQuartile"] = "Q1";
    for (const char* v : {"Rank", "SJR", "CitesDoc2years", "InternationalCollaboration",
                          "TotalCites3years", "RefDoc"})
        row.numeric[v] = 0.0;
    row.numeric["CitesDoc2years"] = 1.6;
    const auto entry = infer::estimate(infer::builtin_model("table8_if_reduced"), row);
    c.require(entry.estimate == 1.26192,
              "estimate(CitesDoc2years=1.6) != 1.26192 exactly (got " +
                  std::to_string(entry.estimate) + ")");
    return c;
}

// ---- criterion 11: end-to-end self-consistency through the CLI ----------------

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const char* bin = std::getenv("JINDEX_BIN");
    if (!bin) return {-1, "JINDEX_BIN not set"};
    const std::string cmd = std::string(bin) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, "popen failed"};
    std::string output;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
    return {WEXITSTATUS(pclose(pipe)), output};
}

Check criterion_11() {
    Check c;
    // synthetic panel drawn from the reduced-IF coefficient vector
    synth::DgpSpec spec;
    spec.n_journals = 300;
    spec.n_years = 6;
    spec.response = "IF";
    for (const auto& term : infer::builtin_model("table8_if_reduced").terms)
        spec.slopes.emplace_back(term.variable, term.coefficient);
    spec.journal_effect_sd = 0.0;
    spec.noise_sd = 0.1;
    spec.seed = 4242;
    const auto result = synth::generate(spec);
    write_panel_csv(result.panel, "acc11_panel.csv");

    std::string regressors;
    for (const auto& [name, _] : spec.slopes) regressors += (regressors.empty() ? "" : ",") + name;

    const auto fit = run_cli("fit --panel acc11_panel.csv --response IF --regressors " +
                             regressors + " --effects fixed --out acc11_fit.json");
    c.require(fit.exit_code == 0, "fit subcommand failed");
    const auto est = run_cli(
        "estimate --model fit:acc11_fit.json --input acc11_panel.csv --input-schema panel");
    c.require(est.exit_code == 0, "estimate subcommand failed");

    if (c.ok) {
        const auto report = nlohmann::json::parse(est.output);
        double mae = 0.0;
        long count = 0;
        for (const auto& e : report.at("entries")) {
            const std::string journal = e.at("journal").get<std::string>();
            const int year = e.at("year").get<int>();
            const int j = result.panel.journal_index(journal);
            const int y = result.panel.year_index(year);
            const int v = result.panel.variable_index("IF");
            mae += std::fabs(e.at("estimate").get<double>() - result.panel.value(j, y, v));
            ++count;
        }
        mae /= static_cast<double>(count);
        c.require(count == 300 * 6, "estimate report incomplete");
        c.require(mae <= 0.15, "mean absolute estimation error " + std::to_string(mae) +
                                   " above 0.15");
        if (c.ok) {
            std::ostringstream os;
            os << "MAE " << mae << " over " << count << " rows";
            c.detail = os.str();
        }
    }
    std::remove("acc11_panel.csv");
    std::remove("acc11_fit.json");
    std::remove("acc11_fit.json.manifest.json");
    return c;
}

// ---- criterion 12: ingestion round-trip and the small merge/filter contracts --

Check criterion_12() {
    Check c;
    {
        std::ofstream f("acc12_scimago.csv", std::ios::binary);
        f << "Title;Year;SJR;H index;Total Docs.;SJR Best Quartile\n"
             "\"Revista; Latinoamericana\";2013;1,29;30;125;Q1\n"
             "\"Revista; Latinoamericana\";2014;1,31;31;130;Q1\n"
             "Acta Alpha;2013;0,868;45;80;Q2\n"
             "Acta Alpha;2014;;46;82;Q2\n";
    }
    const auto d1 = load_csv("acc12_scimago.csv", CsvSchema::Scopus);
    c.require(d1.value(0, 0, d1.variable_index("SJR")) == 1.29, "1,29 did not parse to 1.29");

    const std::string w1 = panel_csv_string(d1);
    std::istringstream in1(w1);
    const auto d2 = read_panel_csv(in1);
    const std::string w2 = panel_csv_string(d2);
    c.require(w1 == w2, "canonical round trip is not byte-stable");

    // keep_complete drops the journal with the missing 2014 value
    const auto kept = keep_complete(d1, {2013, 2014});
    c.require(kept.n_journals() == 1 && kept.journals()[0] == "Revista; Latinoamericana",
              "keep_complete did not retain exactly the complete journal");
    const auto again = keep_complete(kept, {2013, 2014});
    c.require(semantically_equal(again, kept), "keep_complete is not idempotent");

    // merge per the membership and normalization contracts
    PanelDataset a({"X", "Y"}, {2013},
                   {{"SJR", VarSource::Scopus, VarKind::QualityNumeric, "", {}}});
    a.set(0, 0, 0, 1.0);
    a.set(1, 0, 0, 2.0);
    PanelDataset b({"Y", "Z"}, {2013},
                   {{"IF", VarSource::Wos, VarKind::QualityNumeric, "", {}}});
    b.set(0, 0, 0, 3.0);
    b.set(1, 0, 0, 4.0);
    const auto m = merge(a, b);
    c.require(m.n_journals() == 1 && m.journals()[0] == "Y", "merge intersection differs");
    c.require(m.n_variables() == 2, "merge variable union differs");

    PanelDataset t1({"  The Journal "}, {2013},
                    {{"u", VarSource::Scopus, VarKind::QualityNumeric, "", {}}});
    t1.set(0, 0, 0, 1.0);
    PanelDataset t2({"the journal"}, {2013},
                    {{"v", VarSource::Wos, VarKind::QualityNumeric, "", {}}});
    t2.set(0, 0, 0, 2.0);
    c.require(merge(t1, t2).n_journals() == 1, "normalized titles did not match");

    std::remove("acc12_scimago.csv");
    return c;
}

struct Criterion {
    int id;
    const char* name;
    double time_limit;  // seconds; 0 = unenforced
    std::function<Check()> run;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--only" && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }

    const std::vector<Criterion> criteria = {
        {1, "lasso orthonormal soft-threshold oracle", 5.0, criterion_1},
        {2, "lasso OLS boundary and all-zero boundary", 5.0, criterion_2},
        {3, "variable-selection recovery", 120.0, criterion_3},
        {4, "forest importance discrimination + thread determinism", 180.0, criterion_4},
        {5, "tree impurity accounting", 0.0, criterion_5},
        {6, "published-matrix correlation clustering", 1.0, criterion_6},
        {7, "fixed-effects equivalences", 0.0, criterion_7},
        {8, "F and Hausman calibration", 300.0, criterion_8},
        {9, "GLS identity and AR(1) efficiency", 0.0, criterion_9},
        {10, "embedded-model fidelity", 0.0, criterion_10},
        {11, "end-to-end self-consistency", 60.0, criterion_11},
        {12, "ingestion round-trip and merge/filter contracts", 0.0, criterion_12},
    };

    bool all_ok = true;
    for (const auto& criterion : criteria) {
        if (only != 0 && criterion.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Check check;
        try {
            check = criterion.run();
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.time_limit > 0.0 && elapsed > criterion.time_limit) {
            check.ok = false;
            check.detail += (check.detail.empty() ? "" : "; ") + std::string("over time limit");
        }

        std::printf("%s  %2d  %-55s (%.2fs", check.ok ? "PASS" : "FAIL", criterion.id,
                    criterion.name, elapsed);
        if (criterion.time_limit > 0.0) std::printf(" < %.0fs", criterion.time_limit);
        std::printf(")%s%s\n", check.detail.empty() ? "" : "  -- ", check.detail.c_str());
        all_ok = all_ok && check.ok;
    }
    return all_ok ? 0 : 1;
}
