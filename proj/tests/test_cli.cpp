#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

std::string binary() {
    const char* env = std::getenv("JINDEX_BIN");
    REQUIRE_MESSAGE(env != nullptr, "JINDEX_BIN must point at the jindex binary");
    return env;
}

struct CommandResult {
    int exit_code;
    std::string output;  // stdout only
};

CommandResult run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool exists(const std::string& path) { return std::ifstream(path).good(); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("--help exits zero on every subcommand") {
    CHECK(run("--help").exit_code == 0);
    for (const char* sub :
         {"ingest", "describe", "lasso", "forest", "corr", "fit", "estimate", "synth"}) {
        const auto r = run(std::string(sub) + " --help");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("Usage") != std::string::npos);
    }
}

TEST_CASE("unknown flags and invalid combinations exit nonzero") {
    CHECK(run("describe --no-such-flag").exit_code != 0);
    write_file("cli_combo.csv", "journal,year,y,x\nA,2013,1,2\nA,2014,2,3\nB,2013,1,2\nB,2014,3,4\n");
    const auto r = run("fit --panel cli_combo.csv --response y --regressors x "
                       "--effects random --gls");
    CHECK(r.exit_code != 0);
    std::remove("cli_combo.csv");
}

TEST_CASE("estimate prices a one-row scopus csv under the reduced IF model") {
    write_file("cli_est.csv",
               "Title;Year;Rank;SJR;Cites / Doc. (2years);International Collaboration;"
               "Total Cites (3years);Ref. / Doc.;SJR Best Quartile\n"
               "Journal A;2017;0;0;1,6;0;0;0;Q1\n");
    const auto r = run("estimate --model table8_if_reduced --input cli_est.csv");
    CHECK(r.exit_code == 0);
    const auto j = json::parse(r.output);
    CHECK(j["count"] == 1);
    CHECK(j["entries"][0]["estimate"].get<double>() == 1.26192);
    std::remove("cli_est.csv");
}

TEST_CASE("synth then fit recovers the planted slope") {
    write_file("cli_dgp.json", R"({
      "n_journals": 60, "n_years": 6,
      "slopes": [{"variable": "x1", "coefficient": 2.0}],
      "journal_effect_sd": 1.0, "effect_regressor_corr": 0.5,
      "noise_sd": 0.5, "seed": 3
    })");
    CHECK(run("synth --spec cli_dgp.json --out cli_panel.csv").exit_code == 0);
    CHECK(exists("cli_panel.csv"));
    CHECK(exists("cli_panel.csv.truth.json"));
    CHECK(exists("cli_panel.csv.manifest.json"));

    const auto r = run("fit --panel cli_panel.csv --response y --regressors x1 "
                       "--effects fixed --out cli_fit.json");
    CHECK(r.exit_code == 0);
    const auto fit = json::parse(read_file("cli_fit.json"));
    const double slope = fit["coefficients"][0]["estimate"].get<double>();
    CHECK(slope == doctest::Approx(2.0).epsilon(0.05));

    // the saved fit powers the estimate subcommand
    const auto est = run("estimate --model fit:cli_fit.json --input cli_panel.csv "
                         "--input-schema panel");
    CHECK(est.exit_code == 0);
    const auto report = json::parse(est.output);
    CHECK(report["count"] == 360);

    for (const char* f : {"cli_dgp.json", "cli_panel.csv", "cli_panel.csv.truth.json",
                          "cli_panel.csv.manifest.json", "cli_fit.json",
                          "cli_fit.json.manifest.json"})
        std::remove(f);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    write_file("cli_dgp2.json", R"({
      "n_journals": 20, "n_years": 4,
      "slopes": [{"variable": "x1", "coefficient": 1.0}],
      "noise_sd": 1.0, "seed": 11
    })");
    CHECK(run("synth --spec cli_dgp2.json --out cli_a.csv").exit_code == 0);
    CHECK(run("synth --spec cli_dgp2.json --out cli_b.csv").exit_code == 0);
    CHECK(read_file("cli_a.csv") == read_file("cli_b.csv"));
    CHECK(read_file("cli_a.csv.truth.json") == read_file("cli_b.csv.truth.json"));
    // manifests differ only in the output paths; normalize and compare
    auto ma = json::parse(read_file("cli_a.csv.manifest.json"));
    auto mb = json::parse(read_file("cli_b.csv.manifest.json"));
    ma.erase("outputs");
    mb.erase("outputs");
    ma["config"].erase("out");
    mb["config"].erase("out");
    CHECK(ma == mb);

    for (const char* f : {"cli_dgp2.json", "cli_a.csv", "cli_a.csv.truth.json",
                          "cli_a.csv.manifest.json", "cli_b.csv", "cli_b.csv.truth.json",
                          "cli_b.csv.manifest.json"})
        std::remove(f);
}

TEST_CASE("lasso, forest and corr subcommands run on a synthetic panel") {
    write_file("cli_dgp4.json", R"({
      "n_journals": 40, "n_years": 5,
      "slopes": [{"variable": "x1", "coefficient": 2.0},
                 {"variable": "x2", "coefficient": 0.0},
                 {"variable": "x3", "coefficient": 0.0}],
      "noise_sd": 0.5, "seed": 7
    })");
    CHECK(run("synth --spec cli_dgp4.json --out cli_p4.csv").exit_code == 0);

    const auto la = run("lasso --panel cli_p4.csv --target y --features all --folds 4 "
                        "--seed 1 --num-lambdas 20 --out cli_lasso.json");
    CHECK(la.exit_code == 0);
    const auto lj = json::parse(read_file("cli_lasso.json"));
    CHECK(lj["path"].size() == 20);
    CHECK(lj["activation_order"][0] == "x1");
    CHECK(exists("cli_lasso.csv"));

    const auto fo = run("forest --panel cli_p4.csv --target y --features all --trees 40 "
                        "--seed 2 --mtry 3 --out cli_forest.json");
    CHECK(fo.exit_code == 0);
    const auto fj = json::parse(read_file("cli_forest.json"));
    CHECK(fj["selected"].size() == 1);
    CHECK(fj["selected"][0] == "x1");

    const auto co = run("corr --panel cli_p4.csv --vars x1,x2,x3,y --threshold 0.85 "
                        "--out cli_corr.json");
    CHECK(co.exit_code == 0);
    const auto cj = json::parse(read_file("cli_corr.json"));
    CHECK(cj["clusters"].size() >= 2);
    CHECK(cj.contains("vif"));
    CHECK(exists("cli_corr.csv"));

    for (const char* f :
         {"cli_dgp4.json", "cli_p4.csv", "cli_p4.csv.truth.json", "cli_p4.csv.manifest.json",
          "cli_lasso.json", "cli_lasso.csv", "cli_lasso.json.manifest.json", "cli_forest.json",
          "cli_forest.csv", "cli_forest.json.manifest.json", "cli_corr.json", "cli_corr.csv",
          "cli_corr.json.manifest.json"})
        std::remove(f);
}

TEST_CASE("corr clusters a precomputed matrix file") {
    const char* src = std::getenv("JINDEX_SOURCE_DIR");
    REQUIRE(src != nullptr);
    const auto r = run(std::string("corr --matrix ") + src +
                       "/data/if_scopus_correlations.csv --threshold 0.85");
    CHECK(r.exit_code == 0);
    const auto j = json::parse(r.output);
    CHECK(j["clusters"].size() == 6);
}

TEST_CASE("failed runs leave a .failed marker and no output") {
    std::remove("cli_out.json");
    const auto r = run("describe --panel does_not_exist.csv --out cli_out.json");
    CHECK(r.exit_code != 0);
    CHECK_FALSE(exists("cli_out.json"));
    CHECK(exists("cli_out.json.failed"));
    std::remove("cli_out.json.failed");
}

TEST_CASE("ingest merges the two dialects and describe reads the panel") {
    write_file("cli_scopus.csv",
               "Title;Year;SJR;H index\nAlpha;2013;1,5;30\nAlpha;2014;1,6;31\n"
               "Beta;2013;0,9;12\nBeta;2014;1,0;13\n");
    write_file("cli_wos.csv",
               "Journal,Year,Journal Impact Factor\nalpha,2013,2.1\nalpha,2014,2.2\n"
               "BETA,2013,0.8\nBETA,2014,0.9\n");
    CHECK(run("ingest --scopus cli_scopus.csv --wos cli_wos.csv --years 2013:2014 "
              "--out cli_merged.csv")
              .exit_code == 0);
    const auto r = run("describe --panel cli_merged.csv");
    CHECK(r.exit_code == 0);
    const auto j = json::parse(r.output);
    CHECK(j["n_journals"] == 2);
    bool has_if = false;
    for (const auto& v : j["variables"])
        if (v["variable"] == "JournalImpactFactor") has_if = true;
    CHECK(has_if);

    for (const char* f :
         {"cli_scopus.csv", "cli_wos.csv", "cli_merged.csv", "cli_merged.csv.manifest.json"})
        std::remove(f);
}

TEST_CASE("json config supplies defaults and explicit flags win") {
    write_file("cli_dgp3.json", R"({
      "n_journals": 10, "n_years": 3,
      "slopes": [{"variable": "x1", "coefficient": 1.0}],
      "noise_sd": 1.0, "seed": 2
    })");
    write_file("cli_conf.json", R"({"spec": "cli_dgp3.json", "out": "cli_c1.csv"})");
    CHECK(run("synth --config cli_conf.json").exit_code == 0);
    CHECK(exists("cli_c1.csv"));
    // flag overrides the config value
    CHECK(run("synth --config cli_conf.json --out cli_c2.csv").exit_code == 0);
    CHECK(exists("cli_c2.csv"));

    for (const char* f : {"cli_dgp3.json", "cli_conf.json", "cli_c1.csv",
                          "cli_c1.csv.truth.json", "cli_c1.csv.manifest.json", "cli_c2.csv",
                          "cli_c2.csv.truth.json", "cli_c2.csv.manifest.json"})
        std::remove(f);
}

}  // TEST_SUITE
