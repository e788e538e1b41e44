#include <doctest.h>

#include <cmath>

#include "jindex/dataset.hpp"

using namespace jindex;

namespace {

VariableMeta quality(const std::string& name) {
    return {name, VarSource::Derived, VarKind::QualityNumeric, "", {}};
}

VariableMeta categorical(const std::string& name) {
    return {name, VarSource::Derived, VarKind::CategoricalOther, "", {}};
}

PanelDataset three_by_two() {
    PanelDataset d({"A", "B", "C"}, {2013, 2014}, {quality("SJR"), quality("Hindex")});
    for (int j = 0; j < 3; ++j)
        for (int y = 0; y < 2; ++y) {
            d.set(j, y, 0, 1.0 + j + 0.1 * y);
            d.set(j, y, 1, 10.0 * (j + 1) + y);
        }
    return d;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("describe on tiny samples") {
    PanelDataset d({"A", "B", "C"}, {2013}, {quality("x")});
    d.set(0, 0, 0, 1.0);
    d.set(1, 0, 0, 2.0);
    d.set(2, 0, 0, 3.0);
    const auto stats = describe(d);
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].mean == doctest::Approx(2.0));
    CHECK(stats[0].median == doctest::Approx(2.0));
    CHECK(stats[0].sd == doctest::Approx(1.0));
    CHECK(stats[0].min == 1.0);
    CHECK(stats[0].max == 3.0);
    CHECK(stats[0].n == 3);
}

TEST_CASE("describe of a constant variable has sd 0") {
    PanelDataset d({"A", "B", "C"}, {2013}, {quality("x")});
    for (int j = 0; j < 3; ++j) d.set(j, 0, 0, 5.0);
    const auto stats = describe(d);
    CHECK(stats[0].sd == 0.0);
    CHECK(stats[0].mean == 5.0);
    CHECK(stats[0].median == 5.0);
}

TEST_CASE("describe scales with the data") {
    const auto d = three_by_two();
    PanelDataset scaled = d;
    const double c = 3.5;
    for (int j = 0; j < d.n_journals(); ++j)
        for (int y = 0; y < d.n_years(); ++y)
            for (int v = 0; v < d.n_variables(); ++v)
                scaled.set(j, y, v, c * d.value(j, y, v));
    const auto s0 = describe(d);
    const auto s1 = describe(scaled);
    for (size_t i = 0; i < s0.size(); ++i) {
        CHECK(s1[i].mean == doctest::Approx(c * s0[i].mean).epsilon(1e-12));
        CHECK(s1[i].median == doctest::Approx(c * s0[i].median).epsilon(1e-12));
        CHECK(s1[i].sd == doctest::Approx(c * s0[i].sd).epsilon(1e-12));
        CHECK(s1[i].min == doctest::Approx(c * s0[i].min).epsilon(1e-12));
        CHECK(s1[i].max == doctest::Approx(c * s0[i].max).epsilon(1e-12));
    }
}

TEST_CASE("impact factor is the citation ratio") {
    CHECK(impact_factor(100, 50) == 2.0);
    CHECK(impact_factor(0, 30) == 0.0);
    CHECK(impact_factor(79, 1) == 79.0);
    CHECK_THROWS_AS(impact_factor(10, 0), std::invalid_argument);
    CHECK_THROWS_AS(impact_factor(-1, 5), std::invalid_argument);
    // scale invariance of the ratio
    for (double c : {2.0, 7.0, 0.5})
        CHECK(impact_factor(c * 120, c * 80) == doctest::Approx(impact_factor(120, 80)));
}

TEST_CASE("merge keeps the journal intersection") {
    PanelDataset a({"X", "Y"}, {2013, 2014}, {quality("SJR")});
    for (int j = 0; j < 2; ++j)
        for (int y = 0; y < 2; ++y) a.set(j, y, 0, 1.0 + j + y);
    PanelDataset b({"Y", "Z"}, {2013, 2014}, {quality("IF")});
    for (int j = 0; j < 2; ++j)
        for (int y = 0; y < 2; ++y) b.set(j, y, 0, 2.0 + j + y);

    const auto m = merge(a, b);
    REQUIRE(m.n_journals() == 1);
    CHECK(m.journals()[0] == "Y");
    CHECK(m.n_years() == 2);
    CHECK(m.n_variables() == 2);
    CHECK(m.value(0, 0, m.variable_index("SJR")) == 2.0);   // a's Y, 2013
    CHECK(m.value(0, 0, m.variable_index("IF")) == 2.0);    // b's Y, 2013
    CHECK(m.value(0, 1, m.variable_index("IF")) == 3.0);
}

TEST_CASE("merge journal membership is symmetric") {
    PanelDataset a({"X", "Y", "W"}, {2013}, {quality("u")});
    for (int j = 0; j < 3; ++j) a.set(j, 0, 0, j);
    PanelDataset b({"Y", "Z", "W"}, {2013}, {quality("v")});
    for (int j = 0; j < 3; ++j) b.set(j, 0, 0, j);
    auto ab = merge(a, b).journals();
    auto ba = merge(b, a).journals();
    std::sort(ab.begin(), ab.end());
    std::sort(ba.begin(), ba.end());
    CHECK(ab == ba);
}

TEST_CASE("merge matches normalized titles") {
    PanelDataset a({"  The Journal "}, {2013}, {quality("u")});
    a.set(0, 0, 0, 1.0);
    PanelDataset b({"the journal"}, {2013}, {quality("v")});
    b.set(0, 0, 0, 2.0);
    const auto m = merge(a, b);
    CHECK(m.n_journals() == 1);

    CHECK(normalize_title("  The   JOURNAL ") == "the journal");
}

TEST_CASE("merge rejects colliding normalized titles") {
    PanelDataset a({"Acta A", "acta  a"}, {2013}, {quality("u")});
    a.set(0, 0, 0, 1.0);
    a.set(1, 0, 0, 2.0);
    PanelDataset b({"Acta A"}, {2013}, {quality("v")});
    b.set(0, 0, 0, 3.0);
    CHECK_THROWS_WITH_AS(merge(a, b), doctest::Contains("ambiguous join"), std::runtime_error);
}

TEST_CASE("keep_complete retains fully observed journals") {
    PanelDataset d({"A", "B", "C"}, {2013, 2014, 2015}, {quality("x")});
    for (int j = 0; j < 3; ++j)
        for (int y = 0; y < 3; ++y) d.set(j, y, 0, j + y);
    d.set_missing(1, 2, 0);  // B misses 2015

    const auto kept = keep_complete(d, {2013, 2015});
    CHECK(kept.n_journals() == 2);
    CHECK(kept.journals() == std::vector<std::string>{"A", "C"});
    CHECK_FALSE(kept.empty_warning());

    // balanced: no missing cell remains
    for (int j = 0; j < kept.n_journals(); ++j)
        for (int y = 0; y < kept.n_years(); ++y)
            for (int v = 0; v < kept.n_variables(); ++v) CHECK_FALSE(kept.is_missing(j, y, v));
}

TEST_CASE("keep_complete is the identity on complete panels and idempotent") {
    const auto d = three_by_two();
    const auto once = keep_complete(d, {2013, 2014});
    CHECK(semantically_equal(once, d));
    const auto twice = keep_complete(once, {2013, 2014});
    CHECK(semantically_equal(twice, once));
}

TEST_CASE("keep_complete flags an empty result instead of failing") {
    PanelDataset d({"A"}, {2013, 2014}, {quality("x")});
    d.set(0, 0, 0, 1.0);  // 2014 missing
    const auto kept = keep_complete(d, {2013, 2014});
    CHECK(kept.n_journals() == 0);
    CHECK(kept.empty_warning());
}

TEST_CASE("encode_categoricals expands quartiles against the Q1 baseline") {
    PanelDataset d({"A", "B", "C", "D"}, {2013}, {categorical("SJRBestQuartile")});
    d.set(0, 0, 0, d.add_level(0, "Q2"));
    d.set(1, 0, 0, d.add_level(0, "Q1"));
    d.set(2, 0, 0, d.add_level(0, "Q4"));
    d.set(3, 0, 0, d.add_level(0, "Q3"));

    const auto e = encode_categoricals(d);
    REQUIRE(e.n_variables() == 3);
    CHECK(e.variable(0).name == "SJRBestQuartileQ2");
    CHECK(e.variable(1).name == "SJRBestQuartileQ3");
    CHECK(e.variable(2).name == "SJRBestQuartileQ4");
    // journal A is Q2
    CHECK(e.value(0, 0, 0) == 1.0);
    CHECK(e.value(0, 0, 1) == 0.0);
    CHECK(e.value(0, 0, 2) == 0.0);
    // journal B is the baseline: all indicators zero
    CHECK(e.value(1, 0, 0) == 0.0);
    CHECK(e.value(1, 0, 1) == 0.0);
    CHECK(e.value(1, 0, 2) == 0.0);
}

TEST_CASE("boolean variables encode to a single indicator") {
    PanelDataset d({"A", "B"}, {2013},
                   {{"OpenAccess", VarSource::Scopus, VarKind::Boolean, "", {}}});
    d.set(0, 0, 0, d.add_level(0, "Yes"));
    d.set(1, 0, 0, d.add_level(0, "No"));
    const auto e = encode_categoricals(d);
    REQUIRE(e.n_variables() == 1);
    CHECK(e.variable(0).name == "OpenAccessYes");
    CHECK(e.variable(0).source == VarSource::Scopus);
    CHECK(e.value(0, 0, 0) == 1.0);
    CHECK(e.value(1, 0, 0) == 0.0);
}

TEST_CASE("indicators of one source variable sum to 0 or 1 per row") {
    PanelDataset d({"A", "B", "C", "D", "E"}, {2013, 2014}, {categorical("Country")});
    const char* countries[] = {"AR", "BR", "CL", "AR", "UY"};
    for (int j = 0; j < 5; ++j)
        for (int y = 0; y < 2; ++y) d.set(j, y, 0, d.add_level(0, countries[(j + y) % 5]));
    const auto e = encode_categoricals(d);
    CHECK(e.n_variables() == 3);  // 4 levels -> 3 indicators
    for (int j = 0; j < 5; ++j)
        for (int y = 0; y < 2; ++y) {
            double sum = 0.0;
            for (int v = 0; v < e.n_variables(); ++v) sum += e.value(j, y, v);
            CHECK((sum == 0.0 || sum == 1.0));
        }
}

TEST_CASE("encode_categoricals rejects absent baselines") {
    PanelDataset d({"A", "B"}, {2013}, {categorical("Type")});
    d.set(0, 0, 0, d.add_level(0, "journal"));
    d.set(1, 0, 0, d.add_level(0, "book"));
    CHECK_THROWS_AS(encode_categoricals(d, {{"Type", "conference"}}), std::invalid_argument);
    const auto e = encode_categoricals(d, {{"Type", "journal"}});
    CHECK(e.variable(0).name == "Typebook");
}

TEST_CASE("a 304-level area variable expands to 303 indicators") {
    std::vector<std::string> journals;
    for (int j = 0; j < 304; ++j) journals.push_back("J" + std::to_string(j));
    PanelDataset d(journals, {2013},
                   {{"Areas", VarSource::Scopus, VarKind::CategoricalArea, "", {}}});
    for (int j = 0; j < 304; ++j) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "area%03d", j);
        d.set(j, 0, 0, d.add_level(0, buf));
    }
    const auto e = encode_categoricals(d);
    CHECK(e.n_variables() == 303);
    for (int v = 0; v < e.n_variables(); ++v) CHECK(e.variable(v).source == VarSource::Scopus);
}

TEST_CASE("describe requires at least one observation per variable") {
    PanelDataset d({"A"}, {2013}, {quality("x"), quality("empty")});
    d.set(0, 0, 0, 1.0);
    CHECK_THROWS_WITH_AS(describe(d), doctest::Contains("empty"), std::invalid_argument);
}

TEST_CASE("merge with an explicit id column") {
    PanelDataset a({"Alpha"}, {2013}, {quality("u"), categorical("Issn")});
    a.set(0, 0, 0, 1.0);
    a.set(0, 0, 1, a.add_level(1, "1234-5678"));
    PanelDataset b({"ALPHA JOURNAL"}, {2013}, {quality("v"), categorical("Code")});
    b.set(0, 0, 0, 2.0);
    b.set(0, 0, 1, b.add_level(1, "1234-5678"));

    CHECK(merge(a, b).n_journals() == 0);  // titles do not match
    // hand the join the id columns instead: both sides must carry the id under
    // the same variable name for a shared key spec
    PanelDataset b2({"ALPHA JOURNAL"}, {2013}, {quality("v"), categorical("Issn")});
    b2.set(0, 0, 0, 2.0);
    b2.set(0, 0, 1, b2.add_level(1, "1234-5678"));
    const auto m = merge(a, b2, {"Issn"});
    CHECK(m.n_journals() == 1);
}

}  // TEST_SUITE
