#include "jindex/synth.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "jindex/rng.hpp"

namespace jindex::synth {

namespace {

constexpr uint64_t kEffectStream = 1;
constexpr uint64_t kRegressorStream = 2;
constexpr uint64_t kNoiseStream = 3;

void check(const DgpSpec& spec) {
    if (spec.n_journals < 1 || spec.n_years < 1)
        throw std::invalid_argument("synth: need at least one journal and one year");
    if (spec.slopes.empty()) throw std::invalid_argument("synth: no regressors specified");
    if (spec.journal_effect_sd < 0.0 || spec.noise_sd < 0.0)
        throw std::invalid_argument("synth: standard deviations must be non-negative");
    if (std::fabs(spec.effect_regressor_corr) > 1.0)
        throw std::invalid_argument("synth: effect-regressor correlation outside [-1,1]");
    if (spec.errors == ErrorStructure::Ar1 && std::fabs(spec.ar1_rho) >= 1.0)
        throw std::invalid_argument("synth: |ar1 rho| must be < 1");
    for (const auto& [name, _] : spec.slopes)
        if (name == spec.response)
            throw std::invalid_argument("synth: response name collides with a regressor");
}

double journal_effect_z(const DgpSpec& spec, int j) {
    return rng::normal_at(rng::key(spec.seed, kEffectStream, static_cast<uint64_t>(j)));
}

double regressor_value(const DgpSpec& spec, int j, int t, int v, double effect_z) {
    const double z = rng::normal_at(rng::key(spec.seed, kRegressorStream,
                                             static_cast<uint64_t>(j), static_cast<uint64_t>(t),
                                             static_cast<uint64_t>(v)));
    if (spec.journal_effect_sd <= 0.0) return z;
    const double rho = spec.effect_regressor_corr;
    return rho * effect_z + std::sqrt(1.0 - rho * rho) * z;
}

// Stationary AR(1) in t with unit marginal variance.
double error_value(const DgpSpec& spec, int j, int t) {
    auto draw = [&](int tt) {
        return rng::normal_at(rng::key(spec.seed, kNoiseStream, static_cast<uint64_t>(j),
                                       static_cast<uint64_t>(tt)));
    };
    if (spec.errors == ErrorStructure::Iid) return spec.noise_sd * draw(t);
    const double rho = spec.ar1_rho;
    double u = draw(0);
    for (int tt = 1; tt <= t; ++tt) u = rho * u + std::sqrt(1.0 - rho * rho) * draw(tt);
    return spec.noise_sd * u;
}

}  // namespace

SynthResult generate(const DgpSpec& spec) {
    check(spec);
    const int J = spec.n_journals;
    const int T = spec.n_years;
    const int K = static_cast<int>(spec.slopes.size());

    std::vector<std::string> journals;
    journals.reserve(J);
    for (int j = 0; j < J; ++j) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "J%05d", j + 1);
        journals.emplace_back(buf);
    }
    std::vector<int> years(T);
    for (int t = 0; t < T; ++t) years[t] = spec.first_year + t;

    std::vector<VariableMeta> vars;
    for (const auto& [name, _] : spec.slopes)
        vars.push_back({name, VarSource::Derived, VarKind::QualityNumeric, "synthetic regressor", {}});
    vars.push_back({spec.response, VarSource::Derived, VarKind::QualityNumeric,
                    "synthetic response", {}});

    SynthResult out{PanelDataset(journals, years, vars), {spec, Eigen::VectorXd(J)}};
    for (int j = 0; j < J; ++j) {
        const double ez = journal_effect_z(spec, j);
        const double effect = spec.journal_effect_sd * ez;
        out.truth.journal_effects[j] = effect;
        for (int t = 0; t < T; ++t) {
            double y = effect + error_value(spec, j, t);
            for (int v = 0; v < K; ++v) {
                const double x = regressor_value(spec, j, t, v, ez);
                out.panel.set(j, t, v, x);
                y += spec.slopes[v].second * x;
            }
            out.panel.set(j, t, K, y);
        }
    }
    return out;
}

panel::PanelData generate_panel_data(const DgpSpec& spec, Eigen::VectorXd* effects) {
    check(spec);
    const int J = spec.n_journals;
    const int T = spec.n_years;
    const int K = static_cast<int>(spec.slopes.size());

    panel::PanelData data;
    data.y.resize(static_cast<Eigen::Index>(J) * T);
    data.X.resize(static_cast<Eigen::Index>(J) * T, K);
    data.group.resize(static_cast<size_t>(J) * T);
    data.time.resize(static_cast<size_t>(J) * T);
    for (const auto& [name, _] : spec.slopes) data.names.push_back(name);
    if (effects) effects->resize(J);

    Eigen::Index r = 0;
    for (int j = 0; j < J; ++j) {
        const double ez = journal_effect_z(spec, j);
        const double effect = spec.journal_effect_sd * ez;
        if (effects) (*effects)[j] = effect;
        for (int t = 0; t < T; ++t, ++r) {
            double y = effect + error_value(spec, j, t);
            for (int v = 0; v < K; ++v) {
                const double x = regressor_value(spec, j, t, v, ez);
                data.X(r, v) = x;
                y += spec.slopes[v].second * x;
            }
            data.y[r] = y;
            data.group[static_cast<size_t>(r)] = j;
            data.time[static_cast<size_t>(r)] = spec.first_year + t;
        }
    }
    return data;
}

std::string spec_to_json_string(const DgpSpec& spec) {
    nlohmann::json slopes = nlohmann::json::array();
    for (const auto& [name, b] : spec.slopes) slopes.push_back({{"variable", name}, {"coefficient", b}});
    nlohmann::json j{{"n_journals", spec.n_journals},
                     {"n_years", spec.n_years},
                     {"first_year", spec.first_year},
                     {"response", spec.response},
                     {"slopes", std::move(slopes)},
                     {"journal_effect_sd", spec.journal_effect_sd},
                     {"effect_regressor_corr", spec.effect_regressor_corr},
                     {"noise_sd", spec.noise_sd},
                     {"errors", spec.errors == ErrorStructure::Iid ? "iid" : "ar1"},
                     {"ar1_rho", spec.ar1_rho},
                     {"seed", spec.seed}};
    return j.dump(2);
}

DgpSpec spec_from_json_string(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    DgpSpec spec;
    spec.n_journals = j.value("n_journals", spec.n_journals);
    spec.n_years = j.value("n_years", spec.n_years);
    spec.first_year = j.value("first_year", spec.first_year);
    spec.response = j.value("response", spec.response);
    if (j.contains("slopes"))
        for (const auto& s : j["slopes"])
            spec.slopes.emplace_back(s.at("variable").get<std::string>(),
                                     s.at("coefficient").get<double>());
    spec.journal_effect_sd = j.value("journal_effect_sd", spec.journal_effect_sd);
    spec.effect_regressor_corr = j.value("effect_regressor_corr", spec.effect_regressor_corr);
    spec.noise_sd = j.value("noise_sd", spec.noise_sd);
    const std::string err = j.value("errors", "iid");
    if (err == "iid") {
        spec.errors = ErrorStructure::Iid;
    } else if (err == "ar1") {
        spec.errors = ErrorStructure::Ar1;
    } else {
        throw std::invalid_argument("synth spec: errors must be iid or ar1");
    }
    spec.ar1_rho = j.value("ar1_rho", spec.ar1_rho);
    spec.seed = j.value("seed", spec.seed);
    check(spec);
    return spec;
}

std::string truth_to_json_string(const GroundTruth& truth) {
    nlohmann::json j = nlohmann::json::parse(spec_to_json_string(truth.spec));
    nlohmann::json effects = nlohmann::json::array();
    for (Eigen::Index i = 0; i < truth.journal_effects.size(); ++i)
        effects.push_back(truth.journal_effects[i]);
    return nlohmann::json{{"spec", std::move(j)}, {"journal_effects", std::move(effects)}}.dump(2);
}

}  // namespace jindex::synth
