#include "jindex/panel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "jindex/prob.hpp"
#include "jindex/util.hpp"

namespace jindex::panel {

std::string to_string(Effects e) {
    switch (e) {
        case Effects::Pooled: return "pooled";
        case Effects::Fixed: return "fixed";
        case Effects::FixedTime: return "fixed_time";
        case Effects::Random: return "random";
    }
    return "?";
}

Effects effects_from_string(const std::string& s) {
    if (s == "pooled") return Effects::Pooled;
    if (s == "fixed") return Effects::Fixed;
    if (s == "fixed_time") return Effects::FixedTime;
    if (s == "random") return Effects::Random;
    throw std::invalid_argument("unknown effects kind: " + s);
}

const Coef* PanelFit::coefficient(const std::string& name) const {
    for (const auto& c : coefficients)
        if (util::iequals(c.name, name)) return &c;
    return nullptr;
}

namespace {

struct Ols {
    Eigen::VectorXd beta;
    Eigen::MatrixXd xtx_inv;  // unscaled (X'X)^-1
    double rss = 0.0;
};

// Rank-revealing QR solve; names a dependent column on rank deficiency.
Ols solve_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    const Eigen::Index k = X.cols();
    if (qr.rank() < k) {
        const auto& perm = qr.colsPermutation().indices();
        const int bad = perm[qr.rank()];
        throw std::invalid_argument("design is rank deficient; column '" +
                                    names.at(static_cast<size_t>(bad)) +
                                    "' is linearly dependent on the others");
    }
    Ols out;
    out.beta = qr.solve(y);
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd Rinv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    out.xtx_inv = qr.colsPermutation() * (Rinv * Rinv.transpose()) *
                  qr.colsPermutation().transpose();
    out.rss = (y - X * out.beta).squaredNorm();
    return out;
}

std::vector<Coef> make_coefs(const std::vector<std::string>& names, const Eigen::VectorXd& beta,
                             const Eigen::MatrixXd& vcov, double df) {
    std::vector<Coef> out;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        Coef c;
        c.name = names[static_cast<size_t>(j)];
        c.estimate = beta[j];
        c.std_error = std::sqrt(std::max(0.0, vcov(j, j)));
        if (c.std_error > 0.0 && df > 0.0) {
            c.t_stat = c.estimate / c.std_error;
            c.p_value = prob::student_t_two_sided_p(c.t_stat, df);
        } else {
            c.t_stat = 0.0;
            c.p_value = 1.0;
        }
        c.stars = prob::stars_for_p(c.p_value);
        out.push_back(std::move(c));
    }
    return out;
}

struct GroupIndex {
    std::vector<int> ids;                    // distinct group ids, ascending
    std::map<int, std::vector<int>> rows;    // group id -> row indices
};

GroupIndex group_rows(const std::vector<int>& group) {
    GroupIndex gi;
    for (size_t r = 0; r < group.size(); ++r) gi.rows[group[r]].push_back(static_cast<int>(r));
    for (const auto& [id, _] : gi.rows) gi.ids.push_back(id);
    return gi;
}

void validate(const PanelData& data) {
    const Eigen::Index n = data.y.size();
    if (data.X.rows() != n || static_cast<Eigen::Index>(data.group.size()) != n ||
        static_cast<Eigen::Index>(data.time.size()) != n)
        throw std::invalid_argument("panel data rows are inconsistent");
    if (static_cast<Eigen::Index>(data.names.size()) != data.X.cols())
        throw std::invalid_argument("panel data names do not match columns");
    if (n < 2) throw std::invalid_argument("panel fit needs at least 2 observations");
}

std::vector<int> sorted_distinct_times(const PanelData& data) {
    std::set<int> s(data.time.begin(), data.time.end());
    return {s.begin(), s.end()};
}

PanelFit fit_pooled(const PanelData& data, const PanelSpec& spec) {
    validate(data);
    const Eigen::Index n = data.y.size();
    const Eigen::Index k = data.X.cols();
    Eigen::MatrixXd X(n, k + 1);
    X.col(0).setOnes();
    X.rightCols(k) = data.X;
    std::vector<std::string> names{"(Intercept)"};
    names.insert(names.end(), data.names.begin(), data.names.end());

    Ols ols = solve_ols(X, data.y, names);
    PanelFit f;
    f.spec = spec;
    f.estimator = "pooled OLS";
    f.n_obs = static_cast<int>(n);
    f.n_groups = static_cast<int>(group_rows(data.group).ids.size());
    f.rss = ols.rss;
    f.df_resid = static_cast<double>(n) - static_cast<double>(k + 1);
    if (f.df_resid <= 0.0) throw std::invalid_argument("pooled fit has no residual dof");
    f.sigma2 = f.rss / f.df_resid;
    const Eigen::MatrixXd vcov = f.sigma2 * ols.xtx_inv;
    f.coefficients = make_coefs(names, ols.beta, vcov, f.df_resid);
    f.slope_names = data.names;
    f.slope_vcov = vcov.bottomRightCorner(k, k);
    f.fitted = X * ols.beta;
    f.residuals = data.y - f.fitted;
    f.group = data.group;
    f.time = data.time;
    f.group_labels = data.group_labels;
    const double tss = (data.y.array() - data.y.mean()).square().sum();
    f.r_squared = tss > 0.0 ? 1.0 - f.rss / tss : 1.0;
    return f;
}

PanelFit fit_within(const PanelData& data, const PanelSpec& spec, bool with_time) {
    validate(data);
    const GroupIndex gi = group_rows(data.group);

    // Journals with a single observation carry no within information.
    std::vector<int> rows;
    int dropped = 0;
    for (const auto& [id, rs] : gi.rows) {
        if (rs.size() < 2) {
            ++dropped;
            continue;
        }
        rows.insert(rows.end(), rs.begin(), rs.end());
    }
    std::sort(rows.begin(), rows.end());
    if (rows.size() < 3)
        throw std::invalid_argument("fixed effects fit needs journals with repeated observations");

    const std::vector<int> times = sorted_distinct_times(data);
    const Eigen::Index k_reg = data.X.cols();
    const Eigen::Index k_time = with_time ? static_cast<Eigen::Index>(times.size()) - 1 : 0;
    const Eigen::Index k = k_reg + k_time;
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());

    std::vector<std::string> names = data.names;
    Eigen::MatrixXd Xa(n, k);
    Eigen::VectorXd y(n);
    std::vector<int> grp(n), tim(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const int src = rows[static_cast<size_t>(r)];
        Xa.row(r).head(k_reg) = data.X.row(src);
        y[r] = data.y[src];
        grp[static_cast<size_t>(r)] = data.group[src];
        tim[static_cast<size_t>(r)] = data.time[src];
    }
    if (with_time) {
        for (size_t t = 1; t < times.size(); ++t) {
            names.push_back("year" + std::to_string(times[t]));
            for (Eigen::Index r = 0; r < n; ++r)
                Xa(r, k_reg + static_cast<Eigen::Index>(t) - 1) =
                    tim[static_cast<size_t>(r)] == times[t] ? 1.0 : 0.0;
        }
    }

    // Within transform: subtract journal means from y and every column.
    const GroupIndex kept = group_rows(grp);
    const int n_groups = static_cast<int>(kept.ids.size());
    std::map<int, double> y_mean;
    std::map<int, Eigen::RowVectorXd> x_mean;
    for (const auto& [id, rs] : kept.rows) {
        double ym = 0.0;
        Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(k);
        for (int r : rs) {
            ym += y[r];
            xm += Xa.row(r);
        }
        ym /= static_cast<double>(rs.size());
        xm /= static_cast<double>(rs.size());
        y_mean[id] = ym;
        x_mean[id] = xm;
    }
    Eigen::MatrixXd Xdm(n, k);
    Eigen::VectorXd ydm(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const int id = grp[static_cast<size_t>(r)];
        Xdm.row(r) = Xa.row(r) - x_mean[id];
        ydm[r] = y[r] - y_mean[id];
    }

    Ols ols = solve_ols(Xdm, ydm, names);
    PanelFit f;
    f.spec = spec;
    f.estimator = with_time ? "fixed effects (within, time dummies)" : "fixed effects (within)";
    f.n_obs = static_cast<int>(n);
    f.n_groups = n_groups;
    f.n_dropped_groups = dropped;
    f.rss = ols.rss;
    f.df_resid = static_cast<double>(n) - static_cast<double>(n_groups) - static_cast<double>(k);
    if (f.df_resid <= 0.0) throw std::invalid_argument("fixed effects fit has no residual dof");
    f.sigma2 = f.rss / f.df_resid;
    const Eigen::MatrixXd vcov = f.sigma2 * ols.xtx_inv;
    f.coefficients = make_coefs(names, ols.beta, vcov, f.df_resid);
    f.slope_names = data.names;
    f.slope_vcov = vcov.topLeftCorner(k_reg, k_reg);

    for (const auto& [id, _] : kept.rows)
        f.fixed_effects[id] = y_mean[id] - x_mean[id].dot(ols.beta);
    f.fitted.resize(n);
    for (Eigen::Index r = 0; r < n; ++r)
        f.fitted[r] = f.fixed_effects[grp[static_cast<size_t>(r)]] + Xa.row(r).dot(ols.beta);
    f.residuals = y - f.fitted;
    f.group = grp;
    f.time = tim;
    f.group_labels = data.group_labels;

    const double tss_within = ydm.squaredNorm();
    f.r_squared = tss_within > 0.0 ? 1.0 - f.rss / tss_within : 1.0;
    f.within_r_squared = true;
    return f;
}

}  // namespace

PanelFit fit_random_effects(const PanelData& data, const PanelSpec& spec,
                            std::optional<double> theta_override) {
    validate(data);
    const GroupIndex gi = group_rows(data.group);
    const int J = static_cast<int>(gi.ids.size());
    const Eigen::Index k = data.X.cols();
    const Eigen::Index n = data.y.size();

    double sigma2_eps = 0.0, sigma2_alpha = 0.0;
    if (!theta_override) {
        // Swamy-Arora variance components: within residuals for sigma2_eps,
        // the between regression for the journal effect variance.
        PanelSpec wspec = spec;
        wspec.effects = Effects::Fixed;
        const PanelFit within = fit_within(data, wspec, false);
        sigma2_eps = within.sigma2;

        if (J <= static_cast<int>(k) + 1)
            throw std::invalid_argument("random effects fit needs more journals than regressors");
        Eigen::MatrixXd Xb(J, k + 1);
        Eigen::VectorXd yb(J);
        double inv_t_sum = 0.0;
        for (int i = 0; i < J; ++i) {
            const auto& rs = gi.rows.at(gi.ids[i]);
            Xb(i, 0) = 1.0;
            Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(k);
            double ym = 0.0;
            for (int r : rs) {
                xm += data.X.row(r);
                ym += data.y[r];
            }
            Xb.row(i).tail(k) = xm / static_cast<double>(rs.size());
            yb[i] = ym / static_cast<double>(rs.size());
            inv_t_sum += 1.0 / static_cast<double>(rs.size());
        }
        std::vector<std::string> bnames{"(Intercept)"};
        bnames.insert(bnames.end(), data.names.begin(), data.names.end());
        const Ols between = solve_ols(Xb, yb, bnames);
        const double sigma2_between =
            between.rss / (static_cast<double>(J) - static_cast<double>(k) - 1.0);
        const double t_harmonic = static_cast<double>(J) / inv_t_sum;
        sigma2_alpha = std::max(0.0, sigma2_between - sigma2_eps / t_harmonic);
    }

    // Quasi-demeaning weight per journal.
    std::map<int, double> theta;
    double theta_sum = 0.0;
    for (const auto& [id, rs] : gi.rows) {
        double th;
        if (theta_override) {
            th = *theta_override;
        } else {
            const double t_i = static_cast<double>(rs.size());
            th = 1.0 - std::sqrt(sigma2_eps / (t_i * sigma2_alpha + sigma2_eps));
        }
        theta[id] = th;
        theta_sum += th;
    }

    Eigen::MatrixXd Xt(n, k + 1);
    Eigen::VectorXd yt(n);
    for (const auto& [id, rs] : gi.rows) {
        Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(k);
        double ym = 0.0;
        for (int r : rs) {
            xm += data.X.row(r);
            ym += data.y[r];
        }
        xm /= static_cast<double>(rs.size());
        ym /= static_cast<double>(rs.size());
        for (int r : rs) {
            Xt(r, 0) = 1.0 - theta[id];
            Xt.row(r).tail(k) = data.X.row(r) - theta[id] * xm;
            yt[r] = data.y[r] - theta[id] * ym;
        }
    }

    std::vector<std::string> names{"(Intercept)"};
    names.insert(names.end(), data.names.begin(), data.names.end());
    Ols ols = solve_ols(Xt, yt, names);

    PanelFit f;
    f.spec = spec;
    f.estimator = "random effects (Swamy-Arora)";
    f.n_obs = static_cast<int>(n);
    f.n_groups = J;
    f.rss = ols.rss;
    f.df_resid = static_cast<double>(n) - static_cast<double>(k) - 1.0;
    if (f.df_resid <= 0.0) throw std::invalid_argument("random effects fit has no residual dof");
    f.sigma2 = f.rss / f.df_resid;
    f.theta = theta_sum / static_cast<double>(J);
    const Eigen::MatrixXd vcov = f.sigma2 * ols.xtx_inv;
    f.coefficients = make_coefs(names, ols.beta, vcov, f.df_resid);
    f.slope_names = data.names;
    f.slope_vcov = vcov.bottomRightCorner(k, k);
    f.fitted = ((data.X * ols.beta.tail(k)).array() + ols.beta[0]).matrix();
    f.residuals = data.y - f.fitted;
    f.group = data.group;
    f.time = data.time;
    f.group_labels = data.group_labels;
    const double tss = (yt.array() - yt.mean()).square().sum();
    f.r_squared = tss > 0.0 ? 1.0 - f.rss / tss : 1.0;
    return f;
}

PanelFit fit(const PanelData& data, const PanelSpec& spec) {
    switch (spec.effects) {
        case Effects::Pooled: return fit_pooled(data, spec);
        case Effects::Fixed: return fit_within(data, spec, false);
        case Effects::FixedTime: return fit_within(data, spec, true);
        case Effects::Random: return fit_random_effects(data, spec, std::nullopt);
    }
    throw std::logic_error("unreachable");
}

PanelData make_panel_data(const PanelDataset& d, const std::string& response,
                          const std::vector<std::string>& regressors) {
    for (const auto& r : regressors)
        if (util::iequals(r, response))
            throw std::invalid_argument("response appears among the regressors: " + response);
    std::vector<std::string> all{response};
    all.insert(all.end(), regressors.begin(), regressors.end());
    auto pooled = d.pooled(all);

    PanelData data;
    const Eigen::Index n = pooled.values.rows();
    data.y = pooled.values.col(0);
    data.X = pooled.values.rightCols(pooled.values.cols() - 1);
    data.group = pooled.journal;
    data.time.resize(n);
    for (Eigen::Index r = 0; r < n; ++r)
        data.time[static_cast<size_t>(r)] = d.years()[pooled.year[static_cast<size_t>(r)]];
    data.names.assign(pooled.names.begin() + 1, pooled.names.end());
    data.group_labels = d.journals();
    return data;
}

PanelFit fit(const PanelDataset& d, const PanelSpec& spec) {
    const PanelData data = make_panel_data(d, spec.response, spec.regressors);
    if (spec.gls) return fgls(data, spec);
    return fit(data, spec);
}

PanelData within_transform(const PanelData& data) {
    validate(data);
    PanelData out = data;
    const GroupIndex gi = group_rows(data.group);
    for (const auto& [id, rs] : gi.rows) {
        double ym = 0.0;
        Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(data.X.cols());
        for (int r : rs) {
            ym += data.y[r];
            xm += data.X.row(r);
        }
        ym /= static_cast<double>(rs.size());
        xm /= static_cast<double>(rs.size());
        for (int r : rs) {
            out.y[r] = data.y[r] - ym;
            out.X.row(r) = data.X.row(r) - xm;
        }
    }
    return out;
}

TestResult f_test_fixed_effects(const PanelFit& pooled, const PanelFit& fixed) {
    if (pooled.spec.effects != Effects::Pooled ||
        (fixed.spec.effects != Effects::Fixed && fixed.spec.effects != Effects::FixedTime))
        throw std::invalid_argument("f_test_fixed_effects: expects a pooled and a fixed fit");
    if (!util::iequals(pooled.spec.response, fixed.spec.response) ||
        pooled.slope_names != fixed.slope_names)
        throw std::invalid_argument("f_test_fixed_effects: fits have different specs");
    if (pooled.n_obs != fixed.n_obs)
        throw std::invalid_argument("f_test_fixed_effects: fits cover different samples");

    TestResult t;
    t.name = "F test for fixed effects";
    t.dof = static_cast<double>(fixed.n_groups - 1);
    t.dof2 = fixed.df_resid;
    const double num = std::max(0.0, pooled.rss - fixed.rss) / t.dof;
    const double den = fixed.rss / t.dof2;
    if (den <= 0.0) {
        t.statistic = 0.0;
        t.p_value = 1.0;
        t.degenerate = true;
        return t;
    }
    t.statistic = num / den;
    t.p_value = prob::f_sf(t.statistic, t.dof, t.dof2);
    return t;
}

TestResult hausman(const PanelFit& fixed, const PanelFit& random) {
    std::vector<std::string> common;
    std::vector<int> idx_f, idx_r;
    for (size_t i = 0; i < fixed.slope_names.size(); ++i)
        for (size_t j = 0; j < random.slope_names.size(); ++j)
            if (fixed.slope_names[i] == random.slope_names[j]) {
                common.push_back(fixed.slope_names[i]);
                idx_f.push_back(static_cast<int>(i));
                idx_r.push_back(static_cast<int>(j));
            }
    if (common.empty())
        throw std::invalid_argument("hausman: the fits share no slope coefficients");

    const int k = static_cast<int>(common.size());
    Eigen::VectorXd d(k);
    Eigen::MatrixXd S(k, k);
    for (int i = 0; i < k; ++i) {
        const Coef* cf = fixed.coefficient(common[i]);
        const Coef* cr = random.coefficient(common[i]);
        d[i] = cf->estimate - cr->estimate;
        for (int j = 0; j < k; ++j)
            S(i, j) = fixed.slope_vcov(idx_f[i], idx_f[j]) - random.slope_vcov(idx_r[i], idx_r[j]);
    }
    S = 0.5 * (S + S.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1e-300, ev.cwiseAbs().maxCoeff());

    TestResult t;
    t.name = "Hausman specification test";
    double h = 0.0;
    int rank = 0;
    bool pseudo = false;
    for (int i = 0; i < k; ++i) {
        if (ev[i] > tol) {
            const double proj = es.eigenvectors().col(i).dot(d);
            h += proj * proj / ev[i];
            ++rank;
        } else {
            pseudo = true;  // the covariance difference is not positive definite
        }
    }
    t.statistic = h;
    t.dof = static_cast<double>(rank);
    t.pseudo_inverse = pseudo;
    if (rank == 0) {
        t.p_value = 1.0;
        t.degenerate = true;
    } else {
        t.p_value = prob::chi_squared_sf(h, t.dof);
    }
    return t;
}

TestResult lm_test_random_effects(const PanelFit& pooled) {
    if (pooled.residuals.size() == 0)
        throw std::invalid_argument("lm_test_random_effects: fit carries no residuals");
    const GroupIndex gi = group_rows(pooled.group);

    double sum_sq = 0.0;      // sum of squared residuals
    double sum_group = 0.0;   // sum over journals of (sum of residuals)^2
    double t_total = 0.0;
    double t_pairs = 0.0;     // sum of T_i (T_i - 1)
    for (const auto& [id, rs] : gi.rows) {
        double s = 0.0;
        for (int r : rs) {
            s += pooled.residuals[r];
            sum_sq += pooled.residuals[r] * pooled.residuals[r];
        }
        sum_group += s * s;
        const double ti = static_cast<double>(rs.size());
        t_total += ti;
        t_pairs += ti * (ti - 1.0);
    }
    if (t_pairs <= 0.0)
        throw std::invalid_argument(
            "lm_test_random_effects: every journal has a single observation");

    TestResult t;
    t.name = "Breusch-Pagan LM test for random effects";
    t.dof = 1.0;
    if (sum_sq <= 0.0) {
        t.statistic = 0.0;
        t.p_value = 1.0;
        t.degenerate = true;
        return t;
    }
    const double a = sum_group / sum_sq - 1.0;
    t.statistic = (t_total * t_total) / (2.0 * t_pairs) * a * a;
    t.p_value = prob::chi_squared_sf(t.statistic, 1.0);
    return t;
}

namespace {

struct BalancedSubset {
    PanelData data;
    std::vector<int> times;  // the common year window, ascending
    int n_dropped = 0;
};

BalancedSubset balance(const PanelData& data) {
    const std::vector<int> times = sorted_distinct_times(data);
    const GroupIndex gi = group_rows(data.group);
    BalancedSubset out;
    out.times = times;

    std::vector<int> rows;
    for (const auto& [id, rs] : gi.rows) {
        std::set<int> seen;
        for (int r : rs) seen.insert(data.time[r]);
        if (seen.size() == times.size() && rs.size() == times.size()) {
            // keep rows ordered by time within the journal
            std::vector<int> ordered = rs;
            std::sort(ordered.begin(), ordered.end(),
                      [&](int a, int b) { return data.time[a] < data.time[b]; });
            rows.insert(rows.end(), ordered.begin(), ordered.end());
        } else {
            ++out.n_dropped;
        }
    }
    if (rows.empty()) throw std::invalid_argument("fgls: no journal covers the full year window");

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    out.data.y.resize(n);
    out.data.X.resize(n, data.X.cols());
    out.data.group.resize(rows.size());
    out.data.time.resize(rows.size());
    for (Eigen::Index r = 0; r < n; ++r) {
        const int src = rows[static_cast<size_t>(r)];
        out.data.y[r] = data.y[src];
        out.data.X.row(r) = data.X.row(src);
        out.data.group[static_cast<size_t>(r)] = data.group[src];
        out.data.time[static_cast<size_t>(r)] = data.time[src];
    }
    out.data.names = data.names;
    out.data.group_labels = data.group_labels;
    return out;
}

PanelFit fgls_impl(const PanelData& data, const PanelSpec& spec,
                   const Eigen::MatrixXd* forced_omega) {
    if (spec.effects == Effects::Random)
        throw std::invalid_argument("fgls: random effects cannot be combined with GLS");
    validate(data);

    BalancedSubset bal = balance(data);
    const int T = static_cast<int>(bal.times.size());
    const GroupIndex gi = group_rows(bal.data.group);
    const int J = static_cast<int>(gi.ids.size());
    if (T > J)
        throw std::invalid_argument("fgls: year window longer than the number of journals; the " +
                                    std::to_string(T) + "x" + std::to_string(T) +
                                    " covariance is not estimable");

    // Step 1: spec-level OLS residuals on the balanced subset.
    PanelSpec step1 = spec;
    step1.gls = false;
    const PanelFit ols_fit = fit(bal.data, step1);

    // Step 2: T x T within-journal residual covariance.
    Eigen::MatrixXd omega;
    bool ridged = false;
    if (forced_omega) {
        if (forced_omega->rows() != T || forced_omega->cols() != T)
            throw std::invalid_argument("fgls: forced omega must be " + std::to_string(T) + "x" +
                                        std::to_string(T));
        omega = *forced_omega;
    } else {
        omega = Eigen::MatrixXd::Zero(T, T);
        for (const auto& [id, rs] : gi.rows) {
            Eigen::VectorXd e(T);
            for (int t = 0; t < T; ++t) e[t] = ols_fit.residuals[rs[t]];
            omega += e * e.transpose();
        }
        omega /= static_cast<double>(J);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(omega);
        const double mx = es.eigenvalues().cwiseAbs().maxCoeff();
        if (es.eigenvalues().minCoeff() <= 1e-12 * mx) {
            omega += (1e-8 * omega.trace() / static_cast<double>(T)) *
                     Eigen::MatrixXd::Identity(T, T);
            ridged = true;
        }
    }

    // Step 3: GLS on the (demeaned, for fixed effects) data.
    const bool within = spec.effects != Effects::Pooled;
    const bool with_time = spec.effects == Effects::FixedTime;
    const Eigen::Index k_reg = bal.data.X.cols();
    const Eigen::Index k_time = with_time ? T - 1 : 0;
    const Eigen::Index k = within ? k_reg + k_time : k_reg + 1;
    const Eigen::Index n = bal.data.y.size();

    std::vector<std::string> names;
    Eigen::MatrixXd Xd(n, k);
    Eigen::VectorXd yd(n);
    std::map<int, double> y_mean;
    std::map<int, Eigen::RowVectorXd> x_mean;
    if (within) {
        names = bal.data.names;
        Eigen::MatrixXd Xa(n, k);
        for (Eigen::Index r = 0; r < n; ++r) Xa.row(r).head(k_reg) = bal.data.X.row(r);
        if (with_time) {
            for (int t = 1; t < T; ++t) {
                names.push_back("year" + std::to_string(bal.times[t]));
                for (Eigen::Index r = 0; r < n; ++r)
                    Xa(r, k_reg + t - 1) =
                        bal.data.time[static_cast<size_t>(r)] == bal.times[t] ? 1.0 : 0.0;
            }
        }
        for (const auto& [id, rs] : gi.rows) {
            double ym = 0.0;
            Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(k);
            for (int r : rs) {
                ym += bal.data.y[r];
                xm += Xa.row(r);
            }
            ym /= static_cast<double>(rs.size());
            xm /= static_cast<double>(rs.size());
            y_mean[id] = ym;
            x_mean[id] = xm;
            for (int r : rs) {
                Xd.row(r) = Xa.row(r) - xm;
                yd[r] = bal.data.y[r] - ym;
            }
        }
    } else {
        names.push_back("(Intercept)");
        names.insert(names.end(), bal.data.names.begin(), bal.data.names.end());
        Xd.col(0).setOnes();
        Xd.rightCols(k_reg) = bal.data.X;
        yd = bal.data.y;
    }

    // Whiten each journal block with the Cholesky factor of omega.
    const Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("fgls: residual covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd Xw(n, k);
    Eigen::VectorXd yw(n);
    for (const auto& [id, rs] : gi.rows) {
        Eigen::MatrixXd xb(T, k);
        Eigen::VectorXd yb(T);
        for (int t = 0; t < T; ++t) {
            xb.row(t) = Xd.row(rs[t]);
            yb[t] = yd[rs[t]];
        }
        xb = L.triangularView<Eigen::Lower>().solve(xb);
        yb = L.triangularView<Eigen::Lower>().solve(yb);
        for (int t = 0; t < T; ++t) {
            Xw.row(rs[t]) = xb.row(t);
            yw[rs[t]] = yb[t];
        }
    }

    Ols gls = solve_ols(Xw, yw, names);

    PanelFit f;
    f.spec = spec;
    f.spec.gls = true;
    f.estimator = std::string("feasible GLS (") + to_string(spec.effects) + ")";
    f.n_obs = static_cast<int>(n);
    f.n_groups = J;
    f.n_dropped_groups = bal.n_dropped;
    f.omega_ridged = ridged;
    f.rss = gls.rss;
    f.df_resid = within
                     ? static_cast<double>(n) - static_cast<double>(J) - static_cast<double>(k)
                     : static_cast<double>(n) - static_cast<double>(k);
    if (f.df_resid <= 0.0) throw std::invalid_argument("fgls fit has no residual dof");
    // Omega is treated as known, so the GLS covariance needs no sigma^2 factor.
    const Eigen::MatrixXd vcov = gls.xtx_inv;
    f.sigma2 = f.rss / f.df_resid;
    f.coefficients = make_coefs(names, gls.beta, vcov, f.df_resid);
    f.slope_names = bal.data.names;
    f.slope_vcov = within ? Eigen::MatrixXd(vcov.topLeftCorner(k_reg, k_reg))
                          : Eigen::MatrixXd(vcov.bottomRightCorner(k_reg, k_reg));

    f.group = bal.data.group;
    f.time = bal.data.time;
    f.group_labels = bal.data.group_labels;
    f.fitted.resize(n);
    if (within) {
        Eigen::MatrixXd Xa(n, k);
        for (Eigen::Index r = 0; r < n; ++r) Xa.row(r).head(k_reg) = bal.data.X.row(r);
        if (with_time)
            for (int t = 1; t < T; ++t)
                for (Eigen::Index r = 0; r < n; ++r)
                    Xa(r, k_reg + t - 1) =
                        bal.data.time[static_cast<size_t>(r)] == bal.times[t] ? 1.0 : 0.0;
        for (const auto& [id, _] : gi.rows)
            f.fixed_effects[id] = y_mean[id] - x_mean[id].dot(gls.beta);
        for (Eigen::Index r = 0; r < n; ++r)
            f.fitted[r] =
                f.fixed_effects[bal.data.group[static_cast<size_t>(r)]] + Xa.row(r).dot(gls.beta);
    } else {
        f.fitted = ((bal.data.X * gls.beta.tail(k_reg)).array() + gls.beta[0]).matrix();
    }
    f.residuals = bal.data.y - f.fitted;

    // R2 as the squared correlation between fitted and actual values.
    const double fm = f.fitted.mean();
    const double ym2 = bal.data.y.mean();
    const double sxy = ((f.fitted.array() - fm) * (bal.data.y.array() - ym2)).sum();
    const double sxx = (f.fitted.array() - fm).square().sum();
    const double syy = (bal.data.y.array() - ym2).square().sum();
    f.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

}  // namespace

PanelFit fgls(const PanelData& data, const PanelSpec& spec) {
    return fgls_impl(data, spec, nullptr);
}

PanelFit fgls(const PanelDataset& d, const PanelSpec& spec) {
    return fgls_impl(make_panel_data(d, spec.response, spec.regressors), spec, nullptr);
}

PanelFit fgls_with_omega(const PanelData& data, const PanelSpec& spec,
                         const Eigen::MatrixXd& omega) {
    return fgls_impl(data, spec, &omega);
}

std::string format_table(const PanelFit& fit) {
    std::ostringstream os;
    size_t width = 24;
    for (const auto& c : fit.coefficients) width = std::max(width, c.name.size() + 2);
    auto row = [&](const std::string& left, const std::string& right) {
        os << left;
        for (size_t i = left.size(); i < width; ++i) os << ' ';
        os << right << '\n';
    };
    os << std::string(width + 24, '=') << '\n';
    row("", "Dependent variable:");
    row("", fit.spec.response);
    row("", "(" + fit.estimator + ")");
    os << std::string(width + 24, '-') << '\n';
    for (const auto& c : fit.coefficients) {
        row(c.name, util::format_double(c.estimate) + c.stars);
        row("", "(" + util::format_double(c.std_error) + ")");
    }
    os << std::string(width + 24, '-') << '\n';
    row("Observations", std::to_string(fit.n_obs));
    row("Journals", std::to_string(fit.n_groups));
    if (fit.n_dropped_groups > 0) row("Journals dropped", std::to_string(fit.n_dropped_groups));
    row(fit.within_r_squared ? "R2 (within)" : "R2", util::format_double(fit.r_squared));
    if (fit.spec.effects == Effects::Random) row("theta", util::format_double(fit.theta));
    if (fit.omega_ridged) row("omega", "ridge-regularized");
    auto test_row = [&](const std::optional<TestResult>& t) {
        if (!t) return;
        std::string s = util::format_double(t->statistic) + " (p=" +
                        util::format_double(t->p_value) + ")";
        if (t->pseudo_inverse) s += " [pseudo-inverse]";
        if (t->degenerate) s += " [degenerate]";
        row(t->name, s);
    };
    test_row(fit.f_fixed_effects);
    test_row(fit.hausman_test);
    test_row(fit.lm_test);
    os << std::string(width + 24, '=') << '\n';
    os << "Note: *p<0.1; **p<0.05; ***p<0.01\n";
    return os.str();
}

namespace {

nlohmann::json test_to_json(const TestResult& t) {
    return {{"name", t.name},       {"statistic", t.statistic},
            {"dof", t.dof},         {"dof2", t.dof2},
            {"p_value", t.p_value}, {"degenerate", t.degenerate},
            {"pseudo_inverse", t.pseudo_inverse}};
}

TestResult test_from_json(const nlohmann::json& j) {
    TestResult t;
    t.name = j.at("name").get<std::string>();
    t.statistic = j.at("statistic").get<double>();
    t.dof = j.at("dof").get<double>();
    t.dof2 = j.at("dof2").get<double>();
    t.p_value = j.at("p_value").get<double>();
    t.degenerate = j.at("degenerate").get<bool>();
    t.pseudo_inverse = j.at("pseudo_inverse").get<bool>();
    return t;
}

}  // namespace

std::string fit_to_json_string(const PanelFit& fit) {
    nlohmann::json j;
    j["format"] = "jindex-panel-fit";
    j["version"] = 1;
    j["response"] = fit.spec.response;
    j["regressors"] = fit.spec.regressors;
    j["effects"] = to_string(fit.spec.effects);
    j["gls"] = fit.spec.gls;
    j["estimator"] = fit.estimator;
    nlohmann::json coefs = nlohmann::json::array();
    for (const auto& c : fit.coefficients)
        coefs.push_back({{"name", c.name},
                         {"estimate", c.estimate},
                         {"std_error", c.std_error},
                         {"t_stat", c.t_stat},
                         {"p_value", c.p_value},
                         {"stars", c.stars}});
    j["coefficients"] = std::move(coefs);
    j["slope_names"] = fit.slope_names;
    j["r_squared"] = fit.r_squared;
    j["within_r_squared"] = fit.within_r_squared;
    j["n_obs"] = fit.n_obs;
    j["n_journals"] = fit.n_groups;
    j["n_dropped_journals"] = fit.n_dropped_groups;
    j["theta"] = fit.theta;
    j["omega_ridged"] = fit.omega_ridged;
    nlohmann::json fe = nlohmann::json::object();
    for (const auto& [id, alpha] : fit.fixed_effects) {
        const std::string label = id >= 0 && id < static_cast<int>(fit.group_labels.size())
                                      ? fit.group_labels[id]
                                      : std::to_string(id);
        fe[label] = alpha;
    }
    j["fixed_effects"] = std::move(fe);
    if (fit.f_fixed_effects) j["f_fixed_effects"] = test_to_json(*fit.f_fixed_effects);
    if (fit.hausman_test) j["hausman"] = test_to_json(*fit.hausman_test);
    if (fit.lm_test) j["lm_random_effects"] = test_to_json(*fit.lm_test);
    return j.dump(2);
}

PanelFit fit_from_json_string(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "jindex-panel-fit")
        throw std::invalid_argument("not a panel-fit file");
    PanelFit f;
    f.spec.response = j.at("response").get<std::string>();
    f.spec.regressors = j.at("regressors").get<std::vector<std::string>>();
    f.spec.effects = effects_from_string(j.at("effects").get<std::string>());
    f.spec.gls = j.at("gls").get<bool>();
    f.estimator = j.at("estimator").get<std::string>();
    for (const auto& jc : j.at("coefficients")) {
        Coef c;
        c.name = jc.at("name").get<std::string>();
        c.estimate = jc.at("estimate").get<double>();
        c.std_error = jc.at("std_error").get<double>();
        c.t_stat = jc.at("t_stat").get<double>();
        c.p_value = jc.at("p_value").get<double>();
        c.stars = jc.at("stars").get<std::string>();
        f.coefficients.push_back(std::move(c));
    }
    f.slope_names = j.at("slope_names").get<std::vector<std::string>>();
    f.r_squared = j.at("r_squared").get<double>();
    f.within_r_squared = j.at("within_r_squared").get<bool>();
    f.n_obs = j.at("n_obs").get<int>();
    f.n_groups = j.at("n_journals").get<int>();
    f.n_dropped_groups = j.at("n_dropped_journals").get<int>();
    f.theta = j.at("theta").get<double>();
    f.omega_ridged = j.at("omega_ridged").get<bool>();
    if (j.contains("f_fixed_effects")) f.f_fixed_effects = test_from_json(j["f_fixed_effects"]);
    if (j.contains("hausman")) f.hausman_test = test_from_json(j["hausman"]);
    if (j.contains("lm_random_effects")) f.lm_test = test_from_json(j["lm_random_effects"]);
    return f;
}

}  // namespace jindex::panel
