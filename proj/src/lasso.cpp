#include "jindex/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jindex/rng.hpp"
#include "jindex/util.hpp"

namespace jindex::lasso {

namespace {

double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

Solution finish(const LassoProblem& p, const Eigen::VectorXd& alpha, int sweeps, bool converged,
                std::vector<double> trace) {
    Solution s;
    s.alpha = alpha;
    s.sweeps = sweeps;
    s.converged = converged;
    s.objective_trace = std::move(trace);
    s.slopes = Eigen::VectorXd::Zero(p.n_columns());
    double shift = 0.0;
    for (int k = 0; k < p.n_kept(); ++k) {
        const int j = p.kept_columns()[k];
        const double b = alpha[k] / p.column_scales()[k];
        s.slopes[j] = b;
        shift += b * p.column_means()[k];
    }
    s.intercept = p.y_mean() - shift;
    return s;
}

}  // namespace

LassoProblem::LassoProblem(Eigen::MatrixXd X, Eigen::VectorXd y, std::vector<std::string> names)
    : X_(std::move(X)), y_(std::move(y)), names_(std::move(names)) {
    const Eigen::Index n = X_.rows();
    if (n != y_.size()) throw std::invalid_argument("lasso: X rows and y length differ");
    if (n < 2) throw std::invalid_argument("lasso: need at least 2 observations");
    if (names_.empty()) {
        for (Eigen::Index j = 0; j < X_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
    }
    if (static_cast<Eigen::Index>(names_.size()) != X_.cols())
        throw std::invalid_argument("lasso: names do not match columns");

    y_mean_ = y_.mean();
    y_var_ = (y_.array() - y_mean_).square().sum() / static_cast<double>(n);

    std::vector<double> means, scales;
    for (Eigen::Index j = 0; j < X_.cols(); ++j) {
        const double m = X_.col(j).mean();
        const double v = (X_.col(j).array() - m).square().sum() / static_cast<double>(n);
        if (v <= 0.0) {
            dropped_.push_back(static_cast<int>(j));
            continue;
        }
        kept_.push_back(static_cast<int>(j));
        means.push_back(m);
        scales.push_back(std::sqrt(v));
    }
    mean_ = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    scale_ = Eigen::Map<Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
    Xs_.resize(n, static_cast<Eigen::Index>(kept_.size()));
    for (size_t k = 0; k < kept_.size(); ++k)
        Xs_.col(static_cast<Eigen::Index>(k)) =
            (X_.col(kept_[k]).array() - mean_[static_cast<Eigen::Index>(k)]) /
            scale_[static_cast<Eigen::Index>(k)];
}

double lambda_max(const LassoProblem& p) {
    if (p.n_kept() == 0) return 0.0;
    const Eigen::VectorXd yc = p.response().array() - p.y_mean();
    const double n = static_cast<double>(p.n_rows());
    // Mirrors the coordinate update arithmetic exactly, so solving at this
    // lambda soft-thresholds every coordinate to a hard zero.
    double best = 0.0;
    for (int j = 0; j < p.n_kept(); ++j)
        best = std::max(best, std::fabs(p.standardized().col(j).dot(yc) / n));
    return best;
}

Solution solve_warm(const LassoProblem& p, double lambda, const Eigen::VectorXd& warm_alpha,
                    double tol, int max_sweeps) {
    if (lambda < 0.0) throw std::invalid_argument("lasso: lambda must be non-negative");
    if (tol <= 0.0) throw std::invalid_argument("lasso: tol must be positive");
    const double n = static_cast<double>(p.n_rows());
    const Eigen::MatrixXd& X = p.standardized();
    const Eigen::VectorXd yc = p.response().array() - p.y_mean();

    Eigen::VectorXd alpha = warm_alpha;
    if (alpha.size() != p.n_kept()) alpha = Eigen::VectorXd::Zero(p.n_kept());
    Eigen::VectorXd resid = yc - X * alpha;

    auto update = [&](int j) {
        const double old = alpha[j];
        // Columns have unit 1/N variance, so the denominator is 1.
        const double z = X.col(j).dot(resid) / n + old;
        const double next = soft_threshold(z, lambda);
        if (next == old) return 0.0;
        resid += X.col(j) * (old - next);
        alpha[j] = next;
        return std::fabs(next - old);
    };

    // Full sweeps locate the active set; cheap sweeps over it do the bulk of
    // the work; convergence is declared only by a full sweep whose largest
    // coefficient change stays under tol.
    std::vector<double> trace;
    std::vector<int> active;
    bool converged = p.n_kept() == 0;
    bool full_pass = true;
    int sweep = 0;
    for (; sweep < max_sweeps && !converged; ++sweep) {
        double max_delta = 0.0;
        if (full_pass) {
            active.clear();
            for (int j = 0; j < p.n_kept(); ++j) {
                max_delta = std::max(max_delta, update(j));
                if (alpha[j] != 0.0) active.push_back(j);
            }
            if (max_delta < tol)
                converged = true;
            else
                full_pass = false;
        } else {
            for (int j : active) max_delta = std::max(max_delta, update(j));
            if (max_delta < tol) full_pass = true;
        }
        trace.push_back(resid.squaredNorm() / (2.0 * n) + lambda * alpha.cwiseAbs().sum());
    }
    Solution s = finish(p, alpha, sweep, converged, std::move(trace));
    if (!converged)
        throw ConvergenceError("lasso did not converge in " + std::to_string(max_sweeps) +
                                   " sweeps at lambda=" + util::format_double(lambda),
                               std::move(s));
    return s;
}

Solution solve(const LassoProblem& p, double lambda, double tol, int max_sweeps) {
    return solve_warm(p, lambda, Eigen::VectorXd::Zero(p.n_kept()), tol, max_sweeps);
}

namespace {

std::vector<double> lambda_grid(double lmax, int num_lambdas, double lambda_ratio) {
    if (num_lambdas < 1) throw std::invalid_argument("lasso path: need at least 1 lambda");
    if (!(lambda_ratio > 0.0 && lambda_ratio < 1.0))
        throw std::invalid_argument("lasso path: lambda_ratio must be in (0,1)");
    if (num_lambdas == 1) return {lmax};
    std::vector<double> grid(num_lambdas);
    for (int i = 0; i < num_lambdas; ++i)
        grid[i] = lmax * std::pow(lambda_ratio,
                                  static_cast<double>(i) / static_cast<double>(num_lambdas - 1));
    return grid;
}

double mse_of(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& slopes,
              double intercept) {
    const Eigen::VectorXd fitted = (X * slopes).array() + intercept;
    return (y - fitted).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

LassoPath path(const LassoProblem& p, int num_lambdas, double lambda_ratio, double tol,
               int max_sweeps) {
    const double lmax = lambda_max(p);
    if (lmax <= 0.0)
        throw std::invalid_argument("lasso path: lambda_max is zero (response orthogonal to all columns)");
    const auto grid = lambda_grid(lmax, num_lambdas, lambda_ratio);

    LassoPath out;
    out.names = p.names();
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(p.n_kept());
    for (double lambda : grid) {
        Solution s = solve_warm(p, lambda, warm, tol, max_sweeps);
        warm = s.alpha;
        const double mse = mse_of(p.original(), p.response(), s.slopes, s.intercept);
        const double fve = p.y_variance() > 0.0 ? 1.0 - mse / p.y_variance() : 1.0;
        out.points.push_back(
            {lambda, s.slopes, s.intercept, s.active_count(), mse, fve});
    }
    return out;
}

CvResult cross_validate(const LassoProblem& p, int folds, int num_lambdas, double lambda_ratio,
                        uint64_t seed, const std::vector<int>* fold_assignment, double tol,
                        int max_sweeps, int n_threads) {
    const int n = p.n_rows();
    if (folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
    if (n < folds) throw std::invalid_argument("cross_validate: more folds than rows");

    std::vector<int> assign(n);
    if (fold_assignment) {
        if (static_cast<int>(fold_assignment->size()) != n)
            throw std::invalid_argument("cross_validate: fold assignment length mismatch");
        assign = *fold_assignment;
        for (int f : assign)
            if (f < 0 || f >= folds)
                throw std::invalid_argument("cross_validate: fold id out of range");
    } else {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng::Stream stream(rng::key(seed, 0x632d666f6c6473ull));  // cv-fold stream
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[stream.below(static_cast<uint64_t>(i + 1))]);
        for (int i = 0; i < n; ++i) assign[order[i]] = i % folds;
    }
    {
        std::vector<int> count(folds, 0);
        for (int f : assign) ++count[f];
        for (int f = 0; f < folds; ++f)
            if (count[f] < 2)
                throw std::invalid_argument("cross_validate: fold " + std::to_string(f) +
                                            " has fewer than 2 rows");
    }

    const double lmax = lambda_max(p);
    if (lmax <= 0.0)
        throw std::invalid_argument("cross_validate: lambda_max is zero");
    const auto grid = lambda_grid(lmax, num_lambdas, lambda_ratio);

    // fold_mse[f][i]: held-out MSE of fold f at grid point i.
    std::vector<std::vector<double>> fold_mse(folds, std::vector<double>(grid.size(), 0.0));
    util::parallel_for(folds, n_threads, [&](int f) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < n; ++i)
            (assign[i] == f ? test_rows : train_rows).push_back(i);
        Eigen::MatrixXd Xtr(train_rows.size(), p.n_columns());
        Eigen::VectorXd ytr(train_rows.size());
        for (size_t r = 0; r < train_rows.size(); ++r) {
            Xtr.row(static_cast<Eigen::Index>(r)) = p.original().row(train_rows[r]);
            ytr[static_cast<Eigen::Index>(r)] = p.response()[train_rows[r]];
        }
        LassoProblem sub(std::move(Xtr), std::move(ytr), p.names());
        Eigen::VectorXd warm = Eigen::VectorXd::Zero(sub.n_kept());
        for (size_t i = 0; i < grid.size(); ++i) {
            Solution s = solve_warm(sub, grid[i], warm, tol, max_sweeps);
            warm = s.alpha;
            double sse = 0.0;
            for (int r : test_rows) {
                const double pred = p.original().row(r).dot(s.slopes) + s.intercept;
                const double e = p.response()[r] - pred;
                sse += e * e;
            }
            fold_mse[f][i] = sse / static_cast<double>(test_rows.size());
        }
    });

    CvResult res;
    res.lambdas = grid;
    res.cv_mse.resize(grid.size());
    res.cv_se.resize(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        double mean = 0.0;
        for (int f = 0; f < folds; ++f) mean += fold_mse[f][i];
        mean /= folds;
        double ss = 0.0;
        for (int f = 0; f < folds; ++f) {
            const double d = fold_mse[f][i] - mean;
            ss += d * d;
        }
        res.cv_mse[i] = mean;
        res.cv_se[i] = folds > 1 ? std::sqrt(ss / (folds - 1) / folds) : 0.0;
    }

    res.index_min = static_cast<int>(
        std::min_element(res.cv_mse.begin(), res.cv_mse.end()) - res.cv_mse.begin());
    res.lambda_min = grid[res.index_min];
    const double cutoff = res.cv_mse[res.index_min] + res.cv_se[res.index_min];
    res.index_sparse = res.index_min;
    for (size_t i = 0; i < grid.size(); ++i) {
        if (res.cv_mse[i] <= cutoff) {
            res.index_sparse = static_cast<int>(i);  // grid is decreasing: first hit = largest
            break;
        }
    }
    res.lambda_sparse = grid[res.index_sparse];
    return res;
}

ActivationOrder first_k_variables(const LassoPath& path, int k) {
    if (k < 0) throw std::invalid_argument("first_k_variables: k must be non-negative");
    ActivationOrder out;
    std::vector<bool> seen(path.names.size(), false);
    std::vector<int> order;
    for (const auto& pt : path.points)
        for (Eigen::Index j = 0; j < pt.slopes.size(); ++j)
            if (pt.slopes[j] != 0.0 && !seen[static_cast<size_t>(j)]) {
                seen[static_cast<size_t>(j)] = true;
                order.push_back(static_cast<int>(j));
            }
    if (k > static_cast<int>(order.size())) {
        out.truncated = true;
        out.columns = order;
    } else {
        out.columns.assign(order.begin(), order.begin() + k);
    }
    return out;
}

}  // namespace jindex::lasso
