#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace jindex::lasso {

/// L1-penalized least squares in the Lagrangian convention:
///   (1/2N) * ||y - a0 - X a||^2 + lambda * sum_j |a_j|
/// Features are standardized to mean 0 and unit (1/N) variance before
/// penalization; reported coefficients are transformed back to the original
/// units. The intercept is never penalized.
class LassoProblem {
public:
    LassoProblem(Eigen::MatrixXd X, Eigen::VectorXd y, std::vector<std::string> names = {});

    int n_rows() const { return static_cast<int>(Xs_.rows()); }
    int n_kept() const { return static_cast<int>(Xs_.cols()); }
    int n_columns() const { return static_cast<int>(names_.size()); }

    const std::vector<std::string>& names() const { return names_; }
    /// Indices of original columns that survived standardization.
    const std::vector<int>& kept_columns() const { return kept_; }
    /// Constant columns dropped before fitting.
    const std::vector<int>& dropped_columns() const { return dropped_; }

    const Eigen::MatrixXd& original() const { return X_; }
    const Eigen::MatrixXd& standardized() const { return Xs_; }
    const Eigen::VectorXd& response() const { return y_; }
    const Eigen::VectorXd& column_means() const { return mean_; }
    const Eigen::VectorXd& column_scales() const { return scale_; }
    double y_mean() const { return y_mean_; }
    /// Population variance of the response (1/N denominator).
    double y_variance() const { return y_var_; }

private:
    Eigen::MatrixXd X_;
    Eigen::MatrixXd Xs_;
    Eigen::VectorXd y_;
    Eigen::VectorXd mean_, scale_;  // per kept column
    std::vector<int> kept_, dropped_;
    std::vector<std::string> names_;
    double y_mean_ = 0.0, y_var_ = 0.0;
};

struct Solution {
    Eigen::VectorXd slopes;      // original units, one per original column
    double intercept = 0.0;
    Eigen::VectorXd alpha;       // standardized coefficients (kept columns)
    int sweeps = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // penalized objective after each sweep

    int active_count() const {
        int n = 0;
        for (Eigen::Index j = 0; j < slopes.size(); ++j)
            if (slopes[j] != 0.0) ++n;
        return n;
    }
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& msg, Solution last)
        : std::runtime_error(msg), last(std::move(last)) {}
    Solution last;
};

/// Smallest penalty at which every slope is exactly zero:
/// max_j |<x_j, y - ybar>| / N on standardized columns.
double lambda_max(const LassoProblem& p);

Solution solve(const LassoProblem& p, double lambda, double tol = 1e-7, int max_sweeps = 1000000);
Solution solve_warm(const LassoProblem& p, double lambda, const Eigen::VectorXd& warm_alpha,
                    double tol = 1e-7, int max_sweeps = 1000000);

struct PathPoint {
    double lambda;
    Eigen::VectorXd slopes;
    double intercept;
    int active_count;
    double train_mse;
    double frac_var_explained;
};

struct LassoPath {
    std::vector<PathPoint> points;  // lambda strictly decreasing
    std::vector<std::string> names;
};

/// Geometric grid from lambda_max down to lambda_max * lambda_ratio,
/// warm-starting each solve from the previous solution.
LassoPath path(const LassoProblem& p, int num_lambdas = 100, double lambda_ratio = 1e-3,
               double tol = 1e-7, int max_sweeps = 1000000);

struct CvResult {
    std::vector<double> lambdas;
    std::vector<double> cv_mse;      // mean of per-fold MSEs
    std::vector<double> cv_se;       // standard error of the fold means
    double lambda_min = 0.0;         // lowest CV-MSE
    double lambda_sparse = 0.0;      // largest lambda within one SE of the minimum
    int index_min = 0;
    int index_sparse = 0;
};

/// K-fold cross-validation over the path grid. Fold assignment is a
/// deterministic function of the seed; pass fold_assignment to pin folds
/// explicitly. Folds may be evaluated concurrently (results are merged in
/// fold order, so the output is independent of n_threads).
CvResult cross_validate(const LassoProblem& p, int folds, int num_lambdas = 100,
                        double lambda_ratio = 1e-3, uint64_t seed = 0,
                        const std::vector<int>* fold_assignment = nullptr, double tol = 1e-7,
                        int max_sweeps = 1000000, int n_threads = 1);

struct ActivationOrder {
    std::vector<int> columns;  // ordered by the lambda at which each first activates
    bool truncated = false;    // k exceeded the number of variables that ever activate
};

/// First k variables to enter the active set along the path (ties broken by
/// column order).
ActivationOrder first_k_variables(const LassoPath& path, int k);

}  // namespace jindex::lasso
