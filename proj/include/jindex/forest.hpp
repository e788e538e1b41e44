#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace jindex::forest {

struct TreeParams {
    int max_depth = 0;          // 0 = unlimited
    int min_samples_split = 5;
    int mtry = 0;               // variables sampled per split; 0 = ceil(p/3)
};

struct ForestParams {
    int n_trees = 300;
    bool bootstrap = true;
    TreeParams tree;
    int n_threads = 1;
};

/// Node impurity is the within-node sum of squared response deviations
/// (response variance times node size). var < 0 marks a leaf.
struct Node {
    int var = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double prediction = 0.0;
    double impurity = 0.0;
    int n_samples = 0;

    bool is_leaf() const { return var < 0; }
};

struct Tree {
    std::vector<Node> nodes;             // nodes[0] is the root
    std::vector<int> bootstrap_counts;   // per training row; 0 = out-of-bag

    double predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const;
    double predict(const Eigen::RowVectorXd& x) const;
};

Tree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeParams& params,
              uint64_t seed);

struct Forest {
    ForestParams params;
    uint64_t seed = 0;
    std::vector<Tree> trees;
    double oob_mse = 0.0;   // NaN when no row is ever out-of-bag
    int n_never_oob = 0;    // rows excluded from the OOB estimate

    double predict(const Eigen::RowVectorXd& x) const;
    std::string to_json_string() const;
};

Forest forest_from_json_string(const std::string& text);

/// Trees train on bootstrap resamples with per-tree seeds derived from the
/// master seed and tree index, so the result is bitwise independent of
/// n_threads.
Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params,
                  uint64_t seed);

struct ImportanceTable {
    std::vector<std::string> names;
    Eigen::VectorXd mse_reduction;       // 0..100, OOB permutation importance
    Eigen::VectorXd purity_gain;         // 0..100, summed split impurity decrease
    Eigen::VectorXd mse_reduction_raw;   // per-variable mean OOB MSE increase
    Eigen::VectorXd purity_gain_raw;     // per-variable total impurity decrease
};

ImportanceTable importance(const Forest& forest, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, uint64_t seed,
                           std::vector<std::string> names = {});

/// Variables with both scores strictly above the threshold, ordered by
/// mse_reduction descending.
std::vector<int> select_relevant(const ImportanceTable& table, double threshold);

}  // namespace jindex::forest
