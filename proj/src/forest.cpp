#include "jindex/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "jindex/rng.hpp"
#include "jindex/util.hpp"

namespace jindex::forest {

namespace {

constexpr uint64_t kTreeStream = 0x7472656533ull;
constexpr uint64_t kPermStream = 0x7065726d33ull;

struct Moments {
    double mean = 0.0;
    double sse = 0.0;  // two-pass sum of squared deviations
};

Moments moments_of(const Eigen::VectorXd& y, const std::vector<int>& rows, int lo, int hi) {
    Moments m;
    const int n = hi - lo;
    for (int i = lo; i < hi; ++i) m.mean += y[rows[i]];
    m.mean /= static_cast<double>(n);
    for (int i = lo; i < hi; ++i) {
        const double d = y[rows[i]] - m.mean;
        m.sse += d * d;
    }
    return m;
}

struct BestSplit {
    int var = -1;
    double threshold = 0.0;
    double decrease = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeParams& params,
                rng::Stream& stream, std::vector<int>& rows, std::vector<Node>& nodes)
        : X_(X), y_(y), params_(params), stream_(stream), rows_(rows), nodes_(nodes) {
        mtry_ = params.mtry > 0 ? std::min<int>(params.mtry, static_cast<int>(X.cols()))
                                : (static_cast<int>(X.cols()) + 2) / 3;
        var_pool_.resize(X.cols());
    }

    int build(int lo, int hi, int depth) {
        const int idx = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        const int n = hi - lo;
        const Moments m = moments_of(y_, rows_, lo, hi);
        nodes_[idx].n_samples = n;
        nodes_[idx].prediction = m.mean;
        nodes_[idx].impurity = m.sse;
        if (pure_eps_ < 0.0) pure_eps_ = 1e-12 * (m.sse / static_cast<double>(n));

        const bool can_split = (params_.max_depth == 0 || depth < params_.max_depth) &&
                               n >= params_.min_samples_split &&
                               m.sse > pure_eps_ * static_cast<double>(n);
        if (!can_split) return idx;

        const BestSplit best = search_split(lo, hi, m.sse);
        if (best.var < 0) return idx;

        auto mid_it = std::stable_partition(
            rows_.begin() + lo, rows_.begin() + hi,
            [&](int r) { return X_(r, best.var) <= best.threshold; });
        const int mid = static_cast<int>(mid_it - rows_.begin());

        const int left = build(lo, mid, depth + 1);
        const int right = build(mid, hi, depth + 1);
        nodes_[idx].var = best.var;
        nodes_[idx].threshold = best.threshold;
        nodes_[idx].left = left;
        nodes_[idx].right = right;
        return idx;
    }

private:
    BestSplit search_split(int lo, int hi, double parent_sse) {
        // Sample mtry candidate variables, evaluated in ascending index order
        // so equal-decrease ties go to the lowest variable.
        std::iota(var_pool_.begin(), var_pool_.end(), 0);
        const int p = static_cast<int>(var_pool_.size());
        for (int i = 0; i < mtry_; ++i) {
            const int j = i + static_cast<int>(stream_.below(static_cast<uint64_t>(p - i)));
            std::swap(var_pool_[i], var_pool_[j]);
        }
        std::sort(var_pool_.begin(), var_pool_.begin() + mtry_);

        const int n = hi - lo;
        BestSplit best;
        std::vector<std::pair<double, double>> xy(n);
        for (int c = 0; c < mtry_; ++c) {
            const int v = var_pool_[c];
            for (int i = 0; i < n; ++i) {
                const int r = rows_[lo + i];
                xy[i] = {X_(r, v), y_[r]};
            }
            std::sort(xy.begin(), xy.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double sum_l = 0.0, sumsq_l = 0.0;
            double sum_t = 0.0, sumsq_t = 0.0;
            for (const auto& [x, yy] : xy) {
                sum_t += yy;
                sumsq_t += yy * yy;
            }
            const double total_sse = sumsq_t - sum_t * sum_t / static_cast<double>(n);
            for (int i = 0; i < n - 1; ++i) {
                sum_l += xy[i].second;
                sumsq_l += xy[i].second * xy[i].second;
                if (xy[i].first >= xy[i + 1].first) continue;  // no boundary here
                const int nl = i + 1;
                const int nr = n - nl;
                const double sse_l = sumsq_l - sum_l * sum_l / static_cast<double>(nl);
                const double sum_r = sum_t - sum_l;
                const double sse_r = (sumsq_t - sumsq_l) - sum_r * sum_r / static_cast<double>(nr);
                const double decrease = total_sse - sse_l - sse_r;
                if (decrease > best.decrease && decrease > 1e-12 * parent_sse) {
                    best.var = v;
                    best.threshold = 0.5 * (xy[i].first + xy[i + 1].first);
                    best.decrease = decrease;
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    const TreeParams& params_;
    rng::Stream& stream_;
    std::vector<int>& rows_;
    std::vector<Node>& nodes_;
    std::vector<int> var_pool_;
    int mtry_ = 0;
    double pure_eps_ = -1.0;
};

Tree fit_tree_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<int> rows,
                   std::vector<int> bootstrap_counts, const TreeParams& params,
                   rng::Stream& stream) {
    Tree tree;
    tree.bootstrap_counts = std::move(bootstrap_counts);
    if (rows.empty()) throw std::invalid_argument("fit_tree: empty training set");
    TreeBuilder builder(X, y, params, stream, rows, tree.nodes);
    builder.build(0, static_cast<int>(rows.size()), 0);
    return tree;
}

}  // namespace

double Tree::predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const {
    int i = 0;
    while (!nodes[i].is_leaf()) i = X(row, nodes[i].var) <= nodes[i].threshold ? nodes[i].left
                                                                               : nodes[i].right;
    return nodes[i].prediction;
}

double Tree::predict(const Eigen::RowVectorXd& x) const {
    int i = 0;
    while (!nodes[i].is_leaf()) i = x[nodes[i].var] <= nodes[i].threshold ? nodes[i].left
                                                                          : nodes[i].right;
    return nodes[i].prediction;
}

Tree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeParams& params,
              uint64_t seed) {
    if (X.rows() != y.size()) throw std::invalid_argument("fit_tree: X rows and y length differ");
    rng::Stream stream(rng::key(seed, kTreeStream));
    std::vector<int> rows(X.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree_rows(X, y, std::move(rows), std::vector<int>(X.rows(), 1), params, stream);
}

double Forest::predict(const Eigen::RowVectorXd& x) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
}

Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params,
                  uint64_t seed) {
    if (params.n_trees < 1) throw std::invalid_argument("fit_forest: n_trees must be >= 1");
    if (X.rows() != y.size())
        throw std::invalid_argument("fit_forest: X rows and y length differ");
    const int n = static_cast<int>(X.rows());

    Forest f;
    f.params = params;
    f.seed = seed;
    f.trees.resize(params.n_trees);

    util::parallel_for(params.n_trees, params.n_threads, [&](int t) {
        rng::Stream stream(rng::key(seed, kTreeStream, static_cast<uint64_t>(t)));
        std::vector<int> counts(n, 1);
        std::vector<int> rows;
        rows.reserve(n);
        if (params.bootstrap) {
            std::fill(counts.begin(), counts.end(), 0);
            for (int i = 0; i < n; ++i) ++counts[stream.below(static_cast<uint64_t>(n))];
        }
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < counts[i]; ++k) rows.push_back(i);
        f.trees[t] = fit_tree_rows(X, y, std::move(rows), std::move(counts), params.tree, stream);
    });

    // OOB error, accumulated in tree order.
    Eigen::VectorXd oob_sum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXi oob_cnt = Eigen::VectorXi::Zero(n);
    for (const auto& tree : f.trees)
        for (int i = 0; i < n; ++i)
            if (tree.bootstrap_counts[i] == 0) {
                oob_sum[i] += tree.predict_row(X, i);
                ++oob_cnt[i];
            }
    double sse = 0.0;
    int used = 0;
    for (int i = 0; i < n; ++i) {
        if (oob_cnt[i] == 0) continue;
        const double e = y[i] - oob_sum[i] / static_cast<double>(oob_cnt[i]);
        sse += e * e;
        ++used;
    }
    f.n_never_oob = n - used;
    f.oob_mse = used > 0 ? sse / static_cast<double>(used)
                         : std::numeric_limits<double>::quiet_NaN();
    return f;
}

ImportanceTable importance(const Forest& forest, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, uint64_t seed,
                           std::vector<std::string> names) {
    const int p = static_cast<int>(X.cols());
    const int n = static_cast<int>(X.rows());
    const int n_trees = static_cast<int>(forest.trees.size());
    if (names.empty())
        for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    if (static_cast<int>(names.size()) != p)
        throw std::invalid_argument("importance: names do not match columns");

    // Per-tree permutation importance, merged in tree order afterwards.
    std::vector<Eigen::VectorXd> per_tree(n_trees);
    std::vector<char> tree_has_oob(n_trees, 0);
    util::parallel_for(n_trees, forest.params.n_threads, [&](int t) {
        const Tree& tree = forest.trees[t];
        std::vector<int> oob;
        for (int i = 0; i < n; ++i)
            if (tree.bootstrap_counts[i] == 0) oob.push_back(i);
        per_tree[t] = Eigen::VectorXd::Zero(p);
        if (oob.empty()) return;
        tree_has_oob[t] = 1;

        double base_sse = 0.0;
        for (int i : oob) {
            const double e = y[i] - tree.predict_row(X, i);
            base_sse += e * e;
        }
        const double base_mse = base_sse / static_cast<double>(oob.size());

        Eigen::RowVectorXd xrow(p);
        std::vector<int> perm(oob.size());
        for (int v = 0; v < p; ++v) {
            rng::Stream stream(
                rng::key(seed, kPermStream, static_cast<uint64_t>(t), static_cast<uint64_t>(v)));
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i)
                std::swap(perm[i], perm[stream.below(static_cast<uint64_t>(i + 1))]);
            double sse = 0.0;
            for (size_t k = 0; k < oob.size(); ++k) {
                xrow = X.row(oob[k]);
                xrow[v] = X(oob[perm[k]], v);
                const double e = y[oob[k]] - tree.predict(xrow);
                sse += e * e;
            }
            per_tree[t][v] = sse / static_cast<double>(oob.size()) - base_mse;
        }
    });

    ImportanceTable table;
    table.names = std::move(names);
    table.mse_reduction_raw = Eigen::VectorXd::Zero(p);
    int trees_used = 0;
    for (int t = 0; t < n_trees; ++t) {
        if (!tree_has_oob[t]) continue;
        table.mse_reduction_raw += per_tree[t];
        ++trees_used;
    }
    if (trees_used > 0) table.mse_reduction_raw /= static_cast<double>(trees_used);

    // Purity gains from the stored node impurities: per-tree subtotals in node
    // order, summed in tree order, so an independent re-walk reproduces the
    // totals bitwise.
    table.purity_gain_raw = Eigen::VectorXd::Zero(p);
    for (const auto& tree : forest.trees) {
        Eigen::VectorXd gains = Eigen::VectorXd::Zero(p);
        for (const auto& nd : tree.nodes)
            if (!nd.is_leaf())
                gains[nd.var] +=
                    nd.impurity - tree.nodes[nd.left].impurity - tree.nodes[nd.right].impurity;
        table.purity_gain_raw += gains;
    }

    // (x / max) * 100 rather than x * (100 / max): the maximum then lands on
    // exactly 100 instead of one rounding step away.
    auto normalize = [](const Eigen::VectorXd& raw) {
        Eigen::VectorXd clipped = raw.cwiseMax(0.0);
        const double mx = clipped.maxCoeff();
        if (mx > 0.0) clipped = (clipped / mx) * 100.0;
        return clipped;
    };
    table.mse_reduction = normalize(table.mse_reduction_raw);
    table.purity_gain = normalize(table.purity_gain_raw);
    return table;
}

std::vector<int> select_relevant(const ImportanceTable& table, double threshold) {
    if (threshold < 0.0 || threshold > 100.0)
        throw std::invalid_argument("select_relevant: threshold must be in [0,100]");
    std::vector<int> out;
    for (int j = 0; j < table.mse_reduction.size(); ++j)
        if (table.mse_reduction[j] > threshold && table.purity_gain[j] > threshold)
            out.push_back(j);
    std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
        return table.mse_reduction[a] > table.mse_reduction[b];
    });
    return out;
}

std::string Forest::to_json_string() const {
    nlohmann::json j;
    j["format"] = "jindex-forest";
    j["version"] = 1;
    j["seed"] = seed;
    j["n_trees"] = params.n_trees;
    j["bootstrap"] = params.bootstrap;
    j["max_depth"] = params.tree.max_depth;
    j["min_samples_split"] = params.tree.min_samples_split;
    j["mtry"] = params.tree.mtry;
    if (std::isnan(oob_mse))
        j["oob_mse"] = nullptr;
    else
        j["oob_mse"] = oob_mse;
    j["n_never_oob"] = n_never_oob;
    nlohmann::json jtrees = nlohmann::json::array();
    for (const auto& tree : trees) {
        nlohmann::json jt;
        jt["bootstrap_counts"] = tree.bootstrap_counts;
        nlohmann::json jn = nlohmann::json::array();
        for (const auto& nd : tree.nodes)
            jn.push_back({{"var", nd.var},
                          {"threshold", nd.threshold},
                          {"left", nd.left},
                          {"right", nd.right},
                          {"prediction", nd.prediction},
                          {"impurity", nd.impurity},
                          {"n", nd.n_samples}});
        jt["nodes"] = std::move(jn);
        jtrees.push_back(std::move(jt));
    }
    j["trees"] = std::move(jtrees);
    return j.dump();
}

Forest forest_from_json_string(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "jindex-forest")
        throw std::invalid_argument("not a forest file");
    Forest f;
    f.seed = j.at("seed").get<uint64_t>();
    f.params.n_trees = j.at("n_trees").get<int>();
    f.params.bootstrap = j.at("bootstrap").get<bool>();
    f.params.tree.max_depth = j.at("max_depth").get<int>();
    f.params.tree.min_samples_split = j.at("min_samples_split").get<int>();
    f.params.tree.mtry = j.at("mtry").get<int>();
    f.oob_mse = j.at("oob_mse").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                          : j.at("oob_mse").get<double>();
    f.n_never_oob = j.at("n_never_oob").get<int>();
    for (const auto& jt : j.at("trees")) {
        Tree tree;
        tree.bootstrap_counts = jt.at("bootstrap_counts").get<std::vector<int>>();
        for (const auto& jn : jt.at("nodes")) {
            Node nd;
            nd.var = jn.at("var").get<int>();
            nd.threshold = jn.at("threshold").get<double>();
            nd.left = jn.at("left").get<int>();
            nd.right = jn.at("right").get<int>();
            nd.prediction = jn.at("prediction").get<double>();
            nd.impurity = jn.at("impurity").get<double>();
            nd.n_samples = jn.at("n").get<int>();
            tree.nodes.push_back(nd);
        }
        f.trees.push_back(std::move(tree));
    }
    return f;
}

}  // namespace jindex::forest
