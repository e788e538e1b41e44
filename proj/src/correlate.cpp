#include "jindex/correlate.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace jindex::correlate {

CorrelationMatrix correlation_matrix(const Eigen::MatrixXd& columns,
                                     std::vector<std::string> names) {
    const Eigen::Index n = columns.rows();
    const Eigen::Index p = columns.cols();
    if (static_cast<Eigen::Index>(names.size()) != p)
        throw std::invalid_argument("correlation_matrix: names do not match columns");
    if (n < 2) throw std::invalid_argument("correlation_matrix: need at least 2 rows");

    Eigen::MatrixXd centered = columns.rowwise() - columns.colwise().mean();
    Eigen::VectorXd norms(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        norms[j] = centered.col(j).norm();
        if (norms[j] <= 0.0)
            throw std::invalid_argument("correlation_matrix: zero-variance variable " + names[j]);
    }
    CorrelationMatrix out;
    out.names = std::move(names);
    out.values.resize(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        out.values(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < p; ++j) {
            double r = centered.col(i).dot(centered.col(j)) / (norms[i] * norms[j]);
            r = std::clamp(r, -1.0, 1.0);
            out.values(i, j) = r;
            out.values(j, i) = r;
        }
    }
    return out;
}

CorrelationMatrix correlation_matrix(const PanelDataset& d,
                                     const std::vector<std::string>& variables) {
    auto pooled = d.pooled(variables);
    return correlation_matrix(pooled.values, pooled.names);
}

ClusterPartition cluster(const CorrelationMatrix& m, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("cluster: threshold must be in (0,1)");
    const int p = static_cast<int>(m.names.size());

    // Union-find over the |corr| >= threshold graph.
    std::vector<int> parent(p);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            if (std::fabs(m.values(i, j)) >= threshold) {
                const int a = find(i), b = find(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }

    ClusterPartition out;
    out.names = m.names;
    std::vector<int> group_of(p, -1);
    for (int i = 0; i < p; ++i) {
        const int root = find(i);
        if (group_of[root] < 0) {
            group_of[root] = static_cast<int>(out.groups.size());
            out.groups.push_back({{}, -1});
        }
        out.groups[group_of[root]].members.push_back(i);
    }

    for (auto& g : out.groups) {
        if (g.members.size() == 1) {
            g.representative = g.members[0];
            continue;
        }
        double best = -1.0;
        for (int i : g.members) {
            double sum = 0.0;
            for (int j : g.members)
                if (j != i) sum += std::fabs(m.values(i, j));
            const double mean = sum / static_cast<double>(g.members.size() - 1);
            if (mean > best) {  // strict: earlier (lower-index) member wins ties
                best = mean;
                g.representative = i;
            }
        }
    }
    return out;
}

std::vector<VifEntry> vif(const Eigen::MatrixXd& columns, std::vector<std::string> names) {
    const Eigen::Index n = columns.rows();
    const Eigen::Index p = columns.cols();
    if (static_cast<Eigen::Index>(names.size()) != p)
        throw std::invalid_argument("vif: names do not match columns");
    std::vector<VifEntry> out;
    if (p == 1) {
        out.push_back({names[0], 1.0, false});
        return out;
    }
    if (n <= p) throw std::invalid_argument("vif: need more rows than variables");

    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::MatrixXd X(n, p);  // intercept + other columns
        X.col(0).setOnes();
        Eigen::Index c = 1;
        for (Eigen::Index k = 0; k < p; ++k)
            if (k != j) X.col(c++) = columns.col(k);
        const Eigen::VectorXd& y = columns.col(j);
        const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
        const double rss = (y - X * beta).squaredNorm();
        const double tss = (y.array() - y.mean()).square().sum();
        if (tss <= 0.0)
            throw std::invalid_argument("vif: zero-variance variable " + names[j]);
        const double r2 = 1.0 - rss / tss;
        constexpr double near_one = 1.0 - 1e-12;
        if (r2 >= near_one) {
            out.push_back({names[j], std::numeric_limits<double>::infinity(), true});
        } else {
            out.push_back({names[j], 1.0 / (1.0 - r2), false});
        }
    }
    return out;
}

std::vector<VifEntry> vif(const PanelDataset& d, const std::vector<std::string>& variables) {
    auto pooled = d.pooled(variables);
    return vif(pooled.values, pooled.names);
}

}  // namespace jindex::correlate
