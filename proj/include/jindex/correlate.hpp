#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "jindex/dataset.hpp"

namespace jindex::correlate {

struct CorrelationMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd values;  // symmetric, unit diagonal, entries in [-1, 1]
};

struct Cluster {
    std::vector<int> members;  // column indices, ascending
    int representative;        // member with highest mean |corr| to its group
};

struct ClusterPartition {
    std::vector<std::string> names;
    std::vector<Cluster> groups;  // disjoint, covering all variables
};

/// Pooled Pearson correlations over the complete-case (journal, year) rows.
CorrelationMatrix correlation_matrix(const PanelDataset& d,
                                     const std::vector<std::string>& variables);
CorrelationMatrix correlation_matrix(const Eigen::MatrixXd& columns,
                                     std::vector<std::string> names);

/// Single-linkage connected components of the graph with an edge wherever
/// |corr| >= threshold. Ties in the representative rule break by column order.
ClusterPartition cluster(const CorrelationMatrix& m, double threshold);

struct VifEntry {
    std::string name;
    double vif;        // >= 1; +inf under exact collinearity
    bool infinite;     // exact collinearity flag
};

/// VIF_j = 1 / (1 - R^2_j) from regressing column j on the others with an
/// intercept. A single variable has VIF 1 by convention.
std::vector<VifEntry> vif(const PanelDataset& d, const std::vector<std::string>& variables);
std::vector<VifEntry> vif(const Eigen::MatrixXd& columns, std::vector<std::string> names);

}  // namespace jindex::correlate
