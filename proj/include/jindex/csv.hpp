#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "jindex/dataset.hpp"

namespace jindex {

enum class CsvSchema { Scopus, Wos };

/// Dialect defaults: Scopus-shaped files use ';' fields with ',' decimals
/// (Scimago exports); WOS-shaped files use ',' fields with '.' decimals.
struct CsvOptions {
    char delimiter = '\0';     // '\0' -> schema default
    char decimal_mark = '\0';  // '\0' -> schema default
    std::vector<std::string> categorical_columns;  // extra columns to treat as categorical
};

struct CsvError : std::runtime_error {
    CsvError(const std::string& msg, size_t row, std::string column)
        : std::runtime_error(msg), row(row), column(std::move(column)) {}
    size_t row;          // 1-based data row (0 = header / file level)
    std::string column;  // offending column name, possibly empty
};

/// Reads a SCOPUS- or WOS-shaped CSV into a panel. Requires journal-identity
/// and year columns; unknown columns are kept as quality numerics unless
/// flagged categorical.
PanelDataset load_csv(const std::string& path, CsvSchema schema, const CsvOptions& options = {});

/// Canonical panel format: ','-delimited, '.'-decimal, UTF-8, columns
/// journal, year, then variables. Categoricals are written as level labels;
/// columns with any non-numeric cell are read back as categoricals.
PanelDataset load_panel_csv(const std::string& path);
PanelDataset read_panel_csv(std::istream& in, const std::string& origin = "<stream>");

void write_panel_csv(const PanelDataset& d, std::ostream& out);
void write_panel_csv(const PanelDataset& d, const std::string& path);
std::string panel_csv_string(const PanelDataset& d);

/// Square headered correlation-matrix CSV (first column holds variable names).
void write_matrix_csv(const std::vector<std::string>& names, const Eigen::MatrixXd& m,
                      std::ostream& out);
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_matrix_csv(std::istream& in);
std::pair<std::vector<std::string>, Eigen::MatrixXd> load_matrix_csv(const std::string& path);

}  // namespace jindex
