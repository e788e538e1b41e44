#include "jindex/csv.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "jindex/util.hpp"

namespace jindex {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError("cannot open file: " + path, 0, "");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// RFC 4180 style records: '"' quoting, doubled quotes, delimiters and
// newlines allowed inside quoted fields.
std::vector<std::vector<std::string>> parse_records(std::string_view text, char delim) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;

    auto end_field = [&] {
        if (!field_was_quoted) field = std::string(util::trim(field));
        record.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        const bool all_empty =
            record.size() == 1 && record[0].empty();
        if (!all_empty) records.push_back(std::move(record));
        record.clear();
    };

    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && util::trim(field).empty()) {
            in_quotes = true;
            field_was_quoted = true;
            field.clear();
        } else if (c == delim) {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
        } else {
            field.push_back(c);
        }
    }
    if (!field.empty() || field_was_quoted || !record.empty()) end_record();
    return records;
}

bool parse_double(std::string_view cell, char decimal_mark, double& out) {
    std::string buf(util::trim(cell));
    if (buf.empty()) return false;
    if (decimal_mark != '.') {
        if (buf.find('.') != std::string::npos) return false;
        for (char& c : buf)
            if (c == decimal_mark) c = '.';
    }
    const char* begin = buf.data();
    const char* end = buf.data() + buf.size();
    if (*begin == '+') ++begin;
    auto [p, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && p == end;
}

bool parse_int(std::string_view cell, int& out) {
    const auto t = util::trim(cell);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc{} && p == t.data() + t.size();
}

bool is_missing_cell(std::string_view cell) {
    const auto t = util::trim(cell);
    return t.empty() || util::iequals(t, "NA") || util::iequals(t, "N/A");
}

struct SchemaColumn {
    const char* canonical;
    VarKind kind;
    const char* description;
};

const std::unordered_map<std::string, SchemaColumn>& scopus_columns() {
    static const std::unordered_map<std::string, SchemaColumn> cols = {
        {"sjr", {"SJR", VarKind::QualityNumeric, "Scimago Journal Rank"}},
        {"rank", {"Rank", VarKind::QualityNumeric, "SJR ranking position"}},
        {"sjrbestquartile",
         {"SJRBestQuartile", VarKind::CategoricalOther, "Best area quartile"}},
        {"bestquartile", {"SJRBestQuartile", VarKind::CategoricalOther, "Best area quartile"}},
        {"hindex", {"Hindex", VarKind::QualityNumeric, "Journal h-index"}},
        {"totaldocs", {"TotalDocs", VarKind::QualityNumeric, "Documents in the year"}},
        {"totaldocs3years",
         {"TotalDocs3years", VarKind::QualityNumeric, "Documents in the previous three years"}},
        {"totalrefs", {"TotalRefs", VarKind::QualityNumeric, "References in the year"}},
        {"totalcites3years",
         {"TotalCites3years", VarKind::QualityNumeric,
          "Citations to the previous three years"}},
        {"citabledocs3years",
         {"CitableDocs3years", VarKind::QualityNumeric,
          "Citable documents in the previous three years"}},
        {"citesdoc2years",
         {"CitesDoc2years", VarKind::QualityNumeric, "Citations per document, two-year window"}},
        {"citesdoc3years",
         {"CitesDoc3Years", VarKind::QualityNumeric, "Citations per document, three-year window"}},
        {"citesdoc4years",
         {"CitesDoc4Years", VarKind::QualityNumeric, "Citations per document, four-year window"}},
        {"refdoc", {"RefDoc", VarKind::QualityNumeric, "References per document"}},
        {"selfcites3years",
         {"SelfCites3Years", VarKind::QualityNumeric, "Journal self-citations, three years"}},
        {"unciteddocs3years",
         {"UncitedDocs3Years", VarKind::QualityNumeric, "Uncited documents, three years"}},
        {"internationalcollaboration",
         {"InternationalCollaboration", VarKind::QualityNumeric,
          "Share of internationally co-authored documents"}},
        {"externalcites3years",
         {"ExternalCites3Years", VarKind::QualityNumeric,
          "Citations from other journals, three years"}},
        {"noncitabledocs",
         {"NonCitableDocs", VarKind::QualityNumeric, "Documents not meant for citation"}},
        {"citeddocs", {"CitedDocs", VarKind::QualityNumeric, "Documents meant for citation"}},
        {"country", {"Country", VarKind::CategoricalArea, "Country of the journal"}},
        {"region", {"Region", VarKind::CategoricalArea, "Region of the journal"}},
        {"publisher", {"Publisher", VarKind::CategoricalArea, "Publisher"}},
        {"areas", {"Areas", VarKind::CategoricalArea, "ASJC research areas"}},
        {"bigareas", {"BigAreas", VarKind::CategoricalArea, "ASJC big research areas"}},
        {"superareas", {"SuperAreas", VarKind::CategoricalArea, "ASJC super area groups"}},
        {"categories", {"Categories", VarKind::CategoricalArea, "ASJC categories"}},
        {"type", {"Type", VarKind::CategoricalOther, "Source type"}},
        {"issn", {"Issn", VarKind::CategoricalOther, "ISSN list"}},
        {"sourceid", {"Sourceid", VarKind::CategoricalOther, "Scimago source id"}},
        {"coverage", {"Coverage", VarKind::CategoricalOther, "Coverage years"}},
        {"openaccess", {"OpenAccess", VarKind::Boolean, "Open access flag"}},
        {"multidisciplinary",
         {"Multidisciplinary", VarKind::Boolean, "Multidisciplinary flag"}},
    };
    return cols;
}

const std::unordered_map<std::string, SchemaColumn>& wos_columns() {
    static const std::unordered_map<std::string, SchemaColumn> cols = {
        {"if", {"JournalImpactFactor", VarKind::QualityNumeric, "Journal Impact Factor"}},
        {"impactfactor",
         {"JournalImpactFactor", VarKind::QualityNumeric, "Journal Impact Factor"}},
        {"journalimpactfactor",
         {"JournalImpactFactor", VarKind::QualityNumeric, "Journal Impact Factor"}},
        {"5yearimpactfactor",
         {"5YearImpactFactor", VarKind::QualityNumeric, "Five-year impact factor"}},
        {"impactfactorwithoutjournalselfcites",
         {"ImpactFactorWithoutJournalSelfCites", VarKind::QualityNumeric,
          "Impact factor excluding self-citations"}},
        {"immediacyindex",
         {"ImmediacyIndex", VarKind::QualityNumeric, "Same-year citations per article"}},
        {"citableitems", {"CitableItems", VarKind::QualityNumeric, "Citable items"}},
        {"eigenfactorscore",
         {"EigenfactorScore", VarKind::QualityNumeric, "Eigenfactor score"}},
        {"articleinfluencescore",
         {"ArticleInfluenceScore", VarKind::QualityNumeric, "Article influence score"}},
        {"averagejournalimpactfactorpercentile",
         {"AverageJournalImpactFactorPercentile", VarKind::QualityNumeric,
          "Average impact-factor percentile"}},
        {"normalizedeigenfactor",
         {"NormalizedEigenfactor", VarKind::QualityNumeric, "Normalized eigenfactor"}},
    };
    return cols;
}

bool is_journal_column(const std::string& key, CsvSchema schema) {
    if (key == "title" || key == "journal") return true;
    if (schema == CsvSchema::Wos && key == "fulljournaltitle") return true;
    return false;
}

// Recovers database provenance for canonical-panel columns named like known
// schema variables (including indicator columns derived from categoricals).
void annotate_from_schemas(VariableMeta& meta) {
    const std::string key = util::match_key(meta.name);
    for (auto [source, columns] :
         {std::pair{VarSource::Scopus, &scopus_columns()}, {VarSource::Wos, &wos_columns()}}) {
        if (auto it = columns->find(key); it != columns->end()) {
            meta.source = source;
            if ((it->second.kind == VarKind::QualityNumeric) == !meta.is_categorical())
                meta.kind = it->second.kind;
            if (meta.description.empty()) meta.description = it->second.description;
            return;
        }
        for (const auto& [ckey, column] : *columns) {
            const bool categorical = column.kind != VarKind::QualityNumeric;
            if (categorical && key.size() > ckey.size() && key.compare(0, ckey.size(), ckey) == 0) {
                meta.source = source;  // indicator expanded from a known categorical
                return;
            }
        }
    }
}

std::string csv_field(std::string_view s, char delim) {
    const bool need_quotes =
        s.find_first_of(std::string{delim} + "\"\n\r") != std::string_view::npos ||
        (!s.empty() && (s.front() == ' ' || s.back() == ' '));
    if (!need_quotes) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

PanelDataset load_csv(const std::string& path, CsvSchema schema, const CsvOptions& options) {
    const char delim = options.delimiter != '\0' ? options.delimiter
                       : schema == CsvSchema::Scopus ? ';'
                                                     : ',';
    const char decimal = options.decimal_mark != '\0' ? options.decimal_mark
                         : schema == CsvSchema::Scopus ? ','
                                                       : '.';
    const auto records = parse_records(read_file(path), delim);
    if (records.empty()) throw CsvError("empty file: " + path, 0, "");

    const auto& header = records[0];
    const auto& known =
        schema == CsvSchema::Scopus ? scopus_columns() : wos_columns();
    std::unordered_set<std::string> flagged;
    for (const auto& c : options.categorical_columns) flagged.insert(util::match_key(c));

    int journal_col = -1, year_col = -1;
    std::vector<int> var_of_col(header.size(), -1);
    std::vector<VariableMeta> vars;
    for (size_t c = 0; c < header.size(); ++c) {
        const std::string key = util::match_key(header[c]);
        if (is_journal_column(key, schema)) {
            if (journal_col >= 0)
                throw CsvError("two journal-identity columns in header", 0, header[c]);
            journal_col = static_cast<int>(c);
            continue;
        }
        if (key == "year") {
            if (year_col >= 0) throw CsvError("two year columns in header", 0, header[c]);
            year_col = static_cast<int>(c);
            continue;
        }
        VariableMeta meta;
        if (auto it = known.find(key); it != known.end()) {
            meta.name = it->second.canonical;
            meta.kind = it->second.kind;
            meta.description = it->second.description;
        } else {
            meta.name = util::sanitize_identifier(header[c]);
            meta.kind = flagged.count(key) ? VarKind::CategoricalOther : VarKind::QualityNumeric;
            meta.description = "column '" + header[c] + "'";
        }
        if (flagged.count(key) && !meta.is_categorical()) meta.kind = VarKind::CategoricalOther;
        if (meta.name.empty())
            throw CsvError("column name empty after sanitization", 0, header[c]);
        meta.source = schema == CsvSchema::Scopus ? VarSource::Scopus : VarSource::Wos;
        var_of_col[c] = static_cast<int>(vars.size());
        vars.push_back(std::move(meta));
    }
    if (journal_col < 0)
        throw CsvError("header is missing the journal-identity column (Title/Journal)", 0, "");
    if (year_col < 0) throw CsvError("header is missing the Year column", 0, "");

    // First pass: collect journals (first-appearance order) and years.
    std::vector<std::string> journals;
    std::unordered_map<std::string, int> journal_idx;
    std::set<int> year_set;
    for (size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != header.size())
            throw CsvError("row has " + std::to_string(rec.size()) + " fields, header has " +
                               std::to_string(header.size()),
                           r, "");
        const std::string& title = rec[journal_col];
        if (title.empty()) throw CsvError("empty journal identity", r, header[journal_col]);
        if (!journal_idx.count(title)) {
            journal_idx[title] = static_cast<int>(journals.size());
            journals.push_back(title);
        }
        int year;
        if (!parse_int(rec[year_col], year))
            throw CsvError("unparseable year '" + rec[year_col] + "' at row " + std::to_string(r),
                           r, header[year_col]);
        year_set.insert(year);
    }

    PanelDataset d(journals, std::vector<int>(year_set.begin(), year_set.end()), vars);

    std::set<std::pair<int, int>> seen;
    for (size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const int j = journal_idx[rec[journal_col]];
        int year;
        parse_int(rec[year_col], year);
        const int y = d.year_index(year);
        if (!seen.emplace(j, y).second)
            throw CsvError("duplicate (journal, year) row: '" + rec[journal_col] + "', " +
                               std::to_string(year) + " at row " + std::to_string(r),
                           r, "");
        for (size_t c = 0; c < rec.size(); ++c) {
            const int v = var_of_col[c];
            if (v < 0 || is_missing_cell(rec[c])) continue;
            if (d.variable(v).is_categorical()) {
                d.set(j, y, v, d.add_level(v, std::string(util::trim(rec[c]))));
            } else {
                double x;
                if (!parse_double(rec[c], decimal, x))
                    throw CsvError("unparseable numeric cell '" + rec[c] + "' at row " +
                                       std::to_string(r) + ", column '" + header[c] + "'",
                                   r, header[c]);
                d.set(j, y, v, x);
            }
        }
    }
    return d;
}

PanelDataset read_panel_csv(std::istream& in, const std::string& origin) {
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto records = parse_records(ss.str(), ',');
    if (records.empty()) throw CsvError("empty panel file: " + origin, 0, "");
    const auto& header = records[0];
    if (header.size() < 2 || util::match_key(header[0]) != "journal" ||
        util::match_key(header[1]) != "year")
        throw CsvError("canonical panel header must start with journal,year", 0, "");

    const size_t n_vars = header.size() - 2;
    // A column is categorical when any non-empty cell fails to parse as a number.
    std::vector<bool> categorical(n_vars, false);
    for (size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != header.size())
            throw CsvError("row width mismatch at row " + std::to_string(r), r, "");
        for (size_t c = 2; c < rec.size(); ++c) {
            double x;
            if (!is_missing_cell(rec[c]) && !parse_double(rec[c], '.', x))
                categorical[c - 2] = true;
        }
    }

    std::vector<VariableMeta> vars;
    for (size_t c = 2; c < header.size(); ++c) {
        VariableMeta meta;
        meta.name = header[c];
        meta.source = VarSource::Derived;
        meta.kind = categorical[c - 2] ? VarKind::CategoricalOther : VarKind::QualityNumeric;
        annotate_from_schemas(meta);
        vars.push_back(std::move(meta));
    }

    std::vector<std::string> journals;
    std::unordered_map<std::string, int> journal_idx;
    std::set<int> year_set;
    for (size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (!journal_idx.count(rec[0])) {
            journal_idx[rec[0]] = static_cast<int>(journals.size());
            journals.push_back(rec[0]);
        }
        int year;
        if (!parse_int(rec[1], year))
            throw CsvError("unparseable year '" + rec[1] + "' at row " + std::to_string(r), r,
                           "year");
        year_set.insert(year);
    }

    PanelDataset d(journals, std::vector<int>(year_set.begin(), year_set.end()), vars);
    std::set<std::pair<int, int>> seen;
    for (size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const int j = journal_idx[rec[0]];
        int year;
        parse_int(rec[1], year);
        const int y = d.year_index(year);
        if (!seen.emplace(j, y).second)
            throw CsvError("duplicate (journal, year) row: '" + rec[0] + "', " +
                               std::to_string(year),
                           r, "");
        for (size_t c = 2; c < rec.size(); ++c) {
            const int v = static_cast<int>(c) - 2;
            if (is_missing_cell(rec[c])) continue;
            if (d.variable(v).is_categorical()) {
                d.set(j, y, v, d.add_level(v, std::string(util::trim(rec[c]))));
            } else {
                double x;
                parse_double(rec[c], '.', x);
                d.set(j, y, v, x);
            }
        }
    }
    return d;
}

PanelDataset load_panel_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError("cannot open file: " + path, 0, "");
    return read_panel_csv(in, path);
}

void write_panel_csv(const PanelDataset& d, std::ostream& out) {
    out << "journal,year";
    for (const auto& v : d.variables()) out << ',' << csv_field(v.name, ',');
    out << '\n';
    for (int j = 0; j < d.n_journals(); ++j) {
        for (int y = 0; y < d.n_years(); ++y) {
            if (!d.has_observation(j, y)) continue;
            out << csv_field(d.journals()[j], ',') << ',' << d.years()[y];
            for (int v = 0; v < d.n_variables(); ++v) {
                out << ',';
                if (d.is_missing(j, y, v)) continue;
                if (d.variable(v).is_categorical())
                    out << csv_field(d.level_label(j, y, v), ',');
                else
                    out << util::format_double(d.value(j, y, v));
            }
            out << '\n';
        }
    }
}

void write_panel_csv(const PanelDataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError("cannot write file: " + path, 0, "");
    write_panel_csv(d, out);
}

std::string panel_csv_string(const PanelDataset& d) {
    std::ostringstream ss;
    write_panel_csv(d, ss);
    return ss.str();
}

void write_matrix_csv(const std::vector<std::string>& names, const Eigen::MatrixXd& m,
                      std::ostream& out) {
    if (m.rows() != m.cols() || static_cast<size_t>(m.rows()) != names.size())
        throw std::invalid_argument("write_matrix_csv: square matrix with matching names required");
    out << "variable";
    for (const auto& n : names) out << ',' << csv_field(n, ',');
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << csv_field(names[i], ',');
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << util::format_double(m(i, c));
        out << '\n';
    }
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_matrix_csv(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto records = parse_records(ss.str(), ',');
    if (records.size() < 2) throw CsvError("matrix file needs a header and rows", 0, "");
    const size_t n = records[0].size() - 1;
    if (records.size() - 1 != n) throw CsvError("matrix file is not square", 0, "");
    std::vector<std::string> names(records[0].begin() + 1, records[0].end());
    Eigen::MatrixXd m(n, n);
    for (size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != n + 1)
            throw CsvError("matrix row width mismatch at row " + std::to_string(r), r, "");
        if (records[r][0] != names[r - 1])
            throw CsvError("matrix row label '" + records[r][0] + "' does not match header", r,
                           "");
        for (size_t c = 1; c <= n; ++c) {
            double x;
            if (!parse_double(records[r][c], '.', x))
                throw CsvError("unparseable matrix cell at row " + std::to_string(r), r,
                               names[c - 1]);
            m(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) = x;
        }
    }
    return {std::move(names), std::move(m)};
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> load_matrix_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError("cannot open file: " + path, 0, "");
    return read_matrix_csv(in);
}

}  // namespace jindex
