#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace datapeck {

enum class ColumnType { integer, floating, text, date, code, boolean };
enum class ColumnRole {
    person_id,
    demographic,
    diagnosis_code,
    drug_code,
    measurement_code,
    measurement_value,
    procedure_code,
    date,
    other
};

std::string to_string(ColumnType t);
std::string to_string(ColumnRole r);
ColumnType column_type_from_string(std::string_view s);  // throws schema_error
ColumnRole column_role_from_string(std::string_view s);  // throws schema_error

struct ColumnSchema {
    std::string name;
    ColumnType type = ColumnType::text;
    ColumnRole role = ColumnRole::other;
    bool nullable = true;

    bool operator==(const ColumnSchema&) const = default;
};

struct TableSchema {
    std::string name;
    std::vector<ColumnSchema> columns;

    // -1 when absent.
    int column_index(std::string_view column_name) const;
    // First column carrying the role, -1 when absent.
    int role_index(ColumnRole role) const;

    bool operator==(const TableSchema&) const = default;
};

// Ordered list of table schemas from a JSON description. Enforces unique
// column names and exactly one person_id role per table.
std::vector<TableSchema> load_schema(const std::string& path);
std::vector<TableSchema> parse_schema(const std::string& json_text, const std::string& origin);
std::string schema_to_json(const std::vector<TableSchema>& tables);

// True when the raw cell text is a syntactically valid value of the declared
// type. A pure function: depends on nothing but its two arguments. Empty cells
// are handled by the nullable rule at load time, not here.
bool cell_conforms(std::string_view raw, ColumnType type);

// Strict ISO-8601 calendar date: YYYY-MM-DD with real month/day ranges.
bool is_valid_iso_date(std::string_view s);
// Days since 1970-01-01 for a valid ISO date.
long long iso_date_to_days(std::string_view s);

// Immutable typed view over one loaded table. Raw cell text is always
// retained; conformance and null flags are computed once at construction.
class Frame {
  public:
    static Frame from_rows(TableSchema schema, std::vector<std::vector<std::string>> rows);

    const TableSchema& schema() const { return schema_; }
    std::size_t row_count() const { return rows_; }
    std::size_t column_count() const { return schema_.columns.size(); }

    const std::string& cell(std::size_t row, std::size_t col) const {
        return columns_[col][row];
    }
    bool is_null(std::size_t row, std::size_t col) const { return null_[col][row]; }
    bool conforms(std::size_t row, std::size_t col) const { return conforming_[col][row]; }

    // Count of cells failing conformance in one column.
    std::size_t nonconforming_count(std::size_t col) const;

  private:
    TableSchema schema_;
    std::size_t rows_ = 0;
    std::vector<std::vector<std::string>> columns_;  // column-major
    std::vector<std::vector<bool>> null_;
    std::vector<std::vector<bool>> conforming_;
};

// RFC 4180 CSV with a header row naming every schema column. Header/schema
// mismatches are reported exhaustively; ragged rows name the line.
Frame load_table(const std::string& csv_path, const TableSchema& schema);
Frame table_from_csv(std::string_view csv_text, const TableSchema& schema,
                     const std::string& origin);

struct CohortCodes {
    std::string vocabulary;
    std::vector<std::string> codes;
};

// Study configuration: what condition and region the suite is about, which
// classification system each clinical domain uses, the similarity-search
// depth, and (optionally) a user-supplied cohort code list.
struct StudySpec {
    std::string condition;
    std::string region;
    std::map<std::string, std::string> coding_systems;  // domain name -> system
    int k = 20;
    std::optional<CohortCodes> cohort_codes;
};

StudySpec load_study_spec(const std::string& path);
StudySpec parse_study_spec(const std::string& json_text, const std::string& origin);

}  // namespace datapeck
