#include "datapeck/coverage.hpp"

#include "datapeck/testkit.hpp"
#include "datapeck/util.hpp"

namespace datapeck {

namespace {

void add_diagnosis_columns(const std::vector<TableSchema>& schema, std::set<ColumnRef>& out) {
    for (const auto& [table, column] : diagnosis_code_columns(schema))
        out.insert({table, column});
}

bool clinical_domain(Domain d) {
    return d == Domain::condition || d == Domain::drug || d == Domain::measurement ||
           d == Domain::procedure;
}

}  // namespace

std::set<ColumnRef> CoverageReport::covered(bool include_metadata) const {
    std::set<ColumnRef> all;
    for (const auto& [level, cols] : per_level) {
        if (!include_metadata && level == TestLevel::metadata) continue;
        all.insert(cols.begin(), cols.end());
    }
    return all;
}

double CoverageReport::overall_percent(bool include_metadata) const {
    if (total_columns == 0) return 0.0;
    return 100.0 * static_cast<double>(covered(include_metadata).size()) /
           static_cast<double>(total_columns);
}

double CoverageReport::level_percent(TestLevel level) const {
    if (total_columns == 0) return 0.0;
    const auto it = per_level.find(level);
    const std::size_t n = it == per_level.end() ? 0 : it->second.size();
    return 100.0 * static_cast<double>(n) / static_cast<double>(total_columns);
}

CoverageReport compute_coverage(const TestSuite& suite, const std::vector<TableSchema>& schema) {
    CoverageReport report;
    for (const auto& table : schema) report.total_columns += table.columns.size();

    for (const auto& c : suite.cases) {
        ++report.tests_per_level[c.level];
        std::set<ColumnRef>& bucket = report.per_level[c.level];

        switch (c.binding.kind) {
            case BindingKind::dtype:
                for (const auto& name : c.binding.dtype_tables)
                    for (const auto& table : schema)
                        if (table.name == name)
                            for (const auto& col : table.columns)
                                bucket.insert({table.name, col.name});
                break;
            case BindingKind::value_match:
                bucket.insert({c.binding.table, c.binding.column});
                if (c.cohort_scope == CohortScope::diagnosed)
                    add_diagnosis_columns(schema, bucket);
                break;
            case BindingKind::code_match:
                if (clinical_domain(c.binding.code_domain)) {
                    const ColumnRole role = role_for_domain(c.binding.code_domain);
                    for (const auto& table : schema)
                        for (const auto& col : table.columns)
                            if (col.role == role) bucket.insert({table.name, col.name});
                }
                if (c.cohort_scope == CohortScope::diagnosed)
                    add_diagnosis_columns(schema, bucket);
                break;
            case BindingKind::cohort_share:
                add_diagnosis_columns(schema, bucket);
                if (c.binding.new_only)
                    if (const auto date_col = diagnosis_date_column(schema))
                        bucket.insert({date_col->first, date_col->second});
                break;
            case BindingKind::age_at_diagnosis:
                add_diagnosis_columns(schema, bucket);
                if (const auto birth = birth_date_column(schema))
                    bucket.insert({birth->first, birth->second});
                if (const auto date_col = diagnosis_date_column(schema))
                    bucket.insert({date_col->first, date_col->second});
                break;
            case BindingKind::none:
                break;  // counts toward tests_per_level, covers nothing
        }
    }
    return report;
}

std::string heatmap_csv(const CoverageReport& report, const std::vector<TableSchema>& schema,
                        bool include_metadata) {
    const std::set<ColumnRef> hits = report.covered(include_metadata);
    std::string out = "table,column,covered\n";
    for (const auto& table : schema)
        for (const auto& col : table.columns) {
            out += escape_delimited(table.name, ',');
            out += ',';
            out += escape_delimited(col.name, ',');
            out += ',';
            out += hits.count({table.name, col.name}) ? '1' : '0';
            out += '\n';
        }
    return out;
}

std::string coverage_long_csv(const CoverageReport& report,
                              const std::vector<TableSchema>& schema) {
    static constexpr TestLevel kLevels[] = {TestLevel::metadata, TestLevel::distribution,
                                            TestLevel::subpopulation};
    std::string out = "table,column,level,covered\n";
    for (const auto& table : schema)
        for (const auto& col : table.columns)
            for (const TestLevel level : kLevels) {
                const auto it = report.per_level.find(level);
                const bool hit =
                    it != report.per_level.end() && it->second.count({table.name, col.name});
                out += escape_delimited(table.name, ',');
                out += ',';
                out += escape_delimited(col.name, ',');
                out += ',';
                out += to_string(level);
                out += ',';
                out += hit ? '1' : '0';
                out += '\n';
            }
    return out;
}

}  // namespace datapeck
