#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "datapeck/frame.hpp"
#include "datapeck/gensuite.hpp"

namespace datapeck {

struct ColumnRef {
    std::string table;
    std::string column;

    auto operator<=>(const ColumnRef&) const = default;
};

// Which dataset columns the suite inspects, bucketed by test level. The same
// column may appear at several levels; `covered()` is the union.
struct CoverageReport {
    std::map<TestLevel, std::set<ColumnRef>> per_level;
    std::map<TestLevel, std::size_t> tests_per_level;
    std::size_t total_columns = 0;

    std::set<ColumnRef> covered(bool include_metadata = true) const;
    double overall_percent(bool include_metadata = true) const;
    double level_percent(TestLevel level) const;
};

// Pure function of the suite's bindings and the schema; cell values are never
// consulted. Cases without a usable binding count toward tests_per_level but
// cover no columns.
CoverageReport compute_coverage(const TestSuite& suite, const std::vector<TableSchema>& schema);

// One row per (table, column) in declared order, data column "covered" 0/1.
// include_metadata=false drops metadata-level contributions so the heatmap
// highlights the value-inspecting tests.
std::string heatmap_csv(const CoverageReport& report, const std::vector<TableSchema>& schema,
                        bool include_metadata);

// Long-format variant: one row per (table, column, level).
std::string coverage_long_csv(const CoverageReport& report,
                              const std::vector<TableSchema>& schema);

}  // namespace datapeck
