#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "datapeck/gensuite.hpp"

namespace datapeck {

enum class TestStatus { pass, fail, no_reference, error };

std::string to_string(TestStatus s);                      // "Pass" / "Fail" / ...
TestStatus test_status_from_string(std::string_view s);   // throws schema_error

struct TestResult {
    std::string name;
    TestStatus status = TestStatus::error;
    std::optional<double> expected;  // full precision; display rounds
    std::optional<double> actual;
    std::optional<double> smd;
    std::optional<double> ratio;
    std::optional<double> p_value;
    std::string detail;

    bool operator==(const TestResult&) const = default;
};

// Columns shared by binding resolution and coverage: where diagnosis codes,
// diagnosis dates, and birth dates live in a schema. Date columns are matched
// by role; a "birth" substring in the name separates birth dates from event
// dates.
std::vector<std::pair<std::string, std::string>> diagnosis_code_columns(
    const std::vector<TableSchema>& schema);
std::optional<std::pair<std::string, std::string>> birth_date_column(
    const std::vector<TableSchema>& schema);
std::optional<std::pair<std::string, std::string>> diagnosis_date_column(
    const std::vector<TableSchema>& schema);

ColumnRole role_for_domain(Domain domain);  // throws schema_error for non-clinical domains

// True when a code is syntactically valid for a classification system.
// Unrecognized system names skip validation (always true).
bool code_matches_system(std::string_view code, std::string_view system);

// Persons with at least one record in a diagnosis-code column whose value —
// trimmed and uppercased, never dot-normalized — appears in `codes`. Throws
// schema_error when no table carries a diagnosis-code column.
std::set<std::string> extract_cohort(const std::vector<Frame>& frames,
                                     const std::vector<std::string>& codes);

// Runs one compiled case against the data. Shares are person-level: a person
// with five matching records counts once. An empty denominator is an Error
// result, never a silent 0%.
TestResult evaluate(const TestCase& c, const std::vector<Frame>& frames,
                    const std::set<std::string>& cohort);

// One result per case, sorted lexicographically by test name; individual case
// failures become Error results and never abort the run.
std::vector<TestResult> run_suite(const TestSuite& suite, const std::vector<Frame>& frames);

// JSON list of result records; unset numeric fields and empty details are
// omitted.
std::string results_to_json(const std::vector<TestResult>& results);
std::vector<TestResult> results_from_json(const std::string& json_text);
std::vector<TestResult> load_results(const std::string& path);

}  // namespace datapeck
