#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "datapeck/errors.hpp"
#include "datapeck/frame.hpp"
#include "datapeck/provider.hpp"
#include "datapeck/vocab.hpp"

namespace datapeck {

enum class TestCategory { demography, diagnosis, drug, measurement, procedure, metadata };
enum class TestLevel { metadata, distribution, subpopulation };
enum class ComparisonType { point, range, less_than, greater_than, distribution_welch, dtype_check };
enum class CohortScope { population, diagnosed };
enum class ReferenceStatus { referenced, no_reference };

std::string to_string(TestCategory c);
std::string to_string(TestLevel l);
std::string to_string(ComparisonType c);
TestCategory test_category_from_string(std::string_view s);
TestLevel test_level_from_string(std::string_view s);
ComparisonType comparison_type_from_string(std::string_view s);

// One row of the suite matrix: a proposed test before binding against a schema.
//
// Field conventions by comparison type:
//   point / less_than / greater_than : expected_value holds the threshold or
//                                      expected share (percent).
//   range                            : range_low/range_high hold the bounds,
//                                      expected_value stays empty.
//   distribution_welch               : expected_value holds the reference mean
//                                      and range_low the reference standard
//                                      deviation.
//   dtype_check                      : no numeric expectation.
struct TestSuggestion {
    std::string description;
    TestCategory category = TestCategory::metadata;
    TestLevel level = TestLevel::metadata;
    ComparisonType comparison = ComparisonType::dtype_check;
    std::optional<double> expected_value;
    std::optional<double> range_low;
    std::optional<double> range_high;
    bool diagnosed = false;
    std::string target;
    std::vector<std::string> references;
    bool fixed = false;
    bool remove = false;

    bool operator==(const TestSuggestion&) const = default;
};

// Throws schema_error when the comparison-type field conventions are violated.
void validate_suggestion(const TestSuggestion& s);

// Code lists assembled for one study: the cohort definition plus one list per
// looked-up subject, grouped by domain. Lookup keys are trimmed + lowercased.
struct CodeLibrary {
    std::string condition;
    std::string region;
    std::map<std::string, std::string> coding_systems;  // domain name -> system
    CodeList cohort;
    std::map<Domain, std::vector<CodeList>> lists;

    const CodeList* find(Domain domain, std::string_view subject) const;
};

// Builds the library for a study: the cohort list comes from the spec's
// explicit codes when present (else a vocabulary search for the condition);
// per-subject lists are resolved by similarity search — condition, drug and
// measurement subjects against the vocabulary index, demographic subjects
// against the values actually present in the data frames.
CodeLibrary build_code_library(const StudySpec& spec, const std::vector<GroundedStat>& stats,
                               const EmbeddingIndex& vocab_index, const Embedder& embedder,
                               const std::vector<Frame>& frames);

// Cohort definition alone: the spec's explicit codes when present, else a
// vocabulary search (pass null index/embedder to skip searching).
CodeList resolve_cohort(const StudySpec& spec, const EmbeddingIndex* vocab_index,
                        const Embedder* embedder);

// Library for running an existing suite matrix without a vocabulary: the
// cohort comes from the spec's explicit codes, and demographic subjects for
// matrix rows lacking a target are resolved against the data frames. Clinical
// rows must carry their codes inline in the target.
CodeLibrary build_runtime_library(const StudySpec& spec,
                                  const std::vector<TestSuggestion>& suggestions,
                                  const std::vector<Frame>& frames, const Embedder& embedder);

// Turns grounded statistics into one suggestion per applicable statistic
// (age mean + age sd pair into a single comparison), then appends exactly one
// data-type check per table. Suggestion targets use the binding grammar
// understood by compile():
//   "cohort"                      cohort share of the whole dataset
//   "cohort:new"                  newly-diagnosed share (most recent year)
//   "age_at_diagnosis"            age distribution of the cohort
//   "table:<name>"                data-type check of one table
//   "<table>.<column>=<value>"    share of persons with that column value
//   "codes:<domain>:<subject>=c1,c2,..."  share of persons carrying a code
std::vector<TestSuggestion> suggest(const StudySpec& spec, const std::vector<GroundedStat>& stats,
                                    const CodeLibrary& library,
                                    const std::vector<TableSchema>& schema);

// Thrown when the second validation pass dies mid-way: carries how far it got
// so the caller can persist partial progress instead of losing the run.
struct double_pass_aborted : error {
    double_pass_aborted(const std::string& what, std::vector<TestSuggestion> done, size_t total)
        : error(what), partial(std::move(done)), total_count(total) {}
    std::vector<TestSuggestion> partial;  // suggestions validated before the failure
    size_t total_count;                   // suggestions that were submitted
};

// Second review pass: every statistic-backed suggestion is re-submitted to the
// provider. Remove verdicts drop the row, fix verdicts replace the expected
// value (fixed=true, verdict references appended, "!fixme"/"!drop" markers
// consumed), and duplicate (description, expectation) rows collapse to the
// first occurrence. Applying the pass twice equals applying it once.
std::vector<TestSuggestion> double_pass_validate(const std::vector<TestSuggestion>& suggestions,
                                                 Provider& provider, const StudySpec& spec);

// Pipe-delimited matrix with a fixed header; references serialize as a JSON
// array so embedded pipes and quotes survive the round-trip.
extern const char* const kMatrixHeader;
std::string serialize_matrix(const std::vector<TestSuggestion>& suggestions);
std::vector<TestSuggestion> parse_matrix(const std::string& text);
std::vector<TestSuggestion> load_matrix(const std::string& path);

enum class BindingKind { none, value_match, code_match, cohort_share, age_at_diagnosis, dtype };

struct TargetBinding {
    BindingKind kind = BindingKind::none;
    std::string table;                     // value_match
    std::string column;                    // value_match
    std::string value;                     // value_match
    Domain code_domain = Domain::other;    // code_match
    std::vector<std::string> codes;        // code_match, normalized (trim + uppercase)
    std::vector<std::string> dtype_tables; // dtype
    std::map<std::string, std::string> code_formats; // dtype: domain name -> coding system
    bool new_only = false;                 // cohort_share: newly diagnosed only
};

struct TestCase {
    std::string name;
    TestCategory category = TestCategory::metadata;
    TestLevel level = TestLevel::metadata;
    ComparisonType comparison = ComparisonType::dtype_check;
    std::optional<double> expected;
    std::optional<double> range_low;
    std::optional<double> range_high;
    CohortScope cohort_scope = CohortScope::population;
    TargetBinding binding;
    std::vector<std::string> references;
    ReferenceStatus reference_status = ReferenceStatus::referenced;
};

struct SuiteMetadata {
    std::string provider_id;
    std::string vocab_checksum;
    std::string generated_at;
};

struct TestSuite {
    std::string condition;
    std::string region;
    std::vector<std::string> cohort_codes;  // normalized (trim + uppercase)
    std::vector<TestCase> cases;
    SuiteMetadata metadata;
    std::vector<std::string> warnings;      // ambiguity notes collected while binding
};

// Binds suggestions against the schema. Rows marked remove are skipped, case
// names are uniquified ("X", "X 1", ...), and a row whose target cannot be
// bound — or that lacks references or a required expectation — compiles to a
// no-reference case instead of being dropped. Throws compile_error when a
// table lacks a person-id column.
TestSuite compile(const std::vector<TestSuggestion>& suggestions, const CodeLibrary& library,
                  const std::vector<TableSchema>& schema);

}  // namespace datapeck
