#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "datapeck/coverage.hpp"
#include "datapeck/gensuite.hpp"
#include "datapeck/testkit.hpp"

namespace datapeck {

// How a test's grounded expectation compares to an externally checked truth.
// "Accurate" alone forms the "correct" group; every other label is
// "non-correct".
enum class Accuracy { accurate, inaccurate, incorrect, qualitative, irrelevant };

std::string to_string(Accuracy a);                  // "Accurate" / "Inaccurate" / ...
Accuracy accuracy_from_string(std::string_view s);  // case-insensitive; throws parse_error

struct QualityAnnotation {
    std::string test_name;
    bool reference_valid = false;
    Accuracy accuracy = Accuracy::accurate;

    bool operator==(const QualityAnnotation&) const = default;
};

// CSV "test_name,reference_valid,accuracy" with that exact header; errors
// carry 1-based line numbers.
std::vector<QualityAnnotation> parse_annotations(const std::string& text);
std::vector<QualityAnnotation> load_annotations(const std::string& path);

struct QualitySummary {
    std::size_t total_tests = 0;  // non-metadata tests only
    double valid_reference_percent = 0.0;
    double accurate_percent = 0.0;
    double inaccurate_percent = 0.0;
    double incorrect_percent = 0.0;
    double qualitative_percent = 0.0;
    double irrelevant_percent = 0.0;
    std::size_t correct_passed = 0;
    std::size_t correct_failed = 0;
    std::size_t noncorrect_passed = 0;
    std::size_t noncorrect_failed = 0;
};

// Percentages are over non-metadata tests; exactly one annotation per
// non-metadata test is required (duplicates, unknown names, annotations for
// metadata-level tests, and missing annotations are all errors). In the
// cross-tab, "passed" means status Pass; every other status counts as failed.
QualitySummary summarize_quality(const std::vector<QualityAnnotation>& annotations,
                                 const std::vector<TestResult>& results, const TestSuite& suite);

// Two-standard-deviation rule for a claimed value against an externally
// sourced truth: within 2 sd is accurate, beyond is inaccurate. With sd = 0
// only equality is accurate; any deviation is outright incorrect. Negative sd
// throws stat_error.
Accuracy classify_accuracy(double claimed, double truth, double sd);

std::string quality_to_json(const QualitySummary& summary);
std::string render_quality_markdown(const QualitySummary& summary);

// Fixed section order: Demography and Diagnosis, Drug, Measurement,
// Procedure, Metadata — all five tables always present, rows alphabetical.
// Expected values print with 1 decimal, actual/SMD/ratio with 2. Cells are
// emphasized (Markdown bold, HTML class) when |SMD| >= 0.2 or the ratio falls
// outside [0.85, 1.15], judged on full-precision values. A mismatch between
// result names and suite case names is an error listing the orphans. Both
// renderers are pure: identical inputs yield byte-identical documents.
std::string render_report_markdown(const std::vector<TestResult>& results,
                                   const CoverageReport& coverage, const TestSuite& suite);
std::string render_report_html(const std::vector<TestResult>& results,
                               const CoverageReport& coverage, const TestSuite& suite);

}  // namespace datapeck
