#include "datapeck/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "datapeck/errors.hpp"
#include "datapeck/util.hpp"

#include <nlohmann/json.hpp>

namespace datapeck {

std::string to_string(Accuracy a) {
    switch (a) {
        case Accuracy::accurate: return "Accurate";
        case Accuracy::inaccurate: return "Inaccurate";
        case Accuracy::incorrect: return "Incorrect";
        case Accuracy::qualitative: return "Qualitative";
        case Accuracy::irrelevant: return "Irrelevant";
    }
    return "Accurate";
}

Accuracy accuracy_from_string(std::string_view s) {
    if (iequals(s, "accurate")) return Accuracy::accurate;
    if (iequals(s, "inaccurate")) return Accuracy::inaccurate;
    if (iequals(s, "incorrect")) return Accuracy::incorrect;
    if (iequals(s, "qualitative")) return Accuracy::qualitative;
    if (iequals(s, "irrelevant")) return Accuracy::irrelevant;
    throw parse_error("unknown accuracy label '" + std::string(s) + "'");
}

std::vector<QualityAnnotation> parse_annotations(const std::string& text) {
    const auto rows = parse_delimited(text, ',', "annotations");
    if (rows.empty()) throw parse_error("annotations: missing header row");
    if (rows.front() != std::vector<std::string>{"test_name", "reference_valid", "accuracy"})
        throw parse_error("annotations: header must be 'test_name,reference_valid,accuracy'");

    std::vector<QualityAnnotation> annotations;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = "annotations line " + std::to_string(i + 1) + ": ";
        if (row.size() != 3)
            throw parse_error(where + "expected 3 fields, got " + std::to_string(row.size()));
        QualityAnnotation a;
        a.test_name = trim(row[0]);
        if (a.test_name.empty()) throw parse_error(where + "empty test name");
        if (iequals(row[1], "true"))
            a.reference_valid = true;
        else if (iequals(row[1], "false"))
            a.reference_valid = false;
        else
            throw parse_error(where + "reference_valid must be True or False, got '" + row[1] +
                              "'");
        try {
            a.accuracy = accuracy_from_string(trim(row[2]));
        } catch (const parse_error& e) {
            throw parse_error(where + e.what());
        }
        annotations.push_back(std::move(a));
    }
    return annotations;
}

std::vector<QualityAnnotation> load_annotations(const std::string& path) {
    return parse_annotations(read_file(path));
}

QualitySummary summarize_quality(const std::vector<QualityAnnotation>& annotations,
                                 const std::vector<TestResult>& results, const TestSuite& suite) {
    std::map<std::string, const QualityAnnotation*> by_name;
    for (const auto& a : annotations) {
        if (!by_name.emplace(a.test_name, &a).second)
            throw schema_error("duplicate annotation for test '" + a.test_name + "'");
    }

    std::map<std::string, TestLevel> levels;
    for (const auto& c : suite.cases) levels.emplace(c.name, c.level);
    for (const auto& [name, annotation] : by_name) {
        (void)annotation;
        const auto it = levels.find(name);
        if (it == levels.end()) throw schema_error("annotation for unknown test '" + name + "'");
        if (it->second == TestLevel::metadata)
            throw schema_error("annotation for metadata-level test '" + name +
                               "'; metadata tests are excluded from quality summaries");
    }

    QualitySummary s;
    std::size_t valid = 0, accurate = 0, inaccurate = 0, incorrect = 0, qualitative = 0,
                irrelevant = 0;
    for (const auto& r : results) {
        const auto level_it = levels.find(r.name);
        if (level_it == levels.end())
            throw schema_error("result for unknown test '" + r.name + "'");
        if (level_it->second == TestLevel::metadata) continue;
        const auto it = by_name.find(r.name);
        if (it == by_name.end())
            throw schema_error("missing annotation for test '" + r.name + "'");
        const QualityAnnotation& a = *it->second;
        ++s.total_tests;
        if (a.reference_valid) ++valid;
        switch (a.accuracy) {
            case Accuracy::accurate: ++accurate; break;
            case Accuracy::inaccurate: ++inaccurate; break;
            case Accuracy::incorrect: ++incorrect; break;
            case Accuracy::qualitative: ++qualitative; break;
            case Accuracy::irrelevant: ++irrelevant; break;
        }
        const bool correct = a.accuracy == Accuracy::accurate;
        const bool passed = r.status == TestStatus::pass;
        if (correct && passed) ++s.correct_passed;
        if (correct && !passed) ++s.correct_failed;
        if (!correct && passed) ++s.noncorrect_passed;
        if (!correct && !passed) ++s.noncorrect_failed;
    }
    if (s.total_tests != by_name.size())
        throw schema_error("annotations cover " + std::to_string(by_name.size()) +
                           " tests but results contain " + std::to_string(s.total_tests) +
                           " non-metadata tests");

    if (s.total_tests > 0) {
        const double n = static_cast<double>(s.total_tests);
        s.valid_reference_percent = 100.0 * static_cast<double>(valid) / n;
        s.accurate_percent = 100.0 * static_cast<double>(accurate) / n;
        s.inaccurate_percent = 100.0 * static_cast<double>(inaccurate) / n;
        s.incorrect_percent = 100.0 * static_cast<double>(incorrect) / n;
        s.qualitative_percent = 100.0 * static_cast<double>(qualitative) / n;
        s.irrelevant_percent = 100.0 * static_cast<double>(irrelevant) / n;
    }
    return s;
}

Accuracy classify_accuracy(double claimed, double truth, double sd) {
    if (!(sd >= 0.0)) throw stat_error("standard deviation must be non-negative");
    if (sd == 0.0) return claimed == truth ? Accuracy::accurate : Accuracy::incorrect;
    return std::abs(claimed - truth) <= 2.0 * sd ? Accuracy::accurate : Accuracy::inaccurate;
}

std::string quality_to_json(const QualitySummary& s) {
    nlohmann::ordered_json doc;
    doc["total_tests"] = s.total_tests;
    doc["valid_reference_percent"] = s.valid_reference_percent;
    doc["accurate_percent"] = s.accurate_percent;
    doc["inaccurate_percent"] = s.inaccurate_percent;
    doc["incorrect_percent"] = s.incorrect_percent;
    doc["qualitative_percent"] = s.qualitative_percent;
    doc["irrelevant_percent"] = s.irrelevant_percent;
    doc["correct_passed"] = s.correct_passed;
    doc["correct_failed"] = s.correct_failed;
    doc["noncorrect_passed"] = s.noncorrect_passed;
    doc["noncorrect_failed"] = s.noncorrect_failed;
    return doc.dump(2) + "\n";
}

std::string render_quality_markdown(const QualitySummary& s) {
    std::string out = "# Reference Quality Summary\n\n";
    out += "- Total tests (non-metadata): " + std::to_string(s.total_tests) + "\n";
    out += "- Valid references: " + format_fixed(s.valid_reference_percent, 1) + "%\n";
    out += "- Accurate: " + format_fixed(s.accurate_percent, 1) + "%\n";
    out += "- Inaccurate: " + format_fixed(s.inaccurate_percent, 1) + "%\n";
    out += "- Incorrect: " + format_fixed(s.incorrect_percent, 1) + "%\n";
    out += "- Qualitative: " + format_fixed(s.qualitative_percent, 1) + "%\n";
    out += "- Irrelevant: " + format_fixed(s.irrelevant_percent, 1) + "%\n";
    out += "\n| Grounding | Passed | Failed |\n| --- | --- | --- |\n";
    out += "| Correct | " + std::to_string(s.correct_passed) + " | " +
           std::to_string(s.correct_failed) + " |\n";
    out += "| Non-correct | " + std::to_string(s.noncorrect_passed) + " | " +
           std::to_string(s.noncorrect_failed) + " |\n";
    return out;
}

namespace {

struct ReportRow {
    const TestResult* result;
    bool smd_flagged;
    bool ratio_flagged;
};

struct Section {
    std::string heading;
    std::vector<ReportRow> rows;
};

std::string section_for(TestCategory category) {
    switch (category) {
        case TestCategory::demography:
        case TestCategory::diagnosis: return "Demography and Diagnosis Tests";
        case TestCategory::drug: return "Drug Tests";
        case TestCategory::measurement: return "Measurement Tests";
        case TestCategory::procedure: return "Procedure Tests";
        case TestCategory::metadata: return "Metadata Tests";
    }
    return "Metadata Tests";
}

// Groups results into the five fixed sections and validates that result names
// and suite case names agree exactly.
std::vector<Section> build_sections(const std::vector<TestResult>& results,
                                    const TestSuite& suite) {
    std::map<std::string, TestCategory> categories;
    for (const auto& c : suite.cases) categories.emplace(c.name, c.category);

    std::vector<std::string> unknown_results;
    std::map<std::string, const TestResult*> seen;
    for (const auto& r : results) {
        if (!categories.count(r.name)) unknown_results.push_back(r.name);
        seen.emplace(r.name, &r);
    }
    std::vector<std::string> missing_results;
    for (const auto& c : suite.cases)
        if (!seen.count(c.name)) missing_results.push_back(c.name);
    if (!unknown_results.empty() || !missing_results.empty()) {
        std::string msg = "results do not match suite.";
        if (!missing_results.empty()) {
            msg += " Missing results for:";
            for (const auto& n : missing_results) msg += " '" + n + "'";
            msg += ".";
        }
        if (!unknown_results.empty()) {
            msg += " Results without a matching test:";
            for (const auto& n : unknown_results) msg += " '" + n + "'";
            msg += ".";
        }
        throw schema_error(msg);
    }

    std::vector<Section> sections = {{"Demography and Diagnosis Tests", {}},
                                     {"Drug Tests", {}},
                                     {"Measurement Tests", {}},
                                     {"Procedure Tests", {}},
                                     {"Metadata Tests", {}}};
    std::vector<const TestResult*> ordered;
    ordered.reserve(results.size());
    for (const auto& r : results) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const TestResult* a, const TestResult* b) { return a->name < b->name; });

    for (const TestResult* r : ordered) {
        const std::string heading = section_for(categories.at(r->name));
        for (auto& section : sections) {
            if (section.heading != heading) continue;
            ReportRow row;
            row.result = r;
            row.smd_flagged = r->smd.has_value() && std::abs(*r->smd) >= 0.2;
            row.ratio_flagged = r->ratio.has_value() && (*r->ratio < 0.85 || *r->ratio > 1.15);
            section.rows.push_back(row);
            break;
        }
    }
    return sections;
}

std::string cell_text(const std::optional<double>& value, int decimals) {
    return value ? format_fixed(*value, decimals) : std::string();
}

std::string status_class(TestStatus status) {
    switch (status) {
        case TestStatus::pass: return "pass";
        case TestStatus::no_reference: return "noref";
        case TestStatus::fail:
        case TestStatus::error: return "fail";
    }
    return "fail";
}

std::string html_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (const char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch; break;
        }
    }
    return out;
}

void append_coverage_markdown(std::string& out, const CoverageReport& coverage) {
    const auto count_at = [&](TestLevel level) -> std::size_t {
        const auto it = coverage.per_level.find(level);
        return it == coverage.per_level.end() ? 0 : it->second.size();
    };
    const auto tests_at = [&](TestLevel level) -> std::size_t {
        const auto it = coverage.tests_per_level.find(level);
        return it == coverage.tests_per_level.end() ? 0 : it->second;
    };
    out += "## Column Coverage\n\n";
    out += "- Overall: " + std::to_string(coverage.covered().size()) + " of " +
           std::to_string(coverage.total_columns) + " columns (" +
           format_fixed(coverage.overall_percent(), 1) + "%)\n";
    for (const TestLevel level :
         {TestLevel::metadata, TestLevel::distribution, TestLevel::subpopulation}) {
        std::string name = to_string(level);
        name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
        out += "- " + name + " level: " + std::to_string(count_at(level)) + " of " +
               std::to_string(coverage.total_columns) + " columns (" +
               format_fixed(coverage.level_percent(level), 1) + "%); " +
               std::to_string(tests_at(level)) + " test(s)\n";
    }
}

}  // namespace

std::string render_report_markdown(const std::vector<TestResult>& results,
                                   const CoverageReport& coverage, const TestSuite& suite) {
    const auto sections = build_sections(results, suite);

    std::string out =
        "# " + suite.condition + " in " + suite.region + " - Data Quality Evaluation Report\n";
    for (const auto& section : sections) {
        out += "\n## " + section.heading + "\n\n";
        out += "| Test name | Result | Expected value | Actual value | SMD | ratio |\n";
        out += "| --- | --- | --- | --- | --- | --- |\n";
        for (const auto& row : section.rows) {
            const TestResult& r = *row.result;
            std::string smd = cell_text(r.smd, 2);
            if (row.smd_flagged && !smd.empty()) smd = "**" + smd + "**";
            std::string ratio = cell_text(r.ratio, 2);
            if (row.ratio_flagged && !ratio.empty()) ratio = "**" + ratio + "**";
            out += "| " + r.name + " | " + to_string(r.status) + " | " +
                   cell_text(r.expected, 1) + " | " + cell_text(r.actual, 2) + " | " + smd +
                   " | " + ratio + " |\n";
        }
    }
    out += "\n";
    append_coverage_markdown(out, coverage);
    return out;
}

std::string render_report_html(const std::vector<TestResult>& results,
                               const CoverageReport& coverage, const TestSuite& suite) {
    const auto sections = build_sections(results, suite);
    const std::string title =
        suite.condition + " in " + suite.region + " - Data Quality Evaluation Report";

    std::string out;
    out += "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" +
           html_escape(title) + "</title>\n<style>\n";
    out +=
        "body { font-family: sans-serif; margin: 2em; }\n"
        "table { border-collapse: collapse; margin-bottom: 1.5em; }\n"
        "th, td { border: 1px solid #999; padding: 0.3em 0.7em; text-align: left; }\n"
        "tr.pass td:nth-child(2) { color: #0a6e0a; }\n"
        "tr.fail td:nth-child(2) { color: #b00020; }\n"
        "tr.noref td:nth-child(2) { color: #777; font-style: italic; }\n"
        "td.fail { font-weight: bold; color: #b00020; }\n"
        "td.pass { color: inherit; }\n";
    out += "</style>\n</head>\n<body>\n<h1>" + html_escape(title) + "</h1>\n";

    for (const auto& section : sections) {
        out += "<h2>" + html_escape(section.heading) + "</h2>\n<table>\n<thead>\n";
        out +=
            "<tr><th>Test name</th><th>Result</th><th>Expected value</th>"
            "<th>Actual value</th><th>SMD</th><th>ratio</th></tr>\n";
        out += "</thead>\n<tbody>\n";
        for (const auto& row : section.rows) {
            const TestResult& r = *row.result;
            const std::string smd = cell_text(r.smd, 2);
            const std::string ratio = cell_text(r.ratio, 2);
            out += "<tr class=\"" + status_class(r.status) + "\">";
            out += "<td>" + html_escape(r.name) + "</td>";
            out += "<td>" + html_escape(to_string(r.status)) + "</td>";
            out += "<td>" + cell_text(r.expected, 1) + "</td>";
            out += "<td>" + cell_text(r.actual, 2) + "</td>";
            if (smd.empty())
                out += "<td></td>";
            else
                out += "<td class=\"" + std::string(row.smd_flagged ? "fail" : "pass") + "\">" +
                       smd + "</td>";
            if (ratio.empty())
                out += "<td></td>";
            else
                out += "<td class=\"" + std::string(row.ratio_flagged ? "fail" : "pass") + "\">" +
                       ratio + "</td>";
            out += "</tr>\n";
        }
        out += "</tbody>\n</table>\n";
    }

    std::string coverage_md;
    append_coverage_markdown(coverage_md, coverage);
    out += "<h2>Column Coverage</h2>\n<ul>\n";
    std::istringstream lines(coverage_md);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("- ", 0) != 0) continue;
        out += "<li>" + html_escape(line.substr(2)) + "</li>\n";
    }
    out += "</ul>\n</body>\n</html>\n";
    return out;
}

}  // namespace datapeck
