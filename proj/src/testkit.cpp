#include "datapeck/testkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <json.hpp>

#include "datapeck/stats.hpp"
#include "datapeck/util.hpp"

namespace datapeck {

std::string to_string(TestStatus s) {
    switch (s) {
        case TestStatus::pass: return "Pass";
        case TestStatus::fail: return "Fail";
        case TestStatus::no_reference: return "No Reference";
        case TestStatus::error: return "Error";
    }
    return "Error";
}

TestStatus test_status_from_string(std::string_view s) {
    if (s == "Pass") return TestStatus::pass;
    if (s == "Fail") return TestStatus::fail;
    if (s == "No Reference") return TestStatus::no_reference;
    if (s == "Error") return TestStatus::error;
    throw schema_error("unknown test status: '" + std::string(s) + "'");
}

namespace {

bool name_mentions_birth(const std::string& name) {
    return to_lower(name).find("birth") != std::string::npos;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> diagnosis_code_columns(
    const std::vector<TableSchema>& schema) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& table : schema)
        for (const auto& col : table.columns)
            if (col.role == ColumnRole::diagnosis_code) out.emplace_back(table.name, col.name);
    return out;
}

std::optional<std::pair<std::string, std::string>> birth_date_column(
    const std::vector<TableSchema>& schema) {
    for (const auto& table : schema)
        for (const auto& col : table.columns)
            if (col.role == ColumnRole::date && name_mentions_birth(col.name))
                return std::make_pair(table.name, col.name);
    return std::nullopt;
}

std::optional<std::pair<std::string, std::string>> diagnosis_date_column(
    const std::vector<TableSchema>& schema) {
    for (const auto& table : schema) {
        bool has_dx = false;
        for (const auto& col : table.columns)
            if (col.role == ColumnRole::diagnosis_code) has_dx = true;
        if (!has_dx) continue;
        for (const auto& col : table.columns)
            if (col.role == ColumnRole::date && !name_mentions_birth(col.name))
                return std::make_pair(table.name, col.name);
    }
    return std::nullopt;
}

ColumnRole role_for_domain(Domain domain) {
    switch (domain) {
        case Domain::condition: return ColumnRole::diagnosis_code;
        case Domain::drug: return ColumnRole::drug_code;
        case Domain::measurement: return ColumnRole::measurement_code;
        case Domain::procedure: return ColumnRole::procedure_code;
        default:
            throw schema_error("domain '" + to_string(domain) + "' has no code column role");
    }
}

bool code_matches_system(std::string_view code, std::string_view system) {
    const std::string sys = to_upper(trim(system));
    const std::string c = to_upper(trim(code));
    auto all_digits = [](std::string_view s) {
        if (s.empty()) return false;
        for (char ch : s)
            if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
        return true;
    };
    if (sys == "ICD9CM" || sys == "ICD-9-CM" || sys == "ICD9") {
        // NNN[.N[N]] | VNN[.N[N]] | ENNN[.N]
        std::string_view body = c;
        size_t lead = 3;
        if (!body.empty() && (body[0] == 'V' || body[0] == 'E')) {
            lead = body[0] == 'V' ? 2 : 3;
            body.remove_prefix(1);
        }
        if (body.size() < lead || !all_digits(body.substr(0, lead))) return false;
        std::string_view rest = body.substr(lead);
        if (rest.empty()) return true;
        if (rest[0] != '.') return false;
        rest.remove_prefix(1);
        const size_t max_minor = (c[0] == 'E') ? 1 : 2;
        return !rest.empty() && rest.size() <= max_minor && all_digits(rest);
    }
    if (sys == "SNOMED" || sys == "SNOMED-CT" || sys == "SNOMEDCT")
        return all_digits(c) && c.size() >= 6 && c.size() <= 18;
    if (sys == "RXNORM") return all_digits(c) && c.size() <= 8;
    if (sys == "LOINC") {
        const size_t dash = c.find('-');
        if (dash == std::string::npos || dash == 0 || dash + 2 != c.size()) return false;
        return all_digits(c.substr(0, dash)) && dash <= 7 &&
               std::isdigit(static_cast<unsigned char>(c[dash + 1]));
    }
    return true;  // unknown systems are not validated
}

namespace {

struct TableInfo {
    const Frame* frame = nullptr;
    int person_col = -1;
};

std::map<std::string, TableInfo> index_frames(const std::vector<Frame>& frames) {
    std::map<std::string, TableInfo> out;
    for (const auto& f : frames) {
        TableInfo info;
        info.frame = &f;
        info.person_col = f.schema().role_index(ColumnRole::person_id);
        out[f.schema().name] = info;
    }
    return out;
}

std::string person_at(const Frame& f, size_t row, int person_col) {
    return trim(f.cell(row, static_cast<size_t>(person_col)));
}

// Denominator universe: distinct persons in the first table that carries a
// demographic column, falling back to the first table.
std::set<std::string> population_persons(const std::vector<Frame>& frames) {
    const Frame* chosen = frames.empty() ? nullptr : &frames.front();
    for (const auto& f : frames) {
        bool has_demo = false;
        for (const auto& col : f.schema().columns)
            if (col.role == ColumnRole::demographic) has_demo = true;
        if (has_demo) {
            chosen = &f;
            break;
        }
    }
    std::set<std::string> persons;
    if (!chosen) return persons;
    const int pc = chosen->schema().role_index(ColumnRole::person_id);
    for (size_t r = 0; r < chosen->row_count(); ++r) {
        if (chosen->is_null(r, static_cast<size_t>(pc))) continue;
        persons.insert(person_at(*chosen, r, pc));
    }
    return persons;
}

// Persons (within `within`, when non-null) carrying at least one record whose
// code cell matches `codes` in any column of the given role.
std::set<std::string> persons_with_codes(const std::vector<Frame>& frames, ColumnRole role,
                                         const std::set<std::string>& codes,
                                         const std::set<std::string>* within) {
    std::set<std::string> persons;
    for (const auto& f : frames) {
        const int pc = f.schema().role_index(ColumnRole::person_id);
        for (size_t col = 0; col < f.schema().columns.size(); ++col) {
            if (f.schema().columns[col].role != role) continue;
            for (size_t r = 0; r < f.row_count(); ++r) {
                if (f.is_null(r, col)) continue;
                if (!codes.count(to_upper(trim(f.cell(r, col))))) continue;
                std::string person = person_at(f, r, pc);
                if (within && !within->count(person)) continue;
                persons.insert(std::move(person));
            }
        }
    }
    return persons;
}

// First (earliest) parseable diagnosis date per person, over records whose
// code is in `codes`.
std::map<std::string, std::pair<long long, std::string>> first_diagnosis_dates(
    const std::vector<Frame>& frames, const std::set<std::string>& codes) {
    std::map<std::string, std::pair<long long, std::string>> first;  // person -> (days, iso)
    for (const auto& f : frames) {
        int code_col = -1;
        int date_col = -1;
        const auto& cols = f.schema().columns;
        for (size_t i = 0; i < cols.size(); ++i)
            if (cols[i].role == ColumnRole::diagnosis_code && code_col < 0)
                code_col = static_cast<int>(i);
        for (size_t i = 0; i < cols.size(); ++i)
            if (cols[i].role == ColumnRole::date && !name_mentions_birth(cols[i].name) &&
                date_col < 0)
                date_col = static_cast<int>(i);
        if (code_col < 0 || date_col < 0) continue;
        const int pc = f.schema().role_index(ColumnRole::person_id);
        for (size_t r = 0; r < f.row_count(); ++r) {
            if (f.is_null(r, static_cast<size_t>(code_col))) continue;
            if (!codes.count(to_upper(trim(f.cell(r, static_cast<size_t>(code_col)))))) continue;
            const std::string date = trim(f.cell(r, static_cast<size_t>(date_col)));
            if (!is_valid_iso_date(date)) continue;
            const long long days = iso_date_to_days(date);
            const std::string person = person_at(f, r, pc);
            auto it = first.find(person);
            if (it == first.end() || days < it->second.first)
                first[person] = {days, date};
        }
    }
    return first;
}

int year_of(const std::string& iso_date) {
    return std::stoi(iso_date.substr(0, 4));
}

// Completed years between two ISO dates.
int calendar_age(const std::string& birth, const std::string& at) {
    int years = year_of(at) - year_of(birth);
    if (at.substr(5) < birth.substr(5)) --years;
    return years;
}

struct ShareOutcome {
    double percent = 0.0;
    size_t numerator = 0;
    size_t denominator = 0;
};

TestResult make_error(const TestCase& c, const std::string& detail) {
    TestResult r;
    r.name = c.name;
    r.status = TestStatus::error;
    r.detail = detail;
    return r;
}

// Point rule: |SMD| < 0.2 (strict) and observed/expected within [0.85, 1.15]
// (inclusive), both at full precision.
void score_point(TestResult& r, double expected_pct, double actual_pct) {
    const ProportionPair p{expected_pct / 100.0, actual_pct / 100.0};
    bool smd_ok = false;
    try {
        r.smd = smd_proportions(p);
        smd_ok = std::fabs(*r.smd) < 0.2;
    } catch (const stat_error&) {
        r.status = TestStatus::fail;
        r.detail = "standardized difference undefined for these proportions";
        return;
    }
    try {
        r.ratio = obs_exp_ratio(p);
    } catch (const ratio_undefined&) {
        r.status = TestStatus::fail;
        r.detail = "ratio undefined: expected value is 0";
        return;
    }
    const bool ratio_ok = *r.ratio >= 0.85 && *r.ratio <= 1.15;
    r.status = smd_ok && ratio_ok ? TestStatus::pass : TestStatus::fail;
}

void score_share(const TestCase& c, TestResult& r, const ShareOutcome& share) {
    r.actual = share.percent;
    switch (c.comparison) {
        case ComparisonType::point:
            r.expected = c.expected;
            score_point(r, *c.expected, share.percent);
            break;
        case ComparisonType::less_than:
            r.expected = c.expected;
            r.status = share.percent < *c.expected ? TestStatus::pass : TestStatus::fail;
            break;
        case ComparisonType::greater_than:
            r.expected = c.expected;
            r.status = share.percent > *c.expected ? TestStatus::pass : TestStatus::fail;
            break;
        case ComparisonType::range:
            r.status = share.percent >= *c.range_low && share.percent <= *c.range_high
                           ? TestStatus::pass
                           : TestStatus::fail;
            r.detail = "expected range [" + format_fixed(*c.range_low, 2) + ", " +
                       format_fixed(*c.range_high, 2) + "]";
            break;
        default:
            throw stat_error("share comparison applied to non-share test");
    }
}

}  // namespace

std::set<std::string> extract_cohort(const std::vector<Frame>& frames,
                                     const std::vector<std::string>& codes) {
    bool any_dx_column = false;
    for (const auto& f : frames)
        for (const auto& col : f.schema().columns)
            if (col.role == ColumnRole::diagnosis_code) any_dx_column = true;
    if (!any_dx_column)
        throw schema_error("cohort extraction: no table carries a diagnosis-code column");
    std::set<std::string> normalized;
    for (const auto& code : codes) normalized.insert(to_upper(trim(code)));
    if (normalized.empty()) return {};
    return persons_with_codes(frames, ColumnRole::diagnosis_code, normalized, nullptr);
}

TestResult evaluate(const TestCase& c, const std::vector<Frame>& frames,
                    const std::set<std::string>& cohort) {
    TestResult r;
    r.name = c.name;

    if (c.reference_status == ReferenceStatus::no_reference) {
        r.status = TestStatus::no_reference;
        return r;
    }

    if (c.comparison == ComparisonType::dtype_check) {
        const auto tables = index_frames(frames);
        std::vector<std::string> issues;
        for (const auto& name : c.binding.dtype_tables) {
            auto it = tables.find(name);
            if (it == tables.end()) {
                issues.push_back("table '" + name + "' missing from the data");
                continue;
            }
            const Frame& f = *it->second.frame;
            for (size_t col = 0; col < f.schema().columns.size(); ++col) {
                const ColumnSchema& cs = f.schema().columns[col];
                const size_t bad = f.nonconforming_count(col);
                if (bad > 0)
                    issues.push_back(name + "." + cs.name + ": " + std::to_string(bad) +
                                     " value(s) not a valid " + to_string(cs.type));
                if (cs.type != ColumnType::code) continue;
                std::string domain_name;
                switch (cs.role) {
                    case ColumnRole::diagnosis_code: domain_name = "diagnosis"; break;
                    case ColumnRole::drug_code: domain_name = "drug"; break;
                    case ColumnRole::measurement_code: domain_name = "measurement"; break;
                    case ColumnRole::procedure_code: domain_name = "procedure"; break;
                    default: break;
                }
                auto fmt = c.binding.code_formats.find(domain_name);
                if (domain_name.empty() || fmt == c.binding.code_formats.end()) continue;
                size_t bad_format = 0;
                for (size_t row = 0; row < f.row_count(); ++row) {
                    if (f.is_null(row, col)) continue;
                    if (!code_matches_system(f.cell(row, col), fmt->second)) ++bad_format;
                }
                if (bad_format > 0)
                    issues.push_back(name + "." + cs.name + ": " + std::to_string(bad_format) +
                                     " code(s) not in " + fmt->second + " format");
            }
        }
        if (issues.empty()) {
            r.status = TestStatus::pass;
        } else {
            r.status = TestStatus::fail;
            std::string detail;
            for (const auto& issue : issues) {
                if (!detail.empty()) detail += "; ";
                detail += issue;
            }
            r.detail = detail;
        }
        return r;
    }

    const std::set<std::string> population = population_persons(frames);
    const std::set<std::string>& scope =
        c.cohort_scope == CohortScope::diagnosed ? cohort : population;
    if (scope.empty()) return make_error(c, "empty denominator");

    if (c.comparison == ComparisonType::distribution_welch) {
        // Observed ages at first diagnosis for the cohort.
        std::vector<TableSchema> schemas;
        for (const auto& f : frames) schemas.push_back(f.schema());
        const auto birth = birth_date_column(schemas);
        if (!birth) return make_error(c, "no birth-date column in the data");
        const auto tables = index_frames(frames);
        const Frame& bf = *tables.at(birth->first).frame;
        const int bcol = bf.schema().column_index(birth->second);
        const int bpc = bf.schema().role_index(ColumnRole::person_id);
        std::map<std::string, std::string> births;
        for (size_t row = 0; row < bf.row_count(); ++row) {
            if (bf.is_null(row, static_cast<size_t>(bcol))) continue;
            const std::string date = trim(bf.cell(row, static_cast<size_t>(bcol)));
            if (!is_valid_iso_date(date)) continue;
            births.emplace(person_at(bf, row, bpc), date);
        }
        std::set<std::string> code_set(c.binding.codes.begin(), c.binding.codes.end());
        const auto first_dx = first_diagnosis_dates(frames, code_set);
        std::vector<double> ages;
        for (const auto& person : scope) {
            auto b = births.find(person);
            auto d = first_dx.find(person);
            if (b == births.end() || d == first_dx.end()) continue;
            ages.push_back(static_cast<double>(calendar_age(b->second, d->second.second)));
        }
        if (ages.size() < 2) return make_error(c, "empty denominator");
        double mean = 0.0;
        for (double a : ages) mean += a;
        mean /= static_cast<double>(ages.size());
        double var = 0.0;
        for (double a : ages) var += (a - mean) * (a - mean);
        var /= static_cast<double>(ages.size() - 1);

        const SampleStats observed{ages.size(), mean, var};
        const SampleStats reference{ages.size(), *c.expected, *c.range_low * *c.range_low};
        const WelchResult w = welch_t(observed, reference);
        r.expected = c.expected;
        r.actual = mean;
        r.p_value = w.p_value;
        try {
            r.smd = smd_means(reference, observed);
        } catch (const stat_error&) {
        }
        if (*c.expected != 0.0) r.ratio = mean / *c.expected;
        r.status = w.p_value >= 0.05 ? TestStatus::pass : TestStatus::fail;
        r.detail = "Welch t=" + format_fixed(w.t, 2) + ", df=" + format_fixed(w.df, 2) +
                   ", n=" + std::to_string(ages.size());
        return r;
    }

    // Share-style comparisons: person-level proportion of the scope.
    ShareOutcome share;
    share.denominator = scope.size();

    switch (c.binding.kind) {
        case BindingKind::value_match: {
            const auto tables = index_frames(frames);
            auto it = tables.find(c.binding.table);
            if (it == tables.end())
                return make_error(c, "table '" + c.binding.table + "' missing from the data");
            const Frame& f = *it->second.frame;
            const int col = f.schema().column_index(c.binding.column);
            if (col < 0)
                return make_error(c, "column '" + c.binding.column + "' missing from the data");
            std::set<std::string> matched;
            for (size_t row = 0; row < f.row_count(); ++row) {
                if (f.is_null(row, static_cast<size_t>(col))) continue;
                if (trim(f.cell(row, static_cast<size_t>(col))) != c.binding.value) continue;
                std::string person = person_at(f, row, it->second.person_col);
                if (scope.count(person)) matched.insert(std::move(person));
            }
            share.numerator = matched.size();
            break;
        }
        case BindingKind::code_match: {
            std::set<std::string> codes(c.binding.codes.begin(), c.binding.codes.end());
            share.numerator =
                persons_with_codes(frames, role_for_domain(c.binding.code_domain), codes, &scope)
                    .size();
            break;
        }
        case BindingKind::cohort_share: {
            if (!c.binding.new_only) {
                size_t n = 0;
                for (const auto& person : cohort)
                    if (scope.count(person)) ++n;
                share.numerator = n;
                break;
            }
            std::set<std::string> code_set(c.binding.codes.begin(), c.binding.codes.end());
            const auto first_dx = first_diagnosis_dates(frames, code_set);
            int latest_year = -1;
            for (const auto& [person, date] : first_dx)
                if (scope.count(person)) latest_year = std::max(latest_year, year_of(date.second));
            size_t n = 0;
            if (latest_year >= 0)
                for (const auto& [person, date] : first_dx)
                    if (scope.count(person) && year_of(date.second) == latest_year) ++n;
            share.numerator = n;
            break;
        }
        default:
            return make_error(c, "test has no usable target binding");
    }

    share.percent = 100.0 * static_cast<double>(share.numerator) /
                    static_cast<double>(share.denominator);
    score_share(c, r, share);
    return r;
}

std::vector<TestResult> run_suite(const TestSuite& suite, const std::vector<Frame>& frames) {
    std::set<std::string> cohort;
    if (!suite.cohort_codes.empty()) {
        try {
            cohort = extract_cohort(frames, suite.cohort_codes);
        } catch (const std::exception&) {
            // leave the cohort empty; diagnosed-scope cases report the problem
        }
    }
    std::vector<TestResult> results;
    results.reserve(suite.cases.size());
    for (const auto& c : suite.cases) {
        try {
            results.push_back(evaluate(c, frames, cohort));
        } catch (const std::exception& e) {
            TestResult r;
            r.name = c.name;
            r.status = TestStatus::error;
            r.detail = e.what();
            results.push_back(std::move(r));
        }
    }
    std::sort(results.begin(), results.end(),
              [](const TestResult& a, const TestResult& b) { return a.name < b.name; });
    return results;
}

std::string results_to_json(const std::vector<TestResult>& results) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        nlohmann::ordered_json j;
        j["name"] = r.name;
        j["status"] = to_string(r.status);
        if (r.expected) j["expected"] = *r.expected;
        if (r.actual) j["actual"] = *r.actual;
        if (r.smd) j["smd"] = *r.smd;
        if (r.ratio) j["ratio"] = *r.ratio;
        if (r.p_value) j["p_value"] = *r.p_value;
        if (!r.detail.empty()) j["detail"] = r.detail;
        doc.push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

std::vector<TestResult> results_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("results JSON: ") + e.what());
    }
    if (!doc.is_array()) throw parse_error("results JSON: expected a top-level array");
    std::vector<TestResult> out;
    try {
        for (const auto& j : doc) {
            TestResult r;
            r.name = j.at("name").get<std::string>();
            r.status = test_status_from_string(j.at("status").get<std::string>());
            if (j.contains("expected")) r.expected = j.at("expected").get<double>();
            if (j.contains("actual")) r.actual = j.at("actual").get<double>();
            if (j.contains("smd")) r.smd = j.at("smd").get<double>();
            if (j.contains("ratio")) r.ratio = j.at("ratio").get<double>();
            if (j.contains("p_value")) r.p_value = j.at("p_value").get<double>();
            if (j.contains("detail")) r.detail = j.at("detail").get<std::string>();
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("results JSON: ") + e.what());
    }
    return out;
}

std::vector<TestResult> load_results(const std::string& path) {
    return results_from_json(read_file(path));
}

}  // namespace datapeck
