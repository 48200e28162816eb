#include "datapeck/gensuite.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "datapeck/util.hpp"

namespace datapeck {

std::string to_string(TestCategory c) {
    switch (c) {
        case TestCategory::demography: return "demography";
        case TestCategory::diagnosis: return "diagnosis";
        case TestCategory::drug: return "drug";
        case TestCategory::measurement: return "measurement";
        case TestCategory::procedure: return "procedure";
        case TestCategory::metadata: return "metadata";
    }
    return "metadata";
}

std::string to_string(TestLevel l) {
    switch (l) {
        case TestLevel::metadata: return "metadata";
        case TestLevel::distribution: return "distribution";
        case TestLevel::subpopulation: return "subpopulation";
    }
    return "metadata";
}

std::string to_string(ComparisonType c) {
    switch (c) {
        case ComparisonType::point: return "point";
        case ComparisonType::range: return "range";
        case ComparisonType::less_than: return "less_than";
        case ComparisonType::greater_than: return "greater_than";
        case ComparisonType::distribution_welch: return "distribution_welch";
        case ComparisonType::dtype_check: return "dtype_check";
    }
    return "point";
}

TestCategory test_category_from_string(std::string_view s) {
    if (s == "demography") return TestCategory::demography;
    if (s == "diagnosis") return TestCategory::diagnosis;
    if (s == "drug") return TestCategory::drug;
    if (s == "measurement") return TestCategory::measurement;
    if (s == "procedure") return TestCategory::procedure;
    if (s == "metadata") return TestCategory::metadata;
    throw schema_error("unknown test category: '" + std::string(s) + "'");
}

TestLevel test_level_from_string(std::string_view s) {
    if (s == "metadata") return TestLevel::metadata;
    if (s == "distribution") return TestLevel::distribution;
    if (s == "subpopulation") return TestLevel::subpopulation;
    throw schema_error("unknown test level: '" + std::string(s) + "'");
}

ComparisonType comparison_type_from_string(std::string_view s) {
    if (s == "point") return ComparisonType::point;
    if (s == "range") return ComparisonType::range;
    if (s == "less_than") return ComparisonType::less_than;
    if (s == "greater_than") return ComparisonType::greater_than;
    if (s == "distribution_welch") return ComparisonType::distribution_welch;
    if (s == "dtype_check") return ComparisonType::dtype_check;
    throw schema_error("unknown comparison_type: '" + std::string(s) + "'");
}

void validate_suggestion(const TestSuggestion& s) {
    if (s.description.empty()) throw schema_error("suggestion with empty description");
    if (s.comparison == ComparisonType::range) {
        if (!s.range_low || !s.range_high)
            throw schema_error("range suggestion '" + s.description + "' is missing a bound");
        if (*s.range_low > *s.range_high)
            throw schema_error("range suggestion '" + s.description + "' has descending bounds");
        if (s.expected_value)
            throw schema_error("range suggestion '" + s.description +
                               "' must not carry an expected value");
    }
    if ((s.comparison == ComparisonType::point || s.comparison == ComparisonType::less_than ||
         s.comparison == ComparisonType::greater_than) &&
        !s.expected_value)
        throw schema_error("suggestion '" + s.description + "' needs an expected value");
}

const CodeList* CodeLibrary::find(Domain domain, std::string_view subject) const {
    auto it = lists.find(domain);
    if (it == lists.end()) return nullptr;
    const std::string key = to_lower(trim(subject));
    for (const auto& list : it->second)
        if (to_lower(trim(list.condition)) == key) return &list;
    return nullptr;
}

namespace {

// Mock-fixture steering markers on statistic subjects; consumed once the
// second validation pass has acted on them.
constexpr std::string_view kFixMarker = "!fixme";
constexpr std::string_view kDropMarker = "!drop";

std::string strip_markers(std::string text) {
    for (std::string_view marker : {kFixMarker, kDropMarker}) {
        for (auto pos = text.find(marker); pos != std::string::npos; pos = text.find(marker))
            text.erase(pos, marker.size());
    }
    return trim(text);
}

Domain domain_for_kind(StatisticKind kind) {
    switch (kind) {
        case StatisticKind::comorbidity_rate: return Domain::condition;
        case StatisticKind::drug_share: return Domain::drug;
        case StatisticKind::measurement_expectation: return Domain::measurement;
        case StatisticKind::demographic_share: return Domain::demographic;
        default: return Domain::other;
    }
}

std::string join_codes(const CodeList& list) {
    std::string out;
    for (const auto& c : list.concepts) {
        if (!out.empty()) out += ',';
        out += c.code;
    }
    return out;
}

void append_references(std::vector<std::string>& refs, const std::vector<std::string>& extra) {
    for (const auto& r : extra)
        if (std::find(refs.begin(), refs.end(), r) == refs.end()) refs.push_back(r);
}

// Inverse of the description conventions used by suggest(): recover the
// statistic subject so the provider can re-review it.
std::string recover_subject(const std::string& description) {
    const std::string d = trim(description);
    for (std::string_view suffix : {std::string_view(" diagnosis diagnosed"),
                                    std::string_view(" drug exposure diagnosed"),
                                    std::string_view(" measurement"), std::string_view(" diagnosed")}) {
        if (d.size() > suffix.size() && std::string_view(d).substr(d.size() - suffix.size()) == suffix)
            return d.substr(0, d.size() - suffix.size());
    }
    return d;
}

StatisticKind kind_for_suggestion(const TestSuggestion& s) {
    if (s.comparison == ComparisonType::distribution_welch) return StatisticKind::age_mean;
    switch (s.category) {
        case TestCategory::demography: return StatisticKind::demographic_share;
        case TestCategory::drug: return StatisticKind::drug_share;
        case TestCategory::measurement: return StatisticKind::measurement_expectation;
        case TestCategory::diagnosis:
            if (s.target == "cohort") return StatisticKind::prevalence;
            if (s.target == "cohort:new") return StatisticKind::incidence;
            return StatisticKind::comorbidity_rate;
        default: return StatisticKind::prevalence;
    }
}

std::string expectation_key(const TestSuggestion& s) {
    std::string key;
    key += s.expected_value ? format_roundtrip(*s.expected_value) : "-";
    key += '\x1f';
    key += s.range_low ? format_roundtrip(*s.range_low) : "-";
    key += '\x1f';
    key += s.range_high ? format_roundtrip(*s.range_high) : "-";
    return key;
}

}  // namespace

CodeLibrary build_code_library(const StudySpec& spec, const std::vector<GroundedStat>& stats,
                               const EmbeddingIndex& vocab_index, const Embedder& embedder,
                               const std::vector<Frame>& frames) {
    CodeLibrary lib;
    lib.condition = spec.condition;
    lib.region = spec.region;
    lib.coding_systems = spec.coding_systems;
    lib.cohort = resolve_cohort(spec, &vocab_index, &embedder);

    CodeList demographics = extract_demographic_codes(frames);
    EmbeddingIndex demo_index;
    if (!demographics.concepts.empty()) demo_index = build_index(demographics.concepts, embedder);

    for (const auto& stat : stats) {
        const Domain domain = domain_for_kind(stat.statistic);
        if (domain == Domain::other) continue;
        const std::string subject = strip_markers(stat.subject);
        if (subject.empty() || lib.find(domain, subject)) continue;
        const EmbeddingIndex& index = domain == Domain::demographic ? demo_index : vocab_index;
        if (index.concepts.empty()) continue;
        CodeList list = codes_for_subject(index, embedder, subject, domain, spec.k);
        if (!list.concepts.empty()) lib.lists[domain].push_back(std::move(list));
    }
    return lib;
}

CodeList resolve_cohort(const StudySpec& spec, const EmbeddingIndex* vocab_index,
                        const Embedder* embedder) {
    CodeList cohort;
    cohort.condition = spec.condition;
    cohort.domain = Domain::condition;
    if (spec.cohort_codes) {
        cohort.provenance = CodeProvenance::user_supplied;
        long long next_id = 1;
        for (const auto& code : spec.cohort_codes->codes) {
            Concept c;
            c.concept_id = next_id++;
            c.name = spec.condition;
            c.domain = Domain::condition;
            c.vocabulary = spec.cohort_codes->vocabulary;
            c.code = trim(code);
            cohort.concepts.push_back(std::move(c));
        }
        return cohort;
    }
    if (vocab_index && embedder && !vocab_index->concepts.empty())
        return codes_for_subject(*vocab_index, *embedder, spec.condition, Domain::condition,
                                 spec.k);
    return cohort;  // empty: nothing to define the cohort with
}

CodeLibrary build_runtime_library(const StudySpec& spec,
                                  const std::vector<TestSuggestion>& suggestions,
                                  const std::vector<Frame>& frames, const Embedder& embedder) {
    CodeLibrary lib;
    lib.condition = spec.condition;
    lib.region = spec.region;
    lib.coding_systems = spec.coding_systems;
    lib.cohort = resolve_cohort(spec, nullptr, nullptr);

    CodeList demographics = extract_demographic_codes(frames);
    if (demographics.concepts.empty()) return lib;
    const EmbeddingIndex demo_index = build_index(demographics.concepts, embedder);

    for (const auto& s : suggestions) {
        if (s.category != TestCategory::demography || !trim(s.target).empty()) continue;
        const std::string subject = recover_subject(s.description);
        if (subject.empty() || lib.find(Domain::demographic, subject)) continue;
        CodeList list =
            codes_for_subject(demo_index, embedder, subject, Domain::demographic, spec.k);
        if (!list.concepts.empty()) lib.lists[Domain::demographic].push_back(std::move(list));
    }
    return lib;
}

std::vector<TestSuggestion> suggest(const StudySpec& /*spec*/, const std::vector<GroundedStat>& stats,
                                    const CodeLibrary& library,
                                    const std::vector<TableSchema>& schema) {
    std::vector<TestSuggestion> out;
    const GroundedStat* age_mean = nullptr;
    const GroundedStat* age_sd = nullptr;

    auto apply_expectation = [](TestSuggestion& s, const GroundedStat& stat) {
        if (stat.range) {
            s.comparison = ComparisonType::range;
            s.range_low = stat.range->first;
            s.range_high = stat.range->second;
        } else {
            s.comparison = ComparisonType::point;
            s.expected_value = stat.value;
        }
    };

    auto code_target = [&](Domain domain, const std::string& subject) {
        std::string target = "codes:" + to_string(domain) + ":" + subject;
        if (const CodeList* list = library.find(domain, subject); list && !list->concepts.empty())
            target += "=" + join_codes(*list);
        return target;
    };

    for (const auto& stat : stats) {
        TestSuggestion s;
        s.references = stat.references;
        const std::string raw_subject = trim(stat.subject);
        const std::string subject = strip_markers(raw_subject);
        switch (stat.statistic) {
            case StatisticKind::prevalence:
                s.description = "check prevalence";
                s.category = TestCategory::diagnosis;
                s.level = TestLevel::distribution;
                s.target = "cohort";
                apply_expectation(s, stat);
                break;
            case StatisticKind::incidence:
                s.description = "check incidence";
                s.category = TestCategory::diagnosis;
                s.level = TestLevel::distribution;
                s.target = "cohort:new";
                apply_expectation(s, stat);
                break;
            case StatisticKind::demographic_share: {
                s.description = raw_subject + (stat.diagnosed_scope ? " diagnosed" : "");
                s.category = TestCategory::demography;
                s.level =
                    stat.diagnosed_scope ? TestLevel::subpopulation : TestLevel::distribution;
                s.diagnosed = stat.diagnosed_scope;
                apply_expectation(s, stat);
                if (const CodeList* list = library.find(Domain::demographic, subject);
                    list && !list->concepts.empty())
                    s.target = list->concepts.front().vocabulary + "=" +
                               list->concepts.front().code;
                break;
            }
            case StatisticKind::comorbidity_rate:
                s.description = raw_subject + " diagnosis diagnosed";
                s.category = TestCategory::diagnosis;
                s.level = TestLevel::subpopulation;
                s.diagnosed = true;
                s.target = code_target(Domain::condition, subject);
                apply_expectation(s, stat);
                break;
            case StatisticKind::drug_share:
                s.description = raw_subject + " drug exposure diagnosed";
                s.category = TestCategory::drug;
                s.level = TestLevel::subpopulation;
                s.diagnosed = true;
                s.target = code_target(Domain::drug, subject);
                apply_expectation(s, stat);
                break;
            case StatisticKind::measurement_expectation:
                // Completeness check: the lab should exist for nearly every
                // cohort member, regardless of the grounded expectation value.
                s.description = raw_subject + " measurement";
                s.category = TestCategory::measurement;
                s.level = TestLevel::distribution;
                s.diagnosed = true;
                s.comparison = ComparisonType::greater_than;
                s.expected_value = 95.0;
                s.target = code_target(Domain::measurement, subject);
                break;
            case StatisticKind::age_mean:
                if (!age_mean) age_mean = &stat;
                continue;
            case StatisticKind::age_sd:
                if (!age_sd) age_sd = &stat;
                continue;
            default:
                continue;  // no executable mapping for this statistic kind
        }
        validate_suggestion(s);
        out.push_back(std::move(s));
    }

    if (age_mean || age_sd) {
        TestSuggestion s;
        s.description = "age at diagnosis";
        s.category = TestCategory::demography;
        s.level = TestLevel::subpopulation;
        s.comparison = ComparisonType::distribution_welch;
        s.diagnosed = true;
        s.target = "age_at_diagnosis";
        if (age_mean && age_mean->value) s.expected_value = *age_mean->value;
        if (age_sd && age_sd->value) s.range_low = *age_sd->value;
        if (age_mean) append_references(s.references, age_mean->references);
        if (age_sd) append_references(s.references, age_sd->references);
        out.push_back(std::move(s));
    }

    for (const auto& table : schema) {
        TestSuggestion s;
        s.description =
            schema.size() == 1 ? "check data types" : "check " + table.name + " data types";
        s.category = TestCategory::metadata;
        s.level = TestLevel::metadata;
        s.comparison = ComparisonType::dtype_check;
        s.target = "table:" + table.name;
        s.references = {"declared table schema"};
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TestSuggestion> double_pass_validate(const std::vector<TestSuggestion>& suggestions,
                                                 Provider& provider, const StudySpec& spec) {
    std::vector<TestSuggestion> reviewed;
    for (const auto& s : suggestions) {
        if (s.remove) continue;
        if (s.comparison == ComparisonType::dtype_check ||
            (!s.expected_value && !s.range_low && !s.range_high)) {
            reviewed.push_back(s);  // nothing statistic-backed to re-review
            continue;
        }
        GroundedStat stat;
        stat.statistic = kind_for_suggestion(s);
        stat.subject = recover_subject(s.description);
        if (s.comparison == ComparisonType::range)
            stat.range = std::make_pair(s.range_low.value_or(0.0), s.range_high.value_or(0.0));
        else
            stat.value = s.expected_value ? *s.expected_value : s.range_low.value_or(0.0);
        stat.diagnosed_scope = s.diagnosed;
        stat.references = s.references;

        ValidationVerdict verdict;
        try {
            verdict = provider.validate_statistic(stat, spec);
        } catch (const std::exception& e) {
            throw double_pass_aborted("validation pass failed on '" + s.description +
                                          "': " + e.what(),
                                      std::move(reviewed), suggestions.size());
        }
        if (verdict.recommendation == Recommendation::remove) continue;
        TestSuggestion kept = s;
        if (verdict.recommendation == Recommendation::fix) {
            kept.expected_value = verdict.corrected_value;
            if (kept.comparison == ComparisonType::range) {
                kept.comparison = ComparisonType::point;
                kept.range_low.reset();
                kept.range_high.reset();
            }
            kept.fixed = true;
            kept.description = strip_markers(kept.description);
            append_references(kept.references, verdict.references);
        }
        reviewed.push_back(std::move(kept));
    }

    std::vector<TestSuggestion> out;
    std::set<std::string> seen;
    for (auto& s : reviewed) {
        const std::string key = s.description + '\x1f' + expectation_key(s);
        if (seen.insert(key).second) out.push_back(std::move(s));
    }
    return out;
}

const char* const kMatrixHeader =
    "description|category|level|comparison_type|expected_value|range_low|range_high|diagnosed|"
    "target|references|fixed|remove";

namespace {

const std::vector<std::string>& matrix_fields() {
    static const std::vector<std::string> fields = {
        "description", "category",   "level", "comparison_type", "expected_value", "range_low",
        "range_high",  "diagnosed",  "target", "references",     "fixed",          "remove"};
    return fields;
}

std::string optional_number(const std::optional<double>& v) {
    return v ? format_roundtrip(*v) : std::string();
}

std::optional<double> parse_optional_number(const std::string& field, size_t row,
                                            const std::string& name) {
    if (trim(field).empty()) return std::nullopt;
    const std::optional<double> value = parse_double(trim(field));
    if (!value)
        throw parse_error("suite matrix row " + std::to_string(row) + ": " + name +
                          " is not a number: '" + field + "'");
    return value;
}

bool parse_bool_field(const std::string& field, size_t row, const std::string& name) {
    const std::string t = to_lower(trim(field));
    if (t == "true") return true;
    if (t == "false") return false;
    throw parse_error("suite matrix row " + std::to_string(row) + ": " + name +
                      " must be True or False, got '" + field + "'");
}

}  // namespace

std::string serialize_matrix(const std::vector<TestSuggestion>& suggestions) {
    std::string out = kMatrixHeader;
    out += '\n';
    for (const auto& s : suggestions) {
        std::vector<std::string> fields;
        fields.push_back(escape_delimited(s.description, '|'));
        fields.push_back(to_string(s.category));
        fields.push_back(to_string(s.level));
        fields.push_back(to_string(s.comparison));
        fields.push_back(optional_number(s.expected_value));
        fields.push_back(optional_number(s.range_low));
        fields.push_back(optional_number(s.range_high));
        fields.push_back(s.diagnosed ? "True" : "False");
        fields.push_back(escape_delimited(s.target, '|'));
        fields.push_back(escape_delimited(nlohmann::json(s.references).dump(), '|'));
        fields.push_back(s.fixed ? "True" : "False");
        fields.push_back(s.remove ? "True" : "False");
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i) out += '|';
            out += fields[i];
        }
        out += '\n';
    }
    return out;
}

std::vector<TestSuggestion> parse_matrix(const std::string& text) {
    const auto rows = parse_delimited(text, '|', "suite matrix");
    if (rows.empty()) throw parse_error("suite matrix: missing header row");
    if (rows.front() != matrix_fields()) {
        std::string got;
        for (size_t i = 0; i < rows.front().size(); ++i) {
            if (i) got += '|';
            got += rows.front()[i];
        }
        throw parse_error("suite matrix: bad header, expected '" + std::string(kMatrixHeader) +
                          "', got '" + got + "'");
    }
    std::vector<TestSuggestion> out;
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const size_t rownum = r;  // 1-based data row
        if (row.size() != matrix_fields().size())
            throw parse_error("suite matrix row " + std::to_string(rownum) + ": expected " +
                              std::to_string(matrix_fields().size()) + " fields, got " +
                              std::to_string(row.size()));
        TestSuggestion s;
        s.description = row[0];
        try {
            s.category = test_category_from_string(row[1]);
            s.level = test_level_from_string(row[2]);
            s.comparison = comparison_type_from_string(row[3]);
        } catch (const schema_error& e) {
            throw parse_error("suite matrix row " + std::to_string(rownum) + ": " + e.what());
        }
        s.expected_value = parse_optional_number(row[4], rownum, "expected_value");
        s.range_low = parse_optional_number(row[5], rownum, "range_low");
        s.range_high = parse_optional_number(row[6], rownum, "range_high");
        s.diagnosed = parse_bool_field(row[7], rownum, "diagnosed");
        s.target = row[8];
        if (!trim(row[9]).empty()) {
            try {
                const auto refs = nlohmann::json::parse(row[9]);
                if (!refs.is_array()) throw parse_error("not an array");
                for (const auto& ref : refs) s.references.push_back(ref.get<std::string>());
            } catch (const std::exception&) {
                throw parse_error("suite matrix row " + std::to_string(rownum) +
                                  ": references must be a JSON array of strings, got '" + row[9] +
                                  "'");
            }
        }
        s.fixed = parse_bool_field(row[10], rownum, "fixed");
        s.remove = parse_bool_field(row[11], rownum, "remove");
        try {
            validate_suggestion(s);
        } catch (const schema_error& e) {
            throw parse_error("suite matrix row " + std::to_string(rownum) + ": " + e.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TestSuggestion> load_matrix(const std::string& path) {
    return parse_matrix(read_file(path));
}

namespace {

std::vector<std::string> normalized_codes(const std::vector<Concept>& concepts) {
    std::vector<std::string> codes;
    for (const auto& c : concepts) codes.push_back(to_upper(trim(c.code)));
    return codes;
}

std::vector<std::string> split_codes(std::string_view csv) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= csv.size()) {
        size_t comma = csv.find(',', start);
        if (comma == std::string_view::npos) comma = csv.size();
        const std::string code = to_upper(trim(csv.substr(start, comma - start)));
        if (!code.empty()) out.push_back(code);
        start = comma + 1;
    }
    return out;
}

bool table_exists(const std::vector<TableSchema>& schema, std::string_view name) {
    for (const auto& t : schema)
        if (t.name == name) return true;
    return false;
}

// Returns true when the binding resolved; false leaves the case unbound.
bool bind_target(const TestSuggestion& s, const CodeLibrary& library,
                 const std::vector<TableSchema>& schema, TargetBinding& binding,
                 std::vector<std::string>& warnings) {
    const std::string target = trim(s.target);

    if (s.comparison == ComparisonType::dtype_check) {
        binding.kind = BindingKind::dtype;
        if (target.empty()) {
            for (const auto& t : schema) binding.dtype_tables.push_back(t.name);
            return !binding.dtype_tables.empty();
        }
        if (target.rfind("table:", 0) == 0) {
            const std::string name = trim(target.substr(6));
            if (!table_exists(schema, name)) {
                warnings.push_back("'" + s.description + "': unknown table '" + name + "'");
                binding = {};
                return false;
            }
            binding.dtype_tables.push_back(name);
            return true;
        }
        warnings.push_back("'" + s.description + "': unrecognized data-type target '" + target +
                           "'");
        binding = {};
        return false;
    }

    if (target == "cohort" || target == "cohort:new") {
        binding.kind = BindingKind::cohort_share;
        binding.new_only = target == "cohort:new";
        return true;
    }
    if (target == "age_at_diagnosis") {
        binding.kind = BindingKind::age_at_diagnosis;
        return true;
    }
    if (target.rfind("codes:", 0) == 0) {
        const std::string rest = target.substr(6);
        const size_t colon = rest.find(':');
        if (colon == std::string::npos) {
            warnings.push_back("'" + s.description + "': malformed code target '" + target + "'");
            return false;
        }
        Domain domain;
        try {
            domain = domain_from_string(trim(rest.substr(0, colon)));
        } catch (const schema_error&) {
            warnings.push_back("'" + s.description + "': unknown code domain in '" + target +
                               "'");
            return false;
        }
        const size_t eq = rest.find('=', colon + 1);
        const std::string subject =
            trim(rest.substr(colon + 1, eq == std::string::npos ? std::string::npos
                                                                : eq - colon - 1));
        std::vector<std::string> codes;
        if (eq != std::string::npos) {
            codes = split_codes(std::string_view(rest).substr(eq + 1));
        } else if (const CodeList* list = library.find(domain, subject)) {
            codes = normalized_codes(list->concepts);
        }
        if (codes.empty()) {
            warnings.push_back("'" + s.description + "': no codes available for '" + subject +
                               "'");
            return false;
        }
        binding.kind = BindingKind::code_match;
        binding.code_domain = domain;
        binding.codes = std::move(codes);
        return true;
    }

    // "<table>.<column>=<value>"
    const size_t dot = target.find('.');
    const size_t eq = target.find('=');
    if (dot != std::string::npos && eq != std::string::npos && dot < eq) {
        const std::string table = trim(target.substr(0, dot));
        const std::string column = trim(target.substr(dot + 1, eq - dot - 1));
        const std::string value = trim(target.substr(eq + 1));
        for (const auto& t : schema) {
            if (t.name != table) continue;
            if (t.column_index(column) < 0) break;
            binding.kind = BindingKind::value_match;
            binding.table = table;
            binding.column = column;
            binding.value = value;
            return true;
        }
        warnings.push_back("'" + s.description + "': no column '" + table + "." + column + "'");
        return false;
    }

    if (target.empty()) {
        // Fallback: resolve by the suggestion's own wording.
        const std::string subject = recover_subject(s.description);
        if (s.category == TestCategory::demography) {
            if (const CodeList* list = library.find(Domain::demographic, subject);
                list && !list->concepts.empty()) {
                const Concept& c = list->concepts.front();
                if (list->concepts.size() > 1)
                    warnings.push_back("'" + s.description + "': " +
                                       std::to_string(list->concepts.size()) +
                                       " demographic matches, using " + c.vocabulary);
                const size_t split = c.vocabulary.find('.');
                if (split != std::string::npos) {
                    binding.kind = BindingKind::value_match;
                    binding.table = c.vocabulary.substr(0, split);
                    binding.column = c.vocabulary.substr(split + 1);
                    binding.value = c.code;
                    return true;
                }
            }
        } else {
            Domain domain = Domain::other;
            if (s.category == TestCategory::diagnosis) domain = Domain::condition;
            if (s.category == TestCategory::drug) domain = Domain::drug;
            if (s.category == TestCategory::measurement) domain = Domain::measurement;
            if (s.category == TestCategory::procedure) domain = Domain::procedure;
            if (domain != Domain::other) {
                if (const CodeList* list = library.find(domain, subject);
                    list && !list->concepts.empty()) {
                    binding.kind = BindingKind::code_match;
                    binding.code_domain = domain;
                    binding.codes = normalized_codes(list->concepts);
                    return true;
                }
            }
        }
        warnings.push_back("'" + s.description + "': no target and no library match");
        return false;
    }

    warnings.push_back("'" + s.description + "': unrecognized target '" + target + "'");
    return false;
}

bool expectation_complete(const TestSuggestion& s) {
    switch (s.comparison) {
        case ComparisonType::point:
        case ComparisonType::less_than:
        case ComparisonType::greater_than:
            return s.expected_value.has_value();
        case ComparisonType::range:
            return s.range_low.has_value() && s.range_high.has_value();
        case ComparisonType::distribution_welch:
            return s.expected_value.has_value() && s.range_low.has_value();
        case ComparisonType::dtype_check:
            return true;
    }
    return false;
}

}  // namespace

TestSuite compile(const std::vector<TestSuggestion>& suggestions, const CodeLibrary& library,
                  const std::vector<TableSchema>& schema) {
    for (const auto& table : schema)
        if (table.role_index(ColumnRole::person_id) < 0)
            throw compile_error("table '" + table.name + "' lacks a person-id column");

    TestSuite suite;
    suite.condition = library.condition;
    suite.region = library.region;
    suite.cohort_codes = normalized_codes(library.cohort.concepts);

    std::map<std::string, int> name_uses;
    for (const auto& s : suggestions) {
        if (s.remove) continue;
        TestCase c;
        c.name = trim(s.description);
        int& uses = name_uses[c.name];
        if (uses++ > 0) c.name += " " + std::to_string(uses - 1);
        c.category = s.category;
        c.level = s.level;
        c.comparison = s.comparison;
        c.expected = s.expected_value;
        c.range_low = s.range_low;
        c.range_high = s.range_high;
        c.cohort_scope = s.diagnosed ? CohortScope::diagnosed : CohortScope::population;
        c.references = s.references;

        const bool bound = bind_target(s, library, schema, c.binding, suite.warnings);
        if (bound) {
            if (c.binding.kind == BindingKind::cohort_share ||
                c.binding.kind == BindingKind::age_at_diagnosis)
                c.binding.codes = suite.cohort_codes;
            else if (c.binding.kind == BindingKind::dtype)
                c.binding.code_formats = library.coding_systems;
        }
        const bool usable = bound && !s.references.empty() && expectation_complete(s);
        if (!usable) {
            c.reference_status = ReferenceStatus::no_reference;
            if (!bound) c.binding = {};
        }
        suite.cases.push_back(std::move(c));
    }
    return suite;
}

}  // namespace datapeck
