#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "datapeck/errors.hpp"
#include "datapeck/testkit.hpp"
#include "support/golden.hpp"
#include "support/throws.hpp"

using namespace datapeck;

namespace {

const std::set<std::string>& golden_cohort() {
    static const std::set<std::string> cohort =
        extract_cohort(golden::flat_frames(), {"44054006"});
    return cohort;
}

// A share test over person.gender=Female on the synthetic population.
TestCase female_share_case(ComparisonType cmp) {
    TestCase c;
    c.name = "crafted female share";
    c.category = TestCategory::demography;
    c.level = TestLevel::distribution;
    c.comparison = cmp;
    c.cohort_scope = CohortScope::population;
    c.binding.kind = BindingKind::value_match;
    c.binding.table = "person";
    c.binding.column = "gender";
    c.binding.value = "Female";
    c.references = {"national census demographic tables"};
    return c;
}

const std::vector<TableSchema>& mimic_schema() {
    static const auto schema = load_schema(fixture_path("mimic_schema.json"));
    return schema;
}

std::vector<Frame> mimic_frames(bool dotted) {
    return {table_from_csv(fixtures::mimic_patients_csv(), mimic_schema()[0], "patients.csv"),
            table_from_csv(fixtures::mimic_diagnoses_csv(dotted), mimic_schema()[1],
                           "diagnoses.csv")};
}

// Condition + measurement tables only: 2500 diagnosed persons, 1516 with the
// hemoglobin-A1c lab, and no demographic or birth-date columns anywhere.
std::vector<Frame> lab_panel_frames() {
    return {table_from_csv(fixtures::hba1c_condition_csv(), golden::multi_schema()[1],
                           "condition.csv"),
            table_from_csv(fixtures::hba1c_measurement_csv(), golden::multi_schema()[2],
                           "measurement.csv")};
}

}  // namespace

TEST_CASE("status tokens round-trip and reject unknowns") {
    for (auto s : {TestStatus::pass, TestStatus::fail, TestStatus::no_reference,
                   TestStatus::error})
        CHECK(test_status_from_string(to_string(s)) == s);
    CHECK(to_string(TestStatus::pass) == "Pass");
    CHECK(to_string(TestStatus::no_reference) == "No Reference");
    CHECK_THROWS_AS(test_status_from_string("pass"), schema_error);  // case-sensitive
    CHECK_THROWS_AS(test_status_from_string("Maybe"), schema_error);
}

TEST_CASE("code syntax validation per classification system") {
    SUBCASE("ICD-9-CM wants dotted numeric, V, or E codes") {
        for (const char* ok : {"428.0", "428.00", "250.00", "001.1", "V12", "V12.3", "V12.34",
                               "E999", "E999.1", "v12.34", " 428.0 "})
            CHECK_MESSAGE(code_matches_system(ok, "ICD9CM"), ok);
        for (const char* bad : {"4280", "42800", "428.", "428.000", "42.0", "V1", "V12.345",
                                "E99", "E999.12", "25O.00", "", "428-0"})
            CHECK_MESSAGE(!code_matches_system(bad, "ICD9CM"), bad);
        // Alias spellings reach the same rule.
        CHECK(code_matches_system("428.0", "ICD-9-CM"));
        CHECK(code_matches_system("428.0", "icd9"));
        CHECK(!code_matches_system("4280", "icd9"));
    }
    SUBCASE("SNOMED wants 6 to 18 digits") {
        CHECK(code_matches_system("123456", "SNOMED"));
        CHECK(code_matches_system("44054006", "SNOMED"));
        CHECK(code_matches_system("123456789012345678", "SNOMED"));
        CHECK(!code_matches_system("12345", "SNOMED"));
        CHECK(!code_matches_system("1234567890123456789", "SNOMED"));
        CHECK(!code_matches_system("44054O06", "SNOMED"));
        CHECK(!code_matches_system("", "SNOMED"));
        CHECK(code_matches_system("123456", "SNOMED-CT"));
        CHECK(code_matches_system("123456", "snomedct"));
    }
    SUBCASE("RxNorm wants up to 8 digits") {
        CHECK(code_matches_system("6809", "RXNORM"));
        CHECK(code_matches_system("1", "RXNORM"));
        CHECK(code_matches_system("12345678", "RXNORM"));
        CHECK(!code_matches_system("123456789", "RXNORM"));
        CHECK(!code_matches_system("68a9", "RXNORM"));
        CHECK(!code_matches_system("", "RXNORM"));
    }
    SUBCASE("LOINC wants digits, a dash, and one check digit") {
        CHECK(code_matches_system("2345-7", "LOINC"));
        CHECK(code_matches_system("4548-4", "LOINC"));
        CHECK(code_matches_system("1-2", "LOINC"));
        CHECK(code_matches_system("1234567-1", "LOINC"));
        CHECK(!code_matches_system("12345678-1", "LOINC"));
        CHECK(!code_matches_system("-7", "LOINC"));
        CHECK(!code_matches_system("2345-", "LOINC"));
        CHECK(!code_matches_system("2345-77", "LOINC"));
        CHECK(!code_matches_system("2345_7", "LOINC"));
        CHECK(!code_matches_system("2345-a", "LOINC"));
    }
    SUBCASE("unrecognized systems skip validation") {
        CHECK(code_matches_system("anything at all", "CPT4"));
        CHECK(code_matches_system("", "HCPCS"));
    }
}

TEST_CASE("schema helpers locate code and date columns") {
    const auto& flat = golden::flat_schema();
    CHECK(diagnosis_code_columns(flat) ==
          std::vector<std::pair<std::string, std::string>>{{"person", "condition_code"}});
    CHECK(birth_date_column(flat) == std::make_pair(std::string("person"),
                                                    std::string("birth_date")));
    CHECK(diagnosis_date_column(flat) == std::make_pair(std::string("person"),
                                                        std::string("condition_date")));

    const auto& multi = golden::multi_schema();
    CHECK(diagnosis_code_columns(multi) ==
          std::vector<std::pair<std::string, std::string>>{{"condition", "condition_code"}});
    CHECK(birth_date_column(multi) == std::make_pair(std::string("person"),
                                                     std::string("birth_date")));
    // The event date must live in a table that also carries diagnosis codes.
    CHECK(diagnosis_date_column(multi) == std::make_pair(std::string("condition"),
                                                         std::string("condition_date")));

    const auto& mimic = mimic_schema();
    CHECK(diagnosis_code_columns(mimic) ==
          std::vector<std::pair<std::string, std::string>>{{"diagnoses", "icd9_code"}});
    CHECK_FALSE(birth_date_column(mimic).has_value());
    CHECK(diagnosis_date_column(mimic) == std::make_pair(std::string("diagnoses"),
                                                         std::string("dx_date")));

    CHECK(role_for_domain(Domain::condition) == ColumnRole::diagnosis_code);
    CHECK(role_for_domain(Domain::drug) == ColumnRole::drug_code);
    CHECK(role_for_domain(Domain::measurement) == ColumnRole::measurement_code);
    CHECK(role_for_domain(Domain::procedure) == ColumnRole::procedure_code);
    CHECK_THROWS_AS(role_for_domain(Domain::demographic), schema_error);
    CHECK_THROWS_AS(role_for_domain(Domain::other), schema_error);
}

TEST_CASE("extract_cohort collects persons by diagnosis code") {
    const auto& cohort = golden_cohort();
    CHECK(cohort.size() == 1180);
    CHECK(cohort == fixtures::ids_in_range(1, 1180));

    // Codes are trimmed and uppercased before matching.
    CHECK(extract_cohort(golden::flat_frames(), {"  44054006  "}) == cohort);

    // No codes: empty cohort, not an error.
    CHECK(extract_cohort(golden::flat_frames(), {}).empty());

    // A layout with no diagnosis-code column anywhere cannot define a cohort.
    std::vector<Frame> person_only = {table_from_csv(
        fixtures::multi_person_csv(), golden::multi_schema()[0], "person.csv")};
    CHECK(throws_with_substr<schema_error>(
        [&] { extract_cohort(person_only, {"44054006"}); },
        "cohort extraction: no table carries a diagnosis-code column"));
}

TEST_CASE("cohort extraction matches code strings literally") {
    // Dotted codes against dotted data: two of the five patients match.
    CHECK(extract_cohort(mimic_frames(true), {"428.0", "428.00"}) ==
          std::set<std::string>{"1", "2"});
    // The same dotted codes never match dot-stripped data; no normalization
    // is applied on either side.
    CHECK(extract_cohort(mimic_frames(false), {"428.0", "428.00"}).empty());
    // Matching the stored spelling works again.
    CHECK(extract_cohort(mimic_frames(false), {"4280", "42800"}) ==
          std::set<std::string>{"1", "2"});
}

TEST_CASE("share comparisons score the synthetic population correctly") {
    const auto& results = golden::results();
    REQUIRE(results.size() == 60);

    const TestResult* prevalence = golden::find_result(results, "check prevalence");
    REQUIRE(prevalence != nullptr);
    CHECK(prevalence->status == TestStatus::pass);
    CHECK(prevalence->expected == 11.3);
    CHECK(*prevalence->actual == doctest::Approx(11.8).epsilon(1e-12));
    CHECK(*prevalence->smd == doctest::Approx(0.015643840479327965).epsilon(1e-9));
    CHECK(*prevalence->ratio == doctest::Approx(1.0442477876106195).epsilon(1e-9));
    CHECK_FALSE(prevalence->p_value.has_value());

    // 586 of the 1180 first diagnoses fall in the most recent year.
    const TestResult* incidence = golden::find_result(results, "check incidence");
    REQUIRE(incidence != nullptr);
    CHECK(incidence->status == TestStatus::fail);
    CHECK(incidence->expected == 1.4);
    CHECK(*incidence->actual == doctest::Approx(5.86).epsilon(1e-12));
    CHECK(*incidence->smd == doctest::Approx(0.2401702986867574).epsilon(1e-6));
    CHECK(*incidence->ratio == doctest::Approx(5.86 / 1.4).epsilon(1e-9));

    // Female fails on the ratio alone: the standardized difference stays
    // under the 0.2 bar but 59.85 / 50.8 exceeds 1.15.
    const TestResult* female = golden::find_result(results, "Female");
    REQUIRE(female != nullptr);
    CHECK(female->status == TestStatus::fail);
    CHECK(*female->actual == doctest::Approx(59.85).epsilon(1e-12));
    CHECK(std::fabs(*female->smd) < 0.2);
    CHECK(*female->ratio > 1.15);

    // Male fails on both criteria.
    const TestResult* male = golden::find_result(results, "Male");
    REQUIRE(male != nullptr);
    CHECK(male->status == TestStatus::fail);
    CHECK(*male->actual == doctest::Approx(37.08).epsilon(1e-12));
    CHECK(*male->smd == doctest::Approx(-0.25265907954864).epsilon(1e-6));
    CHECK(*male->ratio < 0.85);

    // Diagnosed-scope shares divide by the 1180-person cohort.
    const TestResult* black_dx =
        golden::find_result(results, "Black or African American diagnosed");
    REQUIRE(black_dx != nullptr);
    CHECK(black_dx->status == TestStatus::pass);
    CHECK(black_dx->expected == 18.0);
    CHECK(*black_dx->actual == doctest::Approx(16.35593220338983).epsilon(1e-12));
    CHECK(*black_dx->smd == doctest::Approx(-0.04359774913518342).epsilon(1e-9));
    CHECK(*black_dx->ratio == doctest::Approx(0.908662900188324).epsilon(1e-9));

    // Hispanic or Latino diagnosed fails on the ratio floor: the ratio is
    // 0.8474..., just under the inclusive 0.85 bound at full precision.
    const TestResult* hispanic_dx =
        golden::find_result(results, "Hispanic or Latino diagnosed");
    REQUIRE(hispanic_dx != nullptr);
    CHECK(hispanic_dx->status == TestStatus::fail);
    CHECK(*hispanic_dx->actual == doctest::Approx(14.40677966101695).epsilon(1e-12));
    CHECK(std::fabs(*hispanic_dx->smd) < 0.2);
    CHECK(*hispanic_dx->ratio == doctest::Approx(0.8474576271186441).epsilon(1e-9));
    CHECK(*hispanic_dx->ratio < 0.85);

    const TestResult* male_dx = golden::find_result(results, "Male diagnosed");
    REQUIRE(male_dx != nullptr);
    CHECK(male_dx->status == TestStatus::fail);
    CHECK(male_dx->expected == 51.0);
    CHECK(*male_dx->actual == doctest::Approx(13.389830508474576).epsilon(1e-12));

    // Anemia was only ever coded outside the cohort: a genuine 0%.
    const TestResult* anemia = golden::find_result(results, "Anemia diagnosis diagnosed");
    REQUIRE(anemia != nullptr);
    CHECK(anemia->status == TestStatus::fail);
    CHECK(*anemia->actual == 0.0);
    CHECK(*anemia->smd == doctest::Approx(-0.6580957562018618).epsilon(1e-9));
    CHECK(*anemia->ratio == 0.0);

    // Every cohort member carries the glucose lab: completeness passes.
    const TestResult* glucose = golden::find_result(results, "Serum glucose measurement");
    REQUIRE(glucose != nullptr);
    CHECK(glucose->status == TestStatus::pass);
    CHECK(*glucose->actual == 100.0);
    CHECK(glucose->expected == 95.0);

    // The A1c lab never appears in the flat table: 0% completeness.
    const TestResult* a1c = golden::find_result(results, "Hemoglobin A1c measurement");
    REQUIRE(a1c != nullptr);
    CHECK(a1c->status == TestStatus::fail);
    CHECK(*a1c->actual == 0.0);

    // Exactly six tests pass on this population.
    std::vector<std::string> passing;
    for (const auto& r : results)
        if (r.status == TestStatus::pass) passing.push_back(r.name);
    CHECK(passing == std::vector<std::string>{
                         "Black or African American diagnosed",
                         "Hispanic or Latino",
                         "Hyperlipidemia diagnosis diagnosed",
                         "Not Hispanic or Latino",
                         "Serum glucose measurement",
                         "check prevalence",
                     });
}

TEST_CASE("age distribution comparison runs a two-sample test on first diagnoses") {
    const TestResult* age = golden::find_result(golden::results(), "age at diagnosis");
    REQUIRE(age != nullptr);
    // Cohort ages alternate 47/69 by id parity: mean 58 against reference 52.
    CHECK(age->status == TestStatus::fail);
    CHECK(age->expected == 52.0);
    CHECK(*age->actual == 58.0);
    CHECK(*age->smd == doctest::Approx(0.545338921808211).epsilon(1e-9));
    CHECK(*age->ratio == doctest::Approx(58.0 / 52.0).epsilon(1e-12));
    REQUIRE(age->p_value.has_value());
    CHECK(*age->p_value < 1e-30);
    CHECK(age->detail == "Welch t=13.25, df=2358.00, n=1180");
}

TEST_CASE("data-type checks report nonconforming cells and code formats") {
    // The flat table's single malformed cell is the duplicated diagnosis row
    // whose date uses slashes.
    const TestResult* dtype = golden::find_result(golden::results(), "check data types");
    REQUIRE(dtype != nullptr);
    CHECK(dtype->status == TestStatus::fail);
    CHECK(dtype->detail == "person.condition_date: 1 value(s) not a valid date");

    TestCase c;
    c.name = "check data types";
    c.comparison = ComparisonType::dtype_check;
    c.binding.kind = BindingKind::dtype;
    c.binding.dtype_tables = {"patients", "diagnoses"};
    c.binding.code_formats = {{"diagnosis", "ICD9CM"}};

    // Dot-stripped codes break the declared ICD-9-CM format; dotted pass.
    TestResult dotless = evaluate(c, mimic_frames(false), {});
    CHECK(dotless.status == TestStatus::fail);
    CHECK(dotless.detail == "diagnoses.icd9_code: 3 code(s) not in ICD9CM format");
    TestResult dotted = evaluate(c, mimic_frames(true), {});
    CHECK(dotted.status == TestStatus::pass);
    CHECK(dotted.detail.empty());

    // A table named by the check but absent from the data is a failure, not
    // a crash.
    c.binding.dtype_tables = {"ghost"};
    TestResult missing = evaluate(c, mimic_frames(true), {});
    CHECK(missing.status == TestStatus::fail);
    CHECK(missing.detail == "table 'ghost' missing from the data");
}

TEST_CASE("range and threshold comparisons score shares") {
    const double female_pct = 100.0 * 5985.0 / 10000.0;

    TestCase range = female_share_case(ComparisonType::range);
    range.range_low = 50.0;
    range.range_high = 65.0;
    TestResult in_range = evaluate(range, golden::flat_frames(), golden_cohort());
    CHECK(in_range.status == TestStatus::pass);
    CHECK(in_range.detail == "expected range [50.00, 65.00]");
    CHECK_FALSE(in_range.expected.has_value());
    CHECK(*in_range.actual == doctest::Approx(female_pct).epsilon(1e-12));

    // Range bounds are inclusive.
    range.range_low = female_pct;
    range.range_high = female_pct;
    CHECK(evaluate(range, golden::flat_frames(), golden_cohort()).status == TestStatus::pass);
    range.range_low = 10.0;
    range.range_high = 15.0;
    TestResult outside = evaluate(range, golden::flat_frames(), golden_cohort());
    CHECK(outside.status == TestStatus::fail);
    CHECK(outside.detail == "expected range [10.00, 15.00]");

    // Thresholds are strict: equality fails both directions.
    TestCase less = female_share_case(ComparisonType::less_than);
    less.expected = female_pct;
    CHECK(evaluate(less, golden::flat_frames(), golden_cohort()).status == TestStatus::fail);
    less.expected = 70.0;
    CHECK(evaluate(less, golden::flat_frames(), golden_cohort()).status == TestStatus::pass);

    TestCase greater = female_share_case(ComparisonType::greater_than);
    greater.expected = female_pct;
    CHECK(evaluate(greater, golden::flat_frames(), golden_cohort()).status == TestStatus::fail);
    greater.expected = 50.0;
    CHECK(evaluate(greater, golden::flat_frames(), golden_cohort()).status == TestStatus::pass);
}

TEST_CASE("reference-free and unrunnable cases degrade predictably") {
    SUBCASE("a case without references reports No Reference and nothing else") {
        TestCase c = female_share_case(ComparisonType::point);
        c.expected = 50.8;
        c.reference_status = ReferenceStatus::no_reference;
        TestResult r = evaluate(c, golden::flat_frames(), golden_cohort());
        CHECK(r.status == TestStatus::no_reference);
        CHECK_FALSE(r.expected.has_value());
        CHECK_FALSE(r.actual.has_value());
        CHECK_FALSE(r.smd.has_value());
        CHECK_FALSE(r.ratio.has_value());
        CHECK_FALSE(r.p_value.has_value());
        CHECK(r.detail.empty());
    }
    SUBCASE("an unbound target is an Error") {
        TestCase c = female_share_case(ComparisonType::point);
        c.expected = 50.8;
        c.binding = TargetBinding{};
        TestResult r = evaluate(c, golden::flat_frames(), golden_cohort());
        CHECK(r.status == TestStatus::error);
        CHECK(r.detail == "test has no usable target binding");
    }
    SUBCASE("missing tables and columns are Errors") {
        TestCase c = female_share_case(ComparisonType::point);
        c.expected = 50.8;
        c.binding.table = "ghost";
        TestResult bad_table = evaluate(c, golden::flat_frames(), golden_cohort());
        CHECK(bad_table.status == TestStatus::error);
        CHECK(bad_table.detail == "table 'ghost' missing from the data");

        c.binding.table = "person";
        c.binding.column = "eyeball";
        TestResult bad_col = evaluate(c, golden::flat_frames(), golden_cohort());
        CHECK(bad_col.status == TestStatus::error);
        CHECK(bad_col.detail == "column 'eyeball' missing from the data");
    }
    SUBCASE("an empty denominator is an Error, never a silent 0%") {
        TestCase c = female_share_case(ComparisonType::point);
        c.expected = 50.8;
        c.cohort_scope = CohortScope::diagnosed;
        TestResult r = evaluate(c, golden::flat_frames(), /*cohort=*/{});
        CHECK(r.status == TestStatus::error);
        CHECK(r.detail == "empty denominator");
    }
    SUBCASE("a zero expected value fails with an explicit ratio message") {
        TestCase c = female_share_case(ComparisonType::point);
        c.expected = 0.0;
        TestResult r = evaluate(c, golden::flat_frames(), golden_cohort());
        CHECK(r.status == TestStatus::fail);
        CHECK(r.detail == "ratio undefined: expected value is 0");
        CHECK(r.smd.has_value());
        CHECK_FALSE(r.ratio.has_value());
    }
    SUBCASE("degenerate 100-versus-0 proportions fail with an explicit message") {
        TestCase c = female_share_case(ComparisonType::point);
        c.expected = 100.0;
        c.binding.value = "Nonexistent gender";
        TestResult r = evaluate(c, golden::flat_frames(), golden_cohort());
        CHECK(r.status == TestStatus::fail);
        CHECK(r.detail == "standardized difference undefined for these proportions");
        CHECK_FALSE(r.smd.has_value());
    }
    SUBCASE("an age comparison without a birth-date column is an Error") {
        const TestCase* age = golden::find_case(golden::suite(), "age at diagnosis");
        REQUIRE(age != nullptr);
        const auto frames = lab_panel_frames();
        TestResult r = evaluate(*age, frames, extract_cohort(frames, {"44054006"}));
        CHECK(r.status == TestStatus::error);
        CHECK(r.detail == "no birth-date column in the data");
    }
    SUBCASE("a code binding in a non-clinical domain throws") {
        TestCase c = female_share_case(ComparisonType::point);
        c.expected = 50.8;
        c.binding = TargetBinding{};
        c.binding.kind = BindingKind::code_match;
        c.binding.code_domain = Domain::demographic;
        c.binding.codes = {"Female"};
        CHECK(throws_with_substr<schema_error>(
            [&] { evaluate(c, golden::flat_frames(), golden_cohort()); },
            "has no code column role"));
    }
}

TEST_CASE("lab completeness over a condition-plus-measurement layout") {
    const auto frames = lab_panel_frames();
    const auto cohort = extract_cohort(frames, {"44054006"});
    CHECK(cohort.size() == 2500);

    const TestCase* a1c = golden::find_case(golden::suite(), "Hemoglobin A1c measurement");
    REQUIRE(a1c != nullptr);
    TestResult r = evaluate(*a1c, frames, cohort);
    CHECK(r.status == TestStatus::fail);  // 60.64% of the cohort, threshold 95%
    CHECK(*r.actual == doctest::Approx(60.64).epsilon(1e-12));
    CHECK(r.expected == 95.0);
}

TEST_CASE("run_suite sorts results, isolates case failures, and repeats exactly") {
    const auto& results = golden::results();
    CHECK(std::is_sorted(results.begin(), results.end(),
                         [](const TestResult& a, const TestResult& b) { return a.name < b.name; }));
    // One result per case, names matching the suite.
    std::set<std::string> case_names;
    for (const auto& c : golden::suite().cases) case_names.insert(c.name);
    std::set<std::string> result_names;
    for (const auto& r : results) result_names.insert(r.name);
    CHECK(case_names == result_names);
    CHECK(results.size() == golden::suite().cases.size());

    // Rerunning the same suite on the same frames reproduces every value.
    CHECK(run_suite(golden::suite(), golden::flat_frames()) == results);

    // A case that throws mid-run becomes an Error result; its neighbours
    // still evaluate.
    TestSuite small;
    small.cohort_codes = {"44054006"};
    TestCase bad = female_share_case(ComparisonType::point);
    bad.name = "a throwing case";
    bad.expected = 50.8;
    bad.binding = TargetBinding{};
    bad.binding.kind = BindingKind::code_match;
    bad.binding.code_domain = Domain::demographic;
    bad.binding.codes = {"Female"};
    TestCase good = female_share_case(ComparisonType::less_than);
    good.name = "b surviving case";
    good.expected = 70.0;
    small.cases = {bad, good};
    const auto out = run_suite(small, golden::flat_frames());
    REQUIRE(out.size() == 2);
    CHECK(out[0].name == "a throwing case");
    CHECK(out[0].status == TestStatus::error);
    CHECK(out[0].detail.find("has no code column role") != std::string::npos);
    CHECK(out[1].name == "b surviving case");
    CHECK(out[1].status == TestStatus::pass);
}

TEST_CASE("run_suite tolerates a failed cohort extraction") {
    // A layout with no diagnosis-code column: cohort extraction fails, the
    // diagnosed-scope case reports the empty denominator, and population
    // cases still run.
    TestSuite suite;
    suite.cohort_codes = {"44054006"};

    TestCase diagnosed;
    diagnosed.name = "diagnosed share";
    diagnosed.comparison = ComparisonType::point;
    diagnosed.expected = 60.0;
    diagnosed.cohort_scope = CohortScope::diagnosed;
    diagnosed.binding.kind = BindingKind::value_match;
    diagnosed.binding.table = "patients";
    diagnosed.binding.column = "gender";
    diagnosed.binding.value = "Male";
    diagnosed.references = {"r"};

    TestCase population = diagnosed;
    population.name = "population share";
    population.cohort_scope = CohortScope::population;

    suite.cases = {diagnosed, population};
    std::vector<Frame> frames = {
        table_from_csv(fixtures::mimic_patients_csv(), mimic_schema()[0], "patients.csv")};
    const auto out = run_suite(suite, frames);
    REQUIRE(out.size() == 2);
    CHECK(out[0].name == "diagnosed share");
    CHECK(out[0].status == TestStatus::error);
    CHECK(out[0].detail == "empty denominator");
    // Three of the five patients are Male: an exact 60% point match.
    CHECK(out[1].name == "population share");
    CHECK(out[1].status == TestStatus::pass);
    CHECK(*out[1].actual == 60.0);
}

TEST_CASE("results do not depend on data row order") {
    const std::string csv = fixtures::flat_csv();
    std::vector<std::string> lines;
    size_t start = 0;
    while (start < csv.size()) {
        const size_t nl = csv.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(csv.substr(start));
            break;
        }
        lines.push_back(csv.substr(start, nl - start));
        start = nl + 1;
    }
    REQUIRE(lines.size() > 2);
    std::mt19937 rng(42);
    std::shuffle(lines.begin() + 1, lines.end(), rng);
    std::string shuffled = lines.front() + "\n";
    for (size_t i = 1; i < lines.size(); ++i) {
        shuffled += lines[i];
        shuffled += '\n';
    }
    const Frame frame =
        table_from_csv(shuffled, golden::flat_schema().front(), "shuffled.csv");
    CHECK(run_suite(golden::suite(), {frame}) == golden::results());
}

TEST_CASE("results serialize to JSON and back") {
    const auto& results = golden::results();
    CHECK(results_from_json(results_to_json(results)) == results);

    // Unset numerics and empty details are omitted from the records.
    TestResult noref;
    noref.name = "unreferenced";
    noref.status = TestStatus::no_reference;
    TestResult full;
    full.name = "scored";
    full.status = TestStatus::fail;
    full.expected = 1.0;
    full.actual = 2.0;
    full.smd = 0.3;
    full.ratio = 2.0;
    full.p_value = 0.04;
    full.detail = "d";
    const std::string text = results_to_json({noref, full});
    const auto doc = nlohmann::json::parse(text);
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 2);
    CHECK(doc[0].size() == 2);  // name + status only
    CHECK(doc[0].at("name") == "unreferenced");
    CHECK(doc[0].at("status") == "No Reference");
    CHECK(doc[1].size() == 8);
    CHECK(doc[1].at("p_value") == 0.04);
    CHECK(results_from_json(text) == std::vector<TestResult>{noref, full});

    // Malformed documents are parse errors naming the problem.
    CHECK(throws_with_substr<parse_error>([] { results_from_json("nope"); }, "results JSON"));
    CHECK(throws_with_substr<parse_error>([] { results_from_json("{}"); },
                                          "expected a top-level array"));
    CHECK_THROWS_AS(results_from_json(R"([{"name": 1, "status": "Pass"}])"), parse_error);
    CHECK_THROWS_AS(results_from_json(R"([{"name": "x"}])"), parse_error);
    CHECK_THROWS_AS(results_from_json(R"([{"name": "x", "status": "Perhaps"}])"), schema_error);
    CHECK_THROWS_AS(load_results(fixture_path("no_such_file.json")), parse_error);
}
