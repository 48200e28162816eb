#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "datapeck/coverage.hpp"
#include "datapeck/errors.hpp"
#include "datapeck/frame.hpp"
#include "datapeck/gensuite.hpp"
#include "datapeck/provider.hpp"
#include "datapeck/report.hpp"
#include "datapeck/testkit.hpp"
#include "datapeck/util.hpp"
#include "datapeck/vocab.hpp"

namespace {

using namespace datapeck;
namespace fs = std::filesystem;

// Exit codes: 0 run completed, 1 test failures under --fail-on-test-failure,
// 2 configuration error, 3 data/suite mismatch, 4 provider error.
constexpr int kExitOk = 0;
constexpr int kExitTestFailures = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitProvider = 4;

std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string now_utc_iso8601() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct DataArg {
    const TableSchema* schema = nullptr;
    std::string path;
};

// Pairs every --data <table>=<csv> argument with its schema entry; demands a
// file for every declared table and rejects unknown or duplicate names.
std::vector<DataArg> resolve_data_args(const std::vector<TableSchema>& schema,
                                       const std::vector<std::string>& args) {
    std::map<std::string, std::string> by_name;
    for (const auto& arg : args) {
        const std::size_t eq = arg.find('=');
        if (eq == std::string::npos || eq == 0)
            throw schema_error("--data expects <table>=<csv path>, got '" + arg + "'");
        const std::string name = trim(arg.substr(0, eq));
        const std::string path = trim(arg.substr(eq + 1));
        if (path.empty()) throw schema_error("--data for table '" + name + "' has an empty path");
        if (!by_name.emplace(name, path).second)
            throw schema_error("--data names table '" + name + "' twice");
    }
    std::vector<DataArg> resolved;
    for (const auto& t : schema) {
        const auto it = by_name.find(t.name);
        if (it == by_name.end()) throw schema_error("no --data file for table '" + t.name + "'");
        resolved.push_back({&t, it->second});
        by_name.erase(it);
    }
    if (!by_name.empty())
        throw schema_error("--data names a table absent from the schema: '" +
                           by_name.begin()->first + "'");
    return resolved;
}

std::vector<Frame> load_frames(const std::vector<DataArg>& resolved) {
    std::vector<Frame> frames;
    frames.reserve(resolved.size());
    for (const auto& arg : resolved) frames.push_back(load_table(arg.path, *arg.schema));
    return frames;
}

int config_error(const std::string& what) {
    std::cerr << "configuration error: " << what << "\n";
    return kExitConfig;
}

int data_error(const std::string& what) {
    std::cerr << "data error: " << what << "\n";
    return kExitData;
}

int provider_failure(const std::string& what) {
    std::cerr << "provider error: " << what << "\n";
    return kExitProvider;
}

struct BuildIndexOptions {
    std::string vocab_path;
    std::string out_path;
};

int cmd_build_index(const BuildIndexOptions& opt) {
    try {
        const std::vector<Concept> concepts = load_vocabulary(opt.vocab_path);
        const HashedBagEmbedder embedder;
        const EmbeddingIndex index = build_index(concepts, embedder);
        save_index(index, opt.out_path);
        std::cout << "indexed " << index.concepts.size() << " concepts\n";
        std::cout << fs::absolute(opt.out_path).string() << "\n";
        return kExitOk;
    } catch (const error& e) {
        return config_error(e.what());
    }
}

struct GenerateOptions {
    std::string spec_path;
    std::string schema_path;
    std::vector<std::string> data;
    std::string vocab_path;
    std::string index_path;
    std::string provider;
    std::string out_path;
};

int cmd_generate(const GenerateOptions& opt) {
    StudySpec spec;
    std::vector<TableSchema> schema;
    EmbeddingIndex index;
    std::string vocab_bytes;
    std::unique_ptr<Provider> provider;
    std::vector<DataArg> resolved;
    const HashedBagEmbedder embedder;
    try {
        spec = load_study_spec(opt.spec_path);
        schema = load_schema(opt.schema_path);
        vocab_bytes = read_file(opt.vocab_path);
        const std::vector<Concept> concepts =
            parse_vocabulary(vocab_bytes, opt.vocab_path);
        index = opt.index_path.empty() ? build_index(concepts, embedder)
                                       : load_index(opt.index_path, concepts);
        provider = make_provider(opt.provider);
        resolved = resolve_data_args(schema, opt.data);
    } catch (const error& e) {
        return config_error(e.what());
    }

    std::vector<Frame> frames;
    try {
        frames = load_frames(resolved);
    } catch (const error& e) {
        return data_error(e.what());
    }

    std::vector<GroundedStat> stats;
    try {
        stats = provider->fetch_statistics(spec);
    } catch (const provider_error& e) {
        return provider_failure(e.what());
    }
    if (stats.empty())
        std::cerr << "warning: provider returned no statistics for '" << spec.condition
                  << "' in '" << spec.region << "'; suggesting data-type checks only\n";

    const CodeLibrary library = build_code_library(spec, stats, index, embedder, frames);
    const std::vector<TestSuggestion> suggestions = suggest(spec, stats, library, schema);
    const std::size_t suggested = suggestions.size();

    std::vector<TestSuggestion> reviewed;
    try {
        reviewed = double_pass_validate(suggestions, *provider, spec);
    } catch (const double_pass_aborted& e) {
        const std::string partial_path = opt.out_path + ".partial";
        try {
            write_file(partial_path, serialize_matrix(e.partial));
            std::cerr << "partial suite (" << e.partial.size() << " of " << e.total_count
                      << " reviewed) written to " << fs::absolute(partial_path).string() << "\n";
        } catch (const error& inner) {
            std::cerr << "could not write partial suite: " << inner.what() << "\n";
        }
        return provider_failure(e.what());
    } catch (const provider_error& e) {
        return provider_failure(e.what());
    }

    const std::size_t fixed = static_cast<std::size_t>(std::count_if(
        reviewed.begin(), reviewed.end(), [](const TestSuggestion& s) { return s.fixed; }));

    try {
        write_file(opt.out_path, serialize_matrix(reviewed));
        nlohmann::ordered_json meta;
        meta["condition"] = spec.condition;
        meta["region"] = spec.region;
        meta["provider"] = provider->id();
        meta["vocabulary_checksum"] = fnv1a64_hex(vocab_bytes);
        meta["generated_at"] = now_utc_iso8601();
        meta["counts"] = {{"suggested", suggested},
                          {"removed", suggested - reviewed.size()},
                          {"fixed", fixed},
                          {"final", reviewed.size()}};
        write_file(opt.out_path + ".meta.json", meta.dump(2) + "\n");
    } catch (const error& e) {
        return config_error(e.what());
    }

    std::cout << "suggested: " << suggested << "\n";
    std::cout << "removed: " << suggested - reviewed.size() << "\n";
    std::cout << "fixed: " << fixed << "\n";
    std::cout << "final: " << reviewed.size() << "\n";
    std::cout << fs::absolute(opt.out_path).string() << "\n";
    std::cout << fs::absolute(opt.out_path + ".meta.json").string() << "\n";
    return kExitOk;
}

struct RunOptions {
    std::string suite_path;
    std::string spec_path;
    std::string schema_path;
    std::vector<std::string> data;
    std::string out_dir;
    bool fail_on_test_failure = false;
    bool include_metadata = false;
    std::string format = "both";
};

int cmd_run(const RunOptions& opt) {
    StudySpec spec;
    std::vector<TableSchema> schema;
    std::vector<TestSuggestion> suggestions;
    std::vector<DataArg> resolved;
    try {
        spec = load_study_spec(opt.spec_path);
        schema = load_schema(opt.schema_path);
        suggestions = load_matrix(opt.suite_path);
        resolved = resolve_data_args(schema, opt.data);
        fs::create_directories(opt.out_dir);
    } catch (const error& e) {
        return config_error(e.what());
    } catch (const fs::filesystem_error& e) {
        return config_error(e.what());
    }

    try {
        const std::vector<Frame> frames = load_frames(resolved);
        const HashedBagEmbedder embedder;
        const CodeLibrary library = build_runtime_library(spec, suggestions, frames, embedder);
        const TestSuite suite = compile(suggestions, library, schema);
        for (const auto& w : suite.warnings) std::cerr << "warning: " << w << "\n";

        const std::vector<TestResult> results = run_suite(suite, frames);
        const CoverageReport coverage = compute_coverage(suite, schema);

        const fs::path out_dir(opt.out_dir);
        std::vector<fs::path> artifacts;
        const auto emit = [&](const char* name, const std::string& content) {
            const fs::path p = out_dir / name;
            write_file(p.string(), content);
            artifacts.push_back(p);
        };
        emit("results.json", results_to_json(results));
        emit("coverage.csv", heatmap_csv(coverage, schema, opt.include_metadata));
        emit("coverage_levels.csv", coverage_long_csv(coverage, schema));
        if (opt.format == "md" || opt.format == "both")
            emit("report.md", render_report_markdown(results, coverage, suite));
        if (opt.format == "html" || opt.format == "both")
            emit("report.html", render_report_html(results, coverage, suite));

        std::size_t passed = 0, failed = 0, noref = 0, errors = 0;
        for (const auto& r : results) switch (r.status) {
                case TestStatus::pass: ++passed; break;
                case TestStatus::fail: ++failed; break;
                case TestStatus::no_reference: ++noref; break;
                case TestStatus::error: ++errors; break;
            }
        for (const auto& p : artifacts) std::cout << fs::absolute(p).string() << "\n";
        std::cout << results.size() << " tests: " << passed << " passed, " << failed
                  << " failed, " << noref << " without reference, " << errors << " errors\n";
        if (opt.fail_on_test_failure && (failed > 0 || errors > 0)) return kExitTestFailures;
        return kExitOk;
    } catch (const error& e) {
        return data_error(e.what());
    }
}

struct CoverageOptions {
    std::string suite_path;
    std::string spec_path;
    std::string schema_path;
    std::vector<std::string> data;
    std::string out_dir;
    bool include_metadata = false;
};

int cmd_coverage(const CoverageOptions& opt) {
    StudySpec spec;
    std::vector<TableSchema> schema;
    std::vector<TestSuggestion> suggestions;
    std::vector<DataArg> resolved;
    try {
        spec = load_study_spec(opt.spec_path);
        schema = load_schema(opt.schema_path);
        suggestions = load_matrix(opt.suite_path);
        resolved = resolve_data_args(schema, opt.data);
        fs::create_directories(opt.out_dir);
    } catch (const error& e) {
        return config_error(e.what());
    } catch (const fs::filesystem_error& e) {
        return config_error(e.what());
    }

    try {
        const std::vector<Frame> frames = load_frames(resolved);
        const HashedBagEmbedder embedder;
        const CodeLibrary library = build_runtime_library(spec, suggestions, frames, embedder);
        const TestSuite suite = compile(suggestions, library, schema);
        const CoverageReport coverage = compute_coverage(suite, schema);

        const fs::path out_dir(opt.out_dir);
        write_file((out_dir / "coverage.csv").string(),
                   heatmap_csv(coverage, schema, opt.include_metadata));
        write_file((out_dir / "coverage_levels.csv").string(),
                   coverage_long_csv(coverage, schema));
        std::cout << fs::absolute(out_dir / "coverage.csv").string() << "\n";
        std::cout << fs::absolute(out_dir / "coverage_levels.csv").string() << "\n";
        std::cout << "overall coverage: " << format_fixed(coverage.overall_percent(), 1) << "% ("
                  << coverage.covered().size() << " of " << coverage.total_columns
                  << " columns)\n";
        return kExitOk;
    } catch (const error& e) {
        return data_error(e.what());
    }
}

struct ReportOptions {
    std::string suite_path;
    std::string spec_path;
    std::string schema_path;
    std::string results_path;
    std::string annotations_path;
    std::string out_dir;
};

int cmd_report(const ReportOptions& opt) {
    StudySpec spec;
    std::vector<TableSchema> schema;
    std::vector<TestSuggestion> suggestions;
    std::vector<TestResult> results;
    std::vector<QualityAnnotation> annotations;
    try {
        spec = load_study_spec(opt.spec_path);
        schema = load_schema(opt.schema_path);
        suggestions = load_matrix(opt.suite_path);
        results = load_results(opt.results_path);
        annotations = load_annotations(opt.annotations_path);
        fs::create_directories(opt.out_dir);
    } catch (const error& e) {
        return config_error(e.what());
    } catch (const fs::filesystem_error& e) {
        return config_error(e.what());
    }

    try {
        const HashedBagEmbedder embedder;
        const CodeLibrary library = build_runtime_library(spec, suggestions, {}, embedder);
        const TestSuite suite = compile(suggestions, library, schema);
        const QualitySummary summary = summarize_quality(annotations, results, suite);

        const fs::path out_dir(opt.out_dir);
        write_file((out_dir / "quality.json").string(), quality_to_json(summary));
        write_file((out_dir / "quality.md").string(), render_quality_markdown(summary));
        std::cout << fs::absolute(out_dir / "quality.json").string() << "\n";
        std::cout << fs::absolute(out_dir / "quality.md").string() << "\n";
        return kExitOk;
    } catch (const error& e) {
        return data_error(e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-quality unit tests for structured health-record extracts"};
    app.require_subcommand(1);

    BuildIndexOptions bi;
    CLI::App* build_index_cmd =
        app.add_subcommand("build-index", "Embed a vocabulary into a reusable search index");
    build_index_cmd->add_option("--vocab", bi.vocab_path, "Vocabulary TSV")->required();
    build_index_cmd->add_option("--out", bi.out_path, "Index output path")->required();

    GenerateOptions gen;
    CLI::App* generate_cmd =
        app.add_subcommand("generate", "Generate a validated test-suite matrix");
    generate_cmd->add_option("--spec", gen.spec_path, "Study spec JSON")->required();
    generate_cmd->add_option("--schema", gen.schema_path, "Table schema JSON")->required();
    generate_cmd->add_option("--data", gen.data, "Data table as <table>=<csv path>")
        ->required()
        ->take_all();
    generate_cmd->add_option("--vocab", gen.vocab_path, "Vocabulary TSV")->required();
    generate_cmd->add_option("--index", gen.index_path,
                             "Prebuilt embedding index (skips re-embedding)");
    generate_cmd
        ->add_option("--provider", gen.provider,
                     "Statistics provider: mock:<fixture.json> or http(s)://host")
        ->required();
    generate_cmd->add_option("--out", gen.out_path, "Suite matrix output path")->required();

    RunOptions run;
    CLI::App* run_cmd = app.add_subcommand("run", "Run a suite matrix against data tables");
    run_cmd->add_option("--suite", run.suite_path, "Suite matrix")->required();
    run_cmd->add_option("--spec", run.spec_path, "Study spec JSON")->required();
    run_cmd->add_option("--schema", run.schema_path, "Table schema JSON")->required();
    run_cmd->add_option("--data", run.data, "Data table as <table>=<csv path>")
        ->required()
        ->take_all();
    run_cmd->add_option("--out-dir", run.out_dir, "Artifact output directory")->required();
    run_cmd->add_flag("--fail-on-test-failure", run.fail_on_test_failure,
                      "Exit 1 when any test fails or errors");
    run_cmd->add_flag("--include-metadata", run.include_metadata,
                      "Count metadata-level tests in the coverage heatmap");
    run_cmd->add_option("--format", run.format, "Report format")
        ->check(CLI::IsMember({"md", "html", "both"}))
        ->capture_default_str();

    CoverageOptions cov;
    CLI::App* coverage_cmd =
        app.add_subcommand("coverage", "Compute column coverage for a suite");
    coverage_cmd->add_option("--suite", cov.suite_path, "Suite matrix")->required();
    coverage_cmd->add_option("--spec", cov.spec_path, "Study spec JSON")->required();
    coverage_cmd->add_option("--schema", cov.schema_path, "Table schema JSON")->required();
    coverage_cmd->add_option("--data", cov.data, "Data table as <table>=<csv path>")
        ->required()
        ->take_all();
    coverage_cmd->add_option("--out-dir", cov.out_dir, "Artifact output directory")->required();
    coverage_cmd->add_flag("--include-metadata", cov.include_metadata,
                           "Count metadata-level tests in the coverage heatmap");

    ReportOptions rep;
    CLI::App* report_cmd =
        app.add_subcommand("report", "Summarize reference quality from annotations");
    report_cmd->add_option("--suite", rep.suite_path, "Suite matrix")->required();
    report_cmd->add_option("--spec", rep.spec_path, "Study spec JSON")->required();
    report_cmd->add_option("--schema", rep.schema_path, "Table schema JSON")->required();
    report_cmd->add_option("--results", rep.results_path, "results.json from a run")->required();
    report_cmd->add_option("--annotations", rep.annotations_path,
                           "CSV test_name,reference_valid,accuracy")
        ->required();
    report_cmd->add_option("--out-dir", rep.out_dir, "Artifact output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    if (build_index_cmd->parsed()) return cmd_build_index(bi);
    if (generate_cmd->parsed()) return cmd_generate(gen);
    if (run_cmd->parsed()) return cmd_run(run);
    if (coverage_cmd->parsed()) return cmd_coverage(cov);
    if (report_cmd->parsed()) return cmd_report(rep);
    return kExitConfig;
}
