#pragma once

// Lazily built, cached golden-path objects shared by the heavier test files:
// the synthetic population frames, the fixture vocabulary index, the grounded
// statistics, and the suite they generate. Everything here is deterministic.

#include <string>
#include <vector>

#include "datapeck/frame.hpp"
#include "datapeck/gensuite.hpp"
#include "datapeck/provider.hpp"
#include "datapeck/testkit.hpp"
#include "datapeck/vocab.hpp"
#include "support/fixture_builder.hpp"
#include "support/paths.hpp"

namespace golden {

inline const datapeck::HashedBagEmbedder& embedder() {
    static const datapeck::HashedBagEmbedder e;
    return e;
}

inline const std::vector<datapeck::TableSchema>& flat_schema() {
    static const auto schema = datapeck::load_schema(fixture_path("flat_schema.json"));
    return schema;
}

inline const std::vector<datapeck::TableSchema>& multi_schema() {
    static const auto schema = datapeck::load_schema(fixture_path("multi_schema.json"));
    return schema;
}

inline const datapeck::StudySpec& spec() {
    static const auto s = datapeck::load_study_spec(fixture_path("flat_spec.json"));
    return s;
}

inline const std::vector<datapeck::Frame>& flat_frames() {
    static const std::vector<datapeck::Frame> frames = {
        datapeck::table_from_csv(fixtures::flat_csv(), flat_schema().front(), "person.csv")};
    return frames;
}

inline const std::vector<datapeck::Frame>& multi_frames() {
    static const std::vector<datapeck::Frame> frames = {
        datapeck::table_from_csv(fixtures::multi_person_csv(), multi_schema()[0], "person.csv"),
        datapeck::table_from_csv(fixtures::multi_condition_csv(), multi_schema()[1],
                                 "condition.csv"),
        datapeck::table_from_csv(fixtures::multi_measurement_csv(), multi_schema()[2],
                                 "measurement.csv")};
    return frames;
}

inline const datapeck::EmbeddingIndex& vocab_index() {
    static const datapeck::EmbeddingIndex index = datapeck::build_index(
        datapeck::load_vocabulary(fixture_path("t2d_vocabulary.tsv")), embedder());
    return index;
}

inline datapeck::MockProvider& provider() {
    static datapeck::MockProvider p(fixture_path("t2d_provider.json"));
    return p;
}

inline const std::vector<datapeck::GroundedStat>& stats() {
    static const auto s = provider().fetch_statistics(spec());
    return s;
}

inline const datapeck::CodeLibrary& library() {
    static const auto lib =
        datapeck::build_code_library(spec(), stats(), vocab_index(), embedder(), flat_frames());
    return lib;
}

// All 61 raw suggestions, before the second validation pass.
inline const std::vector<datapeck::TestSuggestion>& suggestions() {
    static const auto s = datapeck::suggest(spec(), stats(), library(), flat_schema());
    return s;
}

// The 60 rows that survive the second validation pass.
inline const std::vector<datapeck::TestSuggestion>& reviewed() {
    static const auto r = datapeck::double_pass_validate(suggestions(), provider(), spec());
    return r;
}

inline const datapeck::TestSuite& suite() {
    static const auto s = datapeck::compile(reviewed(), library(), flat_schema());
    return s;
}

inline const std::vector<datapeck::TestResult>& results() {
    static const auto r = datapeck::run_suite(suite(), flat_frames());
    return r;
}

inline const datapeck::TestSuggestion* find_suggestion(
    const std::vector<datapeck::TestSuggestion>& list, const std::string& description) {
    for (const auto& s : list)
        if (s.description == description) return &s;
    return nullptr;
}

inline const datapeck::TestCase* find_case(const datapeck::TestSuite& s, const std::string& name) {
    for (const auto& c : s.cases)
        if (c.name == name) return &c;
    return nullptr;
}

inline const datapeck::TestResult* find_result(const std::vector<datapeck::TestResult>& rs,
                                               const std::string& name) {
    for (const auto& r : rs)
        if (r.name == name) return &r;
    return nullptr;
}

}  // namespace golden
