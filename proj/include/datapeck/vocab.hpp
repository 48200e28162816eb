#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "datapeck/frame.hpp"

namespace datapeck {

enum class Domain { condition, drug, measurement, procedure, demographic, other };

std::string to_string(Domain d);
Domain domain_from_string(std::string_view s);  // throws schema_error

struct Concept {
    long long concept_id = 0;
    std::string name;        // concept_name
    Domain domain = Domain::other;
    std::string vocabulary;  // vocabulary_id, e.g. SNOMED / LOINC / RxNorm
    std::string code;        // concept_code

    bool operator==(const Concept&) const = default;
};

enum class CodeProvenance { user_supplied, similarity_search };

// Concept codes answering one subject (a condition, drug, or lab) in one
// clinical domain.
struct CodeList {
    std::string condition;  // subject the list answers for
    Domain domain = Domain::other;
    std::vector<Concept> concepts;
    CodeProvenance provenance = CodeProvenance::user_supplied;
};

// Text embedding interface. Implementations must be deterministic.
class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual int dimension() const = 0;
    // Unit-norm vector (or all-zero for text with no tokens).
    virtual std::vector<float> embed(const std::string& text) const = 0;
};

// Deterministic bag-of-words embedder: lowercase alphanumeric tokens hashed
// into 256 buckets (FNV-1a), then L2-normalized.
class HashedBagEmbedder final : public Embedder {
  public:
    int dimension() const override { return 256; }
    std::vector<float> embed(const std::string& text) const override;
};

struct EmbeddingIndex {
    int dim = 0;
    std::vector<Concept> concepts;
    std::vector<std::vector<float>> vectors;  // unit norm, parallel to concepts
};

struct SearchHit {
    Concept item;
    double similarity = 0.0;
};

// Athena-style TSV export: tab-separated with a header naming at least
// concept_id, concept_name, domain_id, vocabulary_id, concept_code.
std::vector<Concept> load_vocabulary(const std::string& tsv_path);
std::vector<Concept> parse_vocabulary(std::string_view tsv_text, const std::string& origin);

// Embeds every concept name. Throws on duplicate (vocabulary, code) pairs and
// on names that embed to a zero vector.
EmbeddingIndex build_index(const std::vector<Concept>& concepts, const Embedder& embedder);
EmbeddingIndex build_index(const std::string& vocab_tsv_path, const Embedder& embedder);

// Top-k concepts of one domain by cosine similarity, ties broken by ascending
// concept_id. k larger than the domain population returns everything.
std::vector<SearchHit> search(const EmbeddingIndex& index, const std::string& query,
                              Domain domain, int k, const Embedder& embedder);

// Persisted form: header "dim=<d>", then one record per line,
// "concept_id<TAB>base64(vector as little-endian 32-bit floats)".
void save_index(const EmbeddingIndex& index, const std::string& path);
// Rejoins stored vectors with concept metadata by id; unknown ids are errors.
EmbeddingIndex load_index(const std::string& path, const std::vector<Concept>& concepts);

// Distinct values observed in demographic-role columns, as one CodeList with
// vocabulary "<table>.<column>" per value. Sorted, deterministic.
CodeList extract_demographic_codes(const std::vector<Frame>& frames);

// Code list for one subject: top-k search, keeping only the hits tied at
// maximum similarity.
CodeList codes_for_subject(const EmbeddingIndex& index, const Embedder& embedder,
                           const std::string& subject, Domain domain, int k);

}  // namespace datapeck
