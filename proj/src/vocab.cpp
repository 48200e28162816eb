#include "datapeck/vocab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>

#include "datapeck/errors.hpp"
#include "datapeck/util.hpp"

namespace datapeck {

std::string to_string(Domain d) {
    switch (d) {
        case Domain::condition: return "condition";
        case Domain::drug: return "drug";
        case Domain::measurement: return "measurement";
        case Domain::procedure: return "procedure";
        case Domain::demographic: return "demographic";
        case Domain::other: return "other";
    }
    return "other";
}

Domain domain_from_string(std::string_view s) {
    if (iequals(s, "condition")) return Domain::condition;
    if (iequals(s, "drug")) return Domain::drug;
    if (iequals(s, "measurement")) return Domain::measurement;
    if (iequals(s, "procedure")) return Domain::procedure;
    if (iequals(s, "demographic")) return Domain::demographic;
    if (iequals(s, "other")) return Domain::other;
    throw schema_error("unknown domain: '" + std::string(s) + "'");
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Domain domain_from_athena(std::string_view domain_id) {
    if (iequals(domain_id, "Condition")) return Domain::condition;
    if (iequals(domain_id, "Drug")) return Domain::drug;
    if (iequals(domain_id, "Measurement")) return Domain::measurement;
    if (iequals(domain_id, "Procedure")) return Domain::procedure;
    if (iequals(domain_id, "Gender") || iequals(domain_id, "Race") ||
        iequals(domain_id, "Ethnicity"))
        return Domain::demographic;
    return Domain::other;
}

}  // namespace

std::vector<float> HashedBagEmbedder::embed(const std::string& text) const {
    std::vector<float> v(static_cast<std::size_t>(dimension()), 0.0f);
    for (const auto& token : tokenize(text))
        v[fnv1a(token) % v.size()] += 1.0f;
    double norm2 = 0.0;
    for (float x : v) norm2 += static_cast<double>(x) * x;
    if (norm2 > 0.0) {
        const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
        for (float& x : v) x *= inv;
    }
    return v;
}

std::vector<Concept> parse_vocabulary(std::string_view tsv_text, const std::string& origin) {
    auto rows = parse_delimited(tsv_text, '\t', origin);
    if (rows.empty()) throw parse_error(origin + ": empty vocabulary file");

    const auto& header = rows.front();
    auto column = [&](const char* name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return static_cast<int>(i);
        throw parse_error(origin + ": vocabulary header lacks column '" + std::string(name) + "'");
    };
    const int id_col = column("concept_id");
    const int name_col = column("concept_name");
    const int domain_col = column("domain_id");
    const int vocab_col = column("vocabulary_id");
    const int code_col = column("concept_code");

    std::vector<Concept> concepts;
    std::set<std::pair<std::string, std::string>> seen;
    concepts.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size())
            throw parse_error(origin + ": line " + std::to_string(r + 1) + ": expected " +
                              std::to_string(header.size()) + " fields, found " +
                              std::to_string(row.size()));
        Concept c;
        try {
            c.concept_id = std::stoll(trim(row[id_col]));
        } catch (const std::exception&) {
            throw parse_error(origin + ": line " + std::to_string(r + 1) +
                              ": concept_id is not an integer: '" + row[id_col] + "'");
        }
        c.name = trim(row[name_col]);
        c.domain = domain_from_athena(trim(row[domain_col]));
        c.vocabulary = trim(row[vocab_col]);
        c.code = trim(row[code_col]);
        if (!seen.insert({c.vocabulary, c.code}).second)
            throw parse_error(origin + ": duplicate concept (" + c.vocabulary + ", " + c.code +
                              ") at line " + std::to_string(r + 1));
        concepts.push_back(std::move(c));
    }
    return concepts;
}

std::vector<Concept> load_vocabulary(const std::string& tsv_path) {
    return parse_vocabulary(read_file(tsv_path), tsv_path);
}

EmbeddingIndex build_index(const std::vector<Concept>& concepts, const Embedder& embedder) {
    EmbeddingIndex index;
    index.dim = embedder.dimension();
    std::set<std::pair<std::string, std::string>> seen;
    index.concepts.reserve(concepts.size());
    index.vectors.reserve(concepts.size());
    for (const auto& c : concepts) {
        if (!seen.insert({c.vocabulary, c.code}).second)
            throw schema_error("duplicate concept (" + c.vocabulary + ", " + c.code + ")");
        auto v = embedder.embed(c.name);
        if (static_cast<int>(v.size()) != index.dim)
            throw error("embedder returned wrong dimension for concept " +
                        std::to_string(c.concept_id));
        double norm2 = 0.0;
        for (float x : v) norm2 += static_cast<double>(x) * x;
        if (norm2 == 0.0)
            throw schema_error("concept " + std::to_string(c.concept_id) +
                               " ('" + c.name + "') embeds to a zero vector");
        index.concepts.push_back(c);
        index.vectors.push_back(std::move(v));
    }
    return index;
}

EmbeddingIndex build_index(const std::string& vocab_tsv_path, const Embedder& embedder) {
    return build_index(load_vocabulary(vocab_tsv_path), embedder);
}

std::vector<SearchHit> search(const EmbeddingIndex& index, const std::string& query,
                              Domain domain, int k, const Embedder& embedder) {
    if (k < 1) throw error("search: k must be positive");
    auto q = embedder.embed(query);
    if (static_cast<int>(q.size()) != index.dim)
        throw error("search: query embedding dimension mismatch");

    std::vector<SearchHit> hits;
    for (std::size_t i = 0; i < index.concepts.size(); ++i) {
        if (index.concepts[i].domain != domain) continue;
        double dot = 0.0;
        for (int d = 0; d < index.dim; ++d)
            dot += static_cast<double>(q[d]) * index.vectors[i][d];
        hits.push_back(SearchHit{index.concepts[i], dot});
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.item.concept_id < b.item.concept_id;
    });
    if (static_cast<std::size_t>(k) < hits.size()) hits.resize(static_cast<std::size_t>(k));
    return hits;
}

void save_index(const EmbeddingIndex& index, const std::string& path) {
    std::ostringstream out;
    out << "dim=" << index.dim << "\n";
    for (std::size_t i = 0; i < index.concepts.size(); ++i) {
        std::vector<std::uint8_t> bytes;
        bytes.reserve(index.vectors[i].size() * 4);
        for (float x : index.vectors[i]) {
            const auto u = std::bit_cast<std::uint32_t>(x);
            bytes.push_back(static_cast<std::uint8_t>(u & 0xff));
            bytes.push_back(static_cast<std::uint8_t>((u >> 8) & 0xff));
            bytes.push_back(static_cast<std::uint8_t>((u >> 16) & 0xff));
            bytes.push_back(static_cast<std::uint8_t>((u >> 24) & 0xff));
        }
        out << index.concepts[i].concept_id << "\t"
            << base64_encode(bytes.data(), bytes.size()) << "\n";
    }
    write_file(path, out.str());
}

EmbeddingIndex load_index(const std::string& path, const std::vector<Concept>& concepts) {
    const std::string text = read_file(path);
    std::map<long long, const Concept*> by_id;
    for (const auto& c : concepts) by_id[c.concept_id] = &c;

    EmbeddingIndex index;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line.rfind("dim=", 0) != 0)
                throw parse_error(path + ": missing dim= header");
            index.dim = std::stoi(line.substr(4));
            if (index.dim < 1) throw parse_error(path + ": invalid dimension");
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw parse_error(path + ": line " + std::to_string(line_no) + ": missing tab");
        long long id = 0;
        try {
            id = std::stoll(line.substr(0, tab));
        } catch (const std::exception&) {
            throw parse_error(path + ": line " + std::to_string(line_no) + ": bad concept_id");
        }
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw parse_error(path + ": line " + std::to_string(line_no) + ": concept " +
                              std::to_string(id) + " not present in vocabulary");
        auto bytes = base64_decode(line.substr(tab + 1));
        if (bytes.size() != static_cast<std::size_t>(index.dim) * 4)
            throw parse_error(path + ": line " + std::to_string(line_no) +
                              ": vector length does not match dimension");
        std::vector<float> v(static_cast<std::size_t>(index.dim));
        for (int d = 0; d < index.dim; ++d) {
            std::uint32_t u = static_cast<std::uint32_t>(bytes[d * 4]) |
                              (static_cast<std::uint32_t>(bytes[d * 4 + 1]) << 8) |
                              (static_cast<std::uint32_t>(bytes[d * 4 + 2]) << 16) |
                              (static_cast<std::uint32_t>(bytes[d * 4 + 3]) << 24);
            v[static_cast<std::size_t>(d)] = std::bit_cast<float>(u);
        }
        index.concepts.push_back(*it->second);
        index.vectors.push_back(std::move(v));
    }
    if (index.dim == 0) throw parse_error(path + ": empty index file");
    return index;
}

CodeList extract_demographic_codes(const std::vector<Frame>& frames) {
    CodeList list;
    list.condition = "demographics";
    list.domain = Domain::demographic;
    list.provenance = CodeProvenance::user_supplied;
    long long next_id = 1;
    for (const auto& frame : frames) {
        for (std::size_t c = 0; c < frame.column_count(); ++c) {
            if (frame.schema().columns[c].role != ColumnRole::demographic) continue;
            std::set<std::string> values;
            for (std::size_t r = 0; r < frame.row_count(); ++r) {
                if (frame.is_null(r, c)) continue;
                std::string v = trim(frame.cell(r, c));
                if (!v.empty()) values.insert(std::move(v));
            }
            const std::string source = frame.schema().name + "." + frame.schema().columns[c].name;
            for (const auto& v : values) {
                Concept entry;
                entry.concept_id = next_id++;
                entry.name = v;
                entry.domain = Domain::demographic;
                entry.vocabulary = source;
                entry.code = v;
                list.concepts.push_back(std::move(entry));
            }
        }
    }
    return list;
}

CodeList codes_for_subject(const EmbeddingIndex& index, const Embedder& embedder,
                           const std::string& subject, Domain domain, int k) {
    CodeList list;
    list.condition = subject;
    list.domain = domain;
    list.provenance = CodeProvenance::similarity_search;
    auto hits = search(index, subject, domain, k, embedder);
    if (hits.empty()) return list;
    const double top = hits.front().similarity;
    if (top <= 0.0) return list;  // no token overlap at all
    for (const auto& hit : hits)
        if (hit.similarity == top) list.concepts.push_back(hit.item);
    return list;
}

}  // namespace datapeck
