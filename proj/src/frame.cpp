#include "datapeck/frame.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <json.hpp>

#include "datapeck/errors.hpp"
#include "datapeck/util.hpp"

namespace datapeck {

std::string to_string(ColumnType t) {
    switch (t) {
        case ColumnType::integer: return "integer";
        case ColumnType::floating: return "float";
        case ColumnType::text: return "text";
        case ColumnType::date: return "date";
        case ColumnType::code: return "code";
        case ColumnType::boolean: return "boolean";
    }
    return "text";
}

std::string to_string(ColumnRole r) {
    switch (r) {
        case ColumnRole::person_id: return "person_id";
        case ColumnRole::demographic: return "demographic";
        case ColumnRole::diagnosis_code: return "diagnosis_code";
        case ColumnRole::drug_code: return "drug_code";
        case ColumnRole::measurement_code: return "measurement_code";
        case ColumnRole::measurement_value: return "measurement_value";
        case ColumnRole::procedure_code: return "procedure_code";
        case ColumnRole::date: return "date";
        case ColumnRole::other: return "other";
    }
    return "other";
}

ColumnType column_type_from_string(std::string_view s) {
    if (s == "integer") return ColumnType::integer;
    if (s == "float") return ColumnType::floating;
    if (s == "text") return ColumnType::text;
    if (s == "date") return ColumnType::date;
    if (s == "code") return ColumnType::code;
    if (s == "boolean") return ColumnType::boolean;
    throw schema_error("unknown column type: '" + std::string(s) + "'");
}

ColumnRole column_role_from_string(std::string_view s) {
    if (s == "person_id") return ColumnRole::person_id;
    if (s == "demographic") return ColumnRole::demographic;
    if (s == "diagnosis_code") return ColumnRole::diagnosis_code;
    if (s == "drug_code") return ColumnRole::drug_code;
    if (s == "measurement_code") return ColumnRole::measurement_code;
    if (s == "measurement_value") return ColumnRole::measurement_value;
    if (s == "procedure_code") return ColumnRole::procedure_code;
    if (s == "date") return ColumnRole::date;
    if (s == "other") return ColumnRole::other;
    throw schema_error("unknown column role: '" + std::string(s) + "'");
}

int TableSchema::column_index(std::string_view column_name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == column_name) return static_cast<int>(i);
    return -1;
}

int TableSchema::role_index(ColumnRole role) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].role == role) return static_cast<int>(i);
    return -1;
}

namespace {

void validate_table_schema(const TableSchema& table, const std::string& origin) {
    if (table.name.empty()) throw schema_error(origin + ": table with empty name");
    std::set<std::string> seen;
    int person_id_count = 0;
    for (const auto& col : table.columns) {
        if (col.name.empty())
            throw schema_error(origin + ": table '" + table.name + "' has a column with no name");
        if (!seen.insert(col.name).second)
            throw schema_error(origin + ": table '" + table.name + "' declares column '" +
                               col.name + "' more than once");
        if (col.role == ColumnRole::person_id) ++person_id_count;
    }
    if (person_id_count != 1)
        throw schema_error(origin + ": table '" + table.name + "' must declare exactly one " +
                           "person_id column, found " + std::to_string(person_id_count));
}

}  // namespace

std::vector<TableSchema> parse_schema(const std::string& json_text, const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(origin + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) throw parse_error(origin + ": schema root must be a list of tables");

    std::vector<TableSchema> tables;
    std::set<std::string> table_names;
    for (const auto& t : doc) {
        TableSchema table;
        try {
            table.name = t.at("table_name").get<std::string>();
            for (const auto& c : t.at("columns")) {
                ColumnSchema col;
                col.name = c.at("name").get<std::string>();
                col.type = column_type_from_string(c.at("type").get<std::string>());
                col.role = column_role_from_string(c.at("role").get<std::string>());
                col.nullable = c.value("nullable", true);
                table.columns.push_back(std::move(col));
            }
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(origin + ": table entry " + std::to_string(tables.size()) + ": " +
                              e.what());
        }
        validate_table_schema(table, origin);
        if (!table_names.insert(table.name).second)
            throw schema_error(origin + ": duplicate table '" + table.name + "'");
        tables.push_back(std::move(table));
    }
    if (tables.empty()) throw schema_error(origin + ": schema declares no tables");
    return tables;
}

std::vector<TableSchema> load_schema(const std::string& path) {
    return parse_schema(read_file(path), path);
}

std::string schema_to_json(const std::vector<TableSchema>& tables) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& table : tables) {
        nlohmann::ordered_json t;
        t["table_name"] = table.name;
        t["columns"] = nlohmann::ordered_json::array();
        for (const auto& col : table.columns) {
            nlohmann::ordered_json c;
            c["name"] = col.name;
            c["type"] = to_string(col.type);
            c["role"] = to_string(col.role);
            c["nullable"] = col.nullable;
            t["columns"].push_back(std::move(c));
        }
        doc.push_back(std::move(t));
    }
    return doc.dump(2) + "\n";
}

bool is_valid_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    const int year = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
    const int month = (s[5] - '0') * 10 + (s[6] - '0');
    const int day = (s[8] - '0') * 10 + (s[9] - '0');
    if (month < 1 || month > 12 || day < 1) return false;
    static constexpr int days_in_month[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int limit = days_in_month[month - 1];
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    if (month == 2 && leap) limit = 29;
    return day <= limit;
}

long long iso_date_to_days(std::string_view s) {
    if (!is_valid_iso_date(s)) throw parse_error("not an ISO-8601 date: '" + std::string(s) + "'");
    const long long y = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
    const long long m = (s[5] - '0') * 10 + (s[6] - '0');
    const long long d = (s[8] - '0') * 10 + (s[9] - '0');
    // Days-from-civil (Howard Hinnant's algorithm).
    const long long yy = y - (m <= 2 ? 1 : 0);
    const long long era = (yy >= 0 ? yy : yy - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(yy - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

namespace {

bool conforms_integer(std::string_view s) {
    if (s.empty()) return false;
    std::size_t start = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (start == s.size()) return false;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(s.data() + start, s.data() + s.size(), value);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool conforms_float(std::string_view s) {
    if (s.empty()) return false;
    std::size_t start = s[0] == '+' ? 1 : 0;
    double value = 0;
    auto [ptr, ec] = std::from_chars(s.data() + start, s.data() + s.size(), value);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(value);
}

bool conforms_code(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

bool conforms_boolean(std::string_view s) {
    return iequals(s, "true") || iequals(s, "false") || s == "0" || s == "1";
}

}  // namespace

bool cell_conforms(std::string_view raw, ColumnType type) {
    switch (type) {
        case ColumnType::integer: return conforms_integer(raw);
        case ColumnType::floating: return conforms_float(raw);
        case ColumnType::text: return true;
        case ColumnType::date: return is_valid_iso_date(raw);
        case ColumnType::code: return conforms_code(raw);
        case ColumnType::boolean: return conforms_boolean(raw);
    }
    return false;
}

Frame Frame::from_rows(TableSchema schema, std::vector<std::vector<std::string>> rows) {
    validate_table_schema(schema, "table '" + schema.name + "'");
    Frame f;
    const std::size_t ncols = schema.columns.size();
    f.rows_ = rows.size();
    f.columns_.assign(ncols, {});
    f.null_.assign(ncols, {});
    f.conforming_.assign(ncols, {});
    for (std::size_t c = 0; c < ncols; ++c) {
        f.columns_[c].reserve(rows.size());
        f.null_[c].reserve(rows.size());
        f.conforming_[c].reserve(rows.size());
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != ncols)
            throw parse_error("table '" + schema.name + "': row " + std::to_string(r + 1) +
                              " has " + std::to_string(rows[r].size()) + " fields, expected " +
                              std::to_string(ncols));
        for (std::size_t c = 0; c < ncols; ++c) {
            const std::string& raw = rows[r][c];
            const ColumnSchema& col = schema.columns[c];
            const bool empty = raw.empty();
            const bool null = empty && col.nullable;
            // An empty cell is a null in nullable columns and a conformance
            // failure in non-nullable ones; values are never coerced.
            const bool ok = empty ? col.nullable : cell_conforms(raw, col.type);
            f.null_[c].push_back(null);
            f.conforming_[c].push_back(ok);
            f.columns_[c].push_back(std::move(rows[r][c]));
        }
    }
    f.schema_ = std::move(schema);
    return f;
}

std::size_t Frame::nonconforming_count(std::size_t col) const {
    std::size_t count = 0;
    for (std::size_t r = 0; r < rows_; ++r)
        if (!conforming_[col][r]) ++count;
    return count;
}

Frame table_from_csv(std::string_view csv_text, const TableSchema& schema,
                     const std::string& origin) {
    auto rows = parse_delimited(csv_text, ',', origin);
    if (rows.empty()) throw parse_error(origin + ": missing header row");

    const auto& header = rows.front();
    std::vector<int> source_for_column(schema.columns.size(), -1);
    std::vector<std::string> missing;
    std::vector<std::string> unknown;
    for (std::size_t i = 0; i < header.size(); ++i) {
        int idx = schema.column_index(trim(header[i]));
        if (idx < 0) {
            unknown.push_back(trim(header[i]));
        } else if (source_for_column[idx] >= 0) {
            throw parse_error(origin + ": header repeats column '" + trim(header[i]) + "'");
        } else {
            source_for_column[idx] = static_cast<int>(i);
        }
    }
    for (std::size_t c = 0; c < schema.columns.size(); ++c)
        if (source_for_column[c] < 0) missing.push_back(schema.columns[c].name);
    if (!missing.empty() || !unknown.empty()) {
        std::string msg = origin + ": header does not match schema for table '" + schema.name + "'";
        if (!missing.empty()) {
            msg += "; missing columns:";
            for (const auto& m : missing) msg += " '" + m + "'";
        }
        if (!unknown.empty()) {
            msg += "; unknown columns:";
            for (const auto& u : unknown) msg += " '" + u + "'";
        }
        throw parse_error(msg);
    }

    std::vector<std::vector<std::string>> data;
    data.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size())
            throw parse_error(origin + ": line " + std::to_string(r + 1) + ": expected " +
                              std::to_string(header.size()) + " fields, found " +
                              std::to_string(rows[r].size()));
        std::vector<std::string> ordered(schema.columns.size());
        for (std::size_t c = 0; c < schema.columns.size(); ++c)
            ordered[c] = std::move(rows[r][source_for_column[c]]);
        data.push_back(std::move(ordered));
    }
    return Frame::from_rows(schema, std::move(data));
}

Frame load_table(const std::string& csv_path, const TableSchema& schema) {
    return table_from_csv(read_file(csv_path), schema, csv_path);
}

StudySpec parse_study_spec(const std::string& json_text, const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(origin + ": invalid JSON: " + e.what());
    }
    StudySpec spec;
    try {
        spec.condition = doc.at("condition").get<std::string>();
        spec.region = doc.at("region").get<std::string>();
        if (doc.contains("coding_systems"))
            for (const auto& [domain, system] : doc.at("coding_systems").items())
                spec.coding_systems[domain] = system.get<std::string>();
        spec.k = doc.value("k", 20);
        if (doc.contains("cohort_codes")) {
            CohortCodes cc;
            cc.vocabulary = doc.at("cohort_codes").at("vocabulary").get<std::string>();
            for (const auto& code : doc.at("cohort_codes").at("codes"))
                cc.codes.push_back(code.get<std::string>());
            spec.cohort_codes = std::move(cc);
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(origin + ": " + e.what());
    }
    if (spec.condition.empty()) throw schema_error(origin + ": condition must not be empty");
    if (spec.k < 1) throw schema_error(origin + ": k must be positive");
    return spec;
}

StudySpec load_study_spec(const std::string& path) {
    return parse_study_spec(read_file(path), path);
}

}  // namespace datapeck
