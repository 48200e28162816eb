#include "datapeck/util.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "datapeck/errors.hpp"

namespace datapeck {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

double round_half_away(double x, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(x * scale) / scale;
}

std::string format_fixed(double x, int decimals) {
    double r = round_half_away(x, decimals);
    if (r == 0.0) r = 0.0;  // normalise -0.0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, r);
    return buf;
}

std::string format_roundtrip(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) throw error("number formatting failed");
    return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::size_t start = s.front() == '+' ? 1 : 0;
    double value = 0;
    auto [ptr, ec] = std::from_chars(s.data() + start, s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t n) {
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (std::size_t i = 0; i < n; i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(data[i]) << 16;
        if (i + 1 < n) chunk |= static_cast<std::uint32_t>(data[i + 1]) << 8;
        if (i + 2 < n) chunk |= static_cast<std::uint32_t>(data[i + 2]);
        out += kB64[(chunk >> 18) & 0x3f];
        out += kB64[(chunk >> 12) & 0x3f];
        out += i + 1 < n ? kB64[(chunk >> 6) & 0x3f] : '=';
        out += i + 2 < n ? kB64[chunk & 0x3f] : '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view s) {
    if (s.size() % 4 != 0) throw parse_error("base64: length not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(s.size() / 4 * 3);
    for (std::size_t i = 0; i < s.size(); i += 4) {
        int vals[4];
        int pads = 0;
        for (int j = 0; j < 4; ++j) {
            char c = s[i + j];
            if (c == '=') {
                if (j < 2 || (j == 2 && s[i + 3] != '=')) throw parse_error("base64: bad padding");
                vals[j] = 0;
                ++pads;
            } else {
                vals[j] = b64_value(c);
                if (vals[j] < 0) throw parse_error(std::string("base64: bad character '") + c + "'");
                if (pads > 0) throw parse_error("base64: data after padding");
            }
        }
        std::uint32_t chunk = (static_cast<std::uint32_t>(vals[0]) << 18) |
                              (static_cast<std::uint32_t>(vals[1]) << 12) |
                              (static_cast<std::uint32_t>(vals[2]) << 6) |
                              static_cast<std::uint32_t>(vals[3]);
        out.push_back(static_cast<std::uint8_t>((chunk >> 16) & 0xff));
        if (pads < 2) out.push_back(static_cast<std::uint8_t>((chunk >> 8) & 0xff));
        if (pads < 1) out.push_back(static_cast<std::uint8_t>(chunk & 0xff));
    }
    return out;
}

std::string escape_delimited(std::string_view field, char delim) {
    bool needs_quotes = false;
    for (char c : field) {
        if (c == delim || c == '"' || c == '\n' || c == '\r') {
            needs_quotes = true;
            break;
        }
    }
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delim,
                                                      const std::string& origin) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty())
                    throw parse_error(origin + ": line " + std::to_string(line) +
                                      ": quote inside unquoted field");
                in_quotes = true;
                row_started = true;
                break;
            case '\r':
                break;  // tolerate CRLF
            case '\n':
                end_row();
                ++line;
                break;
            default:
                if (c == delim) {
                    end_field();
                    row_started = true;
                } else {
                    field += c;
                    row_started = true;
                }
        }
    }
    if (in_quotes)
        throw parse_error(origin + ": line " + std::to_string(line) + ": unterminated quote");
    if (row_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw error("write failed: " + path);
}

}  // namespace datapeck
