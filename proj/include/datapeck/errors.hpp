#pragma once

#include <stdexcept>
#include <string>

namespace datapeck {

// Base class for all library failures.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input: CSV, JSON, TSV vocabularies, suite matrices.
struct parse_error : error {
    using error::error;
};

// Schema violations: duplicate columns, missing or repeated roles, unknown names.
struct schema_error : error {
    using error::error;
};

// Degenerate statistical input: zero pooled variance, proportions outside [0,1],
// sample sizes below two.
struct stat_error : error {
    using error::error;
};

// Observed/expected ratio against a zero expectation. Callers must turn this
// into a failed test rather than divide.
struct ratio_undefined : stat_error {
    using stat_error::stat_error;
};

// Provider transport or contract failures. `retriable` distinguishes transient
// transport problems from permanent contract violations.
struct provider_error : error {
    provider_error(const std::string& what, bool retriable_arg)
        : error(what), retriable(retriable_arg) {}
    bool retriable = false;
};

// A suite that does not fit the schema or data it is compiled against.
struct compile_error : error {
    using error::error;
};

}  // namespace datapeck
