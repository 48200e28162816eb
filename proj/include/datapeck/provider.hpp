#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "datapeck/frame.hpp"

namespace datapeck {

enum class StatisticKind {
    prevalence,
    incidence,
    mortality_rate,
    lifetime_risk,
    demographic_share,
    comorbidity_rate,
    drug_share,
    measurement_expectation,
    age_mean,
    age_sd
};

std::string to_string(StatisticKind k);
StatisticKind statistic_kind_from_string(std::string_view s);  // throws schema_error

enum class ValueUnit { percent, native };

// One real-world expectation retrieved from a knowledge provider: a statistic
// about a subject, carrying either a point value or a range, plus citations.
struct GroundedStat {
    StatisticKind statistic = StatisticKind::prevalence;
    std::string subject;
    std::optional<double> value;
    std::optional<std::pair<double, double>> range;
    ValueUnit unit = ValueUnit::percent;
    bool diagnosed_scope = false;
    std::vector<std::string> references;
};

// Enforces: exactly one of value/range set, range ordered, at least one
// reference. Throws schema_error.
void validate_stat(const GroundedStat& stat);

enum class Feedback { correct, incorrect, unsure };
enum class Recommendation { no_fix, fix, remove };

std::string to_string(Feedback f);
std::string to_string(Recommendation r);
Feedback feedback_from_string(std::string_view s);
Recommendation recommendation_from_string(std::string_view s);

struct ValidationVerdict {
    Feedback feedback = Feedback::correct;
    Recommendation recommendation = Recommendation::no_fix;
    std::optional<double> corrected_value;
    std::vector<std::string> references;
};

// Enforces: fix carries a corrected value, remove does not. Throws schema_error.
void validate_verdict(const ValidationVerdict& verdict);

class Provider {
  public:
    virtual ~Provider() = default;
    virtual std::vector<GroundedStat> fetch_statistics(const StudySpec& spec) = 0;
    virtual ValidationVerdict validate_statistic(const GroundedStat& stat,
                                                 const StudySpec& spec) = 0;
    virtual std::string id() const = 0;
};

// Deterministic provider backed by a JSON fixture keyed by (condition, region).
// Validation conventions: subjects ending "!fixme" get a Fix verdict with the
// fixture's corrected value; subjects ending "!drop" get Remove; everything
// else is confirmed unchanged.
class MockProvider final : public Provider {
  public:
    explicit MockProvider(const std::string& fixture_json_path);
    std::vector<GroundedStat> fetch_statistics(const StudySpec& spec) override;
    ValidationVerdict validate_statistic(const GroundedStat& stat,
                                         const StudySpec& spec) override;
    std::string id() const override { return "mock:" + fixture_path_; }

  private:
    struct Entry {
        std::vector<GroundedStat> stats;
        std::map<std::string, double> corrected_values;              // by lowercase subject
        std::map<std::string, std::vector<std::string>> validation_refs;
    };
    std::string fixture_path_;
    std::vector<std::pair<std::pair<std::string, std::string>, Entry>> entries_;
    const Entry* find(const StudySpec& spec) const;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};  // doubles per retry
};

// Remote provider speaking JSON over HTTP: POST /statistics and POST /validate.
// Reads the API key from the DATAPECK_PROVIDER_KEY environment variable and
// sends it as X-Api-Key. Transport failures and 5xx responses are retried per
// the policy, then surface as retriable provider_error.
class HttpProvider final : public Provider {
  public:
    explicit HttpProvider(std::string base_url, RetryPolicy policy = {});
    std::vector<GroundedStat> fetch_statistics(const StudySpec& spec) override;
    ValidationVerdict validate_statistic(const GroundedStat& stat,
                                         const StudySpec& spec) override;
    std::string id() const override { return base_url_; }

  private:
    std::string post_json(const std::string& path, const std::string& body);
    std::string base_url_;
    RetryPolicy policy_;
};

// "mock:<fixture.json>" or "http:<url>".
std::unique_ptr<Provider> make_provider(const std::string& selector);

// JSON (de)serialization shared by the fixture format and the HTTP protocol.
std::string stat_to_json(const GroundedStat& stat);
GroundedStat stat_from_json(const std::string& json_text);

}  // namespace datapeck
