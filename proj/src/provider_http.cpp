#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "datapeck/errors.hpp"
#include "datapeck/provider.hpp"
#include "datapeck/util.hpp"

namespace datapeck {

HttpProvider::HttpProvider(std::string base_url, RetryPolicy policy)
    : base_url_(std::move(base_url)), policy_(policy) {
    if (base_url_.empty()) throw schema_error("provider URL is empty");
    if (policy_.attempts < 1) throw schema_error("retry policy needs at least one attempt");
}

std::string HttpProvider::post_json(const std::string& path, const std::string& body) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(std::chrono::seconds(30));
    httplib::Headers headers;
    if (const char* key = std::getenv("DATAPECK_PROVIDER_KEY"); key && *key)
        headers.emplace("X-Api-Key", key);

    std::string last_failure;
    auto backoff = policy_.initial_backoff;
    for (int attempt = 1; attempt <= policy_.attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        if (res->status >= 500) {
            last_failure = "server responded " + std::to_string(res->status);
            continue;
        }
        throw provider_error(base_url_ + path + ": server responded " +
                                 std::to_string(res->status) + ": " + res->body,
                             /*retriable=*/false);
    }
    throw provider_error(base_url_ + path + ": gave up after " +
                             std::to_string(policy_.attempts) + " attempts (" + last_failure + ")",
                         /*retriable=*/true);
}

std::vector<GroundedStat> HttpProvider::fetch_statistics(const StudySpec& spec) {
    nlohmann::ordered_json request;
    request["condition"] = spec.condition;
    request["region"] = spec.region;
    const std::string response = post_json("/statistics", request.dump());
    try {
        const auto doc = nlohmann::json::parse(response);
        std::vector<GroundedStat> stats;
        for (const auto& s : doc.at("statistics")) stats.push_back(stat_from_json(s.dump()));
        return stats;
    } catch (const nlohmann::json::exception& e) {
        throw provider_error(base_url_ + "/statistics: malformed response: " + e.what(),
                             /*retriable=*/false);
    }
}

ValidationVerdict HttpProvider::validate_statistic(const GroundedStat& stat,
                                                   const StudySpec& spec) {
    nlohmann::ordered_json request;
    request["condition"] = spec.condition;
    request["region"] = spec.region;
    request["statistic"] = nlohmann::ordered_json::parse(stat_to_json(stat));
    const std::string response = post_json("/validate", request.dump());
    try {
        const auto doc = nlohmann::json::parse(response);
        ValidationVerdict verdict;
        verdict.feedback = feedback_from_string(doc.at("feedback").get<std::string>());
        verdict.recommendation =
            recommendation_from_string(doc.at("recommendation").get<std::string>());
        if (doc.contains("corrected_value") && !doc.at("corrected_value").is_null())
            verdict.corrected_value = doc.at("corrected_value").get<double>();
        if (doc.contains("references"))
            for (const auto& r : doc.at("references"))
                verdict.references.push_back(r.get<std::string>());
        validate_verdict(verdict);
        return verdict;
    } catch (const nlohmann::json::exception& e) {
        throw provider_error(base_url_ + "/validate: malformed response: " + e.what(),
                             /*retriable=*/false);
    }
}

}  // namespace datapeck
