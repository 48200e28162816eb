#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "datapeck/errors.hpp"
#include "datapeck/provider.hpp"
#include "support/paths.hpp"

using namespace datapeck;

namespace {

StudySpec t2d_spec() {
    StudySpec spec;
    spec.condition = "Type 2 diabetes mellitus";
    spec.region = "United States";
    return spec;
}

GroundedStat sample_stat(const std::string& subject) {
    GroundedStat s;
    s.statistic = StatisticKind::comorbidity_rate;
    s.subject = subject;
    s.value = 70.0;
    s.diagnosed_scope = true;
    s.references = {"diabetes comorbidity registry"};
    return s;
}

}  // namespace

TEST_CASE("statistic kind and verdict token conversions round-trip") {
    for (auto kind : {StatisticKind::prevalence, StatisticKind::incidence,
                      StatisticKind::mortality_rate, StatisticKind::lifetime_risk,
                      StatisticKind::demographic_share, StatisticKind::comorbidity_rate,
                      StatisticKind::drug_share, StatisticKind::measurement_expectation,
                      StatisticKind::age_mean, StatisticKind::age_sd})
        CHECK(statistic_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(statistic_kind_from_string("mystery"), schema_error);
    for (auto f : {Feedback::correct, Feedback::incorrect, Feedback::unsure})
        CHECK(feedback_from_string(to_string(f)) == f);
    CHECK(feedback_from_string("CORRECT") == Feedback::correct);  // case-insensitive
    CHECK_THROWS_AS(feedback_from_string("maybe"), schema_error);
    for (auto r : {Recommendation::no_fix, Recommendation::fix, Recommendation::remove})
        CHECK(recommendation_from_string(to_string(r)) == r);
    CHECK_THROWS_AS(recommendation_from_string("patch"), schema_error);
}

TEST_CASE("validate_stat enforces the value/range/reference contract") {
    GroundedStat ok = sample_stat("Hypertension");
    CHECK_NOTHROW(validate_stat(ok));

    GroundedStat no_subject = ok;
    no_subject.subject.clear();
    CHECK_THROWS_AS(validate_stat(no_subject), schema_error);

    GroundedStat both = ok;
    both.range = std::make_pair(1.0, 2.0);
    CHECK_THROWS_AS(validate_stat(both), schema_error);

    GroundedStat neither = ok;
    neither.value.reset();
    CHECK_THROWS_AS(validate_stat(neither), schema_error);

    GroundedStat descending = ok;
    descending.value.reset();
    descending.range = std::make_pair(5.0, 2.0);
    CHECK_THROWS_AS(validate_stat(descending), schema_error);

    GroundedStat no_refs = ok;
    no_refs.references.clear();
    CHECK_THROWS_AS(validate_stat(no_refs), schema_error);
}

TEST_CASE("validate_verdict ties corrected values to fix verdicts") {
    ValidationVerdict fix;
    fix.recommendation = Recommendation::fix;
    CHECK_THROWS_AS(validate_verdict(fix), schema_error);
    fix.corrected_value = 41.0;
    CHECK_NOTHROW(validate_verdict(fix));

    ValidationVerdict remove;
    remove.recommendation = Recommendation::remove;
    CHECK_NOTHROW(validate_verdict(remove));
    remove.corrected_value = 1.0;
    CHECK_THROWS_AS(validate_verdict(remove), schema_error);
}

TEST_CASE("statistic JSON round-trips point values, ranges, and units") {
    GroundedStat point = sample_stat("Hypertension");
    const GroundedStat point_again = stat_from_json(stat_to_json(point));
    CHECK(point_again.statistic == point.statistic);
    CHECK(point_again.subject == point.subject);
    CHECK(point_again.value == point.value);
    CHECK_FALSE(point_again.range.has_value());
    CHECK(point_again.unit == point.unit);
    CHECK(point_again.diagnosed_scope == point.diagnosed_scope);
    CHECK(point_again.references == point.references);

    GroundedStat ranged;
    ranged.statistic = StatisticKind::age_mean;
    ranged.subject = "age at diagnosis";
    ranged.range = std::make_pair(45.0, 60.0);
    ranged.unit = ValueUnit::native;
    ranged.references = {"diabetes onset age study"};
    const GroundedStat ranged_again = stat_from_json(stat_to_json(ranged));
    CHECK(ranged_again.range == ranged.range);
    CHECK_FALSE(ranged_again.value.has_value());
    CHECK(ranged_again.unit == ValueUnit::native);

    CHECK_THROWS_AS(stat_from_json("not json"), parse_error);
    CHECK_THROWS_AS(stat_from_json("{}"), parse_error);
}

TEST_CASE("MockProvider serves the fixture and scripted verdicts") {
    MockProvider provider(fixture_path("t2d_provider.json"));
    CHECK(provider.id() == "mock:" + fixture_path("t2d_provider.json"));

    const auto stats = provider.fetch_statistics(t2d_spec());
    CHECK(stats.size() == 61);

    // Lookup is case-insensitive on condition and region.
    StudySpec shouty = t2d_spec();
    shouty.condition = "TYPE 2 DIABETES MELLITUS";
    shouty.region = "united states";
    CHECK(provider.fetch_statistics(shouty).size() == 61);

    StudySpec unknown = t2d_spec();
    unknown.condition = "Gondolitis";
    CHECK(provider.fetch_statistics(unknown).empty());

    // Plain subjects are confirmed unchanged.
    const ValidationVerdict ok = provider.validate_statistic(sample_stat("Hypertension"),
                                                             t2d_spec());
    CHECK(ok.feedback == Feedback::correct);
    CHECK(ok.recommendation == Recommendation::no_fix);
    CHECK_FALSE(ok.corrected_value.has_value());

    // "!fixme" subjects get the fixture's corrected value and references.
    const ValidationVerdict fix = provider.validate_statistic(sample_stat("Obesity!fixme"),
                                                              t2d_spec());
    CHECK(fix.feedback == Feedback::incorrect);
    CHECK(fix.recommendation == Recommendation::fix);
    REQUIRE(fix.corrected_value.has_value());
    CHECK(*fix.corrected_value == doctest::Approx(41.0));
    CHECK(fix.references == std::vector<std::string>{"national obesity surveillance data"});

    // "!drop" subjects get a remove verdict.
    const ValidationVerdict drop = provider.validate_statistic(sample_stat("Gout!drop"),
                                                               t2d_spec());
    CHECK(drop.feedback == Feedback::incorrect);
    CHECK(drop.recommendation == Recommendation::remove);
    CHECK_FALSE(drop.corrected_value.has_value());

    CHECK_THROWS_AS(MockProvider("missing_fixture.json"), parse_error);
}

TEST_CASE("make_provider dispatches on the selector scheme") {
    CHECK(make_provider("mock:" + fixture_path("t2d_provider.json"))->id() ==
          "mock:" + fixture_path("t2d_provider.json"));
    CHECK(make_provider("http://127.0.0.1:1")->id() == "http://127.0.0.1:1");
    CHECK(make_provider("https://example.invalid")->id() == "https://example.invalid");
    CHECK_THROWS_AS(make_provider("ftp://somewhere"), schema_error);
    CHECK_THROWS_AS(make_provider(""), schema_error);
}

TEST_CASE("HttpProvider speaks the JSON protocol with retries") {
    httplib::Server server;
    std::atomic<int> stats_requests{0};
    std::atomic<int> failures_to_serve{0};
    std::string seen_api_key = "<none>";
    std::string seen_condition;

    server.Post("/statistics", [&](const httplib::Request& req, httplib::Response& res) {
        ++stats_requests;
        if (req.has_header("X-Api-Key")) seen_api_key = req.get_header_value("X-Api-Key");
        const auto body = nlohmann::json::parse(req.body);
        seen_condition = body.at("condition").get<std::string>();
        if (seen_condition == "reject me") {
            res.status = 400;
            res.set_content("bad request", "text/plain");
            return;
        }
        if (failures_to_serve.fetch_sub(1) > 0) {
            res.status = 503;
            res.set_content("overloaded", "text/plain");
            return;
        }
        nlohmann::json stat = {
            {"statistic", "prevalence"},
            {"subject", "Type 2 diabetes mellitus"},
            {"value", 11.3},
            {"unit", "percent"},
            {"diagnosed", false},
            {"references", {"national diabetes statistics report"}},
        };
        nlohmann::json reply = {{"statistics", {stat}}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/validate", [&](const httplib::Request&, httplib::Response& res) {
        nlohmann::json reply = {{"feedback", "Incorrect"},
                                {"recommendation", "fix"},
                                {"corrected_value", 41.0},
                                {"references", {"corrigendum"}}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    const RetryPolicy fast{3, std::chrono::milliseconds(0)};

    SUBCASE("successful fetch and validate") {
        HttpProvider provider(base, fast);
        const auto stats = provider.fetch_statistics(t2d_spec());
        REQUIRE(stats.size() == 1);
        CHECK(stats[0].subject == "Type 2 diabetes mellitus");
        CHECK(stats[0].value == doctest::Approx(11.3));
        CHECK(seen_condition == "Type 2 diabetes mellitus");

        const ValidationVerdict verdict =
            provider.validate_statistic(sample_stat("Obesity"), t2d_spec());
        CHECK(verdict.recommendation == Recommendation::fix);
        CHECK(verdict.corrected_value == doctest::Approx(41.0));
        CHECK(verdict.references == std::vector<std::string>{"corrigendum"});
    }

    SUBCASE("5xx responses are retried until they succeed") {
        failures_to_serve = 2;
        stats_requests = 0;
        HttpProvider provider(base, fast);
        CHECK(provider.fetch_statistics(t2d_spec()).size() == 1);
        CHECK(stats_requests == 3);  // two failures, then success
    }

    SUBCASE("exhausted retries surface as a retriable provider_error") {
        failures_to_serve = 99;
        stats_requests = 0;
        HttpProvider provider(base, fast);
        try {
            provider.fetch_statistics(t2d_spec());
            FAIL("expected provider_error");
        } catch (const provider_error& e) {
            CHECK(e.retriable);
            CHECK(std::string(e.what()).find("gave up after 3 attempts") != std::string::npos);
        }
        CHECK(stats_requests == 3);
    }

    SUBCASE("4xx responses are not retried and are not retriable") {
        stats_requests = 0;
        failures_to_serve = 0;
        HttpProvider provider(base, fast);
        StudySpec rejected = t2d_spec();
        rejected.condition = "reject me";
        try {
            provider.fetch_statistics(rejected);
            FAIL("expected provider_error");
        } catch (const provider_error& e) {
            CHECK_FALSE(e.retriable);
            CHECK(std::string(e.what()).find("responded 400") != std::string::npos);
        }
        CHECK(stats_requests == 1);  // no retry on a client error
    }

    SUBCASE("malformed response bodies are a permanent failure") {
        // Point the provider at a path returning invalid JSON by overriding
        // the statistics route through a second server instance.
        httplib::Server bad;
        bad.Post("/statistics", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{broken", "application/json");
        });
        const int bad_port = bad.bind_to_any_port("127.0.0.1");
        REQUIRE(bad_port > 0);
        std::thread bad_thread([&] { bad.listen_after_bind(); });
        bad.wait_until_ready();
        HttpProvider provider("http://127.0.0.1:" + std::to_string(bad_port), fast);
        try {
            provider.fetch_statistics(t2d_spec());
            FAIL("expected provider_error");
        } catch (const provider_error& e) {
            CHECK_FALSE(e.retriable);
            CHECK(std::string(e.what()).find("malformed response") != std::string::npos);
        }
        bad.stop();
        bad_thread.join();
    }

    SUBCASE("API key from the environment travels as X-Api-Key") {
        seen_api_key = "<none>";
        setenv("DATAPECK_PROVIDER_KEY", "test-key-123", 1);
        HttpProvider provider(base, fast);
        provider.fetch_statistics(t2d_spec());
        CHECK(seen_api_key == "test-key-123");
        unsetenv("DATAPECK_PROVIDER_KEY");

        seen_api_key = "<none>";
        HttpProvider bare(base, fast);
        bare.fetch_statistics(t2d_spec());
        CHECK(seen_api_key == "<none>");  // no env var, no header
    }

    SUBCASE("unreachable hosts exhaust retries as transport errors") {
        // Port 1 on localhost is essentially guaranteed closed.
        HttpProvider provider("http://127.0.0.1:1", RetryPolicy{2, std::chrono::milliseconds(0)});
        try {
            provider.fetch_statistics(t2d_spec());
            FAIL("expected provider_error");
        } catch (const provider_error& e) {
            CHECK(e.retriable);
            CHECK(std::string(e.what()).find("transport error") != std::string::npos);
        }
    }

    server.stop();
    server_thread.join();
}

TEST_CASE("HttpProvider constructor validation") {
    CHECK_THROWS_AS(HttpProvider(""), schema_error);
    CHECK_THROWS_AS(HttpProvider("http://x", RetryPolicy{0, std::chrono::milliseconds(1)}),
                    schema_error);
}
