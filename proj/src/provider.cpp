#include "datapeck/provider.hpp"

#include <json.hpp>

#include "datapeck/errors.hpp"
#include "datapeck/util.hpp"

namespace datapeck {

std::string to_string(StatisticKind k) {
    switch (k) {
        case StatisticKind::prevalence: return "prevalence";
        case StatisticKind::incidence: return "incidence";
        case StatisticKind::mortality_rate: return "mortality_rate";
        case StatisticKind::lifetime_risk: return "lifetime_risk";
        case StatisticKind::demographic_share: return "demographic_share";
        case StatisticKind::comorbidity_rate: return "comorbidity_rate";
        case StatisticKind::drug_share: return "drug_share";
        case StatisticKind::measurement_expectation: return "measurement_expectation";
        case StatisticKind::age_mean: return "age_mean";
        case StatisticKind::age_sd: return "age_sd";
    }
    return "prevalence";
}

StatisticKind statistic_kind_from_string(std::string_view s) {
    if (s == "prevalence") return StatisticKind::prevalence;
    if (s == "incidence") return StatisticKind::incidence;
    if (s == "mortality_rate") return StatisticKind::mortality_rate;
    if (s == "lifetime_risk") return StatisticKind::lifetime_risk;
    if (s == "demographic_share") return StatisticKind::demographic_share;
    if (s == "comorbidity_rate") return StatisticKind::comorbidity_rate;
    if (s == "drug_share") return StatisticKind::drug_share;
    if (s == "measurement_expectation") return StatisticKind::measurement_expectation;
    if (s == "age_mean") return StatisticKind::age_mean;
    if (s == "age_sd") return StatisticKind::age_sd;
    throw schema_error("unknown statistic kind: '" + std::string(s) + "'");
}

std::string to_string(Feedback f) {
    switch (f) {
        case Feedback::correct: return "Correct";
        case Feedback::incorrect: return "Incorrect";
        case Feedback::unsure: return "Unsure";
    }
    return "Unsure";
}

std::string to_string(Recommendation r) {
    switch (r) {
        case Recommendation::no_fix: return "no_fix";
        case Recommendation::fix: return "fix";
        case Recommendation::remove: return "remove";
    }
    return "no_fix";
}

Feedback feedback_from_string(std::string_view s) {
    if (iequals(s, "Correct")) return Feedback::correct;
    if (iequals(s, "Incorrect")) return Feedback::incorrect;
    if (iequals(s, "Unsure")) return Feedback::unsure;
    throw schema_error("unknown feedback: '" + std::string(s) + "'");
}

Recommendation recommendation_from_string(std::string_view s) {
    if (iequals(s, "no_fix")) return Recommendation::no_fix;
    if (iequals(s, "fix")) return Recommendation::fix;
    if (iequals(s, "remove")) return Recommendation::remove;
    throw schema_error("unknown recommendation: '" + std::string(s) + "'");
}

void validate_stat(const GroundedStat& stat) {
    if (stat.subject.empty()) throw schema_error("statistic with empty subject");
    if (stat.value.has_value() == stat.range.has_value())
        throw schema_error("statistic '" + stat.subject +
                           "' must carry exactly one of a point value or a range");
    if (stat.range && stat.range->first > stat.range->second)
        throw schema_error("statistic '" + stat.subject + "' has a descending range");
    if (stat.references.empty())
        throw schema_error("statistic '" + stat.subject + "' carries no references");
}

void validate_verdict(const ValidationVerdict& verdict) {
    if (verdict.recommendation == Recommendation::fix && !verdict.corrected_value)
        throw schema_error("fix verdict without a corrected value");
    if (verdict.recommendation == Recommendation::remove && verdict.corrected_value)
        throw schema_error("remove verdict must not carry a corrected value");
}

namespace {

nlohmann::ordered_json stat_to_json_obj(const GroundedStat& stat) {
    nlohmann::ordered_json j;
    j["statistic"] = to_string(stat.statistic);
    j["subject"] = stat.subject;
    if (stat.value) j["value"] = *stat.value;
    if (stat.range) j["range"] = {stat.range->first, stat.range->second};
    j["unit"] = stat.unit == ValueUnit::percent ? "percent" : "native";
    j["diagnosed"] = stat.diagnosed_scope;
    j["references"] = stat.references;
    return j;
}

GroundedStat stat_from_json_obj(const nlohmann::json& j) {
    GroundedStat stat;
    stat.statistic = statistic_kind_from_string(j.at("statistic").get<std::string>());
    stat.subject = j.at("subject").get<std::string>();
    if (j.contains("value") && !j.at("value").is_null()) stat.value = j.at("value").get<double>();
    if (j.contains("range") && !j.at("range").is_null()) {
        const auto& r = j.at("range");
        stat.range = std::make_pair(r.at(0).get<double>(), r.at(1).get<double>());
    }
    const std::string unit = j.value("unit", "percent");
    if (unit == "percent") {
        stat.unit = ValueUnit::percent;
    } else if (unit == "native") {
        stat.unit = ValueUnit::native;
    } else {
        throw schema_error("unknown unit: '" + unit + "'");
    }
    stat.diagnosed_scope = j.value("diagnosed", false);
    if (j.contains("references"))
        for (const auto& r : j.at("references")) stat.references.push_back(r.get<std::string>());
    validate_stat(stat);
    return stat;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string stat_to_json(const GroundedStat& stat) { return stat_to_json_obj(stat).dump(); }

GroundedStat stat_from_json(const std::string& json_text) {
    try {
        return stat_from_json_obj(nlohmann::json::parse(json_text));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("statistic JSON: ") + e.what());
    }
}

MockProvider::MockProvider(const std::string& fixture_json_path)
    : fixture_path_(fixture_json_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(fixture_json_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(fixture_json_path + ": invalid JSON: " + e.what());
    }
    try {
        for (const auto& entry : doc.at("entries")) {
            Entry parsed;
            const std::string condition = to_lower(trim(entry.at("condition").get<std::string>()));
            const std::string region = to_lower(trim(entry.at("region").get<std::string>()));
            for (const auto& s : entry.at("statistics")) {
                GroundedStat stat = stat_from_json_obj(s);
                const std::string key = to_lower(trim(stat.subject));
                if (s.contains("corrected_value") && !s.at("corrected_value").is_null())
                    parsed.corrected_values[key] = s.at("corrected_value").get<double>();
                if (s.contains("validation_references"))
                    for (const auto& r : s.at("validation_references"))
                        parsed.validation_refs[key].push_back(r.get<std::string>());
                parsed.stats.push_back(std::move(stat));
            }
            entries_.emplace_back(std::make_pair(condition, region), std::move(parsed));
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(fixture_json_path + ": " + e.what());
    }
}

const MockProvider::Entry* MockProvider::find(const StudySpec& spec) const {
    const auto key = std::make_pair(to_lower(trim(spec.condition)), to_lower(trim(spec.region)));
    for (const auto& [k, entry] : entries_)
        if (k == key) return &entry;
    return nullptr;
}

std::vector<GroundedStat> MockProvider::fetch_statistics(const StudySpec& spec) {
    const Entry* entry = find(spec);
    if (!entry) return {};
    return entry->stats;
}

ValidationVerdict MockProvider::validate_statistic(const GroundedStat& stat,
                                                   const StudySpec& spec) {
    ValidationVerdict verdict;
    const std::string subject = trim(stat.subject);
    const std::string key = to_lower(subject);
    const Entry* entry = find(spec);
    if (ends_with(subject, "!fixme")) {
        verdict.feedback = Feedback::incorrect;
        verdict.recommendation = Recommendation::fix;
        double corrected = stat.value.value_or(0.0);
        if (entry) {
            auto it = entry->corrected_values.find(key);
            if (it != entry->corrected_values.end()) corrected = it->second;
        }
        verdict.corrected_value = corrected;
        if (entry) {
            auto it = entry->validation_refs.find(key);
            if (it != entry->validation_refs.end()) verdict.references = it->second;
        }
        if (verdict.references.empty()) verdict.references = {"mock validation pass"};
    } else if (ends_with(subject, "!drop")) {
        verdict.feedback = Feedback::incorrect;
        verdict.recommendation = Recommendation::remove;
    } else {
        verdict.feedback = Feedback::correct;
        verdict.recommendation = Recommendation::no_fix;
    }
    validate_verdict(verdict);
    return verdict;
}

std::unique_ptr<Provider> make_provider(const std::string& selector) {
    if (selector.rfind("mock:", 0) == 0)
        return std::make_unique<MockProvider>(selector.substr(5));
    if (selector.rfind("http:", 0) == 0 || selector.rfind("https:", 0) == 0)
        return std::make_unique<HttpProvider>(selector);
    throw schema_error("unknown provider selector: '" + selector +
                       "' (expected mock:<fixture.json> or http(s)://...)");
}

}  // namespace datapeck
