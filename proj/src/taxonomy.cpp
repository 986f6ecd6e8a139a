#include "synthtab/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "synthtab/errors.hpp"

namespace synthtab {

namespace {

const char* kRegistryJson =
#include "taxonomy_data.inc"
    ;

const char* kExpectedNames[14] = {
    "GPS Data",
    "Camera Data",
    "Bluetooth/Wi-Fi Data",
    "Cellular Data",
    "Engine Control Unit Data",
    "CAN Bus Data",
    "On-Board Diagnostic Data",
    "Infotainment System Data",
    "Human-Machine Interface Data",
    "Accelerometer/Gyroscope Data",
    "Battery Management System Data",
    "Lidar/Radar Data",
    "Temperature Data",
    "Energy Consumption Data",
};

} // namespace

Priority classify_priority(const CriteriaAssessment& a) {
    if (a.directly_identifies && a.readily_obtainable && a.known_malicious_intent) {
        return Priority::High;
    }
    if (a.directly_identifies || (a.readily_obtainable && a.known_malicious_intent)) {
        return Priority::Medium;
    }
    return Priority::Low;
}

std::string to_string(Priority p) {
    switch (p) {
        case Priority::High: return "high";
        case Priority::Medium: return "medium";
        case Priority::Low: return "low";
    }
    return "low";
}

std::string to_string(SignalCategory c) {
    switch (c) {
        case SignalCategory::VehicleTelematics: return "vehicle_telematics";
        case SignalCategory::EnvironmentExternal: return "environment_external";
        case SignalCategory::ConnectivityCommunication: return "connectivity_communication";
        case SignalCategory::InVehicleNetwork: return "in_vehicle_network";
        case SignalCategory::UserInteractionInfotainment: return "user_interaction_infotainment";
        case SignalCategory::SensorData: return "sensor_data";
        case SignalCategory::PowerEnergy: return "power_energy";
    }
    return "sensor_data";
}

Priority priority_from_string(const std::string& s) {
    if (s == "high") return Priority::High;
    if (s == "medium") return Priority::Medium;
    if (s == "low") return Priority::Low;
    throw ValidationError("unknown priority '" + s + "' (expected high/medium/low)");
}

SignalCategory category_from_string(const std::string& s) {
    if (s == "vehicle_telematics") return SignalCategory::VehicleTelematics;
    if (s == "environment_external") return SignalCategory::EnvironmentExternal;
    if (s == "connectivity_communication") return SignalCategory::ConnectivityCommunication;
    if (s == "in_vehicle_network") return SignalCategory::InVehicleNetwork;
    if (s == "user_interaction_infotainment") return SignalCategory::UserInteractionInfotainment;
    if (s == "sensor_data") return SignalCategory::SensorData;
    if (s == "power_energy") return SignalCategory::PowerEnergy;
    throw ValidationError("unknown signal category '" + s + "'");
}

TaxonomyRegistry TaxonomyRegistry::builtin() { return from_json_text(kRegistryJson); }

TaxonomyRegistry TaxonomyRegistry::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("taxonomy registry: bad json: ") + e.what());
    }
    TaxonomyRegistry reg;
    for (const auto& s : j.at("signals")) {
        SignalRecord rec;
        rec.name = s.at("name").get<std::string>();
        rec.source = s.at("source").get<std::string>();
        rec.data_type = s.at("data_type").get<std::string>();
        rec.leakage = s.at("leakage").get<std::string>();
        rec.category = category_from_string(s.at("category").get<std::string>());
        rec.priority = priority_from_string(s.at("priority").get<std::string>());
        const auto& a = s.at("assessment");
        rec.assessment.directly_identifies = a.at("directly_identifies").get<bool>();
        rec.assessment.readily_obtainable = a.at("readily_obtainable").get<bool>();
        rec.assessment.known_malicious_intent = a.at("known_malicious_intent").get<bool>();
        rec.basis = s.value("basis", "");
        reg.signals_.push_back(std::move(rec));
    }
    reg.validate();
    return reg;
}

TaxonomyRegistry TaxonomyRegistry::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

void TaxonomyRegistry::validate() const {
    std::set<std::string> names;
    for (const auto& rec : signals_) {
        if (!names.insert(rec.name).second) {
            throw ValidationError("taxonomy registry: duplicate signal " + rec.name);
        }
        if (classify_priority(rec.assessment) != rec.priority) {
            throw ValidationError("taxonomy registry: stored priority for " + rec.name +
                                  " disagrees with its criteria assessment");
        }
    }
    for (const char* expected : kExpectedNames) {
        if (!names.count(expected)) {
            throw ValidationError(std::string("taxonomy registry: missing signal ") + expected);
        }
    }
}

std::vector<SignalRecord> TaxonomyRegistry::list(std::optional<Priority> priority,
                                                 std::optional<SignalCategory> category) const {
    std::vector<SignalRecord> out;
    for (const auto& rec : signals_) {
        if (priority && rec.priority != *priority) continue;
        if (category && rec.category != *category) continue;
        out.push_back(rec);
    }
    return out;
}

nlohmann::json TaxonomyRegistry::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rec : signals_) {
        arr.push_back({{"name", rec.name},
                       {"source", rec.source},
                       {"data_type", rec.data_type},
                       {"leakage", rec.leakage},
                       {"category", to_string(rec.category)},
                       {"priority", to_string(rec.priority)},
                       {"assessment",
                        {{"directly_identifies", rec.assessment.directly_identifies},
                         {"readily_obtainable", rec.assessment.readily_obtainable},
                         {"known_malicious_intent", rec.assessment.known_malicious_intent}}},
                       {"basis", rec.basis}});
    }
    return nlohmann::json{{"signals", arr}};
}

std::string TaxonomyRegistry::to_text_table() const {
    size_t name_w = 6, source_w = 6, cat_w = 8;
    for (const auto& rec : signals_) {
        name_w = std::max(name_w, rec.name.size());
        source_w = std::max(source_w, rec.source.size());
        cat_w = std::max(cat_w, to_string(rec.category).size());
    }
    std::ostringstream out;
    auto pad = [](const std::string& s, size_t w) {
        return s + std::string(w - s.size(), ' ');
    };
    out << pad("signal", name_w) << "  " << pad("source", source_w) << "  "
        << pad("category", cat_w) << "  priority\n";
    out << std::string(name_w + source_w + cat_w + 14, '-') << '\n';
    for (const auto& rec : signals_) {
        out << pad(rec.name, name_w) << "  " << pad(rec.source, source_w) << "  "
            << pad(to_string(rec.category), cat_w) << "  " << to_string(rec.priority) << '\n';
    }
    return out.str();
}

} // namespace synthtab
