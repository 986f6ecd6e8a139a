#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace synthtab {

enum class SignalCategory {
    VehicleTelematics,
    EnvironmentExternal,
    ConnectivityCommunication,
    InVehicleNetwork,
    UserInteractionInfotainment,
    SensorData,
    PowerEnergy,
};

enum class Priority { High, Medium, Low };

struct CriteriaAssessment {
    bool directly_identifies = false;
    bool readily_obtainable = false;
    bool known_malicious_intent = false;
};

// High needs all three criteria; Medium needs direct identification or both
// obtainability and intent; everything else is Low. Monotone: flipping any
// criterion on never lowers the priority.
Priority classify_priority(const CriteriaAssessment& a);

struct SignalRecord {
    std::string name;
    std::string source;
    std::string data_type;
    std::string leakage;
    SignalCategory category = SignalCategory::SensorData;
    Priority priority = Priority::Low;
    CriteriaAssessment assessment;
    std::string basis; // which table cell the assessment leans on
};

std::string to_string(Priority p);
std::string to_string(SignalCategory c);
Priority priority_from_string(const std::string& s);         // throws on unknown
SignalCategory category_from_string(const std::string& s);   // throws on unknown

class TaxonomyRegistry {
public:
    static TaxonomyRegistry builtin();
    static TaxonomyRegistry from_json_text(const std::string& text);
    static TaxonomyRegistry from_file(const std::string& path);

    const std::vector<SignalRecord>& signals() const { return signals_; }

    // stable registry order; filters are conjunctive
    std::vector<SignalRecord> list(std::optional<Priority> priority = std::nullopt,
                                   std::optional<SignalCategory> category = std::nullopt) const;

    nlohmann::json to_json() const;
    std::string to_text_table() const;

private:
    std::vector<SignalRecord> signals_;

    // unique names, 14 known rows present, stored priorities consistent with
    // the classification rule applied to the shipped assessments
    void validate() const;
};

} // namespace synthtab
