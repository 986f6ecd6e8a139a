#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "synthtab/data_table.hpp"

namespace synthtab {

/// Cell-wise anonymization action for one column. Numeric generalization
/// replaces values with "lo--hi" bin labels; an optional condition switches
/// the cell to suppression when another column's transformed value matches
/// (how per-bin suppression rules are expressed).
struct AnonymizationRule {
    enum class Action { Keep, Suppress, GeneralizeNumeric, MapValues };
    Action action = Action::Keep;

    std::vector<double> bin_edges; // strictly increasing; bins are [e_i, e_{i+1})
    std::map<std::string, std::string> mapping;

    std::string suppress_when_column; // empty = unconditional
    std::string suppress_when_equals;

    // label for bin i: "e_i--(e_{i+1}-1)", matching integer-valued columns
    std::string bin_label(size_t bin) const;
};

using RuleSet = std::map<std::string, AnonymizationRule>; // keyed by column name

// Rules must cover every column. Row count and order are preserved.
TextTable apply_rules(const TextTable& table, const RuleSet& rules);

struct EquivalenceClass {
    std::vector<std::string> key; // quasi-identifier value tuple
    std::vector<size_t> members;  // row indices

    size_t size() const { return members.size(); }
};

// k = size of the smallest equivalence class over the quasi-identifiers
std::pair<size_t, std::vector<EquivalenceClass>> k_of(
    const TextTable& table, const std::vector<std::string>& quasi_identifiers);

// classes whose sensitive value is uniform (vulnerable to inference)
std::vector<EquivalenceClass> homogeneity_check(const TextTable& table,
                                                const std::vector<std::string>& quasi_identifiers,
                                                const std::string& sensitive_column);

// rule strings like "Age: bins 10,30,50", "Sex: suppress_when Age=10--29",
// "ZIP: suppress", "Disease: keep", "Road: map dirt=unpaved;asphalt=paved"
RuleSet parse_rules(const std::vector<std::string>& lines);

nlohmann::json anonymization_summary_json(const TextTable& anonymized,
                                          const std::vector<std::string>& quasi_identifiers,
                                          const std::string& sensitive_column);

} // namespace synthtab
