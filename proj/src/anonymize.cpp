#include "synthtab/anonymize.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include <nlohmann/json.hpp>

#include "synthtab/errors.hpp"

namespace synthtab {

namespace {

std::string format_edge(double v) {
    if (v == static_cast<double>(static_cast<long long>(v))) {
        return std::to_string(static_cast<long long>(v));
    }
    return format_double(v);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

} // namespace

std::string AnonymizationRule::bin_label(size_t bin) const {
    const double lo = bin_edges[bin];
    const double hi = bin_edges[bin + 1] - 1.0;
    return format_edge(lo) + "--" + format_edge(hi);
}

TextTable apply_rules(const TextTable& table, const RuleSet& rules) {
    for (const auto& name : table.header) {
        if (!rules.count(name)) {
            throw ValidationError("apply_rules: no rule for column " + name);
        }
    }
    for (const auto& [name, rule] : rules) {
        if (table.column_index(name) < 0) {
            throw ValidationError("apply_rules: rule names unknown column " + name);
        }
        if (rule.action == AnonymizationRule::Action::GeneralizeNumeric) {
            if (rule.bin_edges.size() < 2) {
                throw ValidationError("apply_rules: column " + name + " needs >= 2 bin edges");
            }
            for (size_t i = 1; i < rule.bin_edges.size(); ++i) {
                if (!(rule.bin_edges[i] > rule.bin_edges[i - 1])) {
                    throw ValidationError("apply_rules: bin edges for " + name +
                                          " must be strictly increasing");
                }
            }
        }
        if (!rule.suppress_when_column.empty() &&
            table.column_index(rule.suppress_when_column) < 0) {
            throw ValidationError("apply_rules: condition names unknown column " +
                                  rule.suppress_when_column);
        }
    }

    TextTable out;
    out.header = table.header;
    out.rows.resize(table.rows.size());

    // first pass: unconditional cell transforms
    for (size_t r = 0; r < table.rows.size(); ++r) {
        auto& row_out = out.rows[r];
        row_out.resize(table.header.size());
        for (size_t c = 0; c < table.header.size(); ++c) {
            const AnonymizationRule& rule = rules.at(table.header[c]);
            const std::string& cell = table.rows[r][c];
            switch (rule.action) {
                case AnonymizationRule::Action::Keep:
                    row_out[c] = cell;
                    break;
                case AnonymizationRule::Action::Suppress:
                    row_out[c] = "*";
                    break;
                case AnonymizationRule::Action::GeneralizeNumeric: {
                    double v = 0.0;
                    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
                        throw ValidationError("apply_rules: row " + std::to_string(r + 1) +
                                              ", column " + table.header[c] +
                                              ": cell '" + cell + "' is not numeric");
                    }
                    bool placed = false;
                    for (size_t b = 0; b + 1 < rule.bin_edges.size(); ++b) {
                        if (v >= rule.bin_edges[b] && v < rule.bin_edges[b + 1]) {
                            row_out[c] = rule.bin_label(b);
                            placed = true;
                            break;
                        }
                    }
                    if (!placed) {
                        throw ValidationError("apply_rules: row " + std::to_string(r + 1) +
                                              ", column " + table.header[c] + ": value " + cell +
                                              " falls outside all bins");
                    }
                    break;
                }
                case AnonymizationRule::Action::MapValues: {
                    auto it = rule.mapping.find(cell);
                    if (it == rule.mapping.end()) {
                        throw ValidationError("apply_rules: row " + std::to_string(r + 1) +
                                              ", column " + table.header[c] + ": value '" + cell +
                                              "' missing from mapping");
                    }
                    row_out[c] = it->second;
                    break;
                }
            }
        }
    }

    // second pass: conditions evaluate against first-pass (generalized) values
    for (size_t c = 0; c < table.header.size(); ++c) {
        const AnonymizationRule& rule = rules.at(table.header[c]);
        if (rule.suppress_when_column.empty()) continue;
        const int cond = table.column_index(rule.suppress_when_column);
        for (auto& row : out.rows) {
            if (row[static_cast<size_t>(cond)] == rule.suppress_when_equals) row[c] = "*";
        }
    }
    return out;
}

std::pair<size_t, std::vector<EquivalenceClass>> k_of(
    const TextTable& table, const std::vector<std::string>& quasi_identifiers) {
    if (table.rows.empty()) throw ValidationError("k_of: empty table");
    std::vector<size_t> cols;
    for (const auto& q : quasi_identifiers) {
        const int idx = table.column_index(q);
        if (idx < 0) throw ValidationError("k_of: quasi-identifier column not found: " + q);
        cols.push_back(static_cast<size_t>(idx));
    }
    std::map<std::vector<std::string>, std::vector<size_t>> groups;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        std::vector<std::string> key;
        key.reserve(cols.size());
        for (size_t c : cols) key.push_back(table.rows[r][c]);
        groups[std::move(key)].push_back(r);
    }
    std::vector<EquivalenceClass> classes;
    size_t k = table.rows.size();
    for (auto& [key, members] : groups) {
        k = std::min(k, members.size());
        classes.push_back({key, std::move(members)});
    }
    return {k, std::move(classes)};
}

std::vector<EquivalenceClass> homogeneity_check(const TextTable& table,
                                                const std::vector<std::string>& quasi_identifiers,
                                                const std::string& sensitive_column) {
    const int sens = table.column_index(sensitive_column);
    if (sens < 0) {
        throw ValidationError("homogeneity_check: sensitive column not found: " +
                              sensitive_column);
    }
    auto [k, classes] = k_of(table, quasi_identifiers);
    (void)k;
    std::vector<EquivalenceClass> vulnerable;
    for (auto& cls : classes) {
        const std::string& first = table.rows[cls.members[0]][static_cast<size_t>(sens)];
        const bool uniform = std::all_of(cls.members.begin(), cls.members.end(), [&](size_t r) {
            return table.rows[r][static_cast<size_t>(sens)] == first;
        });
        if (uniform) vulnerable.push_back(std::move(cls));
    }
    return vulnerable;
}

RuleSet parse_rules(const std::vector<std::string>& lines) {
    RuleSet rules;
    for (const auto& line : lines) {
        const size_t colon = line.find(':');
        if (colon == std::string::npos) {
            throw ValidationError("rule '" + line + "': expected '<column>: <action>'");
        }
        const std::string column = trim(line.substr(0, colon));
        const std::string body = trim(line.substr(colon + 1));
        if (column.empty()) throw ValidationError("rule '" + line + "': empty column name");
        AnonymizationRule rule;
        if (body == "keep") {
            rule.action = AnonymizationRule::Action::Keep;
        } else if (body == "suppress") {
            rule.action = AnonymizationRule::Action::Suppress;
        } else if (body.rfind("bins ", 0) == 0) {
            rule.action = AnonymizationRule::Action::GeneralizeNumeric;
            std::string rest = body.substr(5);
            size_t pos = 0;
            while (pos <= rest.size()) {
                size_t comma = rest.find(',', pos);
                if (comma == std::string::npos) comma = rest.size();
                const std::string tok = trim(rest.substr(pos, comma - pos));
                if (tok.empty()) throw ValidationError("rule '" + line + "': empty bin edge");
                double v = 0.0;
                auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
                    throw ValidationError("rule '" + line + "': bad bin edge '" + tok + "'");
                }
                rule.bin_edges.push_back(v);
                pos = comma + 1;
                if (comma == rest.size()) break;
            }
        } else if (body.rfind("suppress_when ", 0) == 0) {
            rule.action = AnonymizationRule::Action::Keep;
            const std::string cond = trim(body.substr(14));
            const size_t eq = cond.find('=');
            if (eq == std::string::npos) {
                throw ValidationError("rule '" + line + "': expected suppress_when Col=Value");
            }
            rule.suppress_when_column = trim(cond.substr(0, eq));
            rule.suppress_when_equals = trim(cond.substr(eq + 1));
        } else if (body.rfind("map ", 0) == 0) {
            rule.action = AnonymizationRule::Action::MapValues;
            std::string rest = body.substr(4);
            size_t pos = 0;
            while (pos <= rest.size()) {
                size_t semi = rest.find(';', pos);
                if (semi == std::string::npos) semi = rest.size();
                const std::string tok = trim(rest.substr(pos, semi - pos));
                const size_t eq = tok.find('=');
                if (eq == std::string::npos) {
                    throw ValidationError("rule '" + line + "': bad mapping entry '" + tok + "'");
                }
                rule.mapping[trim(tok.substr(0, eq))] = trim(tok.substr(eq + 1));
                pos = semi + 1;
                if (semi == rest.size()) break;
            }
        } else {
            throw ValidationError("rule '" + line + "': unknown action '" + body + "'");
        }
        if (!rules.emplace(column, std::move(rule)).second) {
            throw ValidationError("rule '" + line + "': duplicate column " + column);
        }
    }
    return rules;
}

nlohmann::json anonymization_summary_json(const TextTable& anonymized,
                                          const std::vector<std::string>& quasi_identifiers,
                                          const std::string& sensitive_column) {
    auto [k, classes] = k_of(anonymized, quasi_identifiers);
    nlohmann::json class_list = nlohmann::json::array();
    for (const auto& cls : classes) {
        class_list.push_back({{"key", cls.key}, {"size", cls.size()}});
    }
    nlohmann::json j{{"k", k},
                     {"rows", anonymized.rows.size()},
                     {"classes", class_list},
                     {"quasi_identifiers", quasi_identifiers}};
    if (!sensitive_column.empty()) {
        const auto vulnerable =
            homogeneity_check(anonymized, quasi_identifiers, sensitive_column);
        nlohmann::json vuln = nlohmann::json::array();
        for (const auto& cls : vulnerable) {
            vuln.push_back({{"key", cls.key}, {"size", cls.size()}});
        }
        j["sensitive_column"] = sensitive_column;
        j["homogeneous_classes"] = vuln;
    }
    return j;
}

} // namespace synthtab
