#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "synthtab/ingest.hpp"
#include "synthtab/tvae.hpp"
#include "synthtab/utility_eval.hpp"

namespace synthtab {

/// Minimal key-value/section config format: `[section]` headers,
/// `key = value` lines, `#` comments. Values are quoted strings, numbers,
/// booleans, or one-line arrays of those. Unknown sections or keys are
/// rejected outright.
struct ConfigValue {
    enum class Kind { String, Number, Boolean, Array };
    Kind kind = Kind::String;
    std::string str;
    double num = 0.0;
    bool boolean = false;
    std::vector<ConfigValue> array;

    std::string as_string(const std::string& where) const;
    double as_number(const std::string& where) const;
    bool as_bool(const std::string& where) const;
    int64_t as_int(const std::string& where) const;
    std::vector<std::string> as_string_array(const std::string& where) const;
    std::vector<double> as_number_array(const std::string& where) const;
};

using ConfigSections = std::map<std::string, std::map<std::string, ConfigValue>>;

ConfigSections parse_config_text(const std::string& text);

struct AnonymizeConfig {
    bool enabled = false;
    std::string input_csv;
    std::string output_csv; // default <out_dir>/anonymized.csv
    std::vector<std::string> quasi_identifiers;
    std::string sensitive_column;
    std::vector<std::string> rule_lines;
};

struct PipelineConfig {
    // [paths]
    std::string source = "csv"; // "csv" or "surrogate"
    std::string raw_csv;
    std::string out_dir = "out";
    std::string model_file; // default <out_dir>/model.tvae

    // [surrogate]
    size_t surrogate_rows = 20000;
    uint64_t surrogate_seed = 7;

    // [mapping]
    ColumnMapping mapping = ColumnMapping::pvs_default();

    // [train]
    TrainConfig train;

    // [split]
    double holdout_fraction = 0.2;
    uint64_t split_seed = 17;

    // [sample]
    size_t sample_rows = 0; // 0 = match the real row count
    uint64_t sample_seed = 99;

    // [classifiers]
    std::vector<ClassifierSpec> classifier_specs;

    // [privacy]
    double grid_cell_degrees = 0.001;
    double min_endpoint_distance_m = 0.0;
    double min_dcr_p5 = 0.0;

    // [anonymize]
    AnonymizeConfig anonymize;

    static PipelineConfig from_file(const std::string& path);
    static PipelineConfig from_text(const std::string& text);

    void validate() const;

    // semantic fingerprint: paths are excluded so relocating inputs/outputs
    // does not change the provenance hash
    uint64_t semantic_hash() const;

    std::string resolved_model_file() const;
};

uint64_t fnv1a64(const std::string& text);

} // namespace synthtab
