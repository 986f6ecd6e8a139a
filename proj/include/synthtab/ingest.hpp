#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "synthtab/data_table.hpp"

namespace synthtab {

/// Maps raw sensor columns onto the reduced feature set: triaxial sensor
/// groups are collapsed by per-row mean of absolute values, passthrough
/// columns are copied, the label column is encoded.
struct ColumnMapping {
    // feature name -> raw columns combined by abs-mean
    std::map<std::string, std::vector<std::string>> groups;
    // feature name -> raw column copied through
    std::map<std::string, std::string> passthrough;
    std::string label_column;

    // no raw column in two groups, every target feature resolved, label set
    void validate() const;

    // documented default for the public vehicular sensor CSV layout
    static ColumnMapping pvs_default();
};

struct RawTable {
    std::vector<std::string> feature_names;        // group + passthrough targets, schema order
    std::map<std::string, std::vector<std::vector<double>>> group_values; // per group: per raw column
    std::map<std::string, std::vector<double>> passthrough_values;
    std::vector<std::string> labels;
    size_t raw_rows = 0;      // data rows in the file
    size_t kept_rows = 0;     // rows with all referenced cells present
    size_t rejected_rows = 0; // rows dropped for empty/missing cells
};

// Parses the referenced numeric columns as reals and the label column as
// text. Rows with empty cells in referenced columns are dropped and counted;
// a non-empty cell that fails to parse is a hard error naming row/column.
RawTable load_csv(const std::string& path, const ColumnMapping& mapping);

// latitude, longitude, speed, acceleration, gyro, mag (continuous) + road_encoded
TableSchema processed_schema();

// Fixed codes: asphalt->0, cobblestone->1, dirt->2; unseen labels extend the
// map in first-appearance order.
std::pair<std::vector<int>, std::vector<std::string>> encode_labels(
    const std::vector<std::string>& labels);

DataTable reduce_features(const RawTable& raw, const ColumnMapping& mapping);

// Stratified on road_encoded, deterministic per seed. Row order inside each
// part follows the input order.
std::pair<DataTable, DataTable> split(const DataTable& table, double holdout_fraction,
                                      uint64_t seed);

// Deterministic trip-like dataset for runs without the real data: a
// piecewise-linear lat/long path crossing three road-type segments with
// per-segment speed/IMU distributions. Schema equals processed_schema().
DataTable generate_surrogate(size_t rows, uint64_t seed);

} // namespace synthtab
