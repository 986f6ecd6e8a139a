#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "synthtab/data_table.hpp"

namespace synthtab {

double haversine_m(double lat1, double lon1, double lat2, double lon2);

/// Distance to closest record: per synthetic row, Euclidean distance to the
/// nearest real row over all columns ; continuous features min-max
/// normalized by the real table's ranges, categorical mismatches contributing
/// 1 per column.
struct DcrResult {
    std::vector<double> distances; // one per synthetic row
    double min = 0.0;
    double p5 = 0.0;
    double median = 0.0;
    size_t exact_matches = 0;
};

DcrResult dcr(const DataTable& real, const DataTable& synth);

/// Nearest-neighbor distance ratio: closest over second-closest real-record
/// distance. Values near 1 mean the synthetic row does not single out any
/// real record.
struct NndrResult {
    std::vector<double> ratios;
    double median = 0.0;
};

NndrResult nndr(const DataTable& real, const DataTable& synth);

struct TrendComparison {
    double real_slope = 0.0, real_intercept = 0.0;
    double synth_slope = 0.0, synth_intercept = 0.0;
    double relative_slope_difference = 0.0; // |s_real - s_synth| / |s_real|
};

TrendComparison trend_compare(const DataTable& real, const DataTable& synth,
                              const std::string& x_column, const std::string& y_column);

/// Distances from the real trip's first and last row (time order) to the
/// nearest synthetic point in the lat/long plane. Larger is better obscured.
struct EndpointObscurity {
    double start_m = 0.0, end_m = 0.0;          // great-circle meters
    double start_norm = 0.0, end_norm = 0.0;    // min-max normalized units
    bool start_exposed = false, end_exposed = false; // raised at distance 0
};

EndpointObscurity endpoint_obscurity(const DataTable& real_in_time_order,
                                     const DataTable& synth);

// Jaccard similarity of the occupied lat/long grid cells
double grid_overlap(const DataTable& a, const DataTable& b, double cell_degrees);

struct PrivacyThresholds {
    double min_endpoint_distance_m = 0.0; // endpoints must be strictly farther
    double min_dcr_p5 = 0.0;              // 5th-percentile DCR must be strictly above
};

struct PrivacyReport {
    DcrResult dcr;
    NndrResult nndr;
    TrendComparison geo_trend; // latitude over longitude
    EndpointObscurity endpoints;
    double grid_jaccard = 0.0;
    double cell_degrees = 0.0;
    PrivacyThresholds thresholds;
    bool dcr_floor_ok = false;
    bool endpoints_ok = false;
};

PrivacyReport compute_privacy(const DataTable& real, const DataTable& synth,
                              double cell_degrees, const PrivacyThresholds& thresholds);

nlohmann::json privacy_to_json(const PrivacyReport& report);

} // namespace synthtab
