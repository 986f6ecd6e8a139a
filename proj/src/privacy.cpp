#include "synthtab/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "synthtab/errors.hpp"

namespace synthtab {

namespace {

constexpr double kEarthRadiusM = 6371000.0;
constexpr double kDegToRad = 0.01745329251994329576923690768489;

double percentile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ValidationError("percentile: empty input");
    if (sorted.size() == 1) return sorted[0];
    const double rank = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(rank);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - static_cast<double>(lo));
}

// normalized row-difference machinery shared by dcr and nndr
struct NormalizedView {
    std::vector<size_t> cont_cols;
    std::vector<size_t> cat_cols;
    std::vector<double> offsets; // per continuous column: real min
    std::vector<double> scales;  // per continuous column: real range (1 when constant)
};

NormalizedView make_view(const DataTable& real, const DataTable& synth) {
    if (!(real.schema == synth.schema)) throw ValidationError("privacy: schema mismatch");
    if (real.rows() == 0 || synth.rows() == 0) throw ValidationError("privacy: empty table");
    NormalizedView v;
    for (size_t ci = 0; ci < real.schema.size(); ++ci) {
        if (real.schema.columns[ci].kind == ColumnKind::Continuous) {
            const auto [mn, mx] = std::minmax_element(real.reals[ci].begin(),
                                                      real.reals[ci].end());
            v.cont_cols.push_back(ci);
            v.offsets.push_back(*mn);
            v.scales.push_back(*mx > *mn ? *mx - *mn : 1.0);
        } else {
            v.cat_cols.push_back(ci);
        }
    }
    return v;
}

double row_distance_sq(const NormalizedView& v, const DataTable& a, size_t ra,
                       const DataTable& b, size_t rb) {
    double acc = 0.0;
    for (size_t k = 0; k < v.cont_cols.size(); ++k) {
        const size_t ci = v.cont_cols[k];
        const double da = (a.reals[ci][ra] - v.offsets[k]) / v.scales[k];
        const double db = (b.reals[ci][rb] - v.offsets[k]) / v.scales[k];
        acc += (da - db) * (da - db);
    }
    for (size_t ci : v.cat_cols) {
        if (a.codes[ci][ra] != b.codes[ci][rb]) acc += 1.0;
    }
    return acc;
}

} // namespace

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
    const double phi1 = lat1 * kDegToRad;
    const double phi2 = lat2 * kDegToRad;
    const double dphi = (lat2 - lat1) * kDegToRad;
    const double dlam = (lon2 - lon1) * kDegToRad;
    const double a = std::sin(dphi / 2.0) * std::sin(dphi / 2.0) +
                     std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2.0) *
                         std::sin(dlam / 2.0);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

DcrResult dcr(const DataTable& real, const DataTable& synth) {
    const NormalizedView v = make_view(real, synth);
    DcrResult result;
    result.distances.reserve(synth.rows());
    for (size_t s = 0; s < synth.rows(); ++s) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t r = 0; r < real.rows(); ++r) {
            best = std::min(best, row_distance_sq(v, synth, s, real, r));
            if (best == 0.0) break;
        }
        const double d = std::sqrt(best);
        result.distances.push_back(d);
        if (d == 0.0) ++result.exact_matches;
    }
    std::vector<double> sorted = result.distances;
    std::sort(sorted.begin(), sorted.end());
    result.min = sorted.front();
    result.p5 = percentile_sorted(sorted, 5.0);
    result.median = percentile_sorted(sorted, 50.0);
    return result;
}

NndrResult nndr(const DataTable& real, const DataTable& synth) {
    if (real.rows() < 2) throw ValidationError("nndr: need at least 2 real rows");
    const NormalizedView v = make_view(real, synth);
    NndrResult result;
    result.ratios.reserve(synth.rows());
    for (size_t s = 0; s < synth.rows(); ++s) {
        double d1 = std::numeric_limits<double>::infinity();
        double d2 = std::numeric_limits<double>::infinity();
        for (size_t r = 0; r < real.rows(); ++r) {
            const double d = row_distance_sq(v, synth, s, real, r);
            if (d < d1) {
                d2 = d1;
                d1 = d;
            } else if (d < d2) {
                d2 = d;
            }
        }
        result.ratios.push_back(d2 > 0.0 ? std::sqrt(d1 / d2) : 0.0);
    }
    std::vector<double> sorted = result.ratios;
    std::sort(sorted.begin(), sorted.end());
    result.median = percentile_sorted(sorted, 50.0);
    return result;
}

TrendComparison trend_compare(const DataTable& real, const DataTable& synth,
                              const std::string& x_column, const std::string& y_column) {
    auto ols = [&](const DataTable& t) -> std::pair<double, double> {
        const auto& x = t.continuous(x_column);
        const auto& y = t.continuous(y_column);
        if (x.size() < 2) throw ValidationError("trend_compare: need at least 2 rows");
        double mx = 0.0, my = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= static_cast<double>(x.size());
        my /= static_cast<double>(x.size());
        double sxx = 0.0, sxy = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            sxx += (x[i] - mx) * (x[i] - mx);
            sxy += (x[i] - mx) * (y[i] - my);
        }
        if (sxx <= 0.0) {
            throw NumericError("trend_compare: zero-variance x column " + x_column);
        }
        const double slope = sxy / sxx;
        return {slope, my - slope * mx};
    };
    TrendComparison out;
    std::tie(out.real_slope, out.real_intercept) = ols(real);
    std::tie(out.synth_slope, out.synth_intercept) = ols(synth);
    const double denom = std::abs(out.real_slope);
    out.relative_slope_difference =
        denom > 0.0 ? std::abs(out.real_slope - out.synth_slope) / denom
                    : std::abs(out.real_slope - out.synth_slope);
    return out;
}

EndpointObscurity endpoint_obscurity(const DataTable& real_in_time_order,
                                     const DataTable& synth) {
    const int lat_idx = real_in_time_order.schema.index_of("latitude");
    const int lon_idx = real_in_time_order.schema.index_of("longitude");
    if (lat_idx < 0 || lon_idx < 0) {
        throw ValidationError("endpoint_obscurity: latitude/longitude columns missing");
    }
    if (real_in_time_order.rows() == 0 || synth.rows() == 0) {
        throw ValidationError("endpoint_obscurity: empty table");
    }
    const auto& rlat = real_in_time_order.reals[lat_idx];
    const auto& rlon = real_in_time_order.reals[lon_idx];
    const auto& slat = synth.continuous("latitude");
    const auto& slon = synth.continuous("longitude");

    const auto [lat_mn, lat_mx] = std::minmax_element(rlat.begin(), rlat.end());
    const auto [lon_mn, lon_mx] = std::minmax_element(rlon.begin(), rlon.end());
    const double lat_scale = *lat_mx > *lat_mn ? *lat_mx - *lat_mn : 1.0;
    const double lon_scale = *lon_mx > *lon_mn ? *lon_mx - *lon_mn : 1.0;

    auto nearest = [&](double lat, double lon) -> std::pair<double, double> {
        double best_m = std::numeric_limits<double>::infinity();
        double best_norm = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < slat.size(); ++i) {
            const double m = haversine_m(lat, lon, slat[i], slon[i]);
            const double dn_lat = (lat - slat[i]) / lat_scale;
            const double dn_lon = (lon - slon[i]) / lon_scale;
            best_m = std::min(best_m, m);
            best_norm = std::min(best_norm, std::sqrt(dn_lat * dn_lat + dn_lon * dn_lon));
        }
        return {best_m, best_norm};
    };

    EndpointObscurity out;
    std::tie(out.start_m, out.start_norm) = nearest(rlat.front(), rlon.front());
    std::tie(out.end_m, out.end_norm) = nearest(rlat.back(), rlon.back());
    out.start_exposed = out.start_m <= 0.0;
    out.end_exposed = out.end_m <= 0.0;
    return out;
}

double grid_overlap(const DataTable& a, const DataTable& b, double cell_degrees) {
    if (!(cell_degrees > 0.0)) throw ValidationError("grid_overlap: cell size must be > 0");
    auto cells_of = [&](const DataTable& t) {
        std::set<std::pair<long long, long long>> cells;
        const auto& lat = t.continuous("latitude");
        const auto& lon = t.continuous("longitude");
        for (size_t i = 0; i < lat.size(); ++i) {
            cells.insert({static_cast<long long>(std::floor(lat[i] / cell_degrees)),
                          static_cast<long long>(std::floor(lon[i] / cell_degrees))});
        }
        return cells;
    };
    const auto ca = cells_of(a);
    const auto cb = cells_of(b);
    size_t inter = 0;
    for (const auto& c : ca) inter += cb.count(c);
    const size_t uni = ca.size() + cb.size() - inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

PrivacyReport compute_privacy(const DataTable& real, const DataTable& synth,
                              double cell_degrees, const PrivacyThresholds& thresholds) {
    PrivacyReport report;
    report.dcr = dcr(real, synth);
    report.nndr = nndr(real, synth);
    report.geo_trend = trend_compare(real, synth, "longitude", "latitude");
    report.endpoints = endpoint_obscurity(real, synth);
    report.grid_jaccard = grid_overlap(real, synth, cell_degrees);
    report.cell_degrees = cell_degrees;
    report.thresholds = thresholds;
    report.dcr_floor_ok =
        report.dcr.exact_matches == 0 && report.dcr.p5 > thresholds.min_dcr_p5;
    report.endpoints_ok = report.endpoints.start_m > thresholds.min_endpoint_distance_m &&
                          report.endpoints.end_m > thresholds.min_endpoint_distance_m;
    return report;
}

nlohmann::json privacy_to_json(const PrivacyReport& r) {
    return nlohmann::json{
        {"dcr", {{"min", r.dcr.min},
                 {"p5", r.dcr.p5},
                 {"median", r.dcr.median},
                 {"exact_matches", r.dcr.exact_matches}}},
        {"nndr", {{"median", r.nndr.median}}},
        {"geo_trend", {{"real_slope", r.geo_trend.real_slope},
                       {"real_intercept", r.geo_trend.real_intercept},
                       {"synthetic_slope", r.geo_trend.synth_slope},
                       {"synthetic_intercept", r.geo_trend.synth_intercept},
                       {"relative_slope_difference", r.geo_trend.relative_slope_difference}}},
        {"endpoints", {{"start_m", r.endpoints.start_m},
                       {"end_m", r.endpoints.end_m},
                       {"start_normalized", r.endpoints.start_norm},
                       {"end_normalized", r.endpoints.end_norm},
                       {"start_exposed", r.endpoints.start_exposed},
                       {"end_exposed", r.endpoints.end_exposed}}},
        {"grid_overlap", {{"jaccard", r.grid_jaccard}, {"cell_degrees", r.cell_degrees}}},
        {"thresholds", {{"min_endpoint_distance_m", r.thresholds.min_endpoint_distance_m},
                        {"min_dcr_p5", r.thresholds.min_dcr_p5}}},
        {"dcr_floor_ok", r.dcr_floor_ok},
        {"endpoints_ok", r.endpoints_ok}};
}

} // namespace synthtab
