#include "synthtab/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "synthtab/errors.hpp"

namespace synthtab {

namespace {

constexpr double kInvSqrtTwoPi = 0.39894228040143267793994605993438187;

double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ValidationError("percentile: empty input");
    if (sorted.size() == 1) return sorted[0];
    const double rank = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(rank);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

void check_same_schema(const DataTable& real, const DataTable& synth, const char* what) {
    if (!(real.schema == synth.schema)) {
        throw ValidationError(std::string(what) + ": schema mismatch between tables");
    }
}

// quartile bin edges of the real column; both tables are discretized with them
std::vector<double> quartile_edges(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return {percentile_sorted(sorted, 25.0), percentile_sorted(sorted, 50.0),
            percentile_sorted(sorted, 75.0)};
}

size_t quartile_bin(double x, const std::vector<double>& edges) {
    for (size_t b = 0; b < edges.size(); ++b) {
        if (x <= edges[b]) return b;
    }
    return edges.size();
}

bool is_constant(std::span<const double> values) {
    for (double v : values) {
        if (v != values[0]) return false;
    }
    return true;
}

} // namespace

double ks_complement(std::span<const double> real, std::span<const double> synth) {
    if (real.empty() || synth.empty()) throw ValidationError("ks_complement: empty input");
    std::vector<double> a(real.begin(), real.end());
    std::vector<double> b(synth.begin(), synth.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    size_t ia = 0, ib = 0;
    double sup = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double v = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= v) ++ia;
        while (ib < b.size() && b[ib] <= v) ++ib;
        sup = std::max(sup, std::abs(static_cast<double>(ia) / na -
                                     static_cast<double>(ib) / nb));
    }
    // past this point one ECDF is pinned at 1, the other keeps growing toward 1
    return 1.0 - sup;
}

double tv_complement(std::span<const int> real, std::span<const int> synth) {
    if (real.empty() || synth.empty()) throw ValidationError("tv_complement: empty input");
    std::map<int, std::pair<double, double>> freq;
    for (int c : real) freq[c].first += 1.0;
    for (int c : synth) freq[c].second += 1.0;
    const double nr = static_cast<double>(real.size());
    const double ns = static_cast<double>(synth.size());
    double dist = 0.0;
    for (const auto& [code, counts] : freq) {
        dist += std::abs(counts.first / nr - counts.second / ns);
    }
    return 1.0 - 0.5 * dist;
}

double pearson(std::span<const double> x, std::span<const double> y, bool* flagged) {
    if (x.size() != y.size() || x.empty()) {
        throw ValidationError("pearson: inputs must be equal-length and non-empty");
    }
    if (flagged) *flagged = false;
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        if (flagged) *flagged = true;
        return 0.0;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double column_shapes(const DataTable& real, const DataTable& synth) {
    check_same_schema(real, synth, "column_shapes");
    double acc = 0.0;
    for (size_t ci = 0; ci < real.schema.size(); ++ci) {
        if (real.schema.columns[ci].kind == ColumnKind::Continuous) {
            acc += ks_complement(real.reals[ci], synth.reals[ci]);
        } else {
            acc += tv_complement(real.codes[ci], synth.codes[ci]);
        }
    }
    return acc / static_cast<double>(real.schema.size());
}

double pair_trend_similarity(const DataTable& real, const DataTable& synth, size_t col_i,
                             size_t col_j, bool* constant_flag) {
    check_same_schema(real, synth, "pair_trend_similarity");
    if (col_i == col_j) throw ValidationError("pair_trend_similarity: needs two distinct columns");
    if (constant_flag) *constant_flag = false;
    const bool cat_i = real.schema.columns[col_i].kind == ColumnKind::Categorical;
    const bool cat_j = real.schema.columns[col_j].kind == ColumnKind::Categorical;

    if (!cat_i && !cat_j) {
        bool f1 = false, f2 = false;
        const double rho_real = pearson(real.reals[col_i], real.reals[col_j], &f1);
        const double rho_synth = pearson(synth.reals[col_i], synth.reals[col_j], &f2);
        if (constant_flag) *constant_flag = f1 || f2;
        return 1.0 - std::abs(rho_real - rho_synth) / 2.0;
    }

    // joint distribution over categorical values x quartile-binned continuous
    // values; cells compared by total variation
    auto cell_codes = [&](const DataTable& t, size_t col,
                          const std::vector<double>& edges) -> std::vector<size_t> {
        std::vector<size_t> out;
        out.reserve(t.rows());
        if (t.schema.columns[col].kind == ColumnKind::Categorical) {
            for (int c : t.codes[col]) out.push_back(static_cast<size_t>(c));
        } else {
            for (double v : t.reals[col]) out.push_back(quartile_bin(v, edges));
        }
        return out;
    };
    std::vector<double> edges_i, edges_j;
    if (!cat_i) edges_i = quartile_edges(real.reals[col_i]);
    if (!cat_j) edges_j = quartile_edges(real.reals[col_j]);

    const std::vector<size_t> ri = cell_codes(real, col_i, edges_i);
    const std::vector<size_t> rj = cell_codes(real, col_j, edges_j);
    const std::vector<size_t> si = cell_codes(synth, col_i, edges_i);
    const std::vector<size_t> sj = cell_codes(synth, col_j, edges_j);

    std::map<std::pair<size_t, size_t>, std::pair<double, double>> joint;
    for (size_t r = 0; r < ri.size(); ++r) joint[{ri[r], rj[r]}].first += 1.0;
    for (size_t r = 0; r < si.size(); ++r) joint[{si[r], sj[r]}].second += 1.0;
    const double nr = static_cast<double>(ri.size());
    const double ns = static_cast<double>(si.size());
    double dist = 0.0;
    for (const auto& [cell, counts] : joint) {
        dist += std::abs(counts.first / nr - counts.second / ns);
    }
    return 1.0 - 0.5 * dist;
}

SummaryStats summary_stats(std::span<const double> values) {
    const size_t n = values.size();
    if (n < 2) throw ValidationError("summary_stats: need at least 2 values");
    SummaryStats s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    s.std = std::sqrt(m2 / static_cast<double>(n - 1));
    if (n >= 3 && s.std > 0.0) {
        // adjusted Fisher-Pearson: n/((n-1)(n-2)) * sum((x - xbar)/s)^3
        const double nn = static_cast<double>(n);
        s.skewness = nn / ((nn - 1.0) * (nn - 2.0)) * m3 / (s.std * s.std * s.std);
    } else if (n >= 3) {
        s.skewness = 0.0;
    }
    return s;
}

double silverman_bandwidth(std::span<const double> values) {
    const size_t n = values.size();
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const SummaryStats s = summary_stats(values);
    const double iqr = percentile_sorted(sorted, 75.0) - percentile_sorted(sorted, 25.0);
    double spread = s.std;
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

KdeSeries kde_on_grid(std::span<const double> values, std::span<const double> grid) {
    if (values.size() < 2) throw ValidationError("kde: need at least 2 values");
    KdeSeries out;
    out.grid.assign(grid.begin(), grid.end());
    const double h = silverman_bandwidth(values);
    if (h <= 0.0) {
        // zero variance: a point mass at the constant
        out.degenerate_spike = true;
        out.grid = {values[0]};
        out.density = {1.0};
        return out;
    }
    out.density.assign(grid.size(), 0.0);
    const double scale = 1.0 / (static_cast<double>(values.size()) * h);
    for (size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double x : values) {
            const double z = (grid[g] - x) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out.density[g] = acc * kInvSqrtTwoPi * scale;
    }
    if (out.grid.size() >= 2) {
        double integral = 0.0;
        for (size_t g = 1; g < out.grid.size(); ++g) {
            integral += 0.5 * (out.density[g] + out.density[g - 1]) *
                        (out.grid[g] - out.grid[g - 1]);
        }
        out.support_mismatch = integral < 0.5;
    }
    return out;
}

KdeSeries kde(std::span<const double> values, size_t grid_points) {
    if (values.size() < 2) throw ValidationError("kde: need at least 2 values");
    if (grid_points < 2) throw ValidationError("kde: need at least 2 grid points");
    const double h = silverman_bandwidth(values);
    if (h <= 0.0) {
        KdeSeries out;
        out.degenerate_spike = true;
        out.grid = {values[0]};
        out.density = {1.0};
        return out;
    }
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn - 4.0 * h;
    const double hi = *mx + 4.0 * h;
    std::vector<double> grid(grid_points);
    for (size_t g = 0; g < grid_points; ++g) {
        grid[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    }
    return kde_on_grid(values, grid);
}

CorrelationResult correlation_matrix(const DataTable& table) {
    CorrelationResult result;
    std::vector<size_t> cols;
    for (size_t ci = 0; ci < table.schema.size(); ++ci) {
        if (table.schema.columns[ci].kind == ColumnKind::Continuous) {
            cols.push_back(ci);
            result.columns.push_back(table.schema.columns[ci].name);
        }
    }
    if (cols.size() < 2) throw ValidationError("correlation_matrix: need >= 2 continuous columns");
    const size_t d = cols.size();
    result.values = Matrix(d, d);
    result.constant_flag.assign(d, false);
    for (size_t i = 0; i < d; ++i) {
        result.values.at(i, i) = 1.0;
        for (size_t j = i + 1; j < d; ++j) {
            bool flagged = false;
            const double rho = pearson(table.reals[cols[i]], table.reals[cols[j]], &flagged);
            result.values.at(i, j) = rho;
            result.values.at(j, i) = rho;
            if (flagged) {
                result.constant_flag[i] = result.constant_flag[i] || is_constant(table.reals[cols[i]]);
                result.constant_flag[j] = result.constant_flag[j] || is_constant(table.reals[cols[j]]);
            }
        }
    }
    return result;
}

FidelityReport compute_fidelity(const DataTable& real, const DataTable& synth,
                                size_t kde_grid_points) {
    check_same_schema(real, synth, "compute_fidelity");
    FidelityReport report;

    double shape_acc = 0.0;
    for (size_t ci = 0; ci < real.schema.size(); ++ci) {
        ColumnShapeScore s;
        s.column = real.schema.columns[ci].name;
        s.categorical = real.schema.columns[ci].kind == ColumnKind::Categorical;
        s.score = s.categorical ? tv_complement(real.codes[ci], synth.codes[ci])
                                : ks_complement(real.reals[ci], synth.reals[ci]);
        shape_acc += s.score;
        report.shapes.push_back(std::move(s));
    }
    report.column_shapes_score = shape_acc / static_cast<double>(real.schema.size());

    double trend_acc = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < real.schema.size(); ++i) {
        for (size_t j = i + 1; j < real.schema.size(); ++j) {
            PairTrendScore t;
            t.column_a = real.schema.columns[i].name;
            t.column_b = real.schema.columns[j].name;
            t.score = pair_trend_similarity(real, synth, i, j, &t.constant_flag);
            trend_acc += t.score;
            ++pairs;
            report.trends.push_back(std::move(t));
        }
    }
    report.column_pair_trends_score = pairs ? trend_acc / static_cast<double>(pairs) : 1.0;
    report.overall = (report.column_shapes_score + report.column_pair_trends_score) / 2.0;

    for (size_t ci = 0; ci < real.schema.size(); ++ci) {
        if (real.schema.columns[ci].kind != ColumnKind::Continuous) continue;
        SummaryRow row;
        row.column = real.schema.columns[ci].name;
        row.real = summary_stats(real.reals[ci]);
        row.synth = summary_stats(synth.reals[ci]);
        report.summary.push_back(std::move(row));

        // shared grid so the real/synthetic curves overlay directly
        KdeOverlay overlay;
        overlay.column = real.schema.columns[ci].name;
        const auto [rmn, rmx] = std::minmax_element(real.reals[ci].begin(), real.reals[ci].end());
        const auto [smn, smx] =
            std::minmax_element(synth.reals[ci].begin(), synth.reals[ci].end());
        const double hr = silverman_bandwidth(real.reals[ci]);
        const double hs = silverman_bandwidth(synth.reals[ci]);
        const double pad = 4.0 * std::max({hr, hs, 1e-12});
        const double lo = std::min(*rmn, *smn) - pad;
        const double hi = std::max(*rmx, *smx) + pad;
        overlay.grid.resize(kde_grid_points);
        for (size_t g = 0; g < kde_grid_points; ++g) {
            overlay.grid[g] = lo + (hi - lo) * static_cast<double>(g) /
                                       static_cast<double>(kde_grid_points - 1);
        }
        // a zero-variance side degenerates to a point mass; keep the series
        // aligned with the shared grid by marking the nearest grid point
        auto density_on_grid = [&](const std::vector<double>& values) {
            const KdeSeries series = kde_on_grid(values, overlay.grid);
            if (!series.degenerate_spike) return series.density;
            std::vector<double> spike(overlay.grid.size(), 0.0);
            size_t nearest = 0;
            for (size_t g = 1; g < overlay.grid.size(); ++g) {
                if (std::abs(overlay.grid[g] - values[0]) <
                    std::abs(overlay.grid[nearest] - values[0])) {
                    nearest = g;
                }
            }
            spike[nearest] = 1.0;
            return spike;
        };
        overlay.real_density = density_on_grid(real.reals[ci]);
        overlay.synth_density = density_on_grid(synth.reals[ci]);
        report.kde_overlays.push_back(std::move(overlay));
    }

    report.correlation_real = correlation_matrix(real);
    report.correlation_synth = correlation_matrix(synth);
    return report;
}

nlohmann::json fidelity_to_json(const FidelityReport& report) {
    nlohmann::json shapes = nlohmann::json::array();
    for (const auto& s : report.shapes) {
        shapes.push_back({{"column", s.column},
                          {"metric", s.categorical ? "tv_complement" : "ks_complement"},
                          {"score", s.score}});
    }
    nlohmann::json trends = nlohmann::json::array();
    for (const auto& t : report.trends) {
        trends.push_back({{"column_a", t.column_a},
                          {"column_b", t.column_b},
                          {"score", t.score},
                          {"constant_flag", t.constant_flag}});
    }
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& row : report.summary) {
        nlohmann::json real{{"mean", row.real.mean}, {"std", row.real.std}};
        nlohmann::json synth{{"mean", row.synth.mean}, {"std", row.synth.std}};
        if (row.real.skewness) real["skewness"] = *row.real.skewness;
        if (row.synth.skewness) synth["skewness"] = *row.synth.skewness;
        summary.push_back({{"column", row.column}, {"real", real}, {"synthetic", synth}});
    }
    auto corr_json = [](const CorrelationResult& c) {
        nlohmann::json rows = nlohmann::json::array();
        for (size_t i = 0; i < c.values.rows; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (size_t j = 0; j < c.values.cols; ++j) row.push_back(c.values.at(i, j));
            rows.push_back(std::move(row));
        }
        return nlohmann::json{{"columns", c.columns},
                              {"values", rows},
                              {"constant_flags", c.constant_flag}};
    };
    return nlohmann::json{{"column_shapes_score", report.column_shapes_score},
                          {"column_pair_trends_score", report.column_pair_trends_score},
                          {"overall_score", report.overall},
                          {"shapes", shapes},
                          {"pair_trends", trends},
                          {"summary", summary},
                          {"correlation_real", corr_json(report.correlation_real)},
                          {"correlation_synthetic", corr_json(report.correlation_synth)}};
}

} // namespace synthtab
