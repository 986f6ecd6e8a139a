#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "synthtab/data_table.hpp"
#include "synthtab/matrix.hpp"

namespace synthtab {

// 1 - sup|ECDF_real - ECDF_synth| (two-sample Kolmogorov-Smirnov complement)
double ks_complement(std::span<const double> real, std::span<const double> synth);

// 1 - 0.5 * sum over categories of |p_real - p_synth|
double tv_complement(std::span<const int> real, std::span<const int> synth);

// Pearson correlation; a constant side yields 0.0 with *flagged set.
double pearson(std::span<const double> x, std::span<const double> y, bool* flagged = nullptr);

struct ColumnShapeScore {
    std::string column;
    bool categorical = false;
    double score = 0.0;
};

struct PairTrendScore {
    std::string column_a;
    std::string column_b;
    double score = 0.0;
    bool constant_flag = false; // a correlation was forced to 0 by a constant column
};

// mean of per-column shape scores (KS complement for continuous, TV
// complement for categorical)
double column_shapes(const DataTable& real, const DataTable& synth);

// continuous-continuous: 1 - |rho_real - rho_synth| / 2; pairs involving a
// categorical column: TV complement of the joint over the categorical values
// and quartile bins of the continuous column (bin edges from the real table)
double pair_trend_similarity(const DataTable& real, const DataTable& synth, size_t col_i,
                             size_t col_j, bool* constant_flag = nullptr);

struct SummaryStats {
    double mean = 0.0;
    double std = 0.0;                 // sample (n-1)
    std::optional<double> skewness;   // adjusted Fisher-Pearson; absent for n < 3
};

SummaryStats summary_stats(std::span<const double> values);

struct KdeSeries {
    std::vector<double> grid;
    std::vector<double> density;
    bool degenerate_spike = false;  // zero-variance input: a point mass at the constant
    bool support_mismatch = false;  // grid carries (almost) none of the sample mass
};

// Gaussian kernel, Silverman bandwidth, grid spanning the data +- 4 bandwidths
KdeSeries kde(std::span<const double> values, size_t grid_points);
// same estimate evaluated on a caller-provided grid
KdeSeries kde_on_grid(std::span<const double> values, std::span<const double> grid);

double silverman_bandwidth(std::span<const double> values);

struct CorrelationResult {
    std::vector<std::string> columns;
    Matrix values;                    // symmetric, unit diagonal
    std::vector<bool> constant_flag;  // per column
};

CorrelationResult correlation_matrix(const DataTable& table);

struct KdeOverlay {
    std::string column;
    std::vector<double> grid;
    std::vector<double> real_density;
    std::vector<double> synth_density;
};

struct SummaryRow {
    std::string column;
    SummaryStats real;
    SummaryStats synth;
};

struct FidelityReport {
    std::vector<ColumnShapeScore> shapes;
    std::vector<PairTrendScore> trends;
    double column_shapes_score = 0.0;
    double column_pair_trends_score = 0.0;
    double overall = 0.0; // (shapes + trends) / 2
    std::vector<SummaryRow> summary;
    CorrelationResult correlation_real;
    CorrelationResult correlation_synth;
    std::vector<KdeOverlay> kde_overlays;
};

FidelityReport compute_fidelity(const DataTable& real, const DataTable& synth,
                                size_t kde_grid_points = 256);

nlohmann::json fidelity_to_json(const FidelityReport& report);

} // namespace synthtab
