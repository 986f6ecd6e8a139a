#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace synthtab {

/// Scalar Gaussian mixture for one continuous column.
struct GmmParams {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stds;

    size_t k() const { return weights.size(); }
};

struct GmmFitOptions {
    size_t k = 10;
    uint64_t seed = 0;
    size_t max_iter = 100;
    double tol = 1e-6;
    double prune_weight = 1e-3;   // post-fit: drop components below, renormalize
    size_t subsample = 10000;     // k-means++ seeding subsample cap
};

struct GmmFitResult {
    GmmParams params;
    std::vector<double> log_likelihoods; // one per EM iteration, non-decreasing
};

// EM with k-means++ seeding. k collapses to the number of distinct values
// when the column has fewer than k. Stds never drop below
// 1e-4 * (column std, or 1 if the column is constant).
GmmFitResult fit_gmm_traced(std::span<const double> values, const GmmFitOptions& opts);
GmmParams fit_gmm(std::span<const double> values, const GmmFitOptions& opts);

double gmm_log_likelihood(std::span<const double> values, const GmmParams& params);

// posterior P(component | x)
std::vector<double> gmm_responsibilities(double x, const GmmParams& params);

double std_floor_for(std::span<const double> values);

} // namespace synthtab
