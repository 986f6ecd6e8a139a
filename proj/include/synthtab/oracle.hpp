#pragma once

#include <span>
#include <string>
#include <vector>

#include "synthtab/data_table.hpp"

namespace synthtab::oracle {

// Deliberately naive re-implementations of every statistic the toolkit
// reports, kept on an independent code path (plain enumeration, no shared
// helpers) so the fast implementations can be checked against them.

double ks_complement(std::span<const double> real, std::span<const double> synth);
double tv_complement(std::span<const int> real, std::span<const int> synth);
double skewness(std::span<const double> values);
double pearson(std::span<const double> x, std::span<const double> y);
double pair_trend_similarity(const DataTable& real, const DataTable& synth, size_t col_i,
                             size_t col_j);

std::vector<double> dcr_distances(const DataTable& real, const DataTable& synth);
std::vector<double> nndr_ratios(const DataTable& real, const DataTable& synth);
double grid_overlap(const DataTable& a, const DataTable& b, double cell_degrees);

struct SimpleMetrics {
    double accuracy = 0.0;
    std::vector<double> precision, recall, f1;
    std::vector<size_t> support;
};

SimpleMetrics classification_metrics(std::span<const int> predictions,
                                     std::span<const int> truth, size_t n_classes);

// battery used by the CLI selfcheck: runs each oracle against the production
// implementation on seeded random instances; returns failure descriptions
std::vector<std::string> run_selfcheck(uint64_t seed, size_t instances);

} // namespace synthtab::oracle
