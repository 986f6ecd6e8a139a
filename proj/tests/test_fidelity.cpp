#include <doctest.h>

#include <cmath>

#include "synthtab/errors.hpp"
#include "synthtab/fidelity.hpp"
#include "synthtab/ingest.hpp"
#include "synthtab/oracle.hpp"
#include "synthtab/rng.hpp"

using namespace synthtab;

TEST_CASE("ks_complement basics") {
    const std::vector<double> a{1, 2, 3, 4};
    CHECK(ks_complement(a, a) == doctest::Approx(1.0));

    const std::vector<double> lo{1, 2, 3};
    const std::vector<double> hi{10, 11, 12};
    CHECK(ks_complement(lo, hi) == doctest::Approx(0.0));

    const std::vector<double> b{1, 2, 3, 10};
    CHECK(ks_complement(a, b) == doctest::Approx(0.75));

    CHECK(ks_complement(a, b) == doctest::Approx(ks_complement(b, a)));
    CHECK_THROWS_AS(ks_complement({}, a), ValidationError);
}

TEST_CASE("tv_complement basics") {
    const std::vector<int> a{0, 0, 1, 1};
    CHECK(tv_complement(a, a) == doctest::Approx(1.0));

    const std::vector<int> b{2, 2, 3, 3};
    CHECK(tv_complement(a, b) == doctest::Approx(0.0));

    // (0.5, 0.5) vs (0.75, 0.25)
    const std::vector<int> c{0, 0, 0, 1};
    CHECK(tv_complement(a, c) == doctest::Approx(0.75));
    CHECK(tv_complement(a, c) == doctest::Approx(tv_complement(c, a)));
    CHECK_THROWS_AS(tv_complement({}, a), ValidationError);
}

TEST_CASE("metrics match the brute-force oracles on random instances") {
    Rng rng(4242);
    for (int trial = 0; trial < 60; ++trial) {
        const size_t n1 = 3 + rng.below(98);
        const size_t n2 = 3 + rng.below(98);
        std::vector<double> a(n1), b(n2);
        for (double& v : a) v = rng.uniform(-3.0, 3.0);
        for (double& v : b) v = rng.uniform(-2.0, 4.0);
        CHECK(std::abs(ks_complement(a, b) - oracle::ks_complement(a, b)) < 1e-9);

        std::vector<int> ca(n1), cb(n2);
        for (int& v : ca) v = static_cast<int>(rng.below(5));
        for (int& v : cb) v = static_cast<int>(rng.below(4));
        CHECK(std::abs(tv_complement(ca, cb) - oracle::tv_complement(ca, cb)) < 1e-9);

        const SummaryStats stats = summary_stats(a);
        REQUIRE(stats.skewness.has_value());
        CHECK(std::abs(*stats.skewness - oracle::skewness(a)) < 1e-9);
    }
}

TEST_CASE("column_shapes averages per-column scores") {
    const DataTable t = generate_surrogate(400, 3);
    CHECK(column_shapes(t, t) == doctest::Approx(1.0));

    // two-column table with per-column scores (1.0, 0.5) -> 0.75
    TableSchema schema;
    schema.columns = {{"x", ColumnKind::Continuous, ""}, {"c", ColumnKind::Categorical, ""}};
    DataTable real = DataTable::empty(schema);
    DataTable synth = DataTable::empty(schema);
    real.code_maps[1] = synth.code_maps[1] = {"a", "b"};
    real.reals[0] = {1, 2, 3, 4};
    synth.reals[0] = {1, 2, 3, 4}; // identical: score 1.0
    real.codes[1] = {0, 0, 0, 0};
    synth.codes[1] = {0, 0, 1, 1}; // tv distance 0.5: score 0.5
    CHECK(column_shapes(real, synth) == doctest::Approx(0.75));

    DataTable wrong = DataTable::empty(processed_schema());
    CHECK_THROWS_AS(column_shapes(real, wrong), ValidationError);
}

TEST_CASE("pair trends compare correlations and joint tables") {
    const DataTable t = generate_surrogate(500, 11);
    for (size_t i = 0; i < t.schema.size(); ++i) {
        for (size_t j = i + 1; j < t.schema.size(); ++j) {
            CHECK(pair_trend_similarity(t, t, i, j) == doctest::Approx(1.0));
        }
    }

    // reference coefficients: rho_real = -0.92, rho_synth = -0.81
    CHECK(1.0 - std::abs(-0.92 - -0.81) / 2.0 == doctest::Approx(0.945));
    TableSchema schema;
    schema.columns = {{"x", ColumnKind::Continuous, ""}, {"y", ColumnKind::Continuous, ""}};
    DataTable real = DataTable::empty(schema);
    DataTable synth = DataTable::empty(schema);
    Rng rng(7);
    for (int i = 0; i < 4000; ++i) {
        // construct correlations close to the targets by mixing
        const double u = rng.normal();
        const double v = rng.normal();
        real.reals[0].push_back(u);
        real.reals[1].push_back(-u * 0.92 + v * std::sqrt(1 - 0.92 * 0.92));
        synth.reals[0].push_back(u);
        synth.reals[1].push_back(-u * 0.81 + v * std::sqrt(1 - 0.81 * 0.81));
    }
    const double score = pair_trend_similarity(real, synth, 0, 1);
    CHECK(score == doctest::Approx(0.945).epsilon(0.01));

    // maximal disagreement: rho 1 vs -1
    DataTable up = DataTable::empty(schema);
    DataTable down = DataTable::empty(schema);
    for (int i = 0; i < 50; ++i) {
        up.reals[0].push_back(i);
        up.reals[1].push_back(2.0 * i + 1.0);
        down.reals[0].push_back(i);
        down.reals[1].push_back(-3.0 * i);
    }
    CHECK(pair_trend_similarity(up, down, 0, 1) == doctest::Approx(0.0));
}

TEST_CASE("pair trends agree with the oracle on mixed tables") {
    Rng rng(31337);
    for (int trial = 0; trial < 30; ++trial) {
        TableSchema schema;
        schema.columns = {{"x", ColumnKind::Continuous, ""},
                          {"y", ColumnKind::Continuous, ""},
                          {"c", ColumnKind::Categorical, ""}};
        DataTable real = DataTable::empty(schema);
        DataTable synth = DataTable::empty(schema);
        real.code_maps[2] = synth.code_maps[2] = {"a", "b", "c"};
        const size_t n1 = 10 + rng.below(90);
        const size_t n2 = 10 + rng.below(90);
        for (size_t i = 0; i < n1; ++i) {
            real.reals[0].push_back(rng.uniform(-2, 2));
            real.reals[1].push_back(rng.uniform(-2, 2));
            real.codes[2].push_back(static_cast<int>(rng.below(3)));
        }
        for (size_t i = 0; i < n2; ++i) {
            synth.reals[0].push_back(rng.uniform(-2, 2));
            synth.reals[1].push_back(rng.uniform(-2, 2));
            synth.codes[2].push_back(static_cast<int>(rng.below(3)));
        }
        for (size_t i = 0; i < 3; ++i) {
            for (size_t j = i + 1; j < 3; ++j) {
                CHECK(std::abs(pair_trend_similarity(real, synth, i, j) -
                               oracle::pair_trend_similarity(real, synth, i, j)) < 1e-9);
            }
        }
    }
}

TEST_CASE("constant columns flag the pair trend but still score") {
    TableSchema schema;
    schema.columns = {{"x", ColumnKind::Continuous, ""}, {"y", ColumnKind::Continuous, ""}};
    DataTable real = DataTable::empty(schema);
    DataTable synth = DataTable::empty(schema);
    for (int i = 0; i < 20; ++i) {
        real.reals[0].push_back(5.0); // constant: rho defined as 0
        real.reals[1].push_back(i);
        synth.reals[0].push_back(i);
        synth.reals[1].push_back(i);
    }
    bool flagged = false;
    const double score = pair_trend_similarity(real, synth, 0, 1, &flagged);
    CHECK(flagged);
    CHECK(score == doctest::Approx(1.0 - std::abs(0.0 - 1.0) / 2.0));
}

TEST_CASE("summary_stats matches hand values") {
    const SummaryStats s = summary_stats(std::vector<double>{1, 2, 3});
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.std == doctest::Approx(1.0));
    REQUIRE(s.skewness.has_value());
    CHECK(*s.skewness == doctest::Approx(0.0));

    const SummaryStats t = summary_stats(std::vector<double>{0, 0, 1});
    REQUIRE(t.skewness.has_value());
    CHECK(*t.skewness == doctest::Approx(oracle::skewness(std::vector<double>{0, 0, 1})));

    CHECK_THROWS_AS(summary_stats(std::vector<double>{1}), ValidationError);
    const SummaryStats pair = summary_stats(std::vector<double>{1, 2});
    CHECK(!pair.skewness.has_value()); // n = 2: skewness absent
}

TEST_CASE("kde integrates to ~1 and is symmetric for symmetric input") {
    Rng rng(2718);
    std::vector<double> sample;
    for (int i = 0; i < 10000; ++i) sample.push_back(rng.normal());
    const KdeSeries series = kde(sample, 256);
    CHECK(!series.degenerate_spike);
    double integral = 0.0;
    for (size_t g = 1; g < series.grid.size(); ++g) {
        integral += 0.5 * (series.density[g] + series.density[g - 1]) *
                    (series.grid[g] - series.grid[g - 1]);
    }
    CHECK(integral >= 0.97);
    CHECK(integral <= 1.0);
    for (double d : series.density) CHECK(d >= 0.0);

    // density at 0 within 10% of the standard normal value
    size_t nearest = 0;
    for (size_t g = 1; g < series.grid.size(); ++g) {
        if (std::abs(series.grid[g]) < std::abs(series.grid[nearest])) nearest = g;
    }
    CHECK(series.density[nearest] == doctest::Approx(0.3989).epsilon(0.10));

    // exactly symmetric input -> symmetric density
    std::vector<double> sym;
    for (int i = 1; i <= 500; ++i) {
        sym.push_back(static_cast<double>(i));
        sym.push_back(static_cast<double>(-i));
    }
    const KdeSeries s2 = kde(sym, 201);
    for (size_t g = 0; g < s2.grid.size(); ++g) {
        CHECK(std::abs(s2.density[g] - s2.density[s2.grid.size() - 1 - g]) < 1e-6);
    }
}

TEST_CASE("kde flags support mismatch and degenerate spikes") {
    Rng rng(1);
    std::vector<double> sample;
    for (int i = 0; i < 500; ++i) sample.push_back(rng.normal());
    std::vector<double> far_grid;
    for (int i = 0; i < 64; ++i) far_grid.push_back(1000.0 + i);
    const KdeSeries off = kde_on_grid(sample, far_grid);
    CHECK(off.support_mismatch);
    double integral = 0.0;
    for (size_t g = 1; g < off.grid.size(); ++g) {
        integral += 0.5 * (off.density[g] + off.density[g - 1]) *
                    (off.grid[g] - off.grid[g - 1]);
    }
    CHECK(integral < 0.01);

    const std::vector<double> constant(10, 4.0);
    const KdeSeries spike = kde(constant, 64);
    CHECK(spike.degenerate_spike);
    CHECK(spike.grid == std::vector<double>{4.0});
    CHECK_THROWS_AS(kde(std::vector<double>{1.0}, 64), ValidationError);
}

TEST_CASE("correlation matrix is symmetric with unit diagonal") {
    const DataTable t = generate_surrogate(3000, 77);
    const CorrelationResult corr = correlation_matrix(t);
    REQUIRE(corr.columns.size() == 6);
    for (size_t i = 0; i < 6; ++i) {
        CHECK(corr.values.at(i, i) == 1.0);
        for (size_t j = 0; j < 6; ++j) {
            CHECK(corr.values.at(i, j) == corr.values.at(j, i));
            CHECK(corr.values.at(i, j) >= -1.0);
            CHECK(corr.values.at(i, j) <= 1.0);
        }
    }
    // the surrogate's lat/long trend is strongly negative
    CHECK(corr.values.at(0, 1) < -0.5);

    // exact line: rho = 1
    TableSchema schema;
    schema.columns = {{"x", ColumnKind::Continuous, ""}, {"y", ColumnKind::Continuous, ""}};
    DataTable line = DataTable::empty(schema);
    for (int i = 0; i < 100; ++i) {
        line.reals[0].push_back(i);
        line.reals[1].push_back(2.0 * i + 1.0);
    }
    CHECK(correlation_matrix(line).values.at(0, 1) == doctest::Approx(1.0));

    // independent columns: |rho| small
    Rng rng(5);
    DataTable indep = DataTable::empty(schema);
    for (int i = 0; i < 10000; ++i) {
        indep.reals[0].push_back(rng.normal());
        indep.reals[1].push_back(rng.normal());
    }
    CHECK(std::abs(correlation_matrix(indep).values.at(0, 1)) < 0.05);

    // constant column: flagged, reported as 0
    DataTable constant = DataTable::empty(schema);
    for (int i = 0; i < 50; ++i) {
        constant.reals[0].push_back(1.0);
        constant.reals[1].push_back(i);
    }
    const CorrelationResult flagged = correlation_matrix(constant);
    CHECK(flagged.values.at(0, 1) == 0.0);
    CHECK(flagged.constant_flag[0]);
    CHECK(flagged.values.at(0, 0) == 1.0);
}

TEST_CASE("compute_fidelity keeps kde overlays aligned for constant columns") {
    TableSchema schema;
    schema.columns = {{"latitude", ColumnKind::Continuous, ""},
                      {"longitude", ColumnKind::Continuous, ""}};
    DataTable real = DataTable::empty(schema);
    DataTable synth = DataTable::empty(schema);
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        real.reals[0].push_back(rng.normal());
        real.reals[1].push_back(rng.normal());
        synth.reals[0].push_back(2.5); // constant synthetic column
        synth.reals[1].push_back(rng.normal());
    }
    const FidelityReport report = compute_fidelity(real, synth, 64);
    for (const auto& overlay : report.kde_overlays) {
        CHECK(overlay.real_density.size() == overlay.grid.size());
        CHECK(overlay.synth_density.size() == overlay.grid.size());
    }
}

TEST_CASE("compute_fidelity scores a table against itself as 1") {
    const DataTable t = generate_surrogate(300, 15);
    const FidelityReport report = compute_fidelity(t, t, 64);
    CHECK(report.column_shapes_score == doctest::Approx(1.0));
    CHECK(report.column_pair_trends_score == doctest::Approx(1.0));
    CHECK(report.overall == doctest::Approx(1.0));
    CHECK(report.overall ==
          doctest::Approx((report.column_shapes_score + report.column_pair_trends_score) / 2));
    CHECK(report.kde_overlays.size() == 6);
    CHECK(report.summary.size() == 6);
    for (const auto& s : report.shapes) {
        CHECK(s.score >= 0.0);
        CHECK(s.score <= 1.0);
    }
    for (const auto& tr : report.trends) {
        CHECK(tr.score >= 0.0);
        CHECK(tr.score <= 1.0);
    }
}
