#include "synthtab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "synthtab/errors.hpp"
#include "synthtab/fidelity.hpp"
#include "synthtab/privacy.hpp"
#include "synthtab/rng.hpp"
#include "synthtab/utility_eval.hpp"

namespace synthtab::oracle {

double ks_complement(std::span<const double> real, std::span<const double> synth) {
    // evaluate both ECDFs at every observed value by direct counting
    std::vector<double> candidates(real.begin(), real.end());
    candidates.insert(candidates.end(), synth.begin(), synth.end());
    double sup = 0.0;
    for (double v : candidates) {
        size_t below_real = 0, below_synth = 0;
        for (double x : real) {
            if (x <= v) ++below_real;
        }
        for (double x : synth) {
            if (x <= v) ++below_synth;
        }
        const double fr = static_cast<double>(below_real) / static_cast<double>(real.size());
        const double fs = static_cast<double>(below_synth) / static_cast<double>(synth.size());
        sup = std::max(sup, std::abs(fr - fs));
    }
    return 1.0 - sup;
}

double tv_complement(std::span<const int> real, std::span<const int> synth) {
    std::set<int> cats(real.begin(), real.end());
    cats.insert(synth.begin(), synth.end());
    double dist = 0.0;
    for (int c : cats) {
        size_t nr = 0, ns = 0;
        for (int x : real) {
            if (x == c) ++nr;
        }
        for (int x : synth) {
            if (x == c) ++ns;
        }
        dist += std::abs(static_cast<double>(nr) / static_cast<double>(real.size()) -
                         static_cast<double>(ns) / static_cast<double>(synth.size()));
    }
    return 1.0 - 0.5 * dist;
}

double skewness(std::span<const double> values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        m2 += (v - mean) * (v - mean);
        m3 += (v - mean) * (v - mean) * (v - mean);
    }
    const double s = std::sqrt(m2 / (n - 1.0));
    return n / ((n - 1.0) * (n - 2.0)) * m3 / (s * s * s);
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

namespace {

double interp_percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(rank);
    const size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (values[hi] - values[lo]) * (rank - static_cast<double>(lo));
}

std::vector<size_t> discretize(const DataTable& t, size_t col,
                               const std::vector<double>& edges) {
    std::vector<size_t> out;
    if (t.schema.columns[col].kind == ColumnKind::Categorical) {
        for (int c : t.codes[col]) out.push_back(static_cast<size_t>(c));
        return out;
    }
    for (double v : t.reals[col]) {
        size_t bin = edges.size();
        for (size_t b = 0; b < edges.size(); ++b) {
            if (v <= edges[b]) {
                bin = b;
                break;
            }
        }
        out.push_back(bin);
    }
    return out;
}

} // namespace

double pair_trend_similarity(const DataTable& real, const DataTable& synth, size_t col_i,
                             size_t col_j) {
    const bool cat_i = real.schema.columns[col_i].kind == ColumnKind::Categorical;
    const bool cat_j = real.schema.columns[col_j].kind == ColumnKind::Categorical;
    if (!cat_i && !cat_j) {
        return 1.0 -
               std::abs(pearson(real.reals[col_i], real.reals[col_j]) -
                        pearson(synth.reals[col_i], synth.reals[col_j])) /
                   2.0;
    }
    std::vector<double> edges_i, edges_j;
    if (!cat_i) {
        edges_i = {interp_percentile(real.reals[col_i], 25.0),
                   interp_percentile(real.reals[col_i], 50.0),
                   interp_percentile(real.reals[col_i], 75.0)};
    }
    if (!cat_j) {
        edges_j = {interp_percentile(real.reals[col_j], 25.0),
                   interp_percentile(real.reals[col_j], 50.0),
                   interp_percentile(real.reals[col_j], 75.0)};
    }
    const auto ri = discretize(real, col_i, edges_i);
    const auto rj = discretize(real, col_j, edges_j);
    const auto si = discretize(synth, col_i, edges_i);
    const auto sj = discretize(synth, col_j, edges_j);

    std::set<std::pair<size_t, size_t>> cells;
    for (size_t r = 0; r < ri.size(); ++r) cells.insert({ri[r], rj[r]});
    for (size_t r = 0; r < si.size(); ++r) cells.insert({si[r], sj[r]});
    double dist = 0.0;
    for (const auto& cell : cells) {
        size_t nr = 0, ns = 0;
        for (size_t r = 0; r < ri.size(); ++r) {
            if (ri[r] == cell.first && rj[r] == cell.second) ++nr;
        }
        for (size_t r = 0; r < si.size(); ++r) {
            if (si[r] == cell.first && sj[r] == cell.second) ++ns;
        }
        dist += std::abs(static_cast<double>(nr) / static_cast<double>(ri.size()) -
                         static_cast<double>(ns) / static_cast<double>(si.size()));
    }
    return 1.0 - 0.5 * dist;
}

namespace {

double naive_row_distance(const DataTable& real, const DataTable& synth, size_t r, size_t s,
                          const std::vector<double>& mins, const std::vector<double>& scales) {
    double acc = 0.0;
    size_t cont = 0;
    for (size_t ci = 0; ci < real.schema.size(); ++ci) {
        if (real.schema.columns[ci].kind == ColumnKind::Continuous) {
            const double a = (synth.reals[ci][s] - mins[cont]) / scales[cont];
            const double b = (real.reals[ci][r] - mins[cont]) / scales[cont];
            acc += (a - b) * (a - b);
            ++cont;
        }
    }
    for (size_t ci = 0; ci < real.schema.size(); ++ci) {
        if (real.schema.columns[ci].kind == ColumnKind::Categorical &&
            synth.codes[ci][s] != real.codes[ci][r]) {
            acc += 1.0;
        }
    }
    return std::sqrt(acc);
}

void real_ranges(const DataTable& real, std::vector<double>& mins,
                 std::vector<double>& scales) {
    for (size_t ci = 0; ci < real.schema.size(); ++ci) {
        if (real.schema.columns[ci].kind != ColumnKind::Continuous) continue;
        double mn = real.reals[ci][0], mx = real.reals[ci][0];
        for (double v : real.reals[ci]) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        mins.push_back(mn);
        scales.push_back(mx > mn ? mx - mn : 1.0);
    }
}

} // namespace

std::vector<double> dcr_distances(const DataTable& real, const DataTable& synth) {
    std::vector<double> mins, scales;
    real_ranges(real, mins, scales);
    std::vector<double> out;
    for (size_t s = 0; s < synth.rows(); ++s) {
        double best = naive_row_distance(real, synth, 0, s, mins, scales);
        for (size_t r = 1; r < real.rows(); ++r) {
            best = std::min(best, naive_row_distance(real, synth, r, s, mins, scales));
        }
        out.push_back(best);
    }
    return out;
}

std::vector<double> nndr_ratios(const DataTable& real, const DataTable& synth) {
    std::vector<double> mins, scales;
    real_ranges(real, mins, scales);
    std::vector<double> out;
    for (size_t s = 0; s < synth.rows(); ++s) {
        std::vector<double> dists;
        for (size_t r = 0; r < real.rows(); ++r) {
            dists.push_back(naive_row_distance(real, synth, r, s, mins, scales));
        }
        std::sort(dists.begin(), dists.end());
        out.push_back(dists[1] > 0.0 ? dists[0] / dists[1] : 0.0);
    }
    return out;
}

double grid_overlap(const DataTable& a, const DataTable& b, double cell_degrees) {
    auto cells = [&](const DataTable& t) {
        std::set<std::pair<long long, long long>> out;
        const auto& lat = t.continuous("latitude");
        const auto& lon = t.continuous("longitude");
        for (size_t i = 0; i < lat.size(); ++i) {
            out.insert({static_cast<long long>(std::floor(lat[i] / cell_degrees)),
                        static_cast<long long>(std::floor(lon[i] / cell_degrees))});
        }
        return out;
    };
    const auto ca = cells(a);
    const auto cb = cells(b);
    std::set<std::pair<long long, long long>> uni = ca;
    uni.insert(cb.begin(), cb.end());
    size_t inter = 0;
    for (const auto& c : ca) {
        if (cb.count(c)) ++inter;
    }
    if (uni.empty()) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni.size());
}

SimpleMetrics classification_metrics(std::span<const int> predictions,
                                     std::span<const int> truth, size_t n_classes) {
    SimpleMetrics m;
    size_t correct = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (predictions[i] == truth[i]) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    for (size_t c = 0; c < n_classes; ++c) {
        size_t tp = 0, fp = 0, fn = 0, support = 0;
        for (size_t i = 0; i < truth.size(); ++i) {
            const bool is_truth = truth[i] == static_cast<int>(c);
            const bool is_pred = predictions[i] == static_cast<int>(c);
            if (is_truth) ++support;
            if (is_truth && is_pred) ++tp;
            if (!is_truth && is_pred) ++fp;
            if (is_truth && !is_pred) ++fn;
        }
        const double prec = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                                      : 0.0;
        const double rec = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                                     : 0.0;
        m.precision.push_back(prec);
        m.recall.push_back(rec);
        m.f1.push_back(prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0);
        m.support.push_back(support);
    }
    return m;
}

namespace {

DataTable random_geo_table(Rng& rng, size_t rows, size_t n_classes) {
    TableSchema schema;
    schema.columns = {{"latitude", ColumnKind::Continuous, "degrees"},
                      {"longitude", ColumnKind::Continuous, "degrees"},
                      {"speed", ColumnKind::Continuous, ""},
                      {"road_encoded", ColumnKind::Categorical, ""}};
    DataTable t = DataTable::empty(schema);
    for (size_t c = 0; c < n_classes; ++c) t.code_maps[3].push_back("class_" + std::to_string(c));
    for (size_t r = 0; r < rows; ++r) {
        t.reals[0].push_back(rng.uniform(-28.0, -27.0));
        t.reals[1].push_back(rng.uniform(-52.0, -51.0));
        t.reals[2].push_back(rng.uniform(0.0, 30.0));
        t.codes[3].push_back(static_cast<int>(rng.below(n_classes)));
    }
    return t;
}

} // namespace

std::vector<std::string> run_selfcheck(uint64_t seed, size_t instances) {
    std::vector<std::string> failures;
    Rng rng(mix_key(seed, 0x6f7261636c65));
    const double tol = 1e-9;
    auto expect_close = [&](double got, double want, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            failures.push_back(what + ": implementation " + format_double(got) +
                               " vs oracle " + format_double(want));
        }
    };

    for (size_t inst = 0; inst < instances; ++inst) {
        const size_t n1 = 3 + rng.below(98);
        const size_t n2 = 3 + rng.below(98);
        std::vector<double> a(n1), b(n2);
        for (double& v : a) v = rng.uniform(-5.0, 5.0);
        for (double& v : b) v = rng.uniform(-4.0, 6.0);
        expect_close(synthtab::ks_complement(a, b), ks_complement(a, b),
                     "ks_complement #" + std::to_string(inst));

        std::vector<int> ca(n1), cb(n2);
        for (int& v : ca) v = static_cast<int>(rng.below(4));
        for (int& v : cb) v = static_cast<int>(rng.below(5));
        expect_close(synthtab::tv_complement(ca, cb), tv_complement(ca, cb),
                     "tv_complement #" + std::to_string(inst));

        const auto stats = synthtab::summary_stats(a);
        if (stats.skewness) {
            expect_close(*stats.skewness, skewness(a), "skewness #" + std::to_string(inst));
        }

        DataTable real = random_geo_table(rng, 10 + rng.below(90), 3);
        DataTable synth = random_geo_table(rng, 10 + rng.below(90), 3);
        for (size_t i = 0; i < real.schema.size(); ++i) {
            for (size_t j = i + 1; j < real.schema.size(); ++j) {
                expect_close(synthtab::pair_trend_similarity(real, synth, i, j),
                             oracle::pair_trend_similarity(real, synth, i, j),
                             "pair_trend #" + std::to_string(inst));
            }
        }

        const auto d = synthtab::dcr(real, synth);
        const auto d_oracle = dcr_distances(real, synth);
        for (size_t i = 0; i < d.distances.size(); ++i) {
            expect_close(d.distances[i], d_oracle[i], "dcr #" + std::to_string(inst));
        }
        const auto r = synthtab::nndr(real, synth);
        const auto r_oracle = nndr_ratios(real, synth);
        for (size_t i = 0; i < r.ratios.size(); ++i) {
            expect_close(r.ratios[i], r_oracle[i], "nndr #" + std::to_string(inst));
        }
        expect_close(synthtab::grid_overlap(real, synth, 0.05),
                     oracle::grid_overlap(real, synth, 0.05), "grid_overlap #" + std::to_string(inst));

        const size_t n = 10 + rng.below(90);
        std::vector<int> truth(n), preds(n);
        for (size_t i = 0; i < n; ++i) {
            truth[i] = static_cast<int>(rng.below(3));
            preds[i] = static_cast<int>(rng.below(3));
        }
        const auto report = synthtab::evaluate(preds, truth, {"a", "b", "c"});
        const auto simple = classification_metrics(preds, truth, 3);
        expect_close(report.accuracy, simple.accuracy, "accuracy #" + std::to_string(inst));
        for (size_t c = 0; c < 3; ++c) {
            expect_close(report.per_class[c].precision, simple.precision[c],
                         "precision #" + std::to_string(inst));
            expect_close(report.per_class[c].recall, simple.recall[c],
                         "recall #" + std::to_string(inst));
            expect_close(report.per_class[c].f1, simple.f1[c], "f1 #" + std::to_string(inst));
        }
    }
    return failures;
}

} // namespace synthtab::oracle
