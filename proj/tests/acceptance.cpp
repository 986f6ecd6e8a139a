// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Criterion 5 needs the public vehicular sensor dataset and is skipped unless
// SYNTHTAB_PVS_CSV (or SYNTHTAB_PVS_CONFIG) is set; see README.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <vector>

#include "synthtab/anonymize.hpp"
#include "synthtab/config.hpp"
#include "synthtab/gmm.hpp"
#include "synthtab/ingest.hpp"
#include "synthtab/oracle.hpp"
#include "synthtab/pipeline.hpp"
#include "synthtab/taxonomy.hpp"
#include "synthtab/tvae.hpp"

using namespace synthtab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int id;
    std::string name;
    bool skipped = false;
    bool passed = false;
    std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int decimals = 4) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(decimals);
    s << v;
    return s.str();
}

double mean_of(const std::vector<double>& v, size_t from, size_t count) {
    double acc = 0.0;
    for (size_t i = from; i < from + count; ++i) acc += v[i];
    return acc / static_cast<double>(count);
}

double std_of(const std::vector<double>& v, size_t from, size_t count) {
    const double m = mean_of(v, from, count);
    double acc = 0.0;
    for (size_t i = from; i < from + count; ++i) acc += (v[i] - m) * (v[i] - m);
    return std::sqrt(acc / static_cast<double>(count - 1));
}

std::string fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "synthtab_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome criterion_oracles() {
    Outcome out{1, "oracle equivalence suite"};
    const auto start = std::chrono::steady_clock::now();
    const auto failures = oracle::run_selfcheck(424242, 50);
    const double elapsed = seconds_since(start);
    if (!failures.empty()) {
        out.detail = std::to_string(failures.size()) + " mismatches, first: " + failures[0];
        return out;
    }
    if (elapsed >= 10.0) {
        out.detail = "oracles agreed but took " + fmt(elapsed, 1) + "s (budget 10s)";
        return out;
    }
    out.passed = true;
    out.detail = "50 instances within 1e-9 in " + fmt(elapsed, 2) + "s";
    return out;
}

Outcome criterion_gradients() {
    Outcome out{2, "gradient correctness"};
    const auto start = std::chrono::steady_clock::now();
    Rng rng(777);
    double worst = 0.0;
    int checked = 0;
    uint64_t attempt = 0;
    while (checked < 20) {
        ++attempt;
        const DataTable table = generate_surrogate(48, 1000 + attempt);
        TrainConfig cfg;
        cfg.encoder_widths = {4 + rng.below(6), 4 + rng.below(6)};
        cfg.decoder_widths = {4 + rng.below(6), 4 + rng.below(6)};
        cfg.embedding_dim = 2 + rng.below(5);
        cfg.gmm_components = 2 + rng.below(2);
        cfg.loss_factor = 2.0;
        cfg.seed = 5000 + attempt;
        TvaeModel model = init_model(table, cfg);

        const Matrix encoded = apply(model.transformer, table, ModeAssignment::Argmax);
        Matrix batch(8, encoded.cols);
        for (size_t r = 0; r < 8; ++r) {
            const size_t src = rng.below(encoded.rows);
            std::copy(encoded.row(src).begin(), encoded.row(src).end(), batch.row(r).begin());
        }
        Matrix noise(8, cfg.embedding_dim);
        for (double& v : noise.data) v = rng.normal();

        // the loss is only differentiable away from ReLU kinks; resample
        // configurations whose pre-activations sit inside the probe radius
        if (min_relu_preactivation_gap(model, batch, noise) <= 2e-4) continue;

        const TvaeStep step = loss_and_gradients(model, batch, noise);

        // central differences on a loss of this magnitude resolve ~1e-10;
        // a nonzero analytic entry below 1e-6 cannot be probed informatively
        // (structural zeros are fine: their difference quotient is exactly 0)
        double min_nonzero = 1e300;
        for (const auto& g : step.grads) {
            for (double v : g) {
                if (v != 0.0) min_nonzero = std::min(min_nonzero, std::abs(v));
            }
        }
        if (min_nonzero < 1e-6) continue;

        auto params = model_params(model);
        auto loss = [&]() { return loss_only(model, batch, noise); };
        worst = std::max(worst, gradient_check(loss, params, step.grads, 1e-5));
        ++checked;
        if (worst > 1e-4) break;
    }
    const double elapsed = seconds_since(start);
    if (worst > 1e-4) {
        out.detail = "max relative error " + fmt(worst, 8) + " exceeds 1e-4";
        return out;
    }
    if (elapsed >= 60.0) {
        out.detail = "gradients fine but took " + fmt(elapsed, 1) + "s (budget 60s)";
        return out;
    }
    out.passed = true;
    out.detail = "20 configurations, max relative error " + fmt(worst, 8) + ", " +
                 fmt(elapsed, 2) + "s";
    return out;
}

Outcome criterion_em() {
    Outcome out{3, "EM monotonicity and recovery"};
    for (uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(mix_key(9000, seed));
        std::vector<double> values;
        const size_t clusters = 2 + rng.below(3);
        const size_t n = 400 + rng.below(800);
        std::vector<double> centers;
        for (size_t c = 0; c < clusters; ++c) centers.push_back(rng.uniform(-50.0, 50.0));
        for (size_t i = 0; i < n; ++i) {
            const size_t c = rng.below(clusters);
            values.push_back(centers[c] + rng.normal() * (0.3 + 0.4 * static_cast<double>(c)));
        }
        GmmFitOptions opts;
        opts.k = 5;
        opts.seed = seed;
        const GmmFitResult result = fit_gmm_traced(values, opts);
        for (size_t i = 1; i < result.log_likelihoods.size(); ++i) {
            const double prev = result.log_likelihoods[i - 1];
            if (result.log_likelihoods[i] < prev - 1e-9 * (1.0 + std::abs(prev))) {
                out.detail = "log-likelihood decreased at seed " + std::to_string(seed) +
                             ", iteration " + std::to_string(i);
                return out;
            }
        }
    }

    // two unit-variance clusters at 0 and 100
    Rng rng(31415);
    std::vector<double> sample;
    for (size_t i = 0; i < 5000; ++i) {
        sample.push_back((i % 2 ? 100.0 : 0.0) + rng.normal());
    }
    GmmFitOptions opts;
    opts.k = 2;
    opts.seed = 3;
    const GmmParams p = fit_gmm(sample, opts);
    const size_t lo = p.means[0] < p.means[1] ? 0 : 1;
    const bool recovered = std::abs(p.means[lo]) < 0.5 && std::abs(p.means[1 - lo] - 100.0) < 0.5 &&
                           std::abs(p.weights[lo] - 0.5) < 0.05 &&
                           std::abs(p.weights[1 - lo] - 0.5) < 0.05;
    if (!recovered) {
        out.detail = "two-cluster recovery out of tolerance: means (" + fmt(p.means[lo]) + ", " +
                     fmt(p.means[1 - lo]) + "), weights (" + fmt(p.weights[lo]) + ", " +
                     fmt(p.weights[1 - lo]) + ")";
        return out;
    }
    out.passed = true;
    out.detail = "50 seeded runs monotone; two-cluster recovery within tolerance";
    return out;
}

PipelineConfig convergence_config(const std::string& out_dir) {
    PipelineConfig cfg = PipelineConfig::from_text(R"(
[paths]
source = "surrogate"

[surrogate]
rows = 20000
seed = 7

[train]
epochs = 50
batch_size = 500
seed = 42

[split]
fraction = 0.2
seed = 17

[sample]
seed = 99
rows = 0

[classifiers]
specs = ["knn", "tree", "boost"]
boost_rounds = 25

[privacy]
grid_cell_degrees = 0.001
)");
    cfg.out_dir = out_dir;
    return cfg;
}

Outcome criterion_convergence(ReportBundle& bundle_out, bool& bundle_ready) {
    Outcome out{4, "training convergence shape"};
    const auto start = std::chrono::steady_clock::now();
    PipelineConfig cfg = convergence_config(fresh_dir("convergence"));
    const ReportBundle bundle = run_report(cfg, /*fast=*/true, /*rows=*/0);
    const double elapsed = seconds_since(start);

    const auto& total = bundle.trace.total;
    if (total.size() != 50) {
        out.detail = "expected 50 epochs, got " + std::to_string(total.size());
        return out;
    }
    const double first_mean = mean_of(total, 0, 10);
    const double last_mean = mean_of(total, total.size() - 10, 10);
    const double first_std = std_of(total, 0, 10);
    const double last_std = std_of(total, total.size() - 10, 10);
    bundle_out = bundle;
    bundle_ready = true;
    if (!(last_mean < first_mean && last_std < first_std)) {
        out.detail = "loss did not settle: first mean " + fmt(first_mean) + " / last mean " +
                     fmt(last_mean) + ", first std " + fmt(first_std) + " / last std " +
                     fmt(last_std);
        return out;
    }
    if (elapsed >= 600.0) {
        out.detail = "converged but took " + fmt(elapsed, 1) + "s (budget 600s)";
        return out;
    }
    out.passed = true;
    out.detail = "mean " + fmt(first_mean) + " -> " + fmt(last_mean) + ", std " +
                 fmt(first_std) + " -> " + fmt(last_std) + ", " + fmt(elapsed, 1) + "s";
    return out;
}

Outcome criterion_pvs() {
    Outcome out{5, "published-score bands on the real dataset (extended)"};
    const char* pvs_csv = std::getenv("SYNTHTAB_PVS_CSV");
    const char* pvs_config = std::getenv("SYNTHTAB_PVS_CONFIG");
    if (!pvs_csv && !pvs_config) {
        out.skipped = true;
        out.detail = "set SYNTHTAB_PVS_CSV (and optionally SYNTHTAB_PVS_CONFIG) to enable";
        return out;
    }
    const bool full = std::getenv("SYNTHTAB_PVS_FULL") != nullptr;

    PipelineConfig cfg;
    if (pvs_config) {
        cfg = PipelineConfig::from_file(pvs_config);
    } else {
        cfg.source = "csv";
        cfg.raw_csv = pvs_csv;
    }
    if (pvs_csv) cfg.raw_csv = pvs_csv;
    cfg.out_dir = fresh_dir("pvs");
    cfg.validate();

    const ReportBundle bundle = run_report(cfg, /*fast=*/!full, /*rows=*/0);
    const double trtr_best = bundle.trtr_run.entries[bundle.trtr_run.best_index].report.accuracy;
    const double tstr_best = bundle.tstr_run.entries[bundle.tstr_run.best_index].report.accuracy;
    const double fidelity = bundle.fidelity.overall;

    const double fidelity_floor = full ? 0.85 : 0.75;
    const double tstr_lo = full ? 0.60 : 0.50;
    const double tstr_hi = 0.90;
    const bool ok = trtr_best >= 0.95 && fidelity >= fidelity_floor && tstr_best >= tstr_lo &&
                    tstr_best <= tstr_hi;
    out.passed = ok;
    out.detail = std::string(full ? "full" : "fast") + " profile: trtr " + fmt(trtr_best) +
                 " (>=0.95), fidelity " + fmt(fidelity) + " (>=" + fmt(fidelity_floor, 2) +
                 "), tstr " + fmt(tstr_best) + " (in [" + fmt(tstr_lo, 2) + ", " +
                 fmt(tstr_hi, 2) + "])";
    return out;
}

Outcome criterion_privacy(const ReportBundle& bundle, bool bundle_ready) {
    Outcome out{6, "privacy floor on the trained run"};
    if (!bundle_ready) {
        out.detail = "no trained bundle available (criterion 4 failed earlier)";
        return out;
    }
    const auto& p = bundle.privacy;
    std::vector<std::string> violations;
    if (p.dcr.exact_matches != 0) {
        violations.push_back("exact matches: " + std::to_string(p.dcr.exact_matches));
    }
    if (!(p.dcr.p5 > 0.0)) violations.push_back("5th-percentile DCR not positive");
    if (!(p.geo_trend.relative_slope_difference <= 0.15)) {
        violations.push_back("slope difference " + fmt(p.geo_trend.relative_slope_difference));
    }
    if (!(p.endpoints.start_m > 0.0) || !(p.endpoints.end_m > 0.0)) {
        violations.push_back("an endpoint is exactly reproduced");
    }
    if (!violations.empty()) {
        out.detail = violations[0];
        for (size_t i = 1; i < violations.size(); ++i) out.detail += "; " + violations[i];
        return out;
    }
    out.passed = true;
    out.detail = "0 exact matches, dcr p5 " + fmt(p.dcr.p5, 5) + ", slope diff " +
                 fmt(p.geo_trend.relative_slope_difference, 4) + ", endpoints " +
                 fmt(p.endpoints.start_m, 1) + "m / " + fmt(p.endpoints.end_m, 1) + "m";
    return out;
}

Outcome criterion_golden() {
    Outcome out{7, "golden files: anonymization table and signal registry"};
    TextTable original;
    original.header = {"Age", "Sex", "ZIP", "Disease"};
    original.rows = {{"28", "F", "23467", "Cancer"},
                     {"17", "M", "12345", "Heart Disease"},
                     {"34", "M", "65490", "Flu"},
                     {"41", "M", "84933", "Bronchitis"}};
    const RuleSet rules = parse_rules({"Age: bins 10,30,50", "Sex: suppress_when Age=10--29",
                                       "ZIP: suppress", "Disease: keep"});
    const std::string got = csv_text_to_string(apply_rules(original, rules));
    const std::string want =
        "Age,Sex,ZIP,Disease\n"
        "10--29,*,*,Cancer\n"
        "10--29,*,*,Heart Disease\n"
        "30--49,M,*,Flu\n"
        "30--49,M,*,Bronchitis\n";
    if (got != want) {
        out.detail = "anonymized table bytes diverge";
        return out;
    }

    const TaxonomyRegistry registry = TaxonomyRegistry::builtin();
    const struct {
        const char* name;
        Priority priority;
    } expected[14] = {
        {"GPS Data", Priority::High},
        {"Camera Data", Priority::High},
        {"Bluetooth/Wi-Fi Data", Priority::High},
        {"Cellular Data", Priority::High},
        {"Engine Control Unit Data", Priority::Medium},
        {"CAN Bus Data", Priority::Medium},
        {"On-Board Diagnostic Data", Priority::Medium},
        {"Infotainment System Data", Priority::Medium},
        {"Human-Machine Interface Data", Priority::Medium},
        {"Accelerometer/Gyroscope Data", Priority::Medium},
        {"Battery Management System Data", Priority::Medium},
        {"Lidar/Radar Data", Priority::Low},
        {"Temperature Data", Priority::Low},
        {"Energy Consumption Data", Priority::Low},
    };
    const auto& signals = registry.signals();
    if (signals.size() != 14) {
        out.detail = "registry has " + std::to_string(signals.size()) + " rows, expected 14";
        return out;
    }
    for (size_t i = 0; i < 14; ++i) {
        if (signals[i].name != expected[i].name || signals[i].priority != expected[i].priority) {
            out.detail = "registry row " + std::to_string(i) + " diverges: " + signals[i].name;
            return out;
        }
    }
    if (registry.list(Priority::High).size() != 4 || registry.list(Priority::Medium).size() != 7 ||
        registry.list(Priority::Low).size() != 3) {
        out.detail = "priority filter counts are not 4/7/3";
        return out;
    }
    out.passed = true;
    out.detail = "anonymization bytes exact; 14 registry rows with 4/7/3 priorities";
    return out;
}

Outcome criterion_determinism() {
    Outcome out{8, "end-to-end determinism"};
    auto make_cfg = [](const std::string& out_dir) {
        PipelineConfig cfg = PipelineConfig::from_text(R"(
[paths]
source = "surrogate"

[surrogate]
rows = 600
seed = 11

[train]
epochs = 3
batch_size = 200
encoder = [24, 24]
decoder = [24, 24]
embedding = 12
gmm_components = 4
seed = 5

[split]
fraction = 0.2
seed = 2

[sample]
rows = 500
seed = 31

[classifiers]
specs = ["knn", "tree", "boost"]
boost_rounds = 10

[privacy]
grid_cell_degrees = 0.001
)");
        cfg.out_dir = out_dir;
        return cfg;
    };
    const std::string dir_a = fresh_dir("det_a");
    const std::string dir_b = fresh_dir("det_b");
    run_report(make_cfg(dir_a), false, 0);
    run_report(make_cfg(dir_b), false, 0);

    size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), dir_a).string();
        const std::string other = dir_b + "/" + rel;
        if (!fs::exists(other)) {
            out.detail = rel + " missing from the second run";
            return out;
        }
        if (slurp(entry.path().string()) != slurp(other)) {
            out.detail = rel + " differs between runs";
            return out;
        }
        ++files;
    }
    out.passed = true;
    out.detail = std::to_string(files) + " files byte-identical across two runs";
    return out;
}

} // namespace

int main() {
    std::vector<Outcome> results;
    ReportBundle trained_bundle;
    bool bundle_ready = false;

    results.push_back(criterion_oracles());
    results.push_back(criterion_gradients());
    results.push_back(criterion_em());
    results.push_back(criterion_convergence(trained_bundle, bundle_ready));
    results.push_back(criterion_pvs());
    results.push_back(criterion_privacy(trained_bundle, bundle_ready));
    results.push_back(criterion_golden());
    results.push_back(criterion_determinism());

    bool any_failed = false;
    for (const auto& r : results) {
        const char* status = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
        if (!r.skipped && !r.passed) any_failed = true;
        std::cout << "criterion " << r.id << " (" << r.name << "): " << status << " - "
                  << r.detail << "\n";
    }
    return any_failed ? 1 : 0;
}
