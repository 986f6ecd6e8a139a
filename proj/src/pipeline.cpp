#include "synthtab/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "synthtab/anonymize.hpp"
#include "synthtab/errors.hpp"
#include "synthtab/rng.hpp"
#include "synthtab/svg.hpp"

namespace synthtab {

namespace fs = std::filesystem;

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

nlohmann::json schema_to_json(const DataTable& table) {
    nlohmann::json cols = nlohmann::json::array();
    for (size_t ci = 0; ci < table.schema.size(); ++ci) {
        const auto& desc = table.schema.columns[ci];
        nlohmann::json col{{"name", desc.name},
                           {"kind", desc.kind == ColumnKind::Continuous ? "continuous"
                                                                        : "categorical"},
                           {"unit", desc.unit}};
        if (desc.kind == ColumnKind::Categorical) col["codes"] = table.code_maps[ci];
        cols.push_back(std::move(col));
    }
    return cols;
}

std::pair<TableSchema, std::vector<std::vector<std::string>>> schema_from_json(
    const nlohmann::json& cols) {
    TableSchema schema;
    std::vector<std::vector<std::string>> code_maps;
    for (const auto& col : cols) {
        ColumnDesc desc;
        desc.name = col.at("name").get<std::string>();
        desc.unit = col.value("unit", "");
        const std::string kind = col.at("kind").get<std::string>();
        desc.kind = kind == "continuous" ? ColumnKind::Continuous : ColumnKind::Categorical;
        schema.columns.push_back(desc);
        code_maps.push_back(desc.kind == ColumnKind::Categorical
                                ? col.at("codes").get<std::vector<std::string>>()
                                : std::vector<std::string>{});
    }
    return {schema, code_maps};
}

DataTable load_table(const std::string& csv_path, const std::string& sidecar_path) {
    const nlohmann::json sidecar = nlohmann::json::parse(read_text_file(sidecar_path));
    auto [schema, code_maps] = schema_from_json(sidecar.at("schema"));
    return read_csv(csv_path, schema, code_maps);
}

} // namespace

StagePaths StagePaths::for_config(const PipelineConfig& cfg) {
    StagePaths p;
    p.processed_csv = cfg.out_dir + "/processed.csv";
    p.sidecar = cfg.out_dir + "/sidecar.json";
    p.train_csv = cfg.out_dir + "/train.csv";
    p.holdout_csv = cfg.out_dir + "/holdout.csv";
    p.synthetic_csv = cfg.out_dir + "/synthetic.csv";
    p.model_file = cfg.resolved_model_file();
    p.reports_dir = cfg.out_dir + "/reports";
    p.series_dir = cfg.out_dir + "/series";
    p.figures_dir = cfg.out_dir + "/figures";
    return p;
}

DataTable subsample_rows(const DataTable& table, size_t max_rows, uint64_t seed) {
    const size_t n = table.rows();
    if (n <= max_rows) return table;
    std::vector<size_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);
    Rng rng(mix_key(seed, 0x73756273));
    for (size_t i = 0; i < max_rows; ++i) {
        const size_t j = i + rng.below(n - i);
        std::swap(indices[i], indices[j]);
    }
    indices.resize(max_rows);
    std::sort(indices.begin(), indices.end());
    return table.take(indices);
}

void stage_prepare(const PipelineConfig& cfg) {
    const StagePaths paths = StagePaths::for_config(cfg);
    fs::create_directories(cfg.out_dir);
    fs::create_directories(paths.reports_dir);
    fs::create_directories(paths.series_dir);
    fs::create_directories(paths.figures_dir);

    DataTable table;
    size_t raw_rows = 0, rejected = 0;
    if (cfg.source == "surrogate") {
        table = generate_surrogate(cfg.surrogate_rows, cfg.surrogate_seed);
        raw_rows = table.rows();
    } else {
        const RawTable raw = load_csv(cfg.raw_csv, cfg.mapping);
        raw_rows = raw.raw_rows;
        rejected = raw.rejected_rows;
        table = reduce_features(raw, cfg.mapping);
    }
    auto [train_table, holdout_table] = split(table, cfg.holdout_fraction, cfg.split_seed);

    write_csv(table, paths.processed_csv);
    write_csv(train_table, paths.train_csv);
    write_csv(holdout_table, paths.holdout_csv);

    nlohmann::json sidecar{{"schema", schema_to_json(table)},
                           {"source", cfg.source},
                           {"rows",
                            {{"raw", raw_rows},
                             {"rejected", rejected},
                             {"processed", table.rows()},
                             {"train", train_table.rows()},
                             {"holdout", holdout_table.rows()}}}};
    write_json_file(paths.sidecar, sidecar);
}

namespace {

nlohmann::json trace_to_json(const LossTrace& trace) {
    return nlohmann::json{{"epochs", trace.total.size()},
                          {"total", trace.total},
                          {"reconstruction", trace.reconstruction},
                          {"kl", trace.kl}};
}

LossTrace trace_from_json(const nlohmann::json& j) {
    LossTrace trace;
    trace.total = j.at("total").get<std::vector<double>>();
    trace.reconstruction = j.at("reconstruction").get<std::vector<double>>();
    trace.kl = j.at("kl").get<std::vector<double>>();
    return trace;
}

} // namespace

LossTrace stage_train(const PipelineConfig& cfg, bool fast) {
    const StagePaths paths = StagePaths::for_config(cfg);
    if (!fs::exists(paths.processed_csv) || !fs::exists(paths.sidecar)) {
        throw ValidationError("train: processed data not found; run prepare first");
    }
    DataTable table = load_table(paths.processed_csv, paths.sidecar);

    TrainConfig train_cfg = cfg.train;
    if (fast) {
        train_cfg.epochs = std::min<size_t>(train_cfg.epochs, 50);
        table = subsample_rows(table, 20000, train_cfg.seed);
    }
    auto [model, trace] = train_tvae(table, train_cfg);
    save_model(model, paths.model_file);

    nlohmann::json trace_json = trace_to_json(trace);
    trace_json["generator_train_rows"] = table.rows();
    trace_json["fast"] = fast;
    write_json_file(paths.reports_dir + "/loss_trace.json", trace_json);
    return trace;
}

void stage_sample(const PipelineConfig& cfg, size_t rows_override) {
    const StagePaths paths = StagePaths::for_config(cfg);
    if (!fs::exists(paths.model_file)) {
        throw ValidationError("sample: model file not found: " + paths.model_file);
    }
    const TvaeModel model = load_model(paths.model_file);
    size_t n = rows_override ? rows_override : cfg.sample_rows;
    if (n == 0) {
        const nlohmann::json sidecar = nlohmann::json::parse(read_text_file(paths.sidecar));
        n = sidecar.at("rows").at("processed").get<size_t>();
    }
    const DataTable synth = sample(model, n, cfg.sample_seed);
    write_csv(synth, paths.synthetic_csv);
}

namespace {

void write_series_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    const size_t rows = columns.empty() ? 0 : columns[0].size();
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < columns.size(); ++c) {
            if (c) out += ',';
            out += format_double(columns[c][r]);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

void write_correlation_csv(const std::string& path, const CorrelationResult& corr) {
    std::string out = "column";
    for (const auto& c : corr.columns) out += "," + c;
    out += '\n';
    for (size_t i = 0; i < corr.columns.size(); ++i) {
        out += corr.columns[i];
        for (size_t j = 0; j < corr.columns.size(); ++j) {
            out += "," + format_double(corr.values.at(i, j));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

void write_confusion_csv(const std::string& path,
                         const std::vector<std::vector<size_t>>& confusion,
                         const std::vector<std::string>& labels) {
    std::string out = "truth\\predicted";
    for (size_t j = 0; j < confusion.size(); ++j) {
        out += "," + (j < labels.size() ? labels[j] : "class_" + std::to_string(j));
    }
    out += '\n';
    for (size_t i = 0; i < confusion.size(); ++i) {
        out += i < labels.size() ? labels[i] : "class_" + std::to_string(i);
        for (size_t j = 0; j < confusion[i].size(); ++j) {
            out += "," + std::to_string(confusion[i][j]);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

void write_geo_csv(const std::string& path, const GeoSeries& series) {
    std::string out = "latitude,longitude,road_encoded\n";
    for (size_t r = 0; r < series.latitude.size(); ++r) {
        out += format_double(series.latitude[r]) + "," + format_double(series.longitude[r]) +
               "," + std::to_string(series.road_class[r]) + "\n";
    }
    write_text_file(path, out);
}

GeoSeries make_geo_series(const DataTable& table, const std::string& title, double slope,
                          double intercept) {
    GeoSeries s;
    s.latitude = table.continuous("latitude");
    s.longitude = table.continuous("longitude");
    s.road_class = table.categorical("road_encoded");
    s.title = title;
    s.slope = slope;
    s.intercept = intercept;
    return s;
}

} // namespace

std::vector<std::string> emit_bundle(const ReportBundle& bundle, const PipelineConfig& cfg) {
    const StagePaths paths = StagePaths::for_config(cfg);
    fs::create_directories(paths.reports_dir);
    fs::create_directories(paths.series_dir);
    fs::create_directories(paths.figures_dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& path, const std::string& content) {
        write_text_file(path, content);
        written.push_back(path);
    };

    // reports
    write_json_file(paths.reports_dir + "/fidelity.json", fidelity_to_json(bundle.fidelity));
    written.push_back(paths.reports_dir + "/fidelity.json");
    nlohmann::json utility{{"trtr", utility_run_to_json(bundle.trtr_run)},
                           {"tstr", utility_run_to_json(bundle.tstr_run)}};
    write_json_file(paths.reports_dir + "/utility.json", utility);
    written.push_back(paths.reports_dir + "/utility.json");
    write_json_file(paths.reports_dir + "/privacy.json", privacy_to_json(bundle.privacy));
    written.push_back(paths.reports_dir + "/privacy.json");

    const auto& prov = bundle.provenance;
    nlohmann::json bundle_json{
        {"tool_version", prov.tool_version},
        {"config_hash", prov.config_hash},
        {"fast_profile", prov.fast},
        {"seeds",
         {{"train", prov.train_seed}, {"split", prov.split_seed}, {"sample", prov.sample_seed}}},
        {"rows",
         {{"real", prov.real_rows},
          {"train", prov.train_rows},
          {"holdout", prov.holdout_rows},
          {"synthetic", prov.synth_rows},
          {"generator_train", prov.generator_train_rows}}},
        {"scores",
         {{"fidelity_overall", bundle.fidelity.overall},
          {"column_shapes", bundle.fidelity.column_shapes_score},
          {"column_pair_trends", bundle.fidelity.column_pair_trends_score},
          {"trtr_best_accuracy",
           bundle.trtr_run.entries[bundle.trtr_run.best_index].report.accuracy},
          {"tstr_best_accuracy",
           bundle.tstr_run.entries[bundle.tstr_run.best_index].report.accuracy},
          {"dcr_p5", bundle.privacy.dcr.p5},
          {"nndr_median", bundle.privacy.nndr.median},
          {"grid_jaccard", bundle.privacy.grid_jaccard}}},
        {"notes", bundle.notes}};
    write_json_file(paths.reports_dir + "/bundle.json", bundle_json);
    written.push_back(paths.reports_dir + "/bundle.json");

    // series
    for (const auto& overlay : bundle.fidelity.kde_overlays) {
        write_series_csv(paths.series_dir + "/kde_" + overlay.column + ".csv",
                         {"grid", "real_density", "synthetic_density"},
                         {overlay.grid, overlay.real_density, overlay.synth_density});
        written.push_back(paths.series_dir + "/kde_" + overlay.column + ".csv");
    }
    write_correlation_csv(paths.series_dir + "/correlation_real.csv",
                          bundle.fidelity.correlation_real);
    written.push_back(paths.series_dir + "/correlation_real.csv");
    write_correlation_csv(paths.series_dir + "/correlation_synthetic.csv",
                          bundle.fidelity.correlation_synth);
    written.push_back(paths.series_dir + "/correlation_synthetic.csv");
    if (!bundle.trace.total.empty()) {
        std::vector<double> epochs(bundle.trace.total.size());
        std::iota(epochs.begin(), epochs.end(), 0.0);
        write_series_csv(paths.series_dir + "/loss_trace.csv",
                         {"epoch", "total", "reconstruction", "kl"},
                         {epochs, bundle.trace.total, bundle.trace.reconstruction,
                          bundle.trace.kl});
        written.push_back(paths.series_dir + "/loss_trace.csv");
    }

    const auto& trtr_best = bundle.trtr_run.entries[bundle.trtr_run.best_index].report;
    const auto& tstr_best = bundle.tstr_run.entries[bundle.tstr_run.best_index].report;
    std::vector<std::string> class_labels;
    for (const auto& m : trtr_best.per_class) class_labels.push_back(m.label);
    write_confusion_csv(paths.series_dir + "/confusion_trtr.csv", trtr_best.confusion,
                        class_labels);
    written.push_back(paths.series_dir + "/confusion_trtr.csv");
    write_confusion_csv(paths.series_dir + "/confusion_tstr.csv", tstr_best.confusion,
                        class_labels);
    written.push_back(paths.series_dir + "/confusion_tstr.csv");

    // figures
    for (const auto& overlay : bundle.fidelity.kde_overlays) {
        emit(paths.figures_dir + "/kde_" + overlay.column + ".svg", render_kde_figure(overlay));
    }
    emit(paths.figures_dir + "/correlation_real.svg",
         render_heatmap_figure("Correlation (real)", bundle.fidelity.correlation_real));
    emit(paths.figures_dir + "/correlation_synthetic.svg",
         render_heatmap_figure("Correlation (synthetic)", bundle.fidelity.correlation_synth));
    emit(paths.figures_dir + "/confusion_trtr.svg",
         render_confusion_figure("Train real / test real (best model)", trtr_best.confusion,
                                 class_labels));
    emit(paths.figures_dir + "/confusion_tstr.svg",
         render_confusion_figure("Train synthetic / test real (best model)",
                                 tstr_best.confusion, class_labels));
    if (!bundle.trace.total.empty()) {
        emit(paths.figures_dir + "/loss_curve.svg",
             render_loss_figure(bundle.trace.total, bundle.trace.reconstruction,
                                bundle.trace.kl));
    }

    // the geographic comparison needs synthetic rows; its omission is noted
    // in the bundle by the caller
    if (!bundle.geo_synth.latitude.empty()) {
        write_geo_csv(paths.series_dir + "/geo_real.csv", bundle.geo_real);
        written.push_back(paths.series_dir + "/geo_real.csv");
        write_geo_csv(paths.series_dir + "/geo_synthetic.csv", bundle.geo_synth);
        written.push_back(paths.series_dir + "/geo_synthetic.csv");
        emit(paths.figures_dir + "/geographic.svg",
             render_geo_figure(bundle.geo_real, bundle.geo_synth));
    }
    return written;
}

ReportBundle stage_evaluate(const PipelineConfig& cfg, bool fast) {
    const StagePaths paths = StagePaths::for_config(cfg);
    for (const std::string& required :
         {paths.processed_csv, paths.sidecar, paths.train_csv, paths.holdout_csv}) {
        if (!fs::exists(required)) {
            throw ValidationError("evaluate: missing " + required + "; run prepare first");
        }
    }
    if (!fs::exists(paths.model_file)) {
        throw ValidationError("evaluate: model file not found: " + paths.model_file);
    }
    if (!fs::exists(paths.synthetic_csv)) {
        throw ValidationError("evaluate: synthetic data not found; run sample first");
    }

    const DataTable real_full = load_table(paths.processed_csv, paths.sidecar);
    const DataTable train_table = load_table(paths.train_csv, paths.sidecar);
    const DataTable holdout_table = load_table(paths.holdout_csv, paths.sidecar);
    const DataTable synth = load_table(paths.synthetic_csv, paths.sidecar);

    ReportBundle bundle;
    bundle.fidelity = compute_fidelity(real_full, synth);

    std::vector<ClassifierSpec> specs = cfg.classifier_specs;
    if (specs.empty()) {
        specs = {ClassifierSpec::knn(), ClassifierSpec::decision_tree(),
                 ClassifierSpec::boosted_trees()};
    }
    bundle.trtr_run = trtr(train_table, holdout_table, specs, "road_encoded");
    // classifiers fit on synthetic rows only, tested against the full real table
    bundle.tstr_run = tstr(synth, real_full, specs, "road_encoded");

    PrivacyThresholds thresholds;
    thresholds.min_endpoint_distance_m = cfg.min_endpoint_distance_m;
    thresholds.min_dcr_p5 = cfg.min_dcr_p5;
    bundle.privacy = compute_privacy(real_full, synth, cfg.grid_cell_degrees, thresholds);

    const std::string trace_path = paths.reports_dir + "/loss_trace.json";
    size_t generator_rows = 0;
    if (fs::exists(trace_path)) {
        const nlohmann::json j = nlohmann::json::parse(read_text_file(trace_path));
        bundle.trace = trace_from_json(j);
        generator_rows = j.value("generator_train_rows", size_t{0});
    }

    bundle.provenance.config_hash = cfg.semantic_hash();
    bundle.provenance.fast = fast;
    bundle.provenance.train_seed = cfg.train.seed;
    bundle.provenance.split_seed = cfg.split_seed;
    bundle.provenance.sample_seed = cfg.sample_seed;
    bundle.provenance.real_rows = real_full.rows();
    bundle.provenance.train_rows = train_table.rows();
    bundle.provenance.holdout_rows = holdout_table.rows();
    bundle.provenance.synth_rows = synth.rows();
    bundle.provenance.generator_train_rows = generator_rows;

    if (!bundle.privacy.dcr_floor_ok) {
        bundle.notes.push_back("privacy: DCR floor violated (exact matches or low 5th percentile)");
    }
    if (!bundle.privacy.endpoints_ok) {
        bundle.notes.push_back("privacy: a synthetic point sits at or inside the endpoint threshold");
    }

    bundle.geo_real = make_geo_series(real_full, "Real", bundle.privacy.geo_trend.real_slope,
                                      bundle.privacy.geo_trend.real_intercept);
    if (synth.rows() == 0) {
        bundle.notes.push_back("geographic figure omitted: synthetic table is empty");
    } else {
        bundle.geo_synth = make_geo_series(synth, "Synthetic",
                                           bundle.privacy.geo_trend.synth_slope,
                                           bundle.privacy.geo_trend.synth_intercept);
    }

    emit_bundle(bundle, cfg);
    return bundle;
}

ReportBundle run_report(const PipelineConfig& cfg, bool fast, size_t rows_override) {
    stage_prepare(cfg);
    stage_train(cfg, fast);
    size_t rows = rows_override;
    if (fast && rows == 0 && cfg.sample_rows == 0) {
        // fast profile keeps the synthetic table at the subsample scale
        const nlohmann::json sidecar = nlohmann::json::parse(
            read_text_file(StagePaths::for_config(cfg).sidecar));
        rows = std::min<size_t>(sidecar.at("rows").at("processed").get<size_t>(), 20000);
    }
    stage_sample(cfg, rows);
    return stage_evaluate(cfg, fast);
}

void stage_anonymize(const PipelineConfig& cfg) {
    if (!cfg.anonymize.enabled) {
        throw ValidationError("anonymize: config has no [anonymize] section");
    }
    const StagePaths paths = StagePaths::for_config(cfg);
    fs::create_directories(cfg.out_dir);
    fs::create_directories(paths.reports_dir);
    const TextTable input = read_csv_text(cfg.anonymize.input_csv);
    const RuleSet rules = parse_rules(cfg.anonymize.rule_lines);
    const TextTable anonymized = apply_rules(input, rules);
    const std::string out_path = cfg.anonymize.output_csv.empty()
                                     ? cfg.out_dir + "/anonymized.csv"
                                     : cfg.anonymize.output_csv;
    write_csv_text(anonymized, out_path);
    if (!cfg.anonymize.quasi_identifiers.empty()) {
        write_json_file(paths.reports_dir + "/anonymization.json",
                        anonymization_summary_json(anonymized, cfg.anonymize.quasi_identifiers,
                                                   cfg.anonymize.sensitive_column));
    }
}

} // namespace synthtab
