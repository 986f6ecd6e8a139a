#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synthtab/config.hpp"
#include "synthtab/fidelity.hpp"
#include "synthtab/privacy.hpp"
#include "synthtab/svg.hpp"
#include "synthtab/tvae.hpp"
#include "synthtab/utility_eval.hpp"

namespace synthtab {

inline constexpr const char* kToolVersion = "0.1.0";

struct Provenance {
    std::string tool_version = kToolVersion;
    uint64_t config_hash = 0;
    bool fast = false;
    uint64_t train_seed = 0, split_seed = 0, sample_seed = 0;
    size_t real_rows = 0, train_rows = 0, holdout_rows = 0, synth_rows = 0;
    size_t generator_train_rows = 0; // rows the generator actually saw (fast subsample)
};

struct ReportBundle {
    FidelityReport fidelity;
    UtilityRun trtr_run;
    UtilityRun tstr_run;
    PrivacyReport privacy;
    LossTrace trace;
    GeoSeries geo_real;  // scatter series for the side-by-side figure
    GeoSeries geo_synth; // empty when no synthetic rows exist
    Provenance provenance;
    std::vector<std::string> notes;
};

struct StagePaths {
    std::string processed_csv, sidecar, train_csv, holdout_csv, synthetic_csv, model_file;
    std::string reports_dir, series_dir, figures_dir;

    static StagePaths for_config(const PipelineConfig& cfg);
};

// Each stage reads its inputs from the output directory and leaves its
// artifacts there, so the subcommands compose: prepare -> train -> sample ->
// evaluate. `report` chains all four.
void stage_prepare(const PipelineConfig& cfg);
LossTrace stage_train(const PipelineConfig& cfg, bool fast);
void stage_sample(const PipelineConfig& cfg, size_t rows_override);
ReportBundle stage_evaluate(const PipelineConfig& cfg, bool fast);
ReportBundle run_report(const PipelineConfig& cfg, bool fast, size_t rows_override);
void stage_anonymize(const PipelineConfig& cfg);

// figure + series emission for a complete bundle; returns the files written
std::vector<std::string> emit_bundle(const ReportBundle& bundle, const PipelineConfig& cfg);

// deterministic uniform subsample, original row order preserved
DataTable subsample_rows(const DataTable& table, size_t max_rows, uint64_t seed);

void write_text_file(const std::string& path, const std::string& content);

} // namespace synthtab
