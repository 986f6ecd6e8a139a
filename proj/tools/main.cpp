#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "synthtab/errors.hpp"
#include "synthtab/oracle.hpp"
#include "synthtab/pipeline.hpp"
#include "synthtab/taxonomy.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string out_override;
    long long seed_override = -1;
    long long rows = 0;
    bool fast = false;
};

synthtab::PipelineConfig load_config(const GlobalFlags& flags) {
    synthtab::PipelineConfig cfg = synthtab::PipelineConfig::from_file(flags.config_path);
    if (!flags.out_override.empty()) cfg.out_dir = flags.out_override;
    if (flags.seed_override >= 0) {
        cfg.train.seed = static_cast<uint64_t>(flags.seed_override);
    }
    cfg.validate();
    return cfg;
}

void attach_common(CLI::App* cmd, GlobalFlags& flags, bool with_rows = false) {
    cmd->add_option("--config", flags.config_path, "pipeline configuration file")->required();
    cmd->add_option("--out", flags.out_override, "output directory override");
    cmd->add_option("--seed", flags.seed_override, "training seed override");
    cmd->add_flag("--fast", flags.fast, "CI profile: 50 epochs, 20k-row subsample");
    if (with_rows) {
        cmd->add_option("--rows", flags.rows, "synthetic sample count (default: real row count)");
    }
}

void print_error(const std::string& type, const std::string& message) {
    const nlohmann::json err{{"error", message}, {"type", type}};
    std::cerr << err.dump() << "\n";
}

int run_taxonomy(const std::string& priority, const std::string& category,
                 const std::string& registry_path, bool as_json) {
    const synthtab::TaxonomyRegistry registry =
        registry_path.empty() ? synthtab::TaxonomyRegistry::builtin()
                              : synthtab::TaxonomyRegistry::from_file(registry_path);
    std::optional<synthtab::Priority> pf;
    std::optional<synthtab::SignalCategory> cf;
    if (!priority.empty()) pf = synthtab::priority_from_string(priority);
    if (!category.empty()) cf = synthtab::category_from_string(category);
    const auto records = registry.list(pf, cf);
    if (as_json) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& rec : records) {
            arr.push_back({{"name", rec.name},
                           {"source", rec.source},
                           {"category", synthtab::to_string(rec.category)},
                           {"priority", synthtab::to_string(rec.priority)},
                           {"leakage", rec.leakage}});
        }
        std::cout << arr.dump(2) << "\n";
    } else {
        size_t name_w = 6;
        for (const auto& rec : records) name_w = std::max(name_w, rec.name.size());
        for (const auto& rec : records) {
            std::string pad(name_w - rec.name.size(), ' ');
            std::cout << rec.name << pad << "  " << synthtab::to_string(rec.priority) << "  ("
                      << synthtab::to_string(rec.category) << ")\n";
        }
        std::cout << records.size() << " signal(s)\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthtab: privacy-preserving synthetic vehicular sensor data"};
    app.require_subcommand(1);

    GlobalFlags flags;
    std::string tax_priority, tax_category, tax_registry;
    bool tax_json = false;

    CLI::App* prepare = app.add_subcommand("prepare", "ingest and reduce the raw data");
    attach_common(prepare, flags);
    CLI::App* train = app.add_subcommand("train", "fit the generator on the processed table");
    attach_common(train, flags);
    CLI::App* sample_cmd = app.add_subcommand("sample", "draw synthetic rows from the model");
    attach_common(sample_cmd, flags, true);
    CLI::App* evaluate = app.add_subcommand("evaluate", "fidelity, utility and privacy reports");
    attach_common(evaluate, flags);
    CLI::App* report = app.add_subcommand("report", "full pipeline: prepare through evaluate");
    attach_common(report, flags, true);
    CLI::App* anonymize = app.add_subcommand("anonymize", "k-anonymity demonstration");
    attach_common(anonymize, flags);
    CLI::App* taxonomy = app.add_subcommand("taxonomy", "signal leakage registry");
    taxonomy->add_option("--priority", tax_priority, "filter: high/medium/low");
    taxonomy->add_option("--category", tax_category, "filter: category slug");
    taxonomy->add_option("--registry", tax_registry, "registry json (default: built-in)");
    taxonomy->add_flag("--json", tax_json, "emit json instead of a text table");
    CLI::App* selfcheck =
        app.add_subcommand("selfcheck", "run the metric implementations against brute-force oracles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
            return app.exit(e);
        }
        std::cerr << app.help() << "\n";
        print_error("usage", e.what());
        return 1;
    }

    try {
        if (prepare->parsed()) {
            synthtab::stage_prepare(load_config(flags));
            std::cout << "prepared data written\n";
        } else if (train->parsed()) {
            const synthtab::LossTrace trace = synthtab::stage_train(load_config(flags), flags.fast);
            std::cout << "model trained (" << trace.total.size() << " epochs)\n";
        } else if (sample_cmd->parsed()) {
            synthtab::stage_sample(load_config(flags), static_cast<size_t>(flags.rows));
            std::cout << "synthetic table written\n";
        } else if (evaluate->parsed()) {
            const synthtab::ReportBundle bundle =
                synthtab::stage_evaluate(load_config(flags), flags.fast);
            std::printf("fidelity overall: %.4f\n", bundle.fidelity.overall);
            std::printf("trtr best accuracy: %.4f\n",
                        bundle.trtr_run.entries[bundle.trtr_run.best_index].report.accuracy);
            std::printf("tstr best accuracy: %.4f\n",
                        bundle.tstr_run.entries[bundle.tstr_run.best_index].report.accuracy);
            std::printf("dcr 5th percentile: %.6f (exact matches: %zu)\n", bundle.privacy.dcr.p5,
                        bundle.privacy.dcr.exact_matches);
        } else if (report->parsed()) {
            const synthtab::ReportBundle bundle = synthtab::run_report(
                load_config(flags), flags.fast, static_cast<size_t>(flags.rows));
            std::printf("fidelity overall: %.4f\n", bundle.fidelity.overall);
            std::printf("trtr best accuracy: %.4f\n",
                        bundle.trtr_run.entries[bundle.trtr_run.best_index].report.accuracy);
            std::printf("tstr best accuracy: %.4f\n",
                        bundle.tstr_run.entries[bundle.tstr_run.best_index].report.accuracy);
            std::printf("report bundle written\n");
        } else if (anonymize->parsed()) {
            synthtab::stage_anonymize(load_config(flags));
            std::cout << "anonymized table written\n";
        } else if (taxonomy->parsed()) {
            return run_taxonomy(tax_priority, tax_category, tax_registry, tax_json);
        } else if (selfcheck->parsed()) {
            const auto failures = synthtab::oracle::run_selfcheck(20240901, 25);
            if (failures.empty()) {
                std::cout << "selfcheck: all oracle comparisons passed\n";
                return 0;
            }
            for (const auto& f : failures) std::cerr << f << "\n";
            print_error("runtime", "selfcheck found mismatches");
            return 2;
        }
    } catch (const synthtab::ValidationError& e) {
        print_error("validation", e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return 2;
    }
    return 0;
}
