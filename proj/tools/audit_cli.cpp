#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "audit/audit.hpp"
#include "audit/config.hpp"
#include "audit/report.hpp"
#include "audit/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("-c,--config", o.config_path, "TOML config file");
    cmd->add_option("-o,--out", o.out_dir, "output directory (overrides config)");
    cmd->add_option("-s,--seed", o.seed, "master seed (overrides config)")
        ->each([&](const std::string&) { o.seed_set = true; });
    cmd->add_option("-j,--jobs", o.jobs, "thread count (0 = library default)");
}

audit::AuditConfig resolve(const CommonOpts& o) {
    audit::AuditConfig cfg;
    if (!o.config_path.empty()) cfg = audit::load_config(o.config_path);
    if (o.seed_set) cfg.master_seed = o.seed;
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.jobs >= 0) cfg.jobs = o.jobs;
    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
    return cfg;
}

// Self-contained train/holdout pools when no dataset paths are configured.
void load_or_sample(const audit::AuditConfig& cfg, int n_train, audit::FeatureSchema& schema,
                    audit::Dataset& train, audit::Dataset& holdout) {
    if (!cfg.train_path.empty()) {
        schema = audit::load_schema(cfg.schema_path);
        train = audit::load_dataset(cfg.train_path, schema, audit::Split::train);
        holdout = audit::load_dataset(cfg.holdout_path, schema, audit::Split::holdout);
        return;
    }
    schema = audit::make_process_schema(cfg.feature_count, cfg.time_points);
    audit::ProcessSpec process = audit::ProcessSpec::standard(
        cfg.feature_count, cfg.time_points, audit::derive_seed(cfg.master_seed, "process-train"));
    train = audit::sample_process(process, n_train, schema, audit::Split::train, "tr");
    audit::ProcessSpec hp = process;
    hp.seed = audit::derive_seed(cfg.master_seed, "process-holdout");
    holdout =
        audit::sample_process(hp, cfg.n_aux + n_train, schema, audit::Split::holdout, "ho");
}

int finish(const audit::AuditReport& report, const audit::AuditConfig& cfg) {
    audit::emit_report(report, cfg.out_dir);
    std::printf("wrote %zu cells to %s (%.1f s)\n", report.cells.size(), cfg.out_dir.c_str(),
                report.runtime_seconds);
    if (report.any_failed()) {
        for (const auto& c : report.cells)
            if (c.failed)
                std::fprintf(stderr, "cell failed: %s/%d/%s: %s\n", c.generator.c_str(),
                             c.train_size, c.attack.c_str(), c.error.c_str());
        return kExitPartial;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Membership-inference privacy audit for synthetic time-series data"};
    app.require_subcommand(1);

    CommonOpts audit_o, sweep_o, sanity_o, extaux_o, gen_o;
    std::string audit_gen = "memorizer";
    int audit_n = 100;
    auto* cmd_audit = app.add_subcommand("audit", "run the attack battery for one generator");
    add_common(cmd_audit, audit_o);
    cmd_audit->add_option("-g,--generator", audit_gen, "generator kind");
    cmd_audit->add_option("-n,--train-size", audit_n, "training-set size");

    auto* cmd_sweep = app.add_subcommand("sweep", "full generator x attack x size grid");
    add_common(cmd_sweep, sweep_o);

    auto* cmd_sanity = app.add_subcommand("sanity", "synth := copy of train (1.0 / 0.8 fractions)");
    int sanity_n = 100;
    add_common(cmd_sanity, sanity_o);
    cmd_sanity->add_option("-n,--train-size", sanity_n, "training-set size");

    auto* cmd_extaux =
        app.add_subcommand("external-aux", "aux-requiring attacks with internal vs external aux");
    int extaux_n = 500;
    std::string extaux_gen = "jitter";
    add_common(cmd_extaux, extaux_o);
    cmd_extaux->add_option("-n,--train-size", extaux_n, "training-set size");
    cmd_extaux->add_option("-g,--generator", extaux_gen, "generator kind (self-contained runs)");

    auto* cmd_gen = app.add_subcommand("gen", "emit reference datasets");
    int gen_n = 500;
    std::string gen_gen = "process_resampler";
    add_common(cmd_gen, gen_o);
    cmd_gen->add_option("-n,--train-size", gen_n, "training-set size");
    cmd_gen->add_option("-g,--generator", gen_gen, "generator for the synthetic set");

    auto* cmd_report = app.add_subcommand("report", "re-render CSV/SVG from a report JSON");
    std::string report_in, report_out = "audit_out";
    cmd_report->add_option("-i,--in", report_in, "report.json path")->required();
    cmd_report->add_option("-o,--out", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_sweep->parsed()) {
            audit::AuditConfig cfg = resolve(sweep_o);
            return finish(audit::run_sweep(cfg), cfg);
        }
        if (cmd_audit->parsed()) {
            audit::AuditConfig cfg = resolve(audit_o);
            audit::FeatureSchema schema;
            audit::Dataset train, holdout, synth;
            load_or_sample(cfg, audit_n, schema, train, holdout);
            const std::uint64_t cell_seed = audit::derive_seed(cfg.master_seed, "audit-cell");
            std::string gname;
            if (!cfg.synth_path.empty()) {
                synth = audit::load_dataset(cfg.synth_path, schema, audit::Split::synthetic);
                gname = "external";
            } else {
                audit::GeneratorSpec gs;
                gs.kind = audit::generator_from_string(audit_gen);
                gs.jitter_sigma = gs.kind == audit::GeneratorKind::jitter ? cfg.jitter_sigma : 0.0;
                gs.seed = audit::derive_seed(cell_seed, "generator");
                synth = audit::generate(gs, train, cfg.n_synth_for(audit_n));
                gname = audit_gen;
            }
            auto outcomes = audit::run_attack_audit(cfg, synth, train, holdout, cell_seed);
            audit::AuditReport report;
            report.config_echo["mode"] = cfg.mode;
            report.config_echo["seed"] = std::to_string(cfg.master_seed);
            for (std::size_t ai = 0; ai < outcomes.size(); ++ai)
                report.cells.push_back(
                    audit::make_cell(gname, static_cast<int>(train.size()), outcomes[ai],
                                     cfg.bootstrap_k, audit::derive_seed(cell_seed, "boot", ai)));
            return finish(report, cfg);
        }
        if (cmd_sanity->parsed()) {
            audit::AuditConfig cfg = resolve(sanity_o);
            audit::FeatureSchema schema;
            audit::Dataset train, holdout;
            load_or_sample(cfg, sanity_n, schema, train, holdout);
            return finish(audit::run_sanity_report(cfg, train, holdout), cfg);
        }
        if (cmd_extaux->parsed()) {
            audit::AuditConfig cfg = resolve(extaux_o);
            audit::FeatureSchema schema;
            audit::Dataset train, holdout, aux, synth;
            load_or_sample(cfg, extaux_n, schema, train, holdout);
            if (!cfg.aux_path.empty()) {
                aux = audit::load_dataset(cfg.aux_path, schema, audit::Split::aux);
            } else if (cfg.train_path.empty()) {
                audit::ProcessSpec ap = audit::ProcessSpec::standard(
                    cfg.feature_count, cfg.time_points,
                    audit::derive_seed(cfg.master_seed, "process-external-aux"));
                aux = audit::sample_process(ap, cfg.n_aux, schema, audit::Split::aux, "ea");
            } else {
                throw std::invalid_argument("external-aux: config must set an aux dataset path");
            }
            if (!cfg.synth_path.empty()) {
                synth = audit::load_dataset(cfg.synth_path, schema, audit::Split::synthetic);
            } else {
                audit::GeneratorSpec gs;
                gs.kind = audit::generator_from_string(extaux_gen);
                gs.jitter_sigma = gs.kind == audit::GeneratorKind::jitter ? cfg.jitter_sigma : 0.0;
                gs.seed = audit::derive_seed(cfg.master_seed, "external-aux-generator");
                synth = audit::generate(gs, train, cfg.n_synth_for(extaux_n));
            }
            return finish(audit::run_external_aux(cfg, synth, train, holdout, aux), cfg);
        }
        if (cmd_gen->parsed()) {
            audit::AuditConfig cfg = resolve(gen_o);
            audit::FeatureSchema schema;
            audit::Dataset train, holdout;
            load_or_sample(cfg, gen_n, schema, train, holdout);
            audit::GeneratorSpec gs;
            gs.kind = audit::generator_from_string(gen_gen);
            gs.jitter_sigma = gs.kind == audit::GeneratorKind::jitter ? cfg.jitter_sigma : 0.0;
            gs.seed = audit::derive_seed(cfg.master_seed, "gen-generator");
            audit::Dataset synth = audit::generate(gs, train, cfg.n_synth_for(gen_n));
            std::filesystem::create_directories(cfg.out_dir);
            audit::save_schema(schema, cfg.out_dir + "/schema.json");
            audit::save_dataset(train, cfg.out_dir + "/train.csv");
            audit::save_dataset(holdout, cfg.out_dir + "/holdout.csv");
            audit::save_dataset(synth, cfg.out_dir + "/synth.csv");
            std::printf("wrote schema + train/holdout/synth to %s\n", cfg.out_dir.c_str());
            return kExitOk;
        }
        if (cmd_report->parsed()) {
            audit::AuditReport report = audit::load_report_json(report_in);
            audit::emit_report(report, report_out);
            std::printf("re-rendered %zu cells to %s\n", report.cells.size(), report_out.c_str());
            return kExitOk;
        }
    } catch (const std::invalid_argument& ex) {
        std::fprintf(stderr, "configuration error: %s\n", ex.what());
        return kExitConfig;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return kExitConfig;
    }
    return kExitOk;
}
