#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "audit/attacks.hpp"
#include "audit/dataset.hpp"
#include "audit/metrics.hpp"
#include "audit/refgen.hpp"

namespace audit {

struct AuditConfig {
    // Data shape (self-contained runs synthesize their own pools).
    std::string mode = "timeseries";  // or "attributes"
    int feature_count = 9;
    int time_points = 48;

    // External datasets; empty paths mean self-contained generation.
    std::string schema_path, train_path, synth_path, holdout_path, aux_path;

    std::vector<AttackKind> roster = all_attack_kinds();
    std::vector<GeneratorKind> generators = {GeneratorKind::memorizer, GeneratorKind::jitter,
                                             GeneratorKind::marginal_resampler,
                                             GeneratorKind::process_resampler};
    double jitter_sigma = 0.02;

    int n_aux = 500;
    std::vector<int> sweep_sizes = {50, 100, 250, 500, 1000, 2000};
    int bootstrap_k = 100;
    std::uint64_t master_seed = 42;
    std::string out_dir = "audit_out";
    int n_synth_cap = 2000;
    int pca_components = 40;
    int flow_epochs = 200;
    int flow_fit_cap = 1000;
    int clf_epochs = 60;
    int dtw_band = 5;         // Sakoe-Chiba radius for the dtw attack (<0 = unconstrained)
    int dtw_synth_cap = 500;  // synthetic-set subsample cap for dtw scoring (<=0 = off)
    int jobs = 0;  // 0 = library default thread count

    int n_synth_for(int n_train) const {
        return std::min(n_synth_cap, 4 * n_train);
    }
    int max_sweep_size() const;
};

struct AttackOutcome {
    AttackKind kind = AttackKind::ganleak_breugel;
    bool failed = false;
    std::string error;
    LabeledScores scores;
};

struct ReportCell {
    std::string generator;
    int train_size = 0;
    std::string attack;
    bool failed = false;
    std::string error;
    std::map<std::string, MetricEstimate> metrics;  // auroc, accuracy, tpr, fpr
};

struct OverfitCell {
    std::string generator;
    int train_size = 0;
    MetricEstimate estimate;
};

struct AuditReport {
    std::vector<ReportCell> cells;
    std::vector<OverfitCell> overfit;
    std::map<std::string, std::string> config_echo;
    double runtime_seconds = 0.0;

    bool any_failed() const;
    const ReportCell* find(const std::string& generator, int size, const std::string& attack) const;
};

// Algorithm-1 run for one (synth, train, holdout) triple: sample D_aux and
// the nonmember half of D_test from a seeded shuffle of holdout, fit every
// roster attack on synth (and D_aux where required), score D_test, threshold
// at the median. allow_synth_overlap relaxes the synth-vs-train disjointness
// check (sanity-check scenarios reuse training records as synthetic data).
std::vector<AttackOutcome> run_attack_audit(const AuditConfig& cfg, const Dataset& synth,
                                            const Dataset& train, const Dataset& holdout,
                                            std::uint64_t cell_seed,
                                            bool allow_synth_overlap = false);

// Sanity scenarios: synth := the given fraction of train (ids refreshed).
std::vector<AttackOutcome> run_sanity_check(const AuditConfig& cfg, const Dataset& train,
                                            const Dataset& holdout, double fraction,
                                            std::uint64_t cell_seed);

AuditReport run_sweep(const AuditConfig& cfg);

// Aux-requiring attacks only, run twice: internal aux from holdout and the
// external dataset; cells are tagged by aux source.
AuditReport run_external_aux(const AuditConfig& cfg, const Dataset& synth, const Dataset& train,
                             const Dataset& holdout, const Dataset& external_aux);

// Sanity report across the 1.0 / 0.8 fractions (cells tagged by fraction).
AuditReport run_sanity_report(const AuditConfig& cfg, const Dataset& train,
                              const Dataset& holdout);

// Bootstraps auroc/accuracy/tpr/fpr for one attack outcome.
ReportCell make_cell(const std::string& generator, int train_size, const AttackOutcome& out,
                     int k, std::uint64_t seed);

// Attribute-only setting: one-hot categoricals plus z-scored numerics.
// Vocabularies and scales come from the datasets the encoder was fit on.
struct AttributeEncoder {
    std::vector<std::string> sex_vocab, marital_vocab, race_vocab;
    double age_mean = 0, age_scale = 1, los_mean = 0, los_scale = 1;

    static AttributeEncoder fit(const std::vector<const Dataset*>& sets);
    int dim() const;
    Eigen::MatrixXd encode(const Dataset& ds) const;
};

}  // namespace audit
