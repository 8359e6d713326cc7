#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "audit/dataset.hpp"

namespace audit {

struct ScoredRecord {
    std::string record_id;
    int true_membership = 0;  // 0 or 1
    double score = 0.0;
    int predicted = 0;
};

struct LabeledScores {
    std::vector<ScoredRecord> entries;
    double threshold = 0.0;  // median of scores (Algorithm output)

    std::size_t size() const { return entries.size(); }
};

struct MetricEstimate {
    std::string name;
    double point = 0.0;
    double boot_mean = 0.0;
    double boot_stderr = 0.0;
    int replicates = 1;
};

double accuracy(const LabeledScores& ls);
std::pair<double, double> tpr_fpr(const LabeledScores& ls);

// Mann-Whitney AUROC; ties count 1/2 when tie_corrected (the default),
// 0 otherwise (the strict-inequality reading).
double auroc(const LabeledScores& ls, bool tie_corrected = true);

using MetricFn = std::function<double(const LabeledScores&)>;

// Resample entries with replacement K times; single-class replicates are
// redrawn (at most 100 retries each). Deterministic given seed.
MetricEstimate bootstrap(const LabeledScores& ls, const MetricFn& metric, const std::string& name,
                         int k, std::uint64_t seed);

// Mean over features of per-feature RMSE divided by norm[f].
double nrmse_pair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                  const Eigen::VectorXd& norm);

// Per-feature range over the union of both datasets (max - min over all
// samples and time steps). Throws on a zero range.
Eigen::VectorXd nrmse_norm(const Dataset& d1, const Dataset& d2);

// For each record of d1 the minimum nrmse_pair against d2, averaged over d1.
double nrmse_min(const Dataset& d1, const Dataset& d2);
// The per-record minima (used for bootstrap resampling of the score).
std::vector<double> nrmse_min_per_record(const Dataset& d1, const Dataset& d2);
std::vector<double> nrmse_min_per_record_serial(const Dataset& d1, const Dataset& d2);

// nrmse_min(holdout, synth) - nrmse_min(train, synth); positive = overfitting.
double overfit_score(const Dataset& synth, const Dataset& train, const Dataset& holdout);
MetricEstimate overfit_score_bootstrap(const Dataset& synth, const Dataset& train,
                                       const Dataset& holdout, int k, std::uint64_t seed);

// Spearman rank correlation (average ranks on ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace audit
