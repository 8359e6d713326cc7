#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "audit/classifier.hpp"
#include "audit/density.hpp"
#include "audit/distance.hpp"
#include "audit/flow.hpp"
#include "audit/preprocess.hpp"

namespace audit {

enum class AttackKind {
    mc_theta,
    ganleak_chen,
    ganleak_breugel,
    ganleak_dtw,
    ganleak_cal,
    domias_eq1,
    domias_kde,
    domias_bnaf,
    logan_pb,
};

std::string to_string(AttackKind k);
AttackKind attack_from_string(const std::string& s);
std::vector<AttackKind> all_attack_kinds();

struct AttackSpec {
    AttackKind kind = AttackKind::ganleak_breugel;
    bool uses_aux = false;
    bool uses_pca = false;
    DistanceKind distance = DistanceKind::euclidean;
    std::uint64_t rng_seed = 0;

    // Training knobs resolved by the audit config.
    int flow_epochs = 200;
    int flow_fit_cap = 1000;  // subsample cap for flow fitting
    int clf_epochs = 60;
    int dtw_band = -1;        // Sakoe-Chiba radius; unconstrained when negative
    int dtw_synth_cap = 500;  // subsample cap on the synthetic set for dtw scoring

    // Paper-protocol defaults per attack for the time-series setting
    // (attribute mode turns PCA off and disallows dtw).
    static AttackSpec defaults(AttackKind kind, bool timeseries_mode = true);
};

struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // strictly positive

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

// Low-level scorers (higher score = more member-like).
double attack_mc(const Eigen::VectorXd& x, const Eigen::MatrixXd& synthetic, double theta,
                 DistanceKind kind, int feature_count = 1);
double attack_ganleak_chen(const Eigen::VectorXd& x, const Eigen::MatrixXd& synthetic,
                           DistanceKind kind, int feature_count = 1);
double attack_ganleak_breugel(const Eigen::VectorXd& x, const Eigen::MatrixXd& synthetic,
                              DistanceKind kind, int feature_count = 1);
double attack_ganleak_cal(const Eigen::VectorXd& x, const Eigen::MatrixXd& synthetic,
                          const Eigen::MatrixXd& aux, DistanceKind kind, int feature_count = 1);
double attack_domias_eq1(const Eigen::VectorXd& x, const KdeModel& g_density);
double attack_domias_ratio_kde(const Eigen::VectorXd& x, const KdeModel& g, const KdeModel& r);
double attack_domias_ratio_flow(const Eigen::VectorXd& x, const FlowModel& g, const FlowModel& r);
double attack_logan_pb(const Eigen::VectorXd& x, const ClassifierModel& m);

// A fitted attack: immutable after fit, scoring is pure.
struct FittedAttack {
    AttackSpec spec;
    int feature_count = 1;  // for dtw interpretation of flattened rows

    std::optional<PcaModel> pca;
    std::optional<Standardizer> standardizer;
    Eigen::MatrixXd synth;  // in attack representation
    Eigen::MatrixXd aux;    // in attack representation (aux attacks only)
    double theta = 0.0;     // mc_theta only
    std::optional<KdeModel> g_kde, r_kde;
    std::optional<FlowModel> g_flow, r_flow;
    std::optional<ClassifierModel> classifier;

    // Scores a batch of raw flattened records (unprojected, unstandardized).
    std::vector<double> score(const Eigen::MatrixXd& raw_queries) const;

  private:
    Eigen::MatrixXd represent(const Eigen::MatrixXd& raw) const;
};

// raw matrices are flattened records. pca must be present iff spec.uses_pca,
// aux iff spec.uses_aux. theta_candidates (raw) feed the mc_theta median
// heuristic; when absent the synthetic set itself is used.
FittedAttack fit_attack(const AttackSpec& spec, const Eigen::MatrixXd& synth_raw,
                        const std::optional<Eigen::MatrixXd>& aux_raw,
                        const std::optional<PcaModel>& pca, int feature_count,
                        const std::optional<Eigen::MatrixXd>& theta_candidates_raw = std::nullopt);

void save_attack(const FittedAttack& a, const std::string& path);
FittedAttack load_attack(const std::string& path);

}  // namespace audit
