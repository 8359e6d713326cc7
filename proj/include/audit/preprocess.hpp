#pragma once

#include <Eigen/Dense>
#include <string>
#include <tuple>
#include <vector>

#include "audit/dataset.hpp"

namespace audit {

struct PcaModel {
    Eigen::VectorXd mean;                      // length D
    Eigen::MatrixXd components;                // n_components x D, orthonormal rows
    Eigen::VectorXd explained_variance;        // eigenvalues, length n_components
    Eigen::VectorXd explained_variance_ratio;  // length n_components

    int n_components() const { return static_cast<int>(components.rows()); }
    int input_dim() const { return static_cast<int>(mean.size()); }
};

struct ImputationModel {
    Eigen::VectorXd per_feature_median;  // length F
    std::string source;
};

// One raw observation on the irregular grid.
struct Observation {
    double time_minutes;
    int feature_index;
    double value;
};

// Values outside [min_bound, max_bound] become NaN (imputed later, not clipped).
Dataset clamp_outliers(const Dataset& ds);

// Forward fill onto the fixed grid; cells before the first observation of a
// feature stay NaN. record/patient ids are the caller's to fill in.
PatientRecord resample_forward_fill(std::vector<Observation> raw, const FeatureSchema& schema);

ImputationModel fit_imputer(const Dataset& holdout);
PatientRecord impute(const PatientRecord& r, const ImputationModel& m);
Dataset impute_dataset(const Dataset& ds, const ImputationModel& m);

// PCA on flattened records via eigendecomposition of the D x D sample
// covariance. Component sign is fixed so each row's largest-magnitude entry
// is positive. n_components above min(|ds|, D) is reduced to that bound with
// a warning on stderr.
PcaModel fit_pca(const Dataset& ds, int n_components);
PcaModel fit_pca_matrix(const Eigen::MatrixXd& x, int n_components);

Eigen::MatrixXd apply_pca(const PcaModel& m, const Dataset& ds);
Eigen::MatrixXd apply_pca_matrix(const PcaModel& m, const Eigen::MatrixXd& x);
Eigen::VectorXd apply_pca_vector(const PcaModel& m, const Eigen::VectorXd& v);

void save_pca(const PcaModel& m, const std::string& path);
PcaModel load_pca(const std::string& path);

}  // namespace audit
