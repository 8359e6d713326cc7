#pragma once

#include <Eigen/Dense>
#include <vector>

#include "audit/distance.hpp"

namespace audit {

// Product-kernel Gaussian KDE with per-dimension Scott's-rule bandwidths.
struct KdeModel {
    Eigen::MatrixXd points;     // n x d
    Eigen::VectorXd bandwidth;  // length d, strictly positive
    double log_norm_const = 0;  // log(1/n) - sum_j log(h_j * sqrt(2*pi))

    int dim() const { return static_cast<int>(points.cols()); }
};

// h_j = sigma_j * n^(-1/(d+4)), unbiased sigma, floored at
// 1e-6 * (range_j + 1e-12) so constant dimensions stay usable.
KdeModel fit_kde(const Eigen::MatrixXd& x);

double kde_log_density(const KdeModel& m, const Eigen::VectorXd& q);

std::vector<double> kde_log_density_batch(const KdeModel& m, const Eigen::MatrixXd& queries);
std::vector<double> kde_log_density_batch_serial(const KdeModel& m,
                                                 const Eigen::MatrixXd& queries);

// Median over candidates of the minimum distance to any synthetic record
// (even count: mean of the central pair).
double mc_threshold(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& synthetic,
                    DistanceKind kind, int feature_count = 1);

}  // namespace audit
