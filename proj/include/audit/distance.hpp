#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace audit {

enum class DistanceKind { euclidean, dtw };

double euclidean(std::span<const double> a, std::span<const double> b);
double euclidean(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Multivariate DTW, per-step cost = Euclidean distance between F-dimensional
// columns, moves {match, insert, delete}, cost counted once per cell.
// band_radius < 0 means unconstrained (the default).
double dtw(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int band_radius = -1);

// Distance between two flattened records. For dtw the vectors are interpreted
// as F x (len/F) matrices, feature-major.
double vec_distance(DistanceKind kind, std::span<const double> a, std::span<const double> b,
                    int feature_count, int band_radius = -1);

// For each query row, the minimum distance to any row of points.
// Output is schedule-independent: one slot per query.
std::vector<double> min_distances(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& points,
                                  DistanceKind kind, int feature_count, int band_radius = -1);
std::vector<double> min_distances_serial(const Eigen::MatrixXd& queries,
                                         const Eigen::MatrixXd& points, DistanceKind kind,
                                         int feature_count, int band_radius = -1);

}  // namespace audit
