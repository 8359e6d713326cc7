#include "audit/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace audit {

KdeModel fit_kde(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (n < 2) throw std::invalid_argument("fit_kde: need at least 2 points");

    KdeModel m;
    m.points = x;
    m.bandwidth.resize(d);
    const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
    for (Eigen::Index j = 0; j < d; ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
        const double sigma = std::sqrt(var);
        const double range = x.col(j).maxCoeff() - x.col(j).minCoeff();
        const double floor = 1e-6 * (range + 1e-12);
        m.bandwidth[j] = std::max(sigma * factor, floor);
    }
    const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    m.log_norm_const = -std::log(static_cast<double>(n));
    for (Eigen::Index j = 0; j < d; ++j)
        m.log_norm_const -= std::log(m.bandwidth[j]) + log_sqrt_2pi;
    return m;
}

double kde_log_density(const KdeModel& m, const Eigen::VectorXd& q) {
    if (q.size() != m.points.cols()) throw std::invalid_argument("kde_log_density: dim mismatch");
    const Eigen::Index n = m.points.rows();
    // log-sum-exp over per-point exponents -0.5 * sum_j ((q_j - x_ij)/h_j)^2
    Eigen::VectorXd expo(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < q.size(); ++j) {
            const double z = (q[j] - m.points(i, j)) / m.bandwidth[j];
            s += z * z;
        }
        expo[i] = -0.5 * s;
    }
    const double mx = expo.maxCoeff();
    const double sum = (expo.array() - mx).exp().sum();
    return m.log_norm_const + mx + std::log(sum);
}

std::vector<double> kde_log_density_batch_serial(const KdeModel& m,
                                                 const Eigen::MatrixXd& queries) {
    std::vector<double> out(queries.rows());
    for (Eigen::Index i = 0; i < queries.rows(); ++i)
        out[i] = kde_log_density(m, queries.row(i).transpose());
    return out;
}

std::vector<double> kde_log_density_batch(const KdeModel& m, const Eigen::MatrixXd& queries) {
    std::vector<double> out(queries.rows());
    const Eigen::Index nq = queries.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nq; ++i)
        out[i] = kde_log_density(m, queries.row(i).transpose());
    return out;
}

double mc_threshold(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& synthetic,
                    DistanceKind kind, int feature_count) {
    if (candidates.rows() == 0 || synthetic.rows() == 0)
        throw std::invalid_argument("mc_threshold: empty input");
    std::vector<double> minima = min_distances(candidates, synthetic, kind, feature_count);
    std::sort(minima.begin(), minima.end());
    const std::size_t n = minima.size();
    return n % 2 == 1 ? minima[n / 2] : 0.5 * (minima[n / 2 - 1] + minima[n / 2]);
}

}  // namespace audit
