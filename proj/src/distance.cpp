#include "audit/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace audit {

double euclidean(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("euclidean: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double euclidean(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("euclidean: length mismatch");
    return (a - b).norm();
}

namespace {

// Column distance between time step i of a and j of b, both F x T, stored as
// raw feature-major spans (row f at offset f*T). ta/tb are the column counts.
struct SeqView {
    const double* data;
    int f;
    int t;
    double col_dist(int i, const SeqView& other, int j) const {
        double s = 0.0;
        for (int k = 0; k < f; ++k) {
            const double d = data[k * t + i] - other.data[k * other.t + j];
            s += d * d;
        }
        return std::sqrt(s);
    }
};

double dtw_impl(const SeqView& a, const SeqView& b, int band_radius) {
    const int n = a.t, m = b.t;
    if (n == 0 || m == 0) throw std::invalid_argument("dtw: empty sequence");
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m, inf), cur(m, inf);
    for (int i = 0; i < n; ++i) {
        int jlo = 0, jhi = m - 1;
        if (band_radius >= 0) {
            // Band around the diagonal stretched to the m/n aspect ratio.
            const int center = static_cast<int>(static_cast<long long>(i) * m / std::max(n, 1));
            jlo = std::max(0, center - band_radius);
            jhi = std::min(m - 1, center + band_radius);
        }
        std::fill(cur.begin(), cur.end(), inf);
        for (int j = jlo; j <= jhi; ++j) {
            const double cost = a.col_dist(i, b, j);
            double best;
            if (i == 0 && j == 0)
                best = 0.0;
            else if (i == 0)
                best = cur[j - 1];
            else if (j == 0)
                best = prev[j];
            else
                best = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = cost + best;
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

}  // namespace

double dtw(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int band_radius) {
    if (a.rows() != b.rows()) throw std::invalid_argument("dtw: feature count mismatch");
    if (a.cols() == 0 || b.cols() == 0) throw std::invalid_argument("dtw: empty sequence");
    // Copy into feature-major contiguous buffers.
    std::vector<double> abuf(a.rows() * a.cols()), bbuf(b.rows() * b.cols());
    for (Eigen::Index f = 0; f < a.rows(); ++f)
        for (Eigen::Index t = 0; t < a.cols(); ++t) abuf[f * a.cols() + t] = a(f, t);
    for (Eigen::Index f = 0; f < b.rows(); ++f)
        for (Eigen::Index t = 0; t < b.cols(); ++t) bbuf[f * b.cols() + t] = b(f, t);
    SeqView va{abuf.data(), static_cast<int>(a.rows()), static_cast<int>(a.cols())};
    SeqView vb{bbuf.data(), static_cast<int>(b.rows()), static_cast<int>(b.cols())};
    return dtw_impl(va, vb, band_radius);
}

double vec_distance(DistanceKind kind, std::span<const double> a, std::span<const double> b,
                    int feature_count, int band_radius) {
    if (kind == DistanceKind::euclidean) return euclidean(a, b);
    if (feature_count < 1 || a.size() % feature_count != 0 || b.size() % feature_count != 0)
        throw std::invalid_argument("vec_distance: length not divisible by feature count");
    SeqView va{a.data(), feature_count, static_cast<int>(a.size()) / feature_count};
    SeqView vb{b.data(), feature_count, static_cast<int>(b.size()) / feature_count};
    return dtw_impl(va, vb, band_radius);
}

std::vector<double> min_distances_serial(const Eigen::MatrixXd& queries,
                                         const Eigen::MatrixXd& points, DistanceKind kind,
                                         int feature_count, int band_radius) {
    if (queries.cols() != points.cols())
        throw std::invalid_argument("min_distances: dimension mismatch");
    if (points.rows() == 0) throw std::invalid_argument("min_distances: empty point set");
    std::vector<double> out(queries.rows());
    // Row-major staging so each record is a contiguous span.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> q = queries, p = points;
    const int d = static_cast<int>(queries.cols());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        std::span<const double> qi(q.data() + i * d, d);
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < p.rows(); ++j) {
            std::span<const double> pj(p.data() + j * d, d);
            best = std::min(best, vec_distance(kind, qi, pj, feature_count, band_radius));
        }
        out[i] = best;
    }
    return out;
}

std::vector<double> min_distances(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& points,
                                  DistanceKind kind, int feature_count, int band_radius) {
    if (queries.cols() != points.cols())
        throw std::invalid_argument("min_distances: dimension mismatch");
    if (points.rows() == 0) throw std::invalid_argument("min_distances: empty point set");
    std::vector<double> out(queries.rows());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> q = queries, p = points;
    const int d = static_cast<int>(queries.cols());
    const Eigen::Index nq = q.rows(), np = p.rows();
#pragma omp parallel for schedule(dynamic, 4)
    for (Eigen::Index i = 0; i < nq; ++i) {
        std::span<const double> qi(q.data() + i * d, d);
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < np; ++j) {
            std::span<const double> pj(p.data() + j * d, d);
            best = std::min(best, vec_distance(kind, qi, pj, feature_count, band_radius));
        }
        out[i] = best;
    }
    return out;
}

}  // namespace audit
