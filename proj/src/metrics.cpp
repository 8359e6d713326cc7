#include "audit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "audit/rng.hpp"

namespace audit {

double accuracy(const LabeledScores& ls) {
    if (ls.entries.empty()) throw std::invalid_argument("accuracy: empty input");
    std::size_t correct = 0;
    for (const auto& e : ls.entries)
        if (e.predicted == e.true_membership) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ls.entries.size());
}

std::pair<double, double> tpr_fpr(const LabeledScores& ls) {
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
    for (const auto& e : ls.entries) {
        if (e.true_membership == 1)
            e.predicted == 1 ? ++tp : ++fn;
        else
            e.predicted == 1 ? ++fp : ++tn;
    }
    if (tp + fn == 0 || fp + tn == 0)
        throw std::invalid_argument("tpr_fpr: need at least one record of each class");
    return {static_cast<double>(tp) / static_cast<double>(tp + fn),
            static_cast<double>(fp) / static_cast<double>(fp + tn)};
}

double auroc(const LabeledScores& ls, bool tie_corrected) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& e : ls.entries) e.true_membership == 1 ? ++n_pos : ++n_neg;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("auroc: need at least one member and one nonmember");

    // Rank-based Mann-Whitney with average ranks on tie groups; numerically
    // identical to pair counting with ties at 1/2.
    std::vector<std::size_t> idx(ls.entries.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return ls.entries[a].score < ls.entries[b].score;
    });
    double rank_sum_pos = 0.0;  // sum of ranks (1-based) of members
    double strict_pairs = 0.0;  // for the strict-inequality mode
    std::size_t i = 0;
    std::size_t neg_before = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() &&
               ls.entries[idx[j]].score == ls.entries[idx[i]].score)
            ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        std::size_t pos_in_group = 0, neg_in_group = 0;
        for (std::size_t k = i; k < j; ++k)
            ls.entries[idx[k]].true_membership == 1 ? ++pos_in_group : ++neg_in_group;
        rank_sum_pos += avg_rank * static_cast<double>(pos_in_group);
        strict_pairs += static_cast<double>(pos_in_group) * static_cast<double>(neg_before);
        neg_before += neg_in_group;
        i = j;
    }
    const double denom = static_cast<double>(n_pos) * static_cast<double>(n_neg);
    if (tie_corrected) {
        const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                            static_cast<double>(n_pos + 1);
        return u / denom;
    }
    return strict_pairs / denom;
}

MetricEstimate bootstrap(const LabeledScores& ls, const MetricFn& metric, const std::string& name,
                         int k, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("bootstrap: K must be >= 1");
    if (ls.entries.empty()) throw std::invalid_argument("bootstrap: empty input");
    const std::size_t n = ls.entries.size();
    auto rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    std::vector<double> values;
    values.reserve(k);
    for (int rep = 0; rep < k; ++rep) {
        LabeledScores sample;
        sample.threshold = ls.threshold;
        sample.entries.resize(n);
        bool ok = false;
        for (int retry = 0; retry < 100 && !ok; ++retry) {
            bool has_pos = false, has_neg = false;
            for (std::size_t i = 0; i < n; ++i) {
                sample.entries[i] = ls.entries[pick(rng)];
                (sample.entries[i].true_membership == 1 ? has_pos : has_neg) = true;
            }
            ok = has_pos && has_neg;
        }
        if (!ok) throw std::runtime_error("bootstrap: 100 consecutive degenerate replicates");
        values.push_back(metric(sample));
    }
    MetricEstimate est;
    est.name = name;
    est.point = metric(ls);
    est.replicates = k;
    est.boot_mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - est.boot_mean) * (v - est.boot_mean);
    est.boot_stderr = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) : 0.0;
    return est;
}

double nrmse_pair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                  const Eigen::VectorXd& norm) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("nrmse_pair: shape mismatch");
    if (norm.size() != a.rows()) throw std::invalid_argument("nrmse_pair: norm length mismatch");
    const Eigen::Index f = a.rows(), t = a.cols();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < f; ++i) {
        if (!(norm[i] > 0)) throw std::invalid_argument("nrmse_pair: nonpositive norm entry");
        const double mse = (a.row(i) - b.row(i)).squaredNorm() / static_cast<double>(t);
        sum += std::sqrt(mse) / norm[i];
    }
    return sum / static_cast<double>(f);
}

Eigen::VectorXd nrmse_norm(const Dataset& d1, const Dataset& d2) {
    if (d1.empty() || d2.empty()) throw std::invalid_argument("nrmse: empty dataset");
    const int f = d1.schema.feature_count();
    Eigen::VectorXd mn = Eigen::VectorXd::Constant(f, std::numeric_limits<double>::infinity());
    Eigen::VectorXd mx = Eigen::VectorXd::Constant(f, -std::numeric_limits<double>::infinity());
    for (const Dataset* d : {&d1, &d2}) {
        for (const auto& r : d->records) {
            for (int i = 0; i < f; ++i) {
                mn[i] = std::min(mn[i], r.timeseries.row(i).minCoeff());
                mx[i] = std::max(mx[i], r.timeseries.row(i).maxCoeff());
            }
        }
    }
    Eigen::VectorXd norm = mx - mn;
    for (int i = 0; i < f; ++i)
        if (!(norm[i] > 0))
            throw std::invalid_argument("nrmse: feature '" + d1.schema.features[i].name +
                                        "' constant across the union (zero range)");
    return norm;
}

namespace {
template <bool Parallel>
std::vector<double> nrmse_minima(const Dataset& d1, const Dataset& d2) {
    const Eigen::VectorXd norm = nrmse_norm(d1, d2);
    std::vector<double> out(d1.size());
    const Eigen::Index n1 = static_cast<Eigen::Index>(d1.size());
#pragma omp parallel for schedule(dynamic, 4) if (Parallel)
    for (Eigen::Index i = 0; i < n1; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r2 : d2.records)
            best = std::min(best, nrmse_pair(d1.records[i].timeseries, r2.timeseries, norm));
        out[i] = best;
    }
    return out;
}
}  // namespace

std::vector<double> nrmse_min_per_record(const Dataset& d1, const Dataset& d2) {
    return nrmse_minima<true>(d1, d2);
}

std::vector<double> nrmse_min_per_record_serial(const Dataset& d1, const Dataset& d2) {
    return nrmse_minima<false>(d1, d2);
}

double nrmse_min(const Dataset& d1, const Dataset& d2) {
    const auto minima = nrmse_min_per_record(d1, d2);
    return std::accumulate(minima.begin(), minima.end(), 0.0) / minima.size();
}

double overfit_score(const Dataset& synth, const Dataset& train, const Dataset& holdout) {
    return nrmse_min(holdout, synth) - nrmse_min(train, synth);
}

MetricEstimate overfit_score_bootstrap(const Dataset& synth, const Dataset& train,
                                       const Dataset& holdout, int k, std::uint64_t seed) {
    const auto hold_min = nrmse_min_per_record(holdout, synth);
    const auto train_min = nrmse_min_per_record(train, synth);
    auto mean_of = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    MetricEstimate est;
    est.name = "overfit_score";
    est.point = mean_of(hold_min) - mean_of(train_min);
    est.replicates = k;

    auto rng = make_rng(seed);
    std::vector<double> values;
    values.reserve(k);
    for (int rep = 0; rep < k; ++rep) {
        auto resample_mean = [&](const std::vector<double>& v) {
            std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
            double s = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) s += v[pick(rng)];
            return s / static_cast<double>(v.size());
        };
        values.push_back(resample_mean(hold_min) - resample_mean(train_min));
    }
    est.boot_mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - est.boot_mean) * (v - est.boot_mean);
    est.boot_stderr = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) : 0.0;
    return est;
}

namespace {
std::vector<double> ranks_of(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = avg;
        i = j;
    }
    return ranks;
}
}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman: need two equal-length vectors, size >= 2");
    const auto ra = ranks_of(a);
    const auto rb = ranks_of(b);
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
    double num = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0 || vb == 0) return 0.0;
    return num / std::sqrt(va * vb);
}

}  // namespace audit
