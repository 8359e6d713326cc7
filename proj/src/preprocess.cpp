#include "audit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace audit {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

Dataset clamp_outliers(const Dataset& ds) {
    Dataset out = ds;
    const int f = ds.schema.feature_count();
    for (auto& r : out.records) {
        for (int i = 0; i < f; ++i) {
            const double lo = ds.schema.features[i].min_bound;
            const double hi = ds.schema.features[i].max_bound;
            for (Eigen::Index j = 0; j < r.timeseries.cols(); ++j) {
                const double v = r.timeseries(i, j);
                if (std::isfinite(v) && (v < lo || v > hi)) r.timeseries(i, j) = kNaN;
            }
        }
    }
    return out;
}

PatientRecord resample_forward_fill(std::vector<Observation> raw, const FeatureSchema& schema) {
    const int f = schema.feature_count();
    const int t = schema.time_points;
    const double window = static_cast<double>(t) * schema.grid_step_minutes;
    for (const auto& o : raw) {
        if (o.time_minutes < 0 || o.time_minutes >= window)
            throw std::out_of_range("observation time " + std::to_string(o.time_minutes) +
                                    " outside [0, " + std::to_string(window) + ")");
        if (o.feature_index < 0 || o.feature_index >= f)
            throw std::out_of_range("feature index out of range");
    }
    std::stable_sort(raw.begin(), raw.end(),
                     [](const Observation& a, const Observation& b) {
                         return a.time_minutes < b.time_minutes;
                     });
    PatientRecord r;
    r.timeseries.setConstant(f, t, kNaN);
    // Grid cell k covers [k*step, (k+1)*step); each cell takes the most recent
    // preceding observation, so we sweep observations and fill forward.
    std::vector<double> last(f, kNaN);
    std::size_t oi = 0;
    for (int k = 0; k < t; ++k) {
        const double cell_end = static_cast<double>(k + 1) * schema.grid_step_minutes;
        while (oi < raw.size() && raw[oi].time_minutes < cell_end) {
            last[raw[oi].feature_index] = raw[oi].value;
            ++oi;
        }
        for (int i = 0; i < f; ++i) r.timeseries(i, k) = last[i];
    }
    return r;
}

ImputationModel fit_imputer(const Dataset& holdout) {
    if (holdout.empty()) throw std::invalid_argument("fit_imputer: empty holdout");
    const int f = holdout.schema.feature_count();
    ImputationModel m;
    m.per_feature_median.resize(f);
    m.source = "holdout split, " + std::to_string(holdout.size()) + " records";
    for (int i = 0; i < f; ++i) {
        std::vector<double> cells;
        for (const auto& r : holdout.records)
            for (Eigen::Index j = 0; j < r.timeseries.cols(); ++j)
                if (std::isfinite(r.timeseries(i, j))) cells.push_back(r.timeseries(i, j));
        if (cells.empty())
            throw std::runtime_error("fit_imputer: feature '" + holdout.schema.features[i].name +
                                     "' has no observed cells");
        m.per_feature_median[i] = median_of(cells);
    }
    return m;
}

PatientRecord impute(const PatientRecord& r, const ImputationModel& m) {
    if (m.per_feature_median.size() != r.timeseries.rows())
        throw std::invalid_argument("impute: model does not cover all features");
    PatientRecord out = r;
    for (Eigen::Index i = 0; i < out.timeseries.rows(); ++i)
        for (Eigen::Index j = 0; j < out.timeseries.cols(); ++j)
            if (!std::isfinite(out.timeseries(i, j))) out.timeseries(i, j) = m.per_feature_median[i];
    return out;
}

Dataset impute_dataset(const Dataset& ds, const ImputationModel& m) {
    Dataset out = ds;
    for (auto& r : out.records) r = impute(r, m);
    return out;
}

PcaModel fit_pca_matrix(const Eigen::MatrixXd& x, int n_components) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (n < 2) throw std::invalid_argument("fit_pca: need at least 2 records");
    const int feasible = static_cast<int>(std::min(n, d));
    if (n_components < 1) throw std::invalid_argument("fit_pca: n_components must be positive");
    if (n_components > feasible) {
        std::cerr << "[pca] reducing n_components from " << n_components << " to " << feasible
                  << " (min of sample count and dimension)\n";
        n_components = feasible;
    }

    PcaModel m;
    m.mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - m.mean.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigensolver failed");
    // Eigen returns ascending eigenvalues; take the top n_components.
    const double total = std::max(eig.eigenvalues().sum(), 0.0);
    m.components.resize(n_components, d);
    m.explained_variance.resize(n_components);
    m.explained_variance_ratio.resize(n_components);
    for (int k = 0; k < n_components; ++k) {
        const Eigen::Index src = d - 1 - k;
        Eigen::VectorXd comp = eig.eigenvectors().col(src);
        Eigen::Index imax;
        comp.cwiseAbs().maxCoeff(&imax);
        if (comp[imax] < 0) comp = -comp;
        m.components.row(k) = comp.transpose();
        const double ev = std::max(eig.eigenvalues()[src], 0.0);
        m.explained_variance[k] = ev;
        m.explained_variance_ratio[k] = total > 0 ? ev / total : 0.0;
    }
    return m;
}

PcaModel fit_pca(const Dataset& ds, int n_components) {
    return fit_pca_matrix(flatten_dataset(ds), n_components);
}

Eigen::MatrixXd apply_pca_matrix(const PcaModel& m, const Eigen::MatrixXd& x) {
    if (x.cols() != m.input_dim())
        throw std::invalid_argument("apply_pca: dimension mismatch: " + std::to_string(x.cols()) +
                                    " vs model " + std::to_string(m.input_dim()));
    return (x.rowwise() - m.mean.transpose()) * m.components.transpose();
}

Eigen::MatrixXd apply_pca(const PcaModel& m, const Dataset& ds) {
    return apply_pca_matrix(m, flatten_dataset(ds));
}

Eigen::VectorXd apply_pca_vector(const PcaModel& m, const Eigen::VectorXd& v) {
    if (v.size() != m.input_dim()) throw std::invalid_argument("apply_pca: dimension mismatch");
    return m.components * (v - m.mean);
}

void save_pca(const PcaModel& m, const std::string& path) {
    nlohmann::json j;
    j["mean"] = std::vector<double>(m.mean.data(), m.mean.data() + m.mean.size());
    j["explained_variance"] = std::vector<double>(
        m.explained_variance.data(), m.explained_variance.data() + m.explained_variance.size());
    j["explained_variance_ratio"] =
        std::vector<double>(m.explained_variance_ratio.data(),
                            m.explained_variance_ratio.data() + m.explained_variance_ratio.size());
    j["n_components"] = m.n_components();
    j["input_dim"] = m.input_dim();
    auto rows = nlohmann::json::array();
    for (int k = 0; k < m.n_components(); ++k)
        rows.push_back(std::vector<double>(m.components.row(k).begin(), m.components.row(k).end()));
    j["components"] = rows;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump() << '\n';
}

PcaModel load_pca(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    PcaModel m;
    const auto mean = j.at("mean").get<std::vector<double>>();
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    const auto ev = j.at("explained_variance").get<std::vector<double>>();
    m.explained_variance = Eigen::Map<const Eigen::VectorXd>(ev.data(), ev.size());
    const auto evr = j.at("explained_variance_ratio").get<std::vector<double>>();
    m.explained_variance_ratio = Eigen::Map<const Eigen::VectorXd>(evr.data(), evr.size());
    const auto& rows = j.at("components");
    m.components.resize(rows.size(), m.mean.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto row = rows[k].get<std::vector<double>>();
        m.components.row(k) = Eigen::Map<const Eigen::VectorXd>(row.data(), row.size()).transpose();
    }
    return m;
}

}  // namespace audit
