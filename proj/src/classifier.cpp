#include "audit/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "audit/rng.hpp"

namespace audit {

namespace {
constexpr int kHidden = 64;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

ClassifierModel train_logan_classifier(const Eigen::MatrixXd& synthetic,
                                       const Eigen::MatrixXd& aux, int epochs, std::uint64_t seed,
                                       double learning_rate, int batch_size) {
    if (synthetic.rows() == 0 || aux.rows() == 0)
        throw std::invalid_argument("train_logan_classifier: both classes must be nonempty");
    if (synthetic.cols() != aux.cols())
        throw std::invalid_argument("train_logan_classifier: dimension mismatch");
    const int d = static_cast<int>(synthetic.cols());
    const Eigen::Index n = synthetic.rows() + aux.rows();

    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    x.topRows(synthetic.rows()) = synthetic;
    x.bottomRows(aux.rows()) = aux;
    y.head(synthetic.rows()).setOnes();
    y.tail(aux.rows()).setZero();

    ClassifierModel m;
    m.seed = seed;
    auto rng = make_rng(derive_seed(seed, "logan-init"));
    std::normal_distribution<double> norm(0.0, 1.0);
    const double s1 = std::sqrt(2.0 / d), s2 = std::sqrt(2.0 / kHidden);
    m.w1.resize(kHidden, d);
    m.w2.resize(kHidden, kHidden);
    m.w3.resize(kHidden);
    for (int i = 0; i < kHidden; ++i)
        for (int j = 0; j < d; ++j) m.w1(i, j) = s1 * norm(rng);
    for (int i = 0; i < kHidden; ++i)
        for (int j = 0; j < kHidden; ++j) m.w2(i, j) = s2 * norm(rng);
    for (int i = 0; i < kHidden; ++i) m.w3[i] = s2 * norm(rng);
    m.b1 = Eigen::VectorXd::Zero(kHidden);
    m.b2 = Eigen::VectorXd::Zero(kHidden);

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto shuffle_rng = make_rng(derive_seed(seed, "logan-batches"));

    double epoch_loss = 0.0;
    for (int e = 0; e < epochs; ++e) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n; start += batch_size) {
            const Eigen::Index bs = std::min<Eigen::Index>(batch_size, n - start);
            Eigen::MatrixXd xb(bs, d);
            Eigen::VectorXd yb(bs);
            for (Eigen::Index i = 0; i < bs; ++i) {
                xb.row(i) = x.row(order[start + i]);
                yb[i] = y[order[start + i]];
            }
            // forward
            Eigen::MatrixXd z1 = (xb * m.w1.transpose()).rowwise() + m.b1.transpose();
            Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
            Eigen::MatrixXd z2 = (a1 * m.w2.transpose()).rowwise() + m.b2.transpose();
            Eigen::MatrixXd a2 = z2.cwiseMax(0.0);
            Eigen::VectorXd logit = a2 * m.w3;
            logit.array() += m.b3;
            Eigen::VectorXd p = logit.unaryExpr([](double v) { return sigmoid(v); });

            for (Eigen::Index i = 0; i < bs; ++i) {
                const double pi = std::clamp(p[i], 1e-12, 1.0 - 1e-12);
                epoch_loss += -(yb[i] * std::log(pi) + (1.0 - yb[i]) * std::log(1.0 - pi));
            }

            // backward (mean over batch)
            Eigen::VectorXd dlogit = (p - yb) / static_cast<double>(bs);
            Eigen::VectorXd gw3 = a2.transpose() * dlogit;
            const double gb3 = dlogit.sum();
            Eigen::MatrixXd da2 = dlogit * m.w3.transpose();
            Eigen::MatrixXd dz2 = (z2.array() > 0.0).select(da2, 0.0);
            Eigen::MatrixXd gw2 = dz2.transpose() * a1;
            Eigen::VectorXd gb2 = dz2.colwise().sum();
            Eigen::MatrixXd da1 = dz2 * m.w2;
            Eigen::MatrixXd dz1 = (z1.array() > 0.0).select(da1, 0.0);
            Eigen::MatrixXd gw1 = dz1.transpose() * xb;
            Eigen::VectorXd gb1 = dz1.colwise().sum();

            m.w1 -= learning_rate * gw1;
            m.b1 -= learning_rate * gb1;
            m.w2 -= learning_rate * gw2;
            m.b2 -= learning_rate * gb2;
            m.w3 -= learning_rate * gw3;
            m.b3 -= learning_rate * gb3;
        }
        epoch_loss /= static_cast<double>(n);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_logan_classifier: non-finite loss at epoch " +
                                     std::to_string(e));
    }
    m.epochs_trained = epochs;
    m.final_loss = epoch_loss;
    return m;
}

double classifier_logit(const ClassifierModel& m, const Eigen::VectorXd& x) {
    if (x.size() != m.input_dim())
        throw std::invalid_argument("classifier_logit: dimension mismatch");
    Eigen::VectorXd a1 = ((m.w1 * x) + m.b1).cwiseMax(0.0);
    Eigen::VectorXd a2 = ((m.w2 * a1) + m.b2).cwiseMax(0.0);
    return m.w3.dot(a2) + m.b3;
}

std::vector<double> classifier_score_batch(const ClassifierModel& m,
                                           const Eigen::MatrixXd& queries) {
    std::vector<double> out(queries.rows());
    const Eigen::Index n = queries.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i)
        out[i] = sigmoid(classifier_logit(m, queries.row(i).transpose()));
    return out;
}

}  // namespace audit
