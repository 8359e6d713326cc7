#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace audit {

// Feedforward binary classifier: input d -> 64 -> 64 -> logit, ReLU.
struct ClassifierModel {
    Eigen::MatrixXd w1;  // 64 x d
    Eigen::VectorXd b1;  // 64
    Eigen::MatrixXd w2;  // 64 x 64
    Eigen::VectorXd b2;  // 64
    Eigen::VectorXd w3;  // 64
    double b3 = 0.0;
    std::uint64_t seed = 0;
    int epochs_trained = 0;
    double final_loss = 0.0;

    int input_dim() const { return static_cast<int>(w1.cols()); }
};

// Binary cross-entropy, label 1 = synthetic, 0 = auxiliary; seeded mini-batch
// gradient descent. Inputs are expected pre-standardized.
ClassifierModel train_logan_classifier(const Eigen::MatrixXd& synthetic,
                                       const Eigen::MatrixXd& aux, int epochs,
                                       std::uint64_t seed, double learning_rate = 1e-2,
                                       int batch_size = 64);

double classifier_logit(const ClassifierModel& m, const Eigen::VectorXd& x);
// sigmoid(logit) per query row.
std::vector<double> classifier_score_batch(const ClassifierModel& m,
                                           const Eigen::MatrixXd& queries);

}  // namespace audit
