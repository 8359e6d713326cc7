#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace audit {

// Masked autoregressive affine block with a gated-tanh nonlinearity.
// Hidden unit k serves output dimension k / mult. Effective weights:
//   in:  j <  k/mult -> raw, j == k/mult -> exp(raw), else 0
//   out: k/mult < j -> raw,  k/mult == j -> exp(raw), else 0
// so the block's Jacobian is lower-triangular with a positive diagonal.
struct FlowBlock {
    Eigen::MatrixXd w_in;   // h x d raw parameters
    Eigen::VectorXd b_in;   // h
    Eigen::VectorXd gate;   // h, activation a = (1-g) z + g tanh z, g = sigmoid(gate)
    Eigen::MatrixXd w_out;  // d x h raw parameters
    Eigen::VectorXd b_out;  // d
};

struct FlowModel {
    int dim = 0;
    int mult = 4;
    std::vector<FlowBlock> blocks;
    std::uint64_t seed = 0;
    int epochs_trained = 0;
    double final_loglik = 0.0;

    int hidden() const { return dim * mult; }
};

struct FlowGradients {
    std::vector<FlowBlock> blocks;  // same shapes, gradient values
    void setZero();
    void axpy(double alpha, const FlowGradients& other);
};

FlowGradients make_gradients(const FlowModel& m);

// Exact identity map at init: log-density equals the standard-normal base.
FlowModel make_identity_flow(int dim, int mult = 4, int n_blocks = 2);

// Seeded near-identity init used by training.
FlowModel make_random_flow(int dim, std::uint64_t seed, int mult = 4, int n_blocks = 2);

// Log-density of q under the flow: base log-density of the forward-mapped
// point plus the accumulated log-Jacobian-determinant.
double flow_log_density(const FlowModel& m, const Eigen::VectorXd& q);
std::vector<double> flow_log_density_batch(const FlowModel& m, const Eigen::MatrixXd& queries);
std::vector<double> flow_log_density_batch_serial(const FlowModel& m,
                                                  const Eigen::MatrixXd& queries);

// d log p(q) / dq, analytic.
Eigen::VectorXd flow_log_density_grad_input(const FlowModel& m, const Eigen::VectorXd& q);

// Mean log-likelihood over rows of x and its gradient w.r.t. all parameters.
double flow_loglik_and_grads(const FlowModel& m, const Eigen::MatrixXd& x, FlowGradients& grads);

// Full-batch gradient ascent on the mean log-likelihood, fixed step size.
// Deterministic given seed, independent of thread count.
FlowModel fit_flow(const Eigen::MatrixXd& x, int epochs, std::uint64_t seed,
                   double step_size = 1e-2, int mult = 4, int n_blocks = 2);

void save_flow(const FlowModel& m, const std::string& path);
FlowModel load_flow(const std::string& path);

}  // namespace audit
