#include "audit/flow.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "audit/rng.hpp"
#include "json.hpp"

namespace audit {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Effective masked weights for one block.
struct EffBlock {
    Eigen::MatrixXd in;   // h x d
    Eigen::MatrixXd out;  // d x h
};

EffBlock effective(const FlowBlock& b, int dim, int mult) {
    const int h = dim * mult;
    EffBlock e;
    e.in = Eigen::MatrixXd::Zero(h, dim);
    e.out = Eigen::MatrixXd::Zero(dim, h);
    for (int k = 0; k < h; ++k) {
        const int p = k / mult;
        for (int j = 0; j < p; ++j) e.in(k, j) = b.w_in(k, j);
        e.in(k, p) = std::exp(b.w_in(k, p));
        e.out(p, k) = std::exp(b.w_out(p, k));
        for (int j = p + 1; j < dim; ++j) e.out(j, k) = b.w_out(j, k);
    }
    return e;
}

// Per-sample forward trace through one block.
struct BlockTrace {
    Eigen::VectorXd x;       // input, d
    Eigen::VectorXd z;       // pre-activation, h
    Eigen::VectorXd g;       // gates, h
    Eigen::VectorXd th;      // tanh(z), h
    Eigen::VectorXd a;       // activation, h
    Eigen::VectorXd aprime;  // da/dz, h
    Eigen::VectorXd y;       // output, d
    Eigen::VectorXd diag;    // Jacobian diagonal, d
};

void block_forward(const FlowBlock& b, const EffBlock& e, int dim, int mult,
                   const Eigen::VectorXd& x, BlockTrace& tr) {
    const int h = dim * mult;
    tr.x = x;
    tr.z = e.in * x + b.b_in;
    tr.g.resize(h);
    tr.th.resize(h);
    tr.a.resize(h);
    tr.aprime.resize(h);
    for (int k = 0; k < h; ++k) {
        tr.g[k] = sigmoid(b.gate[k]);
        tr.th[k] = std::tanh(tr.z[k]);
        tr.a[k] = (1.0 - tr.g[k]) * tr.z[k] + tr.g[k] * tr.th[k];
        tr.aprime[k] = (1.0 - tr.g[k]) + tr.g[k] * (1.0 - tr.th[k] * tr.th[k]);
    }
    tr.y = e.out * tr.a + b.b_out;
    tr.diag = Eigen::VectorXd::Zero(dim);
    for (int k = 0; k < h; ++k) {
        const int p = k / mult;
        tr.diag[p] += e.out(p, k) * tr.aprime[k] * e.in(k, p);
    }
}

// Backward through one block. gy is dL/dy; returns dL/dx and accumulates
// parameter gradients (including the direct log-det terms of this block).
Eigen::VectorXd block_backward(const FlowBlock&, const EffBlock& e, int dim, int mult,
                               const BlockTrace& tr, const Eigen::VectorXd& gy, FlowBlock& gb) {
    const int h = dim * mult;
    gb.b_out += gy;

    Eigen::VectorXd ga = e.out.transpose() * gy;
    Eigen::VectorXd gz = Eigen::VectorXd::Zero(h);
    for (int k = 0; k < h; ++k) {
        const int p = k / mult;
        const double r = e.out(p, k) * e.in(k, p) / tr.diag[p];  // dlogdet/daprime_k
        const double g = tr.g[k], th = tr.th[k];
        const double daprime_dz = g * (-2.0 * th * (1.0 - th * th));
        const double daprime_dgate = -g * (1.0 - g) * th * th;
        const double da_dgate = g * (1.0 - g) * (th - tr.z[k]);
        gz[k] = ga[k] * tr.aprime[k] + r * daprime_dz;
        gb.gate[k] += ga[k] * da_dgate + r * daprime_dgate;

        // w_out gradients for hidden unit k
        // diagonal entry (exp-parametrized): data term + direct log-det term
        {
            const double geff = gy[p] * tr.a[k] + tr.aprime[k] * e.in(k, p) / tr.diag[p];
            gb.w_out(p, k) += geff * e.out(p, k);  // chain through exp
        }
        for (int j = p + 1; j < dim; ++j) gb.w_out(j, k) += gy[j] * tr.a[k];
    }
    gb.b_in += gz;

    Eigen::VectorXd gx = Eigen::VectorXd::Zero(dim);
    for (int k = 0; k < h; ++k) {
        const int p = k / mult;
        for (int j = 0; j < p; ++j) {
            gb.w_in(k, j) += gz[k] * tr.x[j];
            gx[j] += e.in(k, j) * gz[k];
        }
        {
            const double geff = gz[k] * tr.x[p] + tr.aprime[k] * e.out(p, k) / tr.diag[p];
            gb.w_in(k, p) += geff * e.in(k, p);  // chain through exp
            gx[p] += e.in(k, p) * gz[k];
        }
    }
    return gx;
}

struct SampleResult {
    double loglik;
    Eigen::VectorXd grad_input;  // only filled when requested
};

double forward_all(const FlowModel& m, const std::vector<EffBlock>& eff, const Eigen::VectorXd& q,
                   std::vector<BlockTrace>& traces) {
    traces.resize(m.blocks.size());
    Eigen::VectorXd cur = q;
    double logdet = 0.0;
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        block_forward(m.blocks[b], eff[b], m.dim, m.mult, cur, traces[b]);
        logdet += traces[b].diag.array().log().sum();
        cur = traces[b].y;
    }
    const double base =
        -0.5 * cur.squaredNorm() - 0.5 * m.dim * std::log(2.0 * std::numbers::pi);
    return base + logdet;
}

}  // namespace

void FlowGradients::setZero() {
    for (auto& b : blocks) {
        b.w_in.setZero();
        b.b_in.setZero();
        b.gate.setZero();
        b.w_out.setZero();
        b.b_out.setZero();
    }
}

void FlowGradients::axpy(double alpha, const FlowGradients& other) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].w_in += alpha * other.blocks[i].w_in;
        blocks[i].b_in += alpha * other.blocks[i].b_in;
        blocks[i].gate += alpha * other.blocks[i].gate;
        blocks[i].w_out += alpha * other.blocks[i].w_out;
        blocks[i].b_out += alpha * other.blocks[i].b_out;
    }
}

FlowGradients make_gradients(const FlowModel& m) {
    FlowGradients g;
    for (const auto& b : m.blocks) {
        FlowBlock z;
        z.w_in = Eigen::MatrixXd::Zero(b.w_in.rows(), b.w_in.cols());
        z.b_in = Eigen::VectorXd::Zero(b.b_in.size());
        z.gate = Eigen::VectorXd::Zero(b.gate.size());
        z.w_out = Eigen::MatrixXd::Zero(b.w_out.rows(), b.w_out.cols());
        z.b_out = Eigen::VectorXd::Zero(b.b_out.size());
        g.blocks.push_back(std::move(z));
    }
    return g;
}

FlowModel make_identity_flow(int dim, int mult, int n_blocks) {
    if (dim < 1) throw std::invalid_argument("flow: dim must be >= 1");
    FlowModel m;
    m.dim = dim;
    m.mult = mult;
    const int h = dim * mult;
    for (int b = 0; b < n_blocks; ++b) {
        FlowBlock blk;
        blk.w_in = Eigen::MatrixXd::Zero(h, dim);    // diag raw 0 -> eff 1
        blk.b_in = Eigen::VectorXd::Zero(h);
        blk.gate = Eigen::VectorXd::Constant(h, -40.0);  // g ~ 0: activation is identity
        blk.w_out = Eigen::MatrixXd::Constant(dim, h, 0.0);
        for (int k = 0; k < h; ++k) blk.w_out(k / mult, k) = std::log(1.0 / mult);
        blk.b_out = Eigen::VectorXd::Zero(dim);
        m.blocks.push_back(std::move(blk));
    }
    return m;
}

FlowModel make_random_flow(int dim, std::uint64_t seed, int mult, int n_blocks) {
    FlowModel m = make_identity_flow(dim, mult, n_blocks);
    m.seed = seed;
    auto rng = make_rng(derive_seed(seed, "flow-init"));
    std::normal_distribution<double> noise(0.0, 0.05);
    for (auto& blk : m.blocks) {
        for (int k = 0; k < m.hidden(); ++k) {
            const int p = k / mult;
            for (int j = 0; j <= p; ++j) blk.w_in(k, j) += noise(rng);
            for (int j = p; j < dim; ++j) blk.w_out(j, k) += noise(rng);
            blk.gate[k] = -1.0 + noise(rng);  // mostly-linear activation at init
        }
    }
    return m;
}

double flow_log_density(const FlowModel& m, const Eigen::VectorXd& q) {
    if (q.size() != m.dim) throw std::invalid_argument("flow_log_density: dim mismatch");
    std::vector<EffBlock> eff;
    for (const auto& b : m.blocks) eff.push_back(effective(b, m.dim, m.mult));
    std::vector<BlockTrace> traces;
    return forward_all(m, eff, q, traces);
}

std::vector<double> flow_log_density_batch_serial(const FlowModel& m,
                                                  const Eigen::MatrixXd& queries) {
    std::vector<EffBlock> eff;
    for (const auto& b : m.blocks) eff.push_back(effective(b, m.dim, m.mult));
    std::vector<double> out(queries.rows());
    std::vector<BlockTrace> traces;
    for (Eigen::Index i = 0; i < queries.rows(); ++i)
        out[i] = forward_all(m, eff, queries.row(i).transpose(), traces);
    return out;
}

std::vector<double> flow_log_density_batch(const FlowModel& m, const Eigen::MatrixXd& queries) {
    std::vector<EffBlock> eff;
    for (const auto& b : m.blocks) eff.push_back(effective(b, m.dim, m.mult));
    std::vector<double> out(queries.rows());
    const Eigen::Index n = queries.rows();
#pragma omp parallel
    {
        std::vector<BlockTrace> traces;
#pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < n; ++i)
            out[i] = forward_all(m, eff, queries.row(i).transpose(), traces);
    }
    return out;
}

Eigen::VectorXd flow_log_density_grad_input(const FlowModel& m, const Eigen::VectorXd& q) {
    std::vector<EffBlock> eff;
    for (const auto& b : m.blocks) eff.push_back(effective(b, m.dim, m.mult));
    std::vector<BlockTrace> traces;
    forward_all(m, eff, q, traces);
    FlowGradients scratch = make_gradients(m);
    Eigen::VectorXd gy = -traces.back().y;
    for (int b = static_cast<int>(m.blocks.size()) - 1; b >= 0; --b)
        gy = block_backward(m.blocks[b], eff[b], m.dim, m.mult, traces[b], gy, scratch.blocks[b]);
    return gy;
}

double flow_loglik_and_grads(const FlowModel& m, const Eigen::MatrixXd& x, FlowGradients& grads) {
    if (x.cols() != m.dim) throw std::invalid_argument("flow_loglik: dim mismatch");
    const Eigen::Index n = x.rows();
    if (n == 0) throw std::invalid_argument("flow_loglik: empty batch");
    std::vector<EffBlock> eff;
    for (const auto& b : m.blocks) eff.push_back(effective(b, m.dim, m.mult));

    // Fixed-size chunks summed in index order: the result does not depend on
    // the number of threads.
    constexpr Eigen::Index kChunk = 128;
    const Eigen::Index n_chunks = (n + kChunk - 1) / kChunk;
    std::vector<FlowGradients> partial(n_chunks);
    std::vector<double> partial_ll(n_chunks, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index c = 0; c < n_chunks; ++c) {
        partial[c] = make_gradients(m);
        std::vector<BlockTrace> traces;
        double ll = 0.0;
        const Eigen::Index lo = c * kChunk, hi = std::min(n, lo + kChunk);
        for (Eigen::Index i = lo; i < hi; ++i) {
            ll += forward_all(m, eff, x.row(i).transpose(), traces);
            Eigen::VectorXd gy = -traces.back().y;
            for (int b = static_cast<int>(m.blocks.size()) - 1; b >= 0; --b)
                gy = block_backward(m.blocks[b], eff[b], m.dim, m.mult, traces[b], gy,
                                    partial[c].blocks[b]);
        }
        partial_ll[c] = ll;
    }
    grads = make_gradients(m);
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index c = 0; c < n_chunks; ++c) {
        total += partial_ll[c];
        grads.axpy(inv_n, partial[c]);
    }
    return total * inv_n;
}

FlowModel fit_flow(const Eigen::MatrixXd& x, int epochs, std::uint64_t seed, double step_size,
                   int mult, int n_blocks) {
    if (x.rows() < 16) throw std::invalid_argument("fit_flow: need at least 16 samples");
    if (x.cols() < 1) throw std::invalid_argument("fit_flow: need at least 1 dimension");
    FlowModel m = make_random_flow(static_cast<int>(x.cols()), seed, mult, n_blocks);
    FlowGradients g = make_gradients(m);
    double ll = 0.0;
    for (int e = 0; e < epochs; ++e) {
        ll = flow_loglik_and_grads(m, x, g);
        if (!std::isfinite(ll))
            throw std::runtime_error("fit_flow: non-finite loss at epoch " + std::to_string(e));
        // Global-norm clipping: near-discrete inputs (duplicated or one-hot
        // rows) make the likelihood unbounded and the raw gradient explosive.
        double sq = 0.0;
        for (const auto& gb : g.blocks)
            sq += gb.w_in.squaredNorm() + gb.b_in.squaredNorm() + gb.gate.squaredNorm() +
                  gb.w_out.squaredNorm() + gb.b_out.squaredNorm();
        const double max_norm = 10.0 * std::sqrt(static_cast<double>(x.cols()));
        const double norm = std::sqrt(sq);
        const double scale = norm > max_norm ? max_norm / norm : 1.0;
        for (std::size_t b = 0; b < m.blocks.size(); ++b) {
            m.blocks[b].w_in += scale * step_size * g.blocks[b].w_in;
            m.blocks[b].b_in += scale * step_size * g.blocks[b].b_in;
            m.blocks[b].gate += scale * step_size * g.blocks[b].gate;
            m.blocks[b].w_out += scale * step_size * g.blocks[b].w_out;
            m.blocks[b].b_out += scale * step_size * g.blocks[b].b_out;
        }
    }
    m.epochs_trained = epochs;
    m.final_loglik = ll;
    return m;
}

namespace {
nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return rows;
}
Eigen::MatrixXd mat_from_json(const nlohmann::json& j) {
    Eigen::MatrixXd m(j.size(), j.empty() ? 0 : j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto row = j[i].get<std::vector<double>>();
        m.row(i) = Eigen::Map<const Eigen::VectorXd>(row.data(), row.size()).transpose();
    }
    return m;
}
}  // namespace

void save_flow(const FlowModel& m, const std::string& path) {
    nlohmann::json j;
    j["dim"] = m.dim;
    j["mult"] = m.mult;
    j["seed"] = m.seed;
    j["epochs_trained"] = m.epochs_trained;
    j["final_loglik"] = m.final_loglik;
    j["blocks"] = nlohmann::json::array();
    for (const auto& b : m.blocks) {
        nlohmann::json jb;
        jb["w_in"] = mat_to_json(b.w_in);
        jb["b_in"] = std::vector<double>(b.b_in.begin(), b.b_in.end());
        jb["gate"] = std::vector<double>(b.gate.begin(), b.gate.end());
        jb["w_out"] = mat_to_json(b.w_out);
        jb["b_out"] = std::vector<double>(b.b_out.begin(), b.b_out.end());
        j["blocks"].push_back(std::move(jb));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump() << '\n';
}

FlowModel load_flow(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    FlowModel m;
    m.dim = j.at("dim").get<int>();
    m.mult = j.at("mult").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.epochs_trained = j.at("epochs_trained").get<int>();
    m.final_loglik = j.at("final_loglik").get<double>();
    for (const auto& jb : j.at("blocks")) {
        FlowBlock b;
        b.w_in = mat_from_json(jb.at("w_in"));
        const auto bi = jb.at("b_in").get<std::vector<double>>();
        b.b_in = Eigen::Map<const Eigen::VectorXd>(bi.data(), bi.size());
        const auto ga = jb.at("gate").get<std::vector<double>>();
        b.gate = Eigen::Map<const Eigen::VectorXd>(ga.data(), ga.size());
        b.w_out = mat_from_json(jb.at("w_out"));
        const auto bo = jb.at("b_out").get<std::vector<double>>();
        b.b_out = Eigen::Map<const Eigen::VectorXd>(bo.data(), bo.size());
        m.blocks.push_back(std::move(b));
    }
    return m;
}

}  // namespace audit
