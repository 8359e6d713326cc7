#include "audit/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "audit/rng.hpp"
#include "json.hpp"

namespace audit {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double min_dist_single(const Eigen::VectorXd& x, const Eigen::MatrixXd& points, DistanceKind kind,
                       int feature_count) {
    if (points.rows() == 0) throw std::invalid_argument("attack: empty synthetic set");
    Eigen::MatrixXd q(1, x.size());
    q.row(0) = x.transpose();
    return min_distances_serial(q, points, kind, feature_count)[0];
}

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return rows;
}

Eigen::MatrixXd mat_from_json(const nlohmann::json& j, Eigen::Index cols_hint = 0) {
    if (j.empty()) return Eigen::MatrixXd(0, cols_hint);
    Eigen::MatrixXd m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto row = j[i].get<std::vector<double>>();
        m.row(i) = Eigen::Map<const Eigen::VectorXd>(row.data(), row.size()).transpose();
    }
    return m;
}

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.begin(), v.end());
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

}  // namespace

std::string to_string(AttackKind k) {
    switch (k) {
        case AttackKind::mc_theta: return "mc_theta";
        case AttackKind::ganleak_chen: return "ganleak_chen";
        case AttackKind::ganleak_breugel: return "ganleak_breugel";
        case AttackKind::ganleak_dtw: return "ganleak_dtw";
        case AttackKind::ganleak_cal: return "ganleak_cal";
        case AttackKind::domias_eq1: return "domias_eq1";
        case AttackKind::domias_kde: return "domias_kde";
        case AttackKind::domias_bnaf: return "domias_bnaf";
        case AttackKind::logan_pb: return "logan_pb";
    }
    return "unknown";
}

AttackKind attack_from_string(const std::string& s) {
    for (AttackKind k : all_attack_kinds())
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown attack '" + s + "'");
}

std::vector<AttackKind> all_attack_kinds() {
    return {AttackKind::mc_theta,     AttackKind::ganleak_chen, AttackKind::ganleak_breugel,
            AttackKind::ganleak_dtw,  AttackKind::ganleak_cal,  AttackKind::domias_eq1,
            AttackKind::domias_kde,   AttackKind::domias_bnaf,  AttackKind::logan_pb};
}

AttackSpec AttackSpec::defaults(AttackKind kind, bool timeseries_mode) {
    AttackSpec s;
    s.kind = kind;
    s.uses_aux = kind == AttackKind::ganleak_cal || kind == AttackKind::domias_kde ||
                 kind == AttackKind::domias_bnaf || kind == AttackKind::logan_pb;
    switch (kind) {
        case AttackKind::mc_theta:
        case AttackKind::ganleak_chen:
        case AttackKind::ganleak_breugel:
        case AttackKind::ganleak_cal:
        case AttackKind::domias_eq1:
        case AttackKind::domias_kde:
            s.uses_pca = timeseries_mode;
            break;
        case AttackKind::domias_bnaf:
            // The flow is intractable on raw F*T inputs at audit scale, so the
            // projected representation is the practical default here too.
            s.uses_pca = timeseries_mode;
            break;
        case AttackKind::ganleak_dtw:
        case AttackKind::logan_pb:
            s.uses_pca = false;
            break;
    }
    s.distance = kind == AttackKind::ganleak_dtw ? DistanceKind::dtw : DistanceKind::euclidean;
    if (kind == AttackKind::ganleak_dtw && !timeseries_mode)
        throw std::invalid_argument("ganleak_dtw requires time-series inputs");
    // Unconstrained DTW over every synthetic record is quadratically expensive and
    // adds nothing to attack power; a modest warping band is the practical default.
    if (kind == AttackKind::ganleak_dtw) s.dtw_band = 5;
    return s;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    if (x.rows() == 0) throw std::invalid_argument("Standardizer: empty input");
    Standardizer s;
    s.mean = x.colwise().mean();
    s.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var =
            (x.col(j).array() - s.mean[j]).square().sum() / std::max<double>(1, x.rows() - 1);
        s.scale[j] = std::max(std::sqrt(var), 1e-9);
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

double attack_mc(const Eigen::VectorXd& x, const Eigen::MatrixXd& synthetic, double theta,
                 DistanceKind kind, int feature_count) {
    if (synthetic.rows() == 0) throw std::invalid_argument("attack_mc: empty synthetic set");
    Eigen::Index count = 0;
    std::span<const double> xs(x.data(), x.size());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> p = synthetic;
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
        std::span<const double> pj(p.data() + j * p.cols(), p.cols());
        if (vec_distance(kind, xs, pj, feature_count) <= theta) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(synthetic.rows());
}

double attack_ganleak_chen(const Eigen::VectorXd& x, const Eigen::MatrixXd& synthetic,
                           DistanceKind kind, int feature_count) {
    // min over the 5-nearest set == the 1-nearest distance; negated so that
    // higher score = more member-like.
    return -min_dist_single(x, synthetic, kind, feature_count);
}

double attack_ganleak_breugel(const Eigen::VectorXd& x, const Eigen::MatrixXd& synthetic,
                              DistanceKind kind, int feature_count) {
    return std::exp(-min_dist_single(x, synthetic, kind, feature_count));
}

double attack_ganleak_cal(const Eigen::VectorXd& x, const Eigen::MatrixXd& synthetic,
                          const Eigen::MatrixXd& aux, DistanceKind kind, int feature_count) {
    const double ds = min_dist_single(x, synthetic, kind, feature_count);
    const double dr = min_dist_single(x, aux, kind, feature_count);
    return sigmoid(-(ds - dr));
}

double attack_domias_eq1(const Eigen::VectorXd& x, const KdeModel& g_density) {
    return kde_log_density(g_density, x);
}

double attack_domias_ratio_kde(const Eigen::VectorXd& x, const KdeModel& g, const KdeModel& r) {
    return kde_log_density(g, x) - kde_log_density(r, x);
}

double attack_domias_ratio_flow(const Eigen::VectorXd& x, const FlowModel& g, const FlowModel& r) {
    return flow_log_density(g, x) - flow_log_density(r, x);
}

double attack_logan_pb(const Eigen::VectorXd& x, const ClassifierModel& m) {
    return sigmoid(classifier_logit(m, x));
}

Eigen::MatrixXd FittedAttack::represent(const Eigen::MatrixXd& raw) const {
    Eigen::MatrixXd x = pca ? apply_pca_matrix(*pca, raw) : raw;
    if (standardizer) x = standardizer->apply(x);
    return x;
}

std::vector<double> FittedAttack::score(const Eigen::MatrixXd& raw_queries) const {
    const Eigen::MatrixXd q = represent(raw_queries);
    const int fc = spec.distance == DistanceKind::dtw ? feature_count : 1;
    switch (spec.kind) {
        case AttackKind::mc_theta: {
            std::vector<double> out(q.rows());
            const Eigen::Index nq = q.rows();
#pragma omp parallel for schedule(dynamic, 4)
            for (Eigen::Index i = 0; i < nq; ++i)
                out[i] = attack_mc(q.row(i).transpose(), synth, theta, spec.distance, fc);
            return out;
        }
        case AttackKind::ganleak_chen: {
            std::vector<double> mins = min_distances(q, synth, spec.distance, fc, spec.dtw_band);
            for (auto& v : mins) v = -v;
            return mins;
        }
        case AttackKind::ganleak_breugel:
        case AttackKind::ganleak_dtw: {
            std::vector<double> mins = min_distances(q, synth, spec.distance, fc, spec.dtw_band);
            for (auto& v : mins) v = std::exp(-v);
            return mins;
        }
        case AttackKind::ganleak_cal: {
            std::vector<double> ds = min_distances(q, synth, spec.distance, fc, spec.dtw_band);
            std::vector<double> dr = min_distances(q, aux, spec.distance, fc, spec.dtw_band);
            std::vector<double> out(ds.size());
            for (std::size_t i = 0; i < ds.size(); ++i) out[i] = sigmoid(-(ds[i] - dr[i]));
            return out;
        }
        case AttackKind::domias_eq1:
            return kde_log_density_batch(*g_kde, q);
        case AttackKind::domias_kde: {
            std::vector<double> pg = kde_log_density_batch(*g_kde, q);
            std::vector<double> pr = kde_log_density_batch(*r_kde, q);
            for (std::size_t i = 0; i < pg.size(); ++i) pg[i] -= pr[i];
            return pg;
        }
        case AttackKind::domias_bnaf: {
            std::vector<double> pg = flow_log_density_batch(*g_flow, q);
            std::vector<double> pr = flow_log_density_batch(*r_flow, q);
            for (std::size_t i = 0; i < pg.size(); ++i) pg[i] -= pr[i];
            return pg;
        }
        case AttackKind::logan_pb:
            return classifier_score_batch(*classifier, q);
    }
    throw std::logic_error("unreachable attack kind");
}

FittedAttack fit_attack(const AttackSpec& spec, const Eigen::MatrixXd& synth_raw,
                        const std::optional<Eigen::MatrixXd>& aux_raw,
                        const std::optional<PcaModel>& pca, int feature_count,
                        const std::optional<Eigen::MatrixXd>& theta_candidates_raw) {
    if (spec.uses_aux && !aux_raw)
        throw std::invalid_argument("fit_attack: attack '" + to_string(spec.kind) +
                                    "' requires an auxiliary dataset");
    if (!spec.uses_aux && aux_raw)
        throw std::invalid_argument("fit_attack: attack '" + to_string(spec.kind) +
                                    "' does not take an auxiliary dataset");
    if (spec.uses_pca && !pca)
        throw std::invalid_argument("fit_attack: spec requires a PCA model");
    if (synth_raw.rows() == 0) throw std::invalid_argument("fit_attack: empty synthetic set");

    FittedAttack a;
    a.spec = spec;
    a.feature_count = feature_count;
    if (spec.uses_pca) a.pca = *pca;

    auto project = [&](const Eigen::MatrixXd& x) {
        return spec.uses_pca ? apply_pca_matrix(*pca, x) : x;
    };

    Eigen::MatrixXd synth = project(synth_raw);
    Eigen::MatrixXd aux;
    if (spec.uses_aux) aux = project(*aux_raw);

    // z-scoring for gradient-trained models; fitted on synthetic (pooled with
    // aux for the classifier) and shared across every set the attack touches.
    if (spec.kind == AttackKind::domias_bnaf) {
        a.standardizer = Standardizer::fit(synth);
    } else if (spec.kind == AttackKind::logan_pb) {
        Eigen::MatrixXd pooled(synth.rows() + aux.rows(), synth.cols());
        pooled.topRows(synth.rows()) = synth;
        pooled.bottomRows(aux.rows()) = aux;
        a.standardizer = Standardizer::fit(pooled);
    }
    if (a.standardizer) {
        synth = a.standardizer->apply(synth);
        if (spec.uses_aux) aux = a.standardizer->apply(aux);
    }
    a.synth = synth;
    if (spec.uses_aux) a.aux = aux;

    if (spec.distance == DistanceKind::dtw && spec.dtw_synth_cap > 0 &&
        a.synth.rows() > spec.dtw_synth_cap) {
        // Nearest-neighbor dtw scans are the cost hotspot of the battery; a seeded
        // subsample keeps large cells tractable without biasing the score direction.
        auto rng = make_rng(derive_seed(spec.rng_seed, "dtw-synth-subsample"));
        std::vector<Eigen::Index> idx(a.synth.rows());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        Eigen::MatrixXd sub(spec.dtw_synth_cap, a.synth.cols());
        for (int i = 0; i < spec.dtw_synth_cap; ++i) sub.row(i) = a.synth.row(idx[i]);
        a.synth = std::move(sub);
    }

    auto flow_fit_input = [&](const Eigen::MatrixXd& x, std::uint64_t salt) {
        if (spec.flow_fit_cap <= 0 || x.rows() <= spec.flow_fit_cap) return x;
        auto rng = make_rng(derive_seed(spec.rng_seed, "flow-subsample", salt));
        std::vector<Eigen::Index> idx(x.rows());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        Eigen::MatrixXd sub(spec.flow_fit_cap, x.cols());
        for (int i = 0; i < spec.flow_fit_cap; ++i) sub.row(i) = x.row(idx[i]);
        return sub;
    };

    const int fc = spec.distance == DistanceKind::dtw ? feature_count : 1;
    switch (spec.kind) {
        case AttackKind::mc_theta: {
            const Eigen::MatrixXd cand =
                theta_candidates_raw ? [&] {
                    Eigen::MatrixXd c = project(*theta_candidates_raw);
                    return c;
                }()
                                     : a.synth;
            a.theta = mc_threshold(cand, a.synth, spec.distance, fc);
            break;
        }
        case AttackKind::ganleak_chen:
        case AttackKind::ganleak_breugel:
        case AttackKind::ganleak_dtw:
        case AttackKind::ganleak_cal:
            break;  // distance attacks carry only the point sets
        case AttackKind::domias_eq1:
            a.g_kde = fit_kde(a.synth);
            break;
        case AttackKind::domias_kde:
            a.g_kde = fit_kde(a.synth);
            a.r_kde = fit_kde(a.aux);
            break;
        case AttackKind::domias_bnaf:
            a.g_flow = fit_flow(flow_fit_input(a.synth, 1), spec.flow_epochs,
                                derive_seed(spec.rng_seed, "flow-g"));
            a.r_flow = fit_flow(flow_fit_input(a.aux, 2), spec.flow_epochs,
                                derive_seed(spec.rng_seed, "flow-r"));
            break;
        case AttackKind::logan_pb:
            a.classifier = train_logan_classifier(a.synth, a.aux, spec.clf_epochs,
                                                  derive_seed(spec.rng_seed, "logan"));
            break;
    }
    return a;
}

void save_attack(const FittedAttack& a, const std::string& path) {
    nlohmann::json j;
    j["kind"] = to_string(a.spec.kind);
    j["uses_aux"] = a.spec.uses_aux;
    j["uses_pca"] = a.spec.uses_pca;
    j["distance"] = a.spec.distance == DistanceKind::dtw ? "dtw" : "euclidean";
    j["dtw_band"] = a.spec.dtw_band;
    j["rng_seed"] = a.spec.rng_seed;
    j["feature_count"] = a.feature_count;
    j["theta"] = a.theta;
    j["synth"] = mat_to_json(a.synth);
    j["aux"] = mat_to_json(a.aux);
    if (a.standardizer) {
        j["standardizer"] = {{"mean", vec_to_json(a.standardizer->mean)},
                             {"scale", vec_to_json(a.standardizer->scale)}};
    }
    if (a.pca) {
        const std::string tmp = path + ".pca";
        save_pca(*a.pca, tmp);
        std::ifstream in(tmp);
        nlohmann::json jp;
        in >> jp;
        j["pca"] = jp;
        std::remove(tmp.c_str());
    }
    if (a.g_kde)
        j["g_kde"] = {{"points", mat_to_json(a.g_kde->points)},
                      {"bandwidth", vec_to_json(a.g_kde->bandwidth)},
                      {"log_norm_const", a.g_kde->log_norm_const}};
    if (a.r_kde)
        j["r_kde"] = {{"points", mat_to_json(a.r_kde->points)},
                      {"bandwidth", vec_to_json(a.r_kde->bandwidth)},
                      {"log_norm_const", a.r_kde->log_norm_const}};
    auto flow_json = [&](const FlowModel& f) {
        const std::string tmp = path + ".flow";
        save_flow(f, tmp);
        std::ifstream in(tmp);
        nlohmann::json jf;
        in >> jf;
        std::remove(tmp.c_str());
        return jf;
    };
    if (a.g_flow) j["g_flow"] = flow_json(*a.g_flow);
    if (a.r_flow) j["r_flow"] = flow_json(*a.r_flow);
    if (a.classifier) {
        const auto& c = *a.classifier;
        j["classifier"] = {{"w1", mat_to_json(c.w1)}, {"b1", vec_to_json(c.b1)},
                           {"w2", mat_to_json(c.w2)}, {"b2", vec_to_json(c.b2)},
                           {"w3", vec_to_json(c.w3)}, {"b3", c.b3}};
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump() << '\n';
}

FittedAttack load_attack(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    FittedAttack a;
    a.spec.kind = attack_from_string(j.at("kind").get<std::string>());
    a.spec.uses_aux = j.at("uses_aux").get<bool>();
    a.spec.uses_pca = j.at("uses_pca").get<bool>();
    a.spec.distance = j.at("distance").get<std::string>() == "dtw" ? DistanceKind::dtw
                                                                   : DistanceKind::euclidean;
    a.spec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    a.spec.dtw_band = j.value("dtw_band", -1);
    a.feature_count = j.at("feature_count").get<int>();
    a.theta = j.at("theta").get<double>();
    a.synth = mat_from_json(j.at("synth"));
    a.aux = mat_from_json(j.at("aux"), a.synth.cols());
    if (j.contains("standardizer")) {
        Standardizer s;
        s.mean = vec_from_json(j["standardizer"]["mean"]);
        s.scale = vec_from_json(j["standardizer"]["scale"]);
        a.standardizer = s;
    }
    if (j.contains("pca")) {
        const std::string tmp = path + ".pca.tmp";
        std::ofstream out(tmp);
        out << j["pca"].dump();
        out.close();
        a.pca = load_pca(tmp);
        std::remove(tmp.c_str());
    }
    auto kde_from = [](const nlohmann::json& jk) {
        KdeModel m;
        m.points = mat_from_json(jk.at("points"));
        m.bandwidth = vec_from_json(jk.at("bandwidth"));
        m.log_norm_const = jk.at("log_norm_const").get<double>();
        return m;
    };
    if (j.contains("g_kde")) a.g_kde = kde_from(j["g_kde"]);
    if (j.contains("r_kde")) a.r_kde = kde_from(j["r_kde"]);
    auto flow_from = [&](const nlohmann::json& jf) {
        const std::string tmp = path + ".flow.tmp";
        std::ofstream out(tmp);
        out << jf.dump();
        out.close();
        FlowModel f = load_flow(tmp);
        std::remove(tmp.c_str());
        return f;
    };
    if (j.contains("g_flow")) a.g_flow = flow_from(j["g_flow"]);
    if (j.contains("r_flow")) a.r_flow = flow_from(j["r_flow"]);
    if (j.contains("classifier")) {
        ClassifierModel c;
        c.w1 = mat_from_json(j["classifier"]["w1"]);
        c.b1 = vec_from_json(j["classifier"]["b1"]);
        c.w2 = mat_from_json(j["classifier"]["w2"]);
        c.b2 = vec_from_json(j["classifier"]["b2"]);
        c.w3 = vec_from_json(j["classifier"]["w3"]);
        c.b3 = j["classifier"]["b3"].get<double>();
        a.classifier = c;
    }
    return a;
}

}  // namespace audit
