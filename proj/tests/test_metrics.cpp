#include <doctest.h>

#include <cmath>
#include <random>

#include "audit/metrics.hpp"
#include "audit/refgen.hpp"
#include "oracles.hpp"

using namespace audit;

namespace {

LabeledScores make_ls(const std::vector<int>& labels, const std::vector<double>& scores,
                      const std::vector<int>& preds = {}) {
    LabeledScores ls;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ScoredRecord e;
        e.record_id = "r" + std::to_string(i);
        e.true_membership = labels[i];
        e.score = scores[i];
        e.predicted = preds.empty() ? (scores[i] > 0.5 ? 1 : 0) : preds[i];
        ls.entries.push_back(e);
    }
    return ls;
}

LabeledScores random_ls(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> unif(0, 1);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> quant(1, 8);
    std::vector<int> labels(n);
    std::vector<double> scores(n);
    labels[0] = 0;
    labels[1] = 1;  // both classes present
    for (int i = 2; i < n; ++i) labels[i] = coin(rng);
    // quantized scores produce plenty of ties
    const int q = quant(rng);
    for (int i = 0; i < n; ++i) scores[i] = std::floor(unif(rng) * q) / q;
    return make_ls(labels, scores);
}

}  // namespace

TEST_CASE("accuracy hand cases") {
    CHECK(accuracy(make_ls({1, 1, 0, 0}, {0, 0, 0, 0}, {1, 1, 0, 0})) == 1.0);
    CHECK(accuracy(make_ls({1, 1, 0, 0}, {0, 0, 0, 0}, {1, 0, 0, 1})) == 0.5);
    CHECK(accuracy(make_ls({1, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 1, 1})) == 0.0);
    CHECK_THROWS(accuracy(LabeledScores{}));
}

TEST_CASE("tpr_fpr hand cases") {
    auto [tpr1, fpr1] = tpr_fpr(make_ls({1, 0, 1, 0}, {0, 0, 0, 0}, {1, 0, 1, 0}));
    CHECK(tpr1 == 1.0);
    CHECK(fpr1 == 0.0);
    auto [tpr2, fpr2] = tpr_fpr(make_ls({1, 0, 1, 0}, {0, 0, 0, 0}, {1, 1, 1, 1}));
    CHECK(tpr2 == 1.0);
    CHECK(fpr2 == 1.0);
    auto [tpr3, fpr3] = tpr_fpr(make_ls({1, 0, 1, 0}, {0, 0, 0, 0}, {1, 1, 0, 0}));
    CHECK(tpr3 == 0.5);
    CHECK(fpr3 == 0.5);
    CHECK_THROWS(tpr_fpr(make_ls({1, 1}, {0, 0}, {1, 0})));
}

TEST_CASE("auroc hand cases") {
    CHECK(auroc(make_ls({1, 1, 0, 0}, {1, 1, 0, 0})) == 1.0);
    CHECK(auroc(make_ls({1, 1, 0, 0}, {0.3, 0.3, 0.3, 0.3})) == 0.5);
    CHECK(auroc(make_ls({1, 1, 0, 0}, {0.9, 0.4, 0.6, 0.1})) == 0.75);
    CHECK_THROWS(auroc(make_ls({1, 1}, {0.5, 0.2})));
}

TEST_CASE("auroc matches the pair-count oracle on 500 random sets") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> nn(2, 200);
    for (int trial = 0; trial < 500; ++trial) {
        LabeledScores ls = random_ls(rng, nn(rng));
        CHECK(auroc(ls) == oracles::auroc_pairs(ls));
    }
}

TEST_CASE("auroc symmetry and rank invariance") {
    std::mt19937_64 rng(22);
    LabeledScores ls = random_ls(rng, 80);
    bool has_tie = false;
    for (std::size_t i = 0; i < ls.entries.size() && !has_tie; ++i)
        for (std::size_t j = i + 1; j < ls.entries.size(); ++j)
            if (ls.entries[i].score == ls.entries[j].score) {
                has_tie = true;
                break;
            }
    LabeledScores neg = ls, mono = ls;
    for (auto& e : neg.entries) e.score = -e.score;
    for (auto& e : mono.entries) e.score = std::exp(e.score);
    if (!has_tie) CHECK(auroc(ls) == doctest::Approx(1.0 - auroc(neg)));
    CHECK(auroc(mono) == auroc(ls));
}

TEST_CASE("strict-pair auroc penalizes ties") {
    LabeledScores ls = make_ls({1, 0}, {0.5, 0.5});
    CHECK(auroc(ls) == 0.5);
    CHECK(auroc(ls, /*tie_corrected=*/false) == 0.0);
}

TEST_CASE("bootstrap") {
    std::mt19937_64 rng(23);
    LabeledScores ls = random_ls(rng, 60);
    SUBCASE("deterministic given seed") {
        auto a = bootstrap(ls, [](const LabeledScores& s) { return auroc(s); }, "auroc", 50, 7);
        auto b = bootstrap(ls, [](const LabeledScores& s) { return auroc(s); }, "auroc", 50, 7);
        CHECK(a.boot_mean == b.boot_mean);
        CHECK(a.boot_stderr == b.boot_stderr);
        CHECK(a.replicates == 50);
        CHECK(a.name == "auroc");
    }
    SUBCASE("constant metric has zero spread") {
        auto e = bootstrap(ls, [](const LabeledScores&) { return 0.25; }, "const", 40, 3);
        CHECK(e.boot_mean == 0.25);
        CHECK(e.boot_stderr == 0.0);
    }
    SUBCASE("boot mean near point estimate") {
        int hits = 0;
        for (int trial = 0; trial < 200; ++trial) {
            LabeledScores t = random_ls(rng, 60);
            auto e = bootstrap(t, [](const LabeledScores& s) { return auroc(s); }, "auroc", 100,
                               trial);
            if (std::abs(e.boot_mean - e.point) <= 3.0 * std::max(e.boot_stderr, 1e-9)) ++hits;
        }
        CHECK(hits >= 190);
    }
}

TEST_CASE("nrmse_pair hand cases") {
    Eigen::VectorXd norm1 = Eigen::VectorXd::Constant(1, 2.0);
    Eigen::MatrixXd a(1, 1), b(1, 1);
    a << 0;
    b << 1;
    CHECK(nrmse_pair(a, a, norm1) == 0.0);
    CHECK(nrmse_pair(a, b, norm1) == doctest::Approx(0.5));

    Eigen::MatrixXd c(2, 2), d(2, 2);
    c << 0, 0, 0, 0;
    d << 1, 1, 2, 2;  // constant gaps 1 and 2
    Eigen::VectorXd norms(2);
    norms << 1, 2;
    CHECK(nrmse_pair(c, d, norms) == doctest::Approx(1.0));

    Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    CHECK_THROWS(nrmse_pair(a, b, zero));
}

TEST_CASE("nrmse_min") {
    FeatureSchema s;
    s.time_points = 1;
    s.grid_step_minutes = 10;
    s.features.push_back({"f0", "au", -100, 100});
    auto one_rec = [&](double v, const std::string& id) {
        PatientRecord r;
        r.record_id = id;
        r.patient_id = id;
        r.timeseries = Eigen::MatrixXd::Constant(1, 1, v);
        return r;
    };
    Dataset d1, d2;
    d1.schema = d2.schema = s;
    d1.records.push_back(one_rec(0, "a"));
    d2.records.push_back(one_rec(1, "b"));
    d2.records.push_back(one_rec(3, "c"));
    // range over union = 3, min(|0-1|, |0-3|)/3 = 1/3
    CHECK(nrmse_min(d1, d2) == doctest::Approx(1.0 / 3.0));
    CHECK(nrmse_min(d2, d2) == 0.0);
}

TEST_CASE("nrmse parallel equals serial") {
    FeatureSchema schema = make_process_schema(3, 8);
    ProcessSpec ps = ProcessSpec::standard(3, 8, 31);
    Dataset d1 = sample_process(ps, 20, schema, Split::train, "a");
    ps.seed = 32;
    Dataset d2 = sample_process(ps, 35, schema, Split::holdout, "b");
    auto fast = nrmse_min_per_record(d1, d2);
    auto slow = nrmse_min_per_record_serial(d1, d2);
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == slow[i]);
}

TEST_CASE("overfit_score") {
    FeatureSchema schema = make_process_schema(3, 8);
    ProcessSpec ps = ProcessSpec::standard(3, 8, 41);
    Dataset train = sample_process(ps, 30, schema, Split::train, "tr");
    ps.seed = 42;
    Dataset holdout = sample_process(ps, 30, schema, Split::holdout, "ho");

    SUBCASE("copying train is maximally overfit") {
        Dataset synth = train;
        for (auto& r : synth.records) r.record_id = "s" + r.record_id;
        const double score = overfit_score(synth, train, holdout);
        CHECK(score >= 0.0);
        CHECK(score == doctest::Approx(nrmse_min(holdout, synth)));
    }
    SUBCASE("sign flips when train and holdout swap") {
        ps.seed = 43;
        Dataset synth = sample_process(ps, 40, schema, Split::synthetic, "s");
        const double a = overfit_score(synth, train, holdout);
        const double b = overfit_score(synth, holdout, train);
        CHECK(a == doctest::Approx(-b));
    }
    SUBCASE("independent synth scores near zero") {
        ps.seed = 44;
        Dataset synth = sample_process(ps, 60, schema, Split::synthetic, "s");
        auto est = overfit_score_bootstrap(synth, train, holdout, 100, 9);
        CHECK(std::abs(est.point) <= 5.0 * std::max(est.boot_stderr, 1e-3));
    }
}

TEST_CASE("spearman") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == doctest::Approx(-1.0));
    CHECK(std::abs(spearman({1, 2, 3, 4, 5, 6}, {3, 1, 4, 1, 5, 9})) <= 1.0);
}
