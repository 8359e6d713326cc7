#include <doctest.h>

#include <cmath>
#include <random>

#include "audit/preprocess.hpp"
#include "temp_dir.hpp"

using namespace audit;

namespace {

FeatureSchema vitals_schema(int t = 4) {
    FeatureSchema s;
    s.time_points = t;
    s.grid_step_minutes = 10;
    s.features.push_back({"heart_rate", "bpm", 1.0, 295.0});
    s.features.push_back({"temperature", "C", 26.1, 42.3});
    return s;
}

}  // namespace

TEST_CASE("clamp_outliers marks out-of-bound values missing") {
    Dataset ds;
    ds.schema = vitals_schema(2);
    PatientRecord r;
    r.record_id = "a";
    r.patient_id = "a";
    r.timeseries.resize(2, 2);
    r.timeseries << 310.0, 80.0,  // heart rate: 310 out of [1, 295]
        36.6, 25.0;               // temperature: 25 below 26.1
    ds.records.push_back(r);

    Dataset out = clamp_outliers(ds);
    CHECK(std::isnan(out.records[0].timeseries(0, 0)));
    CHECK(out.records[0].timeseries(0, 1) == 80.0);
    CHECK(out.records[0].timeseries(1, 0) == 36.6);
    CHECK(std::isnan(out.records[0].timeseries(1, 1)));
}

TEST_CASE("clamp_outliers is identity on in-range data") {
    Dataset ds;
    ds.schema = vitals_schema(3);
    PatientRecord r;
    r.record_id = "a";
    r.patient_id = "a";
    r.timeseries = Eigen::MatrixXd::Constant(2, 3, 37.0);
    ds.records.push_back(r);
    CHECK(clamp_outliers(ds).records[0].timeseries == ds.records[0].timeseries);
}

TEST_CASE("resample_forward_fill") {
    FeatureSchema s = vitals_schema(3);
    SUBCASE("single observation at t=0 fills forward") {
        PatientRecord r = resample_forward_fill({{0.0, 0, 5.0}}, s);
        CHECK(r.timeseries(0, 0) == 5.0);
        CHECK(r.timeseries(0, 1) == 5.0);
        CHECK(r.timeseries(0, 2) == 5.0);
        CHECK(std::isnan(r.timeseries(1, 0)));  // untouched feature stays missing
    }
    SUBCASE("step function") {
        PatientRecord r = resample_forward_fill({{0.0, 0, 1.0}, {10.0, 0, 2.0}}, s);
        CHECK(r.timeseries(0, 0) == 1.0);
        CHECK(r.timeseries(0, 1) == 2.0);
        CHECK(r.timeseries(0, 2) == 2.0);
    }
    SUBCASE("leading gap stays missing") {
        PatientRecord r = resample_forward_fill({{10.0, 0, 4.0}}, s);
        CHECK(std::isnan(r.timeseries(0, 0)));
        CHECK(r.timeseries(0, 1) == 4.0);
        CHECK(r.timeseries(0, 2) == 4.0);
    }
    SUBCASE("out-of-window time is rejected") {
        CHECK_THROWS(resample_forward_fill({{-1.0, 0, 1.0}}, s));
        CHECK_THROWS(resample_forward_fill({{30.0, 0, 1.0}}, s));
    }
}

TEST_CASE("fit_imputer computes per-feature medians") {
    Dataset ds;
    ds.schema = vitals_schema(3);
    PatientRecord r;
    r.record_id = "a";
    r.patient_id = "a";
    const double nan = std::nan("");
    r.timeseries.resize(2, 3);
    r.timeseries << 1.0, 2.0, 3.0,  // odd count -> 2
        1.0, 3.0, nan;              // even count -> 2
    ds.records.push_back(r);

    ImputationModel m = fit_imputer(ds);
    CHECK(m.per_feature_median[0] == 2.0);
    CHECK(m.per_feature_median[1] == 2.0);
}

TEST_CASE("fit_imputer names a fully-missing feature") {
    Dataset ds;
    ds.schema = vitals_schema(2);
    PatientRecord r;
    r.record_id = "a";
    r.patient_id = "a";
    const double nan = std::nan("");
    r.timeseries.resize(2, 2);
    r.timeseries << 1.0, 2.0, nan, nan;
    ds.records.push_back(r);
    try {
        fit_imputer(ds);
        FAIL("expected fit error");
    } catch (const std::exception& ex) {
        CHECK(std::string(ex.what()).find("temperature") != std::string::npos);
    }
}

TEST_CASE("impute fills missing cells with the feature median") {
    ImputationModel m;
    m.per_feature_median.resize(2);
    m.per_feature_median << 2.0, 7.0;
    PatientRecord r;
    r.record_id = "a";
    r.patient_id = "a";
    const double nan = std::nan("");
    r.timeseries.resize(2, 3);
    r.timeseries << nan, 4.0, 4.0, nan, nan, nan;
    PatientRecord out = impute(r, m);
    CHECK(out.timeseries(0, 0) == 2.0);
    CHECK(out.timeseries(0, 1) == 4.0);
    CHECK(out.timeseries(1, 0) == 7.0);
    CHECK(out.timeseries(1, 2) == 7.0);
}

TEST_CASE("pca on collinear points") {
    Eigen::MatrixXd x(3, 2);
    x << 0, 0, 1, 1, 2, 2;
    PcaModel m = fit_pca_matrix(x, 1);
    CHECK(m.components(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(m.components(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(m.explained_variance_ratio[0] == doctest::Approx(1.0));

    // centered projection of (2,2): (1,1)·(1/sqrt2,1/sqrt2) = sqrt2
    Eigen::VectorXd q(2);
    q << 2, 2;
    CHECK(apply_pca_vector(m, q)[0] == doctest::Approx(std::sqrt(2.0)));

    // the mean itself projects to zero
    CHECK(apply_pca_vector(m, m.mean)[0] == doctest::Approx(0.0));
}

TEST_CASE("full-rank pca reconstructs the data") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> norm(0, 1);
    Eigen::MatrixXd x(30, 6);
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 6; ++j) x(i, j) = norm(rng);
    PcaModel m = fit_pca_matrix(x, 6);
    Eigen::MatrixXd proj = apply_pca_matrix(m, x);
    Eigen::MatrixXd rec = (proj * m.components).rowwise() + m.mean.transpose();
    CHECK((rec - x).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pca properties against an eigendecomposition oracle") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> norm(0, 1);
    Eigen::MatrixXd x(50, 10);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 10; ++j) x(i, j) = norm(rng) * (1.0 + j);
    PcaModel m = fit_pca_matrix(x, 10);

    // ratios non-increasing
    for (int k = 1; k < 10; ++k)
        CHECK(m.explained_variance_ratio[k] <= m.explained_variance_ratio[k - 1] + 1e-12);

    // eigenvalues match brute-force covariance eigendecomposition
    Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd cov = c.transpose() * c / (x.rows() - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    for (int k = 0; k < 10; ++k)
        CHECK(m.explained_variance[k] == doctest::Approx(es.eigenvalues()[9 - k]).epsilon(1e-9));

    // orthonormal rows
    Eigen::MatrixXd gram = m.components * m.components.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-9);

    // projection has uncorrelated columns with variances = eigenvalues
    Eigen::MatrixXd p = apply_pca_matrix(m, x);
    Eigen::MatrixXd pc = p.rowwise() - p.colwise().mean();
    Eigen::MatrixXd pcov = pc.transpose() * pc / (p.rows() - 1.0);
    for (int a = 0; a < 10; ++a)
        for (int b = 0; b < 10; ++b) {
            if (a == b)
                CHECK(pcov(a, a) == doctest::Approx(m.explained_variance[a]).epsilon(1e-9));
            else
                CHECK(std::abs(pcov(a, b)) < 1e-8 * pcov.diagonal().maxCoeff());
        }
}

TEST_CASE("pca component count is clamped to the feasible bound") {
    Eigen::MatrixXd x(3, 2);
    x << 0, 0, 1, 2, 2, 1;
    PcaModel m = fit_pca_matrix(x, 40);
    CHECK(m.n_components() == 2);
}

TEST_CASE("pca json round trip") {
    TempDir dir;
    Eigen::MatrixXd x(5, 3);
    x << 1, 2, 3, 4, 5, 6, 7, 1, 2, 0, 4, 4, 2, 2, 9;
    PcaModel m = fit_pca_matrix(x, 2);
    save_pca(m, dir.file("p.json"));
    PcaModel back = load_pca(dir.file("p.json"));
    CHECK(back.mean == m.mean);
    CHECK(back.components == m.components);
    CHECK(back.explained_variance == m.explained_variance);
}
