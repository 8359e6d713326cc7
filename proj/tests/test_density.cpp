#include <doctest.h>

#include <cmath>
#include <random>

#include "audit/density.hpp"
#include "oracles.hpp"

using namespace audit;

TEST_CASE("scott bandwidth hand case") {
    Eigen::MatrixXd x(2, 1);
    x << 0, 2;
    KdeModel m = fit_kde(x);
    // unbiased sigma = sqrt(2), h = sqrt(2) * 2^(-1/5)
    CHECK(m.bandwidth[0] == doctest::Approx(std::sqrt(2.0) * std::pow(2.0, -0.2)));
}

TEST_CASE("constant dimension gets the floor bandwidth") {
    Eigen::MatrixXd x(5, 2);
    x << 1, 7, 2, 7, 3, 7, 4, 7, 5, 7;
    KdeModel m = fit_kde(x);
    CHECK(m.bandwidth[1] > 0);
    CHECK(m.bandwidth[1] == doctest::Approx(1e-6 * 1e-12));  // zero range
    Eigen::VectorXd q(2);
    q << 3, 7;
    CHECK(std::isfinite(kde_log_density(m, q)));
}

TEST_CASE("scott bandwidth near n^(-0.2) on a standard normal sample") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> norm(0, 1);
    Eigen::MatrixXd x(100, 1);
    for (int i = 0; i < 100; ++i) x(i, 0) = norm(rng);
    KdeModel m = fit_kde(x);
    const double target = std::pow(100.0, -0.2);
    CHECK(m.bandwidth[0] == doctest::Approx(target).epsilon(0.2));
}

TEST_CASE("kernel peak value") {
    Eigen::MatrixXd x(2, 1);
    x << 0, 1000;  // the far point contributes ~0 at q=0
    KdeModel m = fit_kde(x);
    m.bandwidth[0] = 1.0;
    m.log_norm_const = std::log(0.5) - std::log(std::sqrt(2.0 * M_PI));
    Eigen::VectorXd q(1);
    q << 0;
    // (1/2) * Gaussian(0;0,1): density = 0.5 / sqrt(2 pi)
    CHECK(kde_log_density(m, q) ==
          doctest::Approx(std::log(0.5 / std::sqrt(2.0 * M_PI))).epsilon(1e-9));
}

TEST_CASE("kde integrates to one in 1-D") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> norm(0, 1);
    Eigen::MatrixXd x(40, 1);
    for (int i = 0; i < 40; ++i) x(i, 0) = norm(rng);
    KdeModel m = fit_kde(x);
    double integral = 0;
    const double lo = -12, hi = 12, step = 1e-3;
    double prev = std::exp(kde_log_density(m, Eigen::VectorXd::Constant(1, lo)));
    for (double t = lo + step; t <= hi; t += step) {
        const double cur = std::exp(kde_log_density(m, Eigen::VectorXd::Constant(1, t)));
        integral += 0.5 * (prev + cur) * step;
        prev = cur;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("kde matches the double-loop oracle on random models") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> norm(0, 1);
    std::uniform_int_distribution<int> nn(2, 100), dd(1, 10);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = nn(rng), d = dd(rng);
        Eigen::MatrixXd x(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) x(i, j) = norm(rng);
        KdeModel m = fit_kde(x);
        Eigen::VectorXd q(d);
        for (int j = 0; j < d; ++j) q[j] = norm(rng);
        const double fast = kde_log_density(m, q);
        const double slow = oracles::kde_loop(m.points, m.bandwidth, q);
        CHECK(std::abs(fast - slow) <= 1e-9 * std::abs(slow));
    }
}

TEST_CASE("kde is permutation-invariant in stored points") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 2, 3, 4, 5, 6, 7, 8;
    KdeModel a = fit_kde(x);
    Eigen::MatrixXd y = x.colwise().reverse().eval();
    KdeModel b = fit_kde(y);
    Eigen::VectorXd q(2);
    q << 2.5, 3.5;
    CHECK(kde_log_density(a, q) == doctest::Approx(kde_log_density(b, q)).epsilon(1e-14));
}

TEST_CASE("kde batch parallel equals serial") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> norm(0, 1);
    Eigen::MatrixXd x(60, 5), q(31, 5);
    for (int i = 0; i < 60; ++i)
        for (int j = 0; j < 5; ++j) x(i, j) = norm(rng);
    for (int i = 0; i < 31; ++i)
        for (int j = 0; j < 5; ++j) q(i, j) = norm(rng);
    KdeModel m = fit_kde(x);
    auto fast = kde_log_density_batch(m, q);
    auto slow = kde_log_density_batch_serial(m, q);
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == slow[i]);
}

TEST_CASE("fit_kde rejects n < 2") {
    Eigen::MatrixXd x(1, 3);
    x << 1, 2, 3;
    CHECK_THROWS(fit_kde(x));
}

TEST_CASE("mc_threshold") {
    SUBCASE("hand case") {
        Eigen::MatrixXd cand(2, 1), synth(3, 1);
        cand << 0, 10;
        synth << 1, 2, 12;
        CHECK(mc_threshold(cand, synth, DistanceKind::euclidean, 1) == doctest::Approx(1.5));
    }
    SUBCASE("self distance is zero") {
        Eigen::MatrixXd s(3, 2);
        s << 1, 2, 3, 4, 5, 6;
        CHECK(mc_threshold(s, s, DistanceKind::euclidean, 2) == 0.0);
    }
    SUBCASE("single candidate") {
        Eigen::MatrixXd cand(1, 1), synth(2, 1);
        cand << 0;
        synth << 3, -4;
        CHECK(mc_threshold(cand, synth, DistanceKind::euclidean, 1) == doctest::Approx(3.0));
    }
}
