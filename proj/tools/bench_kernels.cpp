// Times the OpenMP kernels against their serial reference implementations
// and checks that both produce identical (or near-identical) results.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "audit/density.hpp"
#include "audit/distance.hpp"
#include "audit/flow.hpp"
#include "audit/metrics.hpp"
#include "audit/refgen.hpp"
#include "audit/rng.hpp"

namespace {

double time_of(const std::function<void()>& fn, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best,
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count());
    }
    return best;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void row(const char* name, double serial, double parallel, double diff) {
    std::printf("%-28s %10.4f s %10.4f s %8.2fx   max|diff| %.3g\n", name, serial, parallel,
                serial / parallel, diff);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-28s %12s %12s %9s\n", "kernel", "serial", "parallel", "speedup");

    auto rng = audit::make_rng(7);
    std::normal_distribution<double> norm(0.0, 1.0);
    auto randmat = [&](int n, int d) {
        Eigen::MatrixXd m(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = norm(rng);
        return m;
    };

    {
        Eigen::MatrixXd q = randmat(400, 432), p = randmat(2000, 432);
        std::vector<double> a, b;
        const double ts = time_of(
            [&] { a = audit::min_distances_serial(q, p, audit::DistanceKind::euclidean, 9); }, 3);
        const double tp = time_of(
            [&] { b = audit::min_distances(q, p, audit::DistanceKind::euclidean, 9); }, 3);
        row("min_distances/euclidean", ts, tp, max_abs_diff(a, b));
    }
    {
        Eigen::MatrixXd q = randmat(60, 432), p = randmat(300, 432);
        std::vector<double> a, b;
        const double ts = time_of(
            [&] { a = audit::min_distances_serial(q, p, audit::DistanceKind::dtw, 9); }, 2);
        const double tp =
            time_of([&] { b = audit::min_distances(q, p, audit::DistanceKind::dtw, 9); }, 2);
        row("min_distances/dtw", ts, tp, max_abs_diff(a, b));
    }
    {
        audit::KdeModel m = audit::fit_kde(randmat(2000, 40));
        Eigen::MatrixXd q = randmat(1000, 40);
        std::vector<double> a, b;
        const double ts = time_of([&] { a = audit::kde_log_density_batch_serial(m, q); }, 3);
        const double tp = time_of([&] { b = audit::kde_log_density_batch(m, q); }, 3);
        row("kde_log_density_batch", ts, tp, max_abs_diff(a, b));
    }
    {
        audit::FlowModel m = audit::make_random_flow(40, 11);
        Eigen::MatrixXd q = randmat(4000, 40);
        std::vector<double> a, b;
        const double ts = time_of([&] { a = audit::flow_log_density_batch_serial(m, q); }, 3);
        const double tp = time_of([&] { b = audit::flow_log_density_batch(m, q); }, 3);
        row("flow_log_density_batch", ts, tp, max_abs_diff(a, b));
    }
    {
        audit::FeatureSchema schema = audit::make_process_schema(9, 48);
        audit::ProcessSpec ps = audit::ProcessSpec::standard(9, 48, 3);
        audit::Dataset d1 = audit::sample_process(ps, 200, schema, audit::Split::train, "a");
        ps.seed = 4;
        audit::Dataset d2 = audit::sample_process(ps, 800, schema, audit::Split::holdout, "b");
        std::vector<double> a, b;
        const double ts = time_of([&] { a = audit::nrmse_min_per_record_serial(d1, d2); }, 2);
        const double tp = time_of([&] { b = audit::nrmse_min_per_record(d1, d2); }, 2);
        row("nrmse_min_per_record", ts, tp, max_abs_diff(a, b));
    }
    return 0;
}
