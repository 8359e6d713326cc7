#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "audit/dataset.hpp"

namespace audit {

// Ground-truth stochastic process: per-record random level plus a stationary
// AR(1) path per feature.
struct ProcessSpec {
    int feature_count = 9;
    int time_points = 48;
    std::vector<double> ar_coef;      // in (0,1), one per feature
    std::vector<double> noise_scale;  // one per feature
    std::vector<double> level_scale;  // per-record level offset scale
    std::vector<double> level_mean;   // per-feature mean level
    std::uint64_t seed = 0;
    bool with_attributes = false;  // also draw static attributes per record

    static ProcessSpec standard(int f, int t, std::uint64_t seed);
    void validate() const;
};

enum class GeneratorKind { memorizer, jitter, marginal_resampler, process_resampler };

std::string to_string(GeneratorKind k);
GeneratorKind generator_from_string(const std::string& s);

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::memorizer;
    double jitter_sigma = 0.0;  // fraction of the feature range, jitter only
    std::uint64_t seed = 0;
};

// Schema matching ProcessSpec::standard output (wide bounds, 10-minute grid).
FeatureSchema make_process_schema(int feature_count, int time_points);

Dataset sample_process(const ProcessSpec& spec, int n, const FeatureSchema& schema,
                       Split split = Split::train, const std::string& id_prefix = "p");

// Closed-form AR(1) moment fit per feature (mean, variance, lag-1 autocorr).
ProcessSpec fit_process(const Dataset& train, std::uint64_t seed);

Dataset generate(const GeneratorSpec& spec, const Dataset& train, int n_synth);

}  // namespace audit
