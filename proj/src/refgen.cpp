#include "audit/refgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "audit/rng.hpp"

namespace audit {

ProcessSpec ProcessSpec::standard(int f, int t, std::uint64_t seed_) {
    ProcessSpec s;
    s.feature_count = f;
    s.time_points = t;
    s.seed = seed_;
    s.ar_coef.resize(f);
    s.noise_scale.resize(f);
    s.level_scale.resize(f);
    s.level_mean.resize(f);
    for (int i = 0; i < f; ++i) {
        // Spread coefficients across features so the process is heterogeneous.
        s.ar_coef[i] = 0.5 + 0.4 * static_cast<double>(i) / std::max(1, f - 1);
        s.noise_scale[i] = 0.3 + 0.05 * i;
        s.level_scale[i] = 1.0;
        s.level_mean[i] = 0.0;
    }
    return s;
}

void ProcessSpec::validate() const {
    if (feature_count < 1 || time_points < 1)
        throw std::invalid_argument("ProcessSpec: F and T must be positive");
    auto check_len = [&](const std::vector<double>& v, const char* what) {
        if (static_cast<int>(v.size()) != feature_count)
            throw std::invalid_argument(std::string("ProcessSpec: ") + what + " length mismatch");
    };
    check_len(ar_coef, "ar_coef");
    check_len(noise_scale, "noise_scale");
    check_len(level_scale, "level_scale");
    check_len(level_mean, "level_mean");
    for (double c : ar_coef)
        if (!(c > 0.0 && c < 1.0))
            throw std::invalid_argument("ProcessSpec: AR coefficients must lie in (0,1)");
}

std::string to_string(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::memorizer: return "memorizer";
        case GeneratorKind::jitter: return "jitter";
        case GeneratorKind::marginal_resampler: return "marginal_resampler";
        case GeneratorKind::process_resampler: return "process_resampler";
    }
    return "unknown";
}

GeneratorKind generator_from_string(const std::string& s) {
    if (s == "memorizer") return GeneratorKind::memorizer;
    if (s == "jitter") return GeneratorKind::jitter;
    if (s == "marginal_resampler") return GeneratorKind::marginal_resampler;
    if (s == "process_resampler") return GeneratorKind::process_resampler;
    throw std::invalid_argument("unknown generator kind '" + s + "'");
}

FeatureSchema make_process_schema(int feature_count, int time_points) {
    FeatureSchema s;
    s.time_points = time_points;
    s.grid_step_minutes = 10;
    for (int i = 0; i < feature_count; ++i)
        s.features.push_back({"f" + std::to_string(i), "au", -25.0, 25.0});
    return s;
}

Dataset sample_process(const ProcessSpec& spec, int n, const FeatureSchema& schema, Split split,
                       const std::string& id_prefix) {
    if (n < 1) throw std::invalid_argument("sample_process: n must be >= 1");
    spec.validate();
    if (schema.feature_count() != spec.feature_count || schema.time_points != spec.time_points)
        throw std::invalid_argument("sample_process: schema does not match ProcessSpec");

    static const std::vector<std::string> kMarital = {"single", "married", "divorced", "widowed",
                                                      "missing"};
    static const std::vector<std::string> kRace = {"white", "black", "asian", "hispanic",
                                                   "missing"};

    Dataset ds;
    ds.schema = schema;
    ds.split = split;
    ds.seed_provenance = "process seed " + std::to_string(spec.seed);
    ds.records.resize(n);
    const int f = spec.feature_count, t = spec.time_points;
    // Per-record derived seeds keep output independent of scheduling.
    for (int i = 0; i < n; ++i) {
        auto rng = make_rng(derive_seed(spec.seed, "process-record", i));
        std::normal_distribution<double> norm(0.0, 1.0);
        PatientRecord& r = ds.records[i];
        r.record_id = id_prefix + std::to_string(i);
        r.patient_id = id_prefix + std::to_string(i);
        r.timeseries.resize(f, t);
        for (int k = 0; k < f; ++k) {
            const double c = spec.ar_coef[k];
            const double level = spec.level_mean[k] + spec.level_scale[k] * norm(rng);
            // stationary start
            double x = spec.noise_scale[k] / std::sqrt(1.0 - c * c) * norm(rng);
            for (int j = 0; j < t; ++j) {
                if (j > 0) x = c * x + spec.noise_scale[k] * norm(rng);
                const double v = level + x;
                r.timeseries(k, j) = std::clamp(v, schema.features[k].min_bound,
                                                schema.features[k].max_bound);
            }
        }
        if (spec.with_attributes) {
            StaticAttributes a;
            std::uniform_int_distribution<int> coin(0, 1);
            std::uniform_int_distribution<std::size_t> mar(0, kMarital.size() - 1);
            std::uniform_int_distribution<std::size_t> race(0, kRace.size() - 1);
            a.sex = coin(rng) ? "F" : "M";
            a.age = std::clamp(static_cast<int>(std::lround(60.0 + 15.0 * norm(rng))), 18, 100);
            a.marital_status = kMarital[mar(rng)];
            a.length_of_stay = std::max(1.0, 72.0 + 36.0 * norm(rng));
            a.race = kRace[race(rng)];
            r.attributes = a;
        }
    }
    return ds;
}

ProcessSpec fit_process(const Dataset& train, std::uint64_t seed) {
    if (train.empty()) throw std::invalid_argument("fit_process: empty training set");
    const int f = train.schema.feature_count();
    const int t = train.schema.time_points;
    ProcessSpec s;
    s.feature_count = f;
    s.time_points = t;
    s.seed = seed;
    s.ar_coef.resize(f);
    s.noise_scale.resize(f);
    s.level_scale.resize(f);
    s.level_mean.resize(f);
    const double n_rec = static_cast<double>(train.size());
    for (int k = 0; k < f; ++k) {
        double grand = 0.0;
        for (const auto& r : train.records) grand += r.timeseries.row(k).mean();
        grand /= n_rec;

        // Between-record variance of record means vs within-record variance of
        // the detrended path; lag-1 autocorrelation of the detrended path.
        double between = 0.0, within = 0.0, lag_num = 0.0, lag_den = 0.0;
        for (const auto& r : train.records) {
            const double rmean = r.timeseries.row(k).mean();
            between += (rmean - grand) * (rmean - grand);
            Eigen::RowVectorXd path = r.timeseries.row(k).array() - rmean;
            within += path.squaredNorm() / static_cast<double>(t);
            for (int j = 1; j < t; ++j) lag_num += path[j] * path[j - 1];
            lag_den += path.squaredNorm();
        }
        between /= std::max(1.0, n_rec - 1.0);
        within /= n_rec;
        const double rho = lag_den > 0 ? lag_num / lag_den : 0.0;
        const double c = std::clamp(rho, 0.01, 0.99);
        s.ar_coef[k] = c;
        s.noise_scale[k] = std::sqrt(std::max(within * (1.0 - c * c), 1e-12));
        // Detrending removes the AR mean too; correct the level spread by the
        // within-record sampling error of the mean.
        s.level_scale[k] = std::sqrt(std::max(between - within / static_cast<double>(t), 1e-12));
        s.level_mean[k] = grand;
    }
    return s;
}

Dataset generate(const GeneratorSpec& spec, const Dataset& train, int n_synth) {
    if (train.empty()) throw std::invalid_argument("generate: empty training set");
    if (n_synth < 1) throw std::invalid_argument("generate: n_synth must be >= 1");
    const int f = train.schema.feature_count();
    const int t = train.schema.time_points;

    if (spec.kind == GeneratorKind::jitter && !(spec.jitter_sigma > 0))
        throw std::invalid_argument("generate: jitter requires jitter_sigma > 0");

    const bool has_attrs =
        std::all_of(train.records.begin(), train.records.end(),
                    [](const PatientRecord& r) { return r.attributes.has_value(); });

    if (spec.kind == GeneratorKind::process_resampler) {
        ProcessSpec ps = fit_process(train, derive_seed(spec.seed, "process-fit"));
        Dataset out = sample_process(ps, n_synth, train.schema, Split::synthetic, "s");
        out.seed_provenance = "process_resampler seed " + std::to_string(spec.seed);
        if (has_attrs) {
            // The process carries no attribute model; bootstrap them.
            for (int i = 0; i < n_synth; ++i) {
                auto rng = make_rng(derive_seed(spec.seed, "generate-attrs", i));
                std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
                out.records[i].attributes = train.records[pick(rng)].attributes;
            }
        }
        return out;
    }

    Dataset out;
    out.schema = train.schema;
    out.split = Split::synthetic;
    out.seed_provenance = to_string(spec.kind) + " seed " + std::to_string(spec.seed);
    out.records.resize(n_synth);

    // Feature ranges over the training set (jitter noise scale).
    Eigen::VectorXd range(f);
    for (int k = 0; k < f; ++k) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (const auto& r : train.records) {
            mn = std::min(mn, r.timeseries.row(k).minCoeff());
            mx = std::max(mx, r.timeseries.row(k).maxCoeff());
        }
        range[k] = std::max(mx - mn, 1e-12);
    }

    for (int i = 0; i < n_synth; ++i) {
        auto rng = make_rng(derive_seed(spec.seed, "generate-record", i));
        PatientRecord& r = out.records[i];
        r.record_id = "s" + std::to_string(i);
        r.patient_id = "s" + std::to_string(i);
        switch (spec.kind) {
            case GeneratorKind::memorizer: {
                std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
                const PatientRecord& src = train.records[pick(rng)];
                r.timeseries = src.timeseries;
                if (has_attrs) r.attributes = src.attributes;
                break;
            }
            case GeneratorKind::jitter: {
                std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
                std::normal_distribution<double> norm(0.0, 1.0);
                const PatientRecord& src = train.records[pick(rng)];
                r.timeseries = src.timeseries;
                if (has_attrs) r.attributes = src.attributes;
                for (int k = 0; k < f; ++k)
                    for (int j = 0; j < t; ++j)
                        r.timeseries(k, j) += spec.jitter_sigma * range[k] * norm(rng);
                break;
            }
            case GeneratorKind::marginal_resampler: {
                std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
                r.timeseries.resize(f, t);
                for (int k = 0; k < f; ++k)
                    for (int j = 0; j < t; ++j)
                        r.timeseries(k, j) = train.records[pick(rng)].timeseries(k, j);
                if (has_attrs) {
                    // Resample each attribute independently from the pool.
                    StaticAttributes a;
                    a.sex = train.records[pick(rng)].attributes->sex;
                    a.age = train.records[pick(rng)].attributes->age;
                    a.marital_status = train.records[pick(rng)].attributes->marital_status;
                    a.length_of_stay = train.records[pick(rng)].attributes->length_of_stay;
                    a.race = train.records[pick(rng)].attributes->race;
                    r.attributes = a;
                }
                break;
            }
            case GeneratorKind::process_resampler:
                break;  // handled above
        }
    }
    return out;
}

}  // namespace audit
