#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace audit {

struct Feature {
    std::string name;
    std::string unit;
    double min_bound = 0.0;
    double max_bound = 0.0;

    bool operator==(const Feature&) const = default;
};

struct FeatureSchema {
    std::vector<Feature> features;
    int time_points = 0;       // T
    int grid_step_minutes = 0;

    int feature_count() const { return static_cast<int>(features.size()); }
    int flat_dim() const { return feature_count() * time_points; }

    // Throws std::invalid_argument on duplicate names, inverted bounds, T < 1.
    void validate() const;

    bool operator==(const FeatureSchema&) const = default;
};

enum class Split { train, synthetic, holdout, aux, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct StaticAttributes {
    std::string sex;             // "F", "M"
    int age = 0;
    std::string marital_status;  // single/married/divorced/widowed/missing
    double length_of_stay = 0.0; // hours
    std::string race;            // open vocabulary; "missing" when unknown

    bool operator==(const StaticAttributes&) const = default;
};

// One ICU stay: F x T matrix plus optional static attributes.
// Missing cells are represented as NaN during preprocessing; a record is
// "complete" once no NaN remains.
struct PatientRecord {
    std::string record_id;
    std::string patient_id;
    Eigen::MatrixXd timeseries;  // F rows x T cols
    std::optional<StaticAttributes> attributes;
};

struct Dataset {
    FeatureSchema schema;
    std::vector<PatientRecord> records;
    Split split = Split::train;
    std::string seed_provenance;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    // Shape conformance + record_id uniqueness. Throws on violation.
    void validate() const;
};

// Feature-major flattening: feature 0 times 0..T-1, then feature 1, ...
Eigen::VectorXd flatten_record(const PatientRecord& r);
Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, const FeatureSchema& schema);

// |ds| x (F*T) matrix of flattened records, row i = record i.
Eigen::MatrixXd flatten_dataset(const Dataset& ds);

// CSV I/O. One row per record; time-series columns named <feature>__t<k>,
// attribute columns prefixed attr__; header mandatory.
Dataset load_dataset(const std::string& path, const FeatureSchema& schema, Split split);
void save_dataset(const Dataset& ds, const std::string& path);

// JSON schema descriptor.
FeatureSchema load_schema(const std::string& path);
void save_schema(const FeatureSchema& schema, const std::string& path);

// Seeded partition; when by_patient no patient_id spans two outputs.
std::vector<Dataset> split_disjoint(const Dataset& ds, const std::vector<double>& fractions,
                                    std::uint64_t seed, bool by_patient);

// Throws when two datasets share a record_id.
void check_pairwise_disjoint(const std::vector<const Dataset*>& sets);

}  // namespace audit
