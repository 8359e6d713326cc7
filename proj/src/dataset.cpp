#include "audit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "audit/rng.hpp"
#include "json.hpp"

namespace audit {

namespace {

constexpr const char* kAttrCols[] = {"attr__sex", "attr__age", "attr__marital_status",
                                     "attr__length_of_stay", "attr__race"};

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, std::size_t row, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("parse error at row " + std::to_string(row) + ", column '" +
                                 col + "': non-numeric cell '" + s + "'");
    }
}

}  // namespace

void FeatureSchema::validate() const {
    if (features.empty()) throw std::invalid_argument("schema has no features");
    if (time_points < 1) throw std::invalid_argument("schema time_points must be >= 1");
    if (grid_step_minutes < 1) throw std::invalid_argument("schema grid_step_minutes must be >= 1");
    std::set<std::string> names;
    for (const auto& f : features) {
        if (!names.insert(f.name).second)
            throw std::invalid_argument("duplicate feature name '" + f.name + "'");
        if (!(f.min_bound < f.max_bound))
            throw std::invalid_argument("feature '" + f.name + "' has min_bound >= max_bound");
    }
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::synthetic: return "synthetic";
        case Split::holdout: return "holdout";
        case Split::aux: return "aux";
        case Split::test: return "test";
    }
    return "train";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "synthetic") return Split::synthetic;
    if (s == "holdout") return Split::holdout;
    if (s == "aux") return Split::aux;
    if (s == "test") return Split::test;
    throw std::invalid_argument("unknown split tag '" + s + "'");
}

void Dataset::validate() const {
    schema.validate();
    const int f = schema.feature_count();
    const int t = schema.time_points;
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.timeseries.rows() != f || r.timeseries.cols() != t)
            throw std::runtime_error("record '" + r.record_id + "' shape mismatch: expected " +
                                     std::to_string(f) + "x" + std::to_string(t));
        if (!ids.insert(r.record_id).second)
            throw std::runtime_error("duplicate record_id '" + r.record_id + "'");
    }
}

Eigen::VectorXd flatten_record(const PatientRecord& r) {
    const auto f = r.timeseries.rows();
    const auto t = r.timeseries.cols();
    Eigen::VectorXd v(f * t);
    for (Eigen::Index i = 0; i < f; ++i)
        for (Eigen::Index j = 0; j < t; ++j) v[i * t + j] = r.timeseries(i, j);
    return v;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, const FeatureSchema& schema) {
    const int f = schema.feature_count();
    const int t = schema.time_points;
    if (v.size() != f * t) throw std::invalid_argument("unflatten: length mismatch");
    Eigen::MatrixXd m(f, t);
    for (int i = 0; i < f; ++i)
        for (int j = 0; j < t; ++j) m(i, j) = v[i * t + j];
    return m;
}

Eigen::MatrixXd flatten_dataset(const Dataset& ds) {
    Eigen::MatrixXd out(ds.records.size(), ds.schema.flat_dim());
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        out.row(i) = flatten_record(ds.records[i]).transpose();
    return out;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");

    const bool has_attrs =
        std::any_of(ds.records.begin(), ds.records.end(),
                    [](const PatientRecord& r) { return r.attributes.has_value(); });

    out << "record_id,patient_id";
    if (has_attrs)
        for (const char* c : kAttrCols) out << ',' << c;
    for (const auto& f : ds.schema.features)
        for (int t = 0; t < ds.schema.time_points; ++t) out << ',' << f.name << "__t" << t;
    out << '\n';

    for (const auto& r : ds.records) {
        out << r.record_id << ',' << r.patient_id;
        if (has_attrs) {
            if (r.attributes) {
                const auto& a = *r.attributes;
                out << ',' << a.sex << ',' << a.age << ',' << a.marital_status << ','
                    << fmt_double(a.length_of_stay) << ',' << a.race;
            } else {
                out << ",,,,,";
            }
        }
        for (Eigen::Index i = 0; i < r.timeseries.rows(); ++i)
            for (Eigen::Index j = 0; j < r.timeseries.cols(); ++j)
                out << ',' << fmt_double(r.timeseries(i, j));
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failure on '" + path + "'");
}

Dataset load_dataset(const std::string& path, const FeatureSchema& schema, Split split) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file '" + path + "': missing header");
    const auto header = split_line(line);
    if (header.size() < 2 || header[0] != "record_id" || header[1] != "patient_id")
        throw std::runtime_error("malformed header in '" + path + "'");

    // Map header columns to (feature, time) slots or attribute slots.
    const int f = schema.feature_count();
    const int t = schema.time_points;
    std::unordered_map<std::string, int> feat_index;
    for (int i = 0; i < f; ++i) feat_index[schema.features[i].name] = i;

    struct Col { int kind; int fi; int ti; int ai; };  // kind: 0 ts, 1 attr
    std::vector<Col> cols;
    int ts_cols = 0;
    for (std::size_t c = 2; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h.rfind("attr__", 0) == 0) {
            int ai = -1;
            for (int k = 0; k < 5; ++k)
                if (h == kAttrCols[k]) ai = k;
            if (ai < 0) throw std::runtime_error("unknown attribute column '" + h + "'");
            cols.push_back({1, 0, 0, ai});
            continue;
        }
        auto pos = h.rfind("__t");
        if (pos == std::string::npos)
            throw std::runtime_error("unrecognized column '" + h + "'");
        const std::string fname = h.substr(0, pos);
        auto it = feat_index.find(fname);
        if (it == feat_index.end())
            throw std::runtime_error("schema error: column feature '" + fname + "' not in schema");
        int ti = std::stoi(h.substr(pos + 3));
        if (ti < 0 || ti >= t)
            throw std::runtime_error("schema error: time index " + std::to_string(ti) +
                                     " out of range for column '" + h + "'");
        cols.push_back({0, it->second, ti, 0});
        ++ts_cols;
    }
    if (ts_cols != f * t)
        throw std::runtime_error("schema error: file has " + std::to_string(ts_cols) +
                                 " time-series columns, schema expects " + std::to_string(f * t));

    Dataset ds;
    ds.schema = schema;
    ds.split = split;

    std::unordered_set<std::string> seen_ids;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("parse error at row " + std::to_string(row) + ": expected " +
                                     std::to_string(header.size()) + " cells, got " +
                                     std::to_string(cells.size()));
        PatientRecord r;
        r.record_id = cells[0];
        r.patient_id = cells[1];
        if (!seen_ids.insert(r.record_id).second)
            throw std::runtime_error("integrity error: duplicate record_id '" + r.record_id +
                                     "' at row " + std::to_string(row));
        r.timeseries.setConstant(f, t, std::numeric_limits<double>::quiet_NaN());

        bool any_attr = false;
        StaticAttributes attrs;
        attrs.sex = attrs.marital_status = attrs.race = "missing";
        for (std::size_t c = 2; c < cells.size(); ++c) {
            const Col& col = cols[c - 2];
            const std::string& cell = cells[c];
            if (col.kind == 0) {
                r.timeseries(col.fi, col.ti) = parse_double(cell, row, header[c]);
            } else {
                if (cell.empty()) continue;  // empty attribute cell -> missing category
                any_attr = true;
                switch (col.ai) {
                    case 0: attrs.sex = cell; break;
                    case 1: attrs.age = static_cast<int>(parse_double(cell, row, header[c])); break;
                    case 2: attrs.marital_status = cell; break;
                    case 3: attrs.length_of_stay = parse_double(cell, row, header[c]); break;
                    case 4: attrs.race = cell; break;
                }
            }
        }
        if (any_attr) r.attributes = attrs;
        ds.records.push_back(std::move(r));
    }
    return ds;
}

FeatureSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema '" + path + "'");
    nlohmann::json j;
    in >> j;
    FeatureSchema s;
    s.time_points = j.at("time_points").get<int>();
    s.grid_step_minutes = j.at("grid_step_minutes").get<int>();
    for (const auto& jf : j.at("features")) {
        Feature f;
        f.name = jf.at("name").get<std::string>();
        f.unit = jf.value("unit", "");
        f.min_bound = jf.at("min").get<double>();
        f.max_bound = jf.at("max").get<double>();
        s.features.push_back(std::move(f));
    }
    s.validate();
    return s;
}

void save_schema(const FeatureSchema& schema, const std::string& path) {
    nlohmann::json j;
    j["time_points"] = schema.time_points;
    j["grid_step_minutes"] = schema.grid_step_minutes;
    j["features"] = nlohmann::json::array();
    for (const auto& f : schema.features)
        j["features"].push_back({{"name", f.name}, {"unit", f.unit}, {"min", f.min_bound},
                                 {"max", f.max_bound}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

std::vector<Dataset> split_disjoint(const Dataset& ds, const std::vector<double>& fractions,
                                    std::uint64_t seed, bool by_patient) {
    if (fractions.empty()) throw std::invalid_argument("split_disjoint: fractions empty");
    if (ds.empty()) throw std::invalid_argument("split_disjoint: dataset empty");
    double sum = std::accumulate(fractions.begin(), fractions.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split_disjoint: fractions sum to " + std::to_string(sum));

    // Groups: one per patient (or per record). Order keys before shuffling so
    // the result is independent of the input record order only through ids.
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const std::string key = by_patient ? ds.records[i].patient_id : ds.records[i].record_id;
        groups[key].push_back(i);
    }
    std::vector<std::vector<std::size_t>> order;
    order.reserve(groups.size());
    for (auto& [k, v] : groups) order.push_back(std::move(v));
    auto rng = make_rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t n = ds.records.size();
    std::vector<Dataset> out(fractions.size());
    for (auto& o : out) {
        o.schema = ds.schema;
        o.split = ds.split;
        o.seed_provenance = ds.seed_provenance;
    }
    double cum = 0.0;
    std::vector<std::size_t> targets(fractions.size());
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        cum += fractions[k];
        targets[k] = static_cast<std::size_t>(std::llround(cum * static_cast<double>(n)));
    }
    targets.back() = n;

    std::size_t assigned = 0, bucket = 0;
    for (const auto& grp : order) {
        while (bucket + 1 < out.size() && assigned >= targets[bucket]) ++bucket;
        for (std::size_t idx : grp) out[bucket].records.push_back(ds.records[idx]);
        assigned += grp.size();
    }
    return out;
}

void check_pairwise_disjoint(const std::vector<const Dataset*>& sets) {
    std::unordered_map<std::string, std::size_t> owner;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        for (const auto& r : sets[s]->records) {
            auto [it, inserted] = owner.emplace(r.record_id, s);
            if (!inserted && it->second != s)
                throw std::runtime_error("datasets not pairwise disjoint: record_id '" +
                                         r.record_id + "' appears in sets " +
                                         std::to_string(it->second) + " and " + std::to_string(s));
        }
    }
}

}  // namespace audit
