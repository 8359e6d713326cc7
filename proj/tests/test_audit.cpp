#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "audit/audit.hpp"
#include "audit/config.hpp"
#include "audit/report.hpp"
#include "audit/rng.hpp"
#include "temp_dir.hpp"

using namespace audit;

namespace {

// Small, fast configuration shared by the orchestration tests.
AuditConfig tiny_config() {
    AuditConfig cfg;
    cfg.feature_count = 3;
    cfg.time_points = 8;
    cfg.n_aux = 40;
    cfg.bootstrap_k = 25;
    cfg.pca_components = 6;
    cfg.flow_epochs = 25;
    cfg.clf_epochs = 25;
    cfg.sweep_sizes = {20};
    cfg.master_seed = 99;
    return cfg;
}

struct Pools {
    FeatureSchema schema;
    Dataset train, holdout;
};

Pools tiny_pools(const AuditConfig& cfg, int n_train, bool with_attributes = false) {
    Pools p;
    p.schema = make_process_schema(cfg.feature_count, cfg.time_points);
    ProcessSpec ps = ProcessSpec::standard(cfg.feature_count, cfg.time_points, 301);
    ps.with_attributes = with_attributes;
    p.train = sample_process(ps, n_train, p.schema, Split::train, "tr");
    ps.seed = 302;
    p.holdout = sample_process(ps, cfg.n_aux + n_train, p.schema, Split::holdout, "ho");
    return p;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("run_attack_audit produces one outcome per roster attack") {
    AuditConfig cfg = tiny_config();
    Pools p = tiny_pools(cfg, 20);
    GeneratorSpec g{GeneratorKind::jitter, 0.05, 5};
    Dataset synth = generate(g, p.train, 80);

    auto outcomes = run_attack_audit(cfg, synth, p.train, p.holdout, 17);
    REQUIRE(outcomes.size() == cfg.roster.size());
    for (const auto& out : outcomes) {
        CAPTURE(to_string(out.kind));
        REQUIRE_FALSE(out.failed);
        // D_test = |train| nonmembers + |train| members, balanced
        REQUIRE(out.scores.entries.size() == 40);
        int members = 0, predicted = 0;
        for (const auto& e : out.scores.entries) {
            members += e.true_membership;
            predicted += e.predicted;
        }
        CHECK(members == 20);
        CHECK(predicted == 20);  // median threshold splits evenly at even n
    }
}

TEST_CASE("run_attack_audit is deterministic given the cell seed") {
    AuditConfig cfg = tiny_config();
    Pools p = tiny_pools(cfg, 15);
    GeneratorSpec g{GeneratorKind::marginal_resampler, 0.0, 5};
    Dataset synth = generate(g, p.train, 60);

    auto a = run_attack_audit(cfg, synth, p.train, p.holdout, 23);
    auto b = run_attack_audit(cfg, synth, p.train, p.holdout, 23);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].scores.entries.size() == b[i].scores.entries.size());
        for (std::size_t j = 0; j < a[i].scores.entries.size(); ++j) {
            CHECK(a[i].scores.entries[j].score == b[i].scores.entries[j].score);
            CHECK(a[i].scores.entries[j].record_id == b[i].scores.entries[j].record_id);
        }
    }
}

TEST_CASE("run_attack_audit enforces preconditions") {
    AuditConfig cfg = tiny_config();
    Pools p = tiny_pools(cfg, 20);
    GeneratorSpec g{GeneratorKind::memorizer, 0.0, 5};
    Dataset synth = generate(g, p.train, 40);

    SUBCASE("holdout too small") {
        Dataset small = p.holdout;
        small.records.resize(30);
        CHECK_THROWS_AS(run_attack_audit(cfg, synth, p.train, small, 1), std::invalid_argument);
    }
    SUBCASE("record id collision") {
        Dataset clash = p.holdout;
        clash.records[0].record_id = p.train.records[0].record_id;
        CHECK_THROWS(run_attack_audit(cfg, synth, p.train, clash, 1));
    }
}

TEST_CASE("sanity check reuses training rows as synthetic data") {
    AuditConfig cfg = tiny_config();
    cfg.roster = {AttackKind::ganleak_breugel};
    Pools p = tiny_pools(cfg, 20);
    auto outcomes = run_sanity_check(cfg, p.train, p.holdout, 1.0, 31);
    REQUIRE(outcomes.size() == 1);
    REQUIRE_FALSE(outcomes[0].failed);
    // every member sits at distance zero from some synthetic record
    LabeledScores ls = outcomes[0].scores;
    CHECK(auroc(ls) > 0.9);
    CHECK_THROWS(run_sanity_check(cfg, p.train, p.holdout, 0.0, 31));
}

TEST_CASE("attribute mode runs the roster without dtw") {
    AuditConfig cfg = tiny_config();
    cfg.mode = "attributes";
    Pools p = tiny_pools(cfg, 15, /*with_attributes=*/true);
    GeneratorSpec g{GeneratorKind::memorizer, 0.0, 5};
    Dataset synth = generate(g, p.train, 60);
    auto outcomes = run_attack_audit(cfg, synth, p.train, p.holdout, 41);
    for (const auto& out : outcomes) {
        CAPTURE(to_string(out.kind));
        if (out.kind == AttackKind::ganleak_dtw) {
            CHECK(out.failed);
        } else {
            REQUIRE_FALSE(out.failed);
            CHECK(out.scores.entries.size() == 30);
        }
    }
}

TEST_CASE("make_cell bootstraps the four metrics") {
    AuditConfig cfg = tiny_config();
    cfg.roster = {AttackKind::ganleak_chen};
    Pools p = tiny_pools(cfg, 12);
    GeneratorSpec g{GeneratorKind::jitter, 0.05, 5};
    Dataset synth = generate(g, p.train, 48);
    auto outcomes = run_attack_audit(cfg, synth, p.train, p.holdout, 51);
    ReportCell cell = make_cell("jitter", 12, outcomes[0], 30, 7);
    CHECK_FALSE(cell.failed);
    for (const char* m : {"auroc", "accuracy", "tpr", "fpr"}) {
        REQUIRE(cell.metrics.count(m) == 1);
        CHECK(cell.metrics[m].replicates == 30);
        CHECK(cell.metrics[m].boot_stderr >= 0.0);
    }
    AttackOutcome failed;
    failed.kind = AttackKind::domias_bnaf;
    failed.failed = true;
    failed.error = "boom";
    ReportCell fc = make_cell("jitter", 12, failed, 30, 7);
    CHECK(fc.failed);
    CHECK(fc.metrics.empty());
}

TEST_CASE("run_sweep covers the grid and fills overfit cells") {
    AuditConfig cfg = tiny_config();
    cfg.roster = {AttackKind::mc_theta, AttackKind::ganleak_cal};
    cfg.generators = {GeneratorKind::memorizer, GeneratorKind::process_resampler};
    cfg.sweep_sizes = {10, 20};
    AuditReport r = run_sweep(cfg);
    CHECK(r.cells.size() == 2 * 2 * 2);
    CHECK(r.overfit.size() == 2 * 2);
    CHECK_FALSE(r.any_failed());
    CHECK(r.find("memorizer", 10, "mc_theta") != nullptr);
    CHECK(r.find("memorizer", 10, "nope") == nullptr);
    CHECK(r.runtime_seconds > 0.0);
}

TEST_CASE("external aux runs the aux-requiring subset twice") {
    AuditConfig cfg = tiny_config();
    Pools p = tiny_pools(cfg, 15);
    GeneratorSpec g{GeneratorKind::jitter, 0.05, 5};
    Dataset synth = generate(g, p.train, 60);
    ProcessSpec ap = ProcessSpec::standard(cfg.feature_count, cfg.time_points, 909);
    Dataset ext = sample_process(ap, cfg.n_aux, p.schema, Split::aux, "ea");

    AuditReport r = run_external_aux(cfg, synth, p.train, p.holdout, ext);
    // 4 aux-requiring attacks, each with internal and external tags
    CHECK(r.cells.size() == 8);
    std::set<std::string> tags;
    for (const auto& c : r.cells) tags.insert(c.generator);
    CHECK(tags == std::set<std::string>{"internal_aux", "external_aux"});

    Dataset tiny_ext = ext;
    tiny_ext.records.resize(3);
    CHECK_THROWS(run_external_aux(cfg, synth, p.train, p.holdout, tiny_ext));
}

TEST_CASE("config file round trip and validation") {
    TempDir dir;
    SUBCASE("parses a hand-written file") {
        std::ofstream f(dir.file("a.toml"));
        f << "# audit configuration\n"
          << "[audit]\n"
          << "mode = \"timeseries\"\n"
          << "feature_count = 5\n"
          << "time_points = 12   # half-day grid\n"
          << "seed = 1234\n"
          << "sweep_sizes = [10, 20, 40]\n"
          << "attacks = [\"mc_theta\", \"logan_pb\"]\n"
          << "generators = [\"jitter\"]\n"
          << "jitter_sigma = 0.05\n"
          << "out_dir = \"results\"\n";
        f.close();
        AuditConfig cfg = load_config(dir.file("a.toml"));
        CHECK(cfg.feature_count == 5);
        CHECK(cfg.time_points == 12);
        CHECK(cfg.master_seed == 1234);
        CHECK(cfg.sweep_sizes == std::vector<int>{10, 20, 40});
        REQUIRE(cfg.roster.size() == 2);
        CHECK(cfg.roster[0] == AttackKind::mc_theta);
        CHECK(cfg.generators == std::vector<GeneratorKind>{GeneratorKind::jitter});
        CHECK(cfg.jitter_sigma == 0.05);
        CHECK(cfg.out_dir == "results");
    }
    SUBCASE("save then load is stable") {
        AuditConfig cfg = tiny_config();
        cfg.out_dir = "x";
        save_config(cfg, dir.file("b.toml"));
        AuditConfig back = load_config(dir.file("b.toml"));
        CHECK(back.feature_count == cfg.feature_count);
        CHECK(back.sweep_sizes == cfg.sweep_sizes);
        CHECK(back.master_seed == cfg.master_seed);
        CHECK(back.roster == cfg.roster);
    }
    SUBCASE("rejects unknown keys and bad values") {
        auto write = [&](const char* name, const char* body) {
            std::ofstream f(dir.file(name));
            f << body;
        };
        write("bad1.toml", "not_a_key = 3\n");
        CHECK_THROWS_AS(load_config(dir.file("bad1.toml")), std::invalid_argument);
        write("bad2.toml", "feature_count = \"nine\"\n");
        CHECK_THROWS_AS(load_config(dir.file("bad2.toml")), std::invalid_argument);
        write("bad3.toml", "mode = \"banana\"\n");
        CHECK_THROWS_AS(load_config(dir.file("bad3.toml")), std::invalid_argument);
        write("bad4.toml", "seed = 1\nseed = 2\n");
        CHECK_THROWS_AS(load_config(dir.file("bad4.toml")), std::invalid_argument);
        write("bad5.toml", "attacks = [\"mc_theta\"");
        CHECK_THROWS_AS(load_config(dir.file("bad5.toml")), std::invalid_argument);
    }
}

TEST_CASE("report json round trip and deterministic emission") {
    TempDir dir;
    AuditConfig cfg = tiny_config();
    cfg.roster = {AttackKind::mc_theta, AttackKind::ganleak_breugel};
    cfg.generators = {GeneratorKind::memorizer};
    cfg.sweep_sizes = {10};
    AuditReport r = run_sweep(cfg);

    save_report_json(r, dir.file("r.json"));
    AuditReport back = load_report_json(dir.file("r.json"));
    REQUIRE(back.cells.size() == r.cells.size());
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        CHECK(back.cells[i].attack == r.cells[i].attack);
        CHECK(back.cells[i].metrics.at("auroc").boot_mean ==
              r.cells[i].metrics.at("auroc").boot_mean);
    }
    REQUIRE(back.overfit.size() == r.overfit.size());
    CHECK(back.overfit[0].estimate.point == r.overfit[0].estimate.point);

    emit_report(r, dir.file("out1"));
    emit_report(r, dir.file("out2"));
    for (const char* name : {"/report.csv", "/report.json", "/overfit.csv"})
        CHECK(slurp(dir.file("out1") + name) == slurp(dir.file("out2") + name));
    CHECK(slurp(dir.file("out1") + "/report.csv").find("generator,train_size,attack") == 0);
    CHECK(std::filesystem::exists(dir.file("out1") + "/heatmap_auroc.svg"));
}

TEST_CASE("seed derivation separates stages and indices") {
    const std::uint64_t master = 7;
    CHECK(derive_seed(master, "a") != derive_seed(master, "b"));
    CHECK(derive_seed(master, "a", 0) != derive_seed(master, "a", 1));
    CHECK(derive_seed(master, "a", 0) == derive_seed(master, "a", 0));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}
