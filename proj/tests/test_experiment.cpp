#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "scarseg/error.hpp"
#include "scarseg/experiment.hpp"
#include "scarseg/rng.hpp"
#include "test_util.hpp"

using namespace scarseg;
using testutil::TempDir;

namespace {

RunConfig rc_of(DatasetKind d, SamplingMethod s, int p, int f, int b,
                std::uint64_t seed = 0) {
    RunConfig rc;
    rc.dataset = d;
    rc.sampling = s;
    rc.patch_size = p;
    rc.init_filters = f;
    rc.batch_size = b;
    rc.seed = seed;
    rc.run_id = make_run_id(rc);
    return rc;
}

RunRecord rec_of(DatasetKind d, SamplingMethod s, int p, int f, int b,
                 double f1, double miou, const std::string& status = "ok") {
    RunRecord r;
    r.config = rc_of(d, s, p, f, b);
    r.status = status;
    r.avg_f1 = f1;
    r.avg_miou = miou;
    r.areas = {{"area1", {}}, {"area2", {}}};
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("the full matrix expands to 288 uniquely seeded runs") {
    const ExperimentMatrix m;  // paper defaults
    const auto runs = expand_matrix(m);
    REQUIRE(runs.size() == 288);

    std::set<std::string> ids;
    std::set<std::uint64_t> seeds;
    for (const auto& r : runs) {
        ids.insert(r.run_id);
        seeds.insert(r.seed);
        CHECK(r.seed == seed_from_label(m.base_seed, r.run_id));
    }
    CHECK(ids.size() == 288);
    CHECK(seeds.size() == 288);

    // documented nesting: dataset, sampling, size, filters, batch
    CHECK(runs[0].run_id == "optical_regular_p32_f16_b16");
    CHECK(runs[1].run_id == "optical_regular_p32_f16_b32");
    CHECK(runs[4].run_id == "optical_regular_p32_f32_b16");
    CHECK(runs[12].run_id == "optical_regular_p64_f16_b16");
    CHECK(runs[36].run_id == "optical_random_p32_f16_b16");
    CHECK(runs[72].run_id == "optical_aug_regular_p32_f16_b16");
    CHECK(runs[287].run_id == "optical_dem_aug_random_p128_f64_b128");

    ExperimentMatrix other = m;
    other.base_seed = 1;
    CHECK(expand_matrix(other)[0].seed != runs[0].seed);
}

TEST_CASE("reduced and degenerate matrices") {
    ExperimentMatrix m;
    m.datasets = {DatasetKind::optical_dem};
    m.sampling = {SamplingMethod::random};
    m.patch_sizes = {64};
    m.init_filters = {16};
    m.batch_sizes = {32};
    const auto one = expand_matrix(m);
    REQUIRE(one.size() == 1);
    CHECK(one[0].run_id == "optical_dem_random_p64_f16_b32");
    CHECK(cell_path(one[0]) == "patches/optical_dem_random_p64");

    m.datasets = {DatasetKind::optical, DatasetKind::optical_dem};
    m.sampling = {SamplingMethod::regular, SamplingMethod::random};
    const auto four = expand_matrix(m);
    REQUIRE(four.size() == 4);
    CHECK(four[0].run_id == "optical_regular_p64_f16_b32");
    CHECK(four[1].run_id == "optical_random_p64_f16_b32");
    CHECK(four[2].run_id == "optical_dem_regular_p64_f16_b32");
    CHECK(four[3].run_id == "optical_dem_random_p64_f16_b32");

    m.patch_sizes.clear();
    CHECK_THROWS_AS(expand_matrix(m), Error);
}

TEST_CASE("dataset kind helpers") {
    CHECK(parse_dataset("optical") == DatasetKind::optical);
    CHECK(parse_dataset("optical_dem_aug") == DatasetKind::optical_dem_aug);
    CHECK_THROWS_AS(parse_dataset("dem"), Error);
    for (auto d : {DatasetKind::optical, DatasetKind::optical_aug,
                   DatasetKind::optical_dem, DatasetKind::optical_dem_aug})
        CHECK(parse_dataset(dataset_name(d)) == d);
    CHECK_FALSE(dataset_has_dem(DatasetKind::optical));
    CHECK(dataset_has_dem(DatasetKind::optical_dem));
    CHECK(dataset_has_dem(DatasetKind::optical_dem_aug));
    CHECK_FALSE(dataset_has_aug(DatasetKind::optical_dem));
    CHECK(dataset_has_aug(DatasetKind::optical_aug));
}

TEST_CASE("config hash tracks results, not execution details") {
    ExperimentConfig cfg;
    cfg.data_root = "d";
    cfg.out_root = "o";
    const RunConfig rc =
        rc_of(DatasetKind::optical, SamplingMethod::regular, 32, 16, 16, 9);

    const std::string h = config_hash(cfg, rc);
    CHECK(h == config_hash(cfg, rc));
    CHECK(h.size() == 16);

    ExperimentConfig same = cfg;
    same.threads = 8;
    same.jobs = 4;
    same.data_root = "elsewhere";
    same.out_root = "elsewhere2";
    CHECK(config_hash(same, rc) == h);

    ExperimentConfig diff = cfg;
    diff.epochs += 1;
    CHECK(config_hash(diff, rc) != h);
    diff = cfg;
    diff.threshold = 0.6;
    CHECK(config_hash(diff, rc) != h);
    diff = cfg;
    diff.areas = {"area1"};
    CHECK(config_hash(diff, rc) != h);

    RunConfig rc2 = rc;
    rc2.seed = 10;
    CHECK(config_hash(cfg, rc2) != h);
}

TEST_CASE("run records round-trip through JSON") {
    TempDir dir("records");
    RunRecord rec = rec_of(DatasetKind::optical_dem, SamplingMethod::random,
                           64, 32, 16, 0.71, 0.55);
    rec.config.seed = 1234567890123ull;
    rec.checkpoint = "runs/optical_dem_random_p64_f32_b16";
    rec.best_epoch = 17;
    rec.best_val_loss = 0.0123;
    rec.train_seconds = 2.5;
    rec.config_hash = "deadbeefdeadbeef";
    AreaScore a1{"area1", compute_metrics({10, 2, 3, 85}, 5.0)};
    AreaScore a2{"area2", compute_metrics({20, 5, 5, 70}, 5.0)};
    rec.areas = {a1, a2};

    const std::string path = dir.sub("rec.json");
    save_record(rec, path);
    const auto back = load_record(path);
    REQUIRE(back.has_value());
    CHECK(back->config.run_id == rec.config.run_id);
    CHECK(back->config.seed == rec.config.seed);
    CHECK(back->status == "ok");
    CHECK(back->avg_f1 == doctest::Approx(0.71));
    CHECK(back->avg_miou == doctest::Approx(0.55));
    CHECK(back->best_epoch == 17);
    CHECK(back->config_hash == "deadbeefdeadbeef");
    REQUIRE(back->areas.size() == 2);
    CHECK(back->areas[0].area == "area1");
    CHECK(back->areas[0].metrics.miou == doctest::Approx(a1.metrics.miou));
    CHECK(back->areas[1].metrics.counts.tp == 20);

    RunRecord failed = rec_of(DatasetKind::optical, SamplingMethod::regular,
                              32, 16, 16, 0, 0, "failed");
    failed.error = "missing PatchSet cell";
    save_record(failed, dir.sub("failed.json"));
    const auto fb = load_record(dir.sub("failed.json"));
    REQUIRE(fb.has_value());
    CHECK(fb->status == "failed");
    CHECK(fb->error == "missing PatchSet cell");

    CHECK_FALSE(load_record(dir.sub("absent.json")).has_value());
}

TEST_CASE("best_models picks the argmax with deterministic tie-breaks") {
    using D = DatasetKind;
    using S = SamplingMethod;
    std::vector<RunRecord> recs;
    // group A: clear argmax on f1, different winner on miou
    recs.push_back(rec_of(D::optical, S::regular, 32, 16, 16, 0.70, 0.30));
    recs.push_back(rec_of(D::optical, S::regular, 32, 32, 32, 0.80, 0.20));
    recs.push_back(rec_of(D::optical, S::regular, 32, 64, 64, 0.60, 0.40));
    // group B: exact tie on f1 -> smaller batch, then smaller filters
    recs.push_back(rec_of(D::optical_dem, S::random, 64, 64, 64, 0.5, 0.5));
    recs.push_back(rec_of(D::optical_dem, S::random, 64, 32, 16, 0.5, 0.5));
    recs.push_back(rec_of(D::optical_dem, S::random, 64, 16, 16, 0.5, 0.5));
    // failed runs never win, even with a perfect score
    recs.push_back(
        rec_of(D::optical, S::regular, 32, 16, 128, 1.0, 1.0, "failed"));

    auto by_f1 = best_models(recs, "f1");
    REQUIRE(by_f1.size() == 2);
    std::string winner_a, winner_b;
    for (const auto& r : by_f1) {
        if (r.config.dataset == D::optical) winner_a = r.config.run_id;
        if (r.config.dataset == D::optical_dem) winner_b = r.config.run_id;
    }
    CHECK(winner_a == "optical_regular_p32_f32_b32");
    CHECK(winner_b == "optical_dem_random_p64_f16_b16");

    auto by_miou = best_models(recs, "miou");
    for (const auto& r : by_miou)
        if (r.config.dataset == D::optical)
            CHECK(r.config.run_id == "optical_regular_p32_f64_b64");

    // input order must not matter
    std::vector<RunRecord> shuffled = recs;
    std::reverse(shuffled.begin(), shuffled.end());
    auto again = best_models(shuffled, "f1");
    REQUIRE(again.size() == 2);
    std::set<std::string> ids1, ids2;
    for (const auto& r : by_f1) ids1.insert(r.config.run_id);
    for (const auto& r : again) ids2.insert(r.config.run_id);
    CHECK(ids1 == ids2);

    CHECK_THROWS_AS(best_models(recs, "accuracy"), Error);
}

TEST_CASE("generalization table groups by sampling and size") {
    using D = DatasetKind;
    using S = SamplingMethod;
    std::vector<RunRecord> recs;
    recs.push_back(rec_of(D::optical, S::regular, 32, 16, 16, 0.5, 0.20));
    recs.push_back(rec_of(D::optical_dem, S::regular, 32, 32, 16, 0.5, 0.45));
    recs.push_back(rec_of(D::optical, S::random, 32, 16, 16, 0.5, 0.30));
    recs.push_back(rec_of(D::optical, S::random, 64, 16, 16, 0.5, 0.25));
    const auto table = generalization_table(recs);
    REQUIRE(table.size() == 3);  // (regular,32), (random,32), (random,64)
    CHECK(table[0].avg_miou == doctest::Approx(0.45));
    CHECK(table[0].config.run_id == "optical_dem_regular_p32_f32_b16");
    CHECK(table[1].avg_miou == doctest::Approx(0.30));
    CHECK(table[2].avg_miou == doctest::Approx(0.25));
}

TEST_CASE("experiment config round-trips and accepts flat matrix keys") {
    TempDir dir("expcfg");
    ExperimentConfig cfg;
    cfg.data_root = dir.sub("data");
    cfg.out_root = dir.sub("out");
    cfg.matrix.datasets = {DatasetKind::optical_dem};
    cfg.matrix.sampling = {SamplingMethod::random};
    cfg.matrix.patch_sizes = {32};
    cfg.matrix.init_filters = {4};
    cfg.matrix.batch_sizes = {8, 16};
    cfg.matrix.base_seed = 11;
    cfg.epochs = 2;
    cfg.depth = 2;
    cfg.n_candidates = 150;
    SynthDataSpec sd;
    sd.scene_seed = 21;
    sd.train_size = 160;
    sd.area_size = 160;
    sd.area_seeds = {31, 32};
    sd.n_scars = 8;
    cfg.synth = sd;

    save_experiment_config(cfg, dir.sub("exp.json"));
    const ExperimentConfig back = load_experiment_config(dir.sub("exp.json"));
    CHECK(back.matrix.datasets == cfg.matrix.datasets);
    CHECK(back.matrix.batch_sizes == cfg.matrix.batch_sizes);
    CHECK(back.matrix.base_seed == 11);
    CHECK(back.epochs == 2);
    CHECK(back.depth == 2);
    REQUIRE(back.synth.has_value());
    CHECK(back.synth->train_size == 160);
    CHECK(back.synth->area_seeds == std::vector<std::uint64_t>{31, 32});

    // nested "matrix" object spelling
    std::ofstream nested(dir.sub("nested.json"));
    nested << R"({"data_root":"d","out_root":"o",)"
           << R"("matrix":{"datasets":["optical"],"patch_sizes":[64]}})";
    nested.close();
    const ExperimentConfig n = load_experiment_config(dir.sub("nested.json"));
    CHECK(n.matrix.datasets ==
          std::vector<DatasetKind>{DatasetKind::optical});
    CHECK(n.matrix.patch_sizes == std::vector<int>{64});
    CHECK(n.matrix.sampling.size() == 2);  // untouched factors keep defaults

    std::ofstream bad(dir.sub("bad.json"));
    bad << "{not json";
    bad.close();
    CHECK_THROWS_AS(load_experiment_config(dir.sub("bad.json")), Error);

    ExperimentConfig invalid = cfg;
    invalid.epochs = 0;
    CHECK_THROWS_AS(invalid.validate(), Error);
    invalid = cfg;
    invalid.areas.clear();
    CHECK_THROWS_AS(invalid.validate(), Error);
}

TEST_CASE("toy experiment: run, aggregate, skip, and isolate failures") {
    TempDir dir("exp_e2e");
    ExperimentConfig cfg;
    cfg.data_root = dir.sub("data");
    cfg.out_root = dir.sub("out");
    cfg.matrix.datasets = {DatasetKind::optical_dem};
    cfg.matrix.sampling = {SamplingMethod::regular, SamplingMethod::random};
    cfg.matrix.patch_sizes = {32};
    cfg.matrix.init_filters = {4};
    cfg.matrix.batch_sizes = {8};
    cfg.matrix.base_seed = 11;
    cfg.epochs = 2;
    cfg.depth = 2;
    cfg.n_candidates = 120;
    cfg.areas = {"area1", "area2"};
    SynthDataSpec sd;
    sd.scene_seed = 21;
    sd.train_size = 160;
    sd.area_size = 160;
    sd.area_seeds = {31, 32};
    sd.n_scars = 8;
    cfg.synth = sd;

    const auto records = run_all(cfg);
    REQUIRE(records.size() == 2);
    for (const auto& r : records) {
        INFO("run ", r.config.run_id, ": ", r.error);
        REQUIRE(r.status == "ok");
        REQUIRE(r.areas.size() == 2);
        CHECK(r.areas[0].area == "area1");
        CHECK(r.areas[1].area == "area2");
        const double mean_f1 =
            0.5 * (r.areas[0].metrics.f1 + r.areas[1].metrics.f1);
        const double mean_miou =
            0.5 * (r.areas[0].metrics.miou + r.areas[1].metrics.miou);
        CHECK(r.avg_f1 == doctest::Approx(mean_f1).epsilon(1e-12));
        CHECK(r.avg_miou == doctest::Approx(mean_miou).epsilon(1e-12));
        CHECK(r.best_epoch >= 1);
        CHECK(std::filesystem::exists(
            std::filesystem::path(cfg.out_root) / r.checkpoint /
            "weights.json"));
        CHECK(std::filesystem::exists(
            run_record_path(cfg, r.config.run_id)));
    }

    write_tables(cfg, records);
    for (const char* name : {"summary.csv", "best_f1.csv", "best_miou.csv",
                             "generalization.csv"})
        CHECK(std::filesystem::exists(
            std::filesystem::path(cfg.out_root) / name));
    std::ifstream summary(dir.sub("out/summary.csv"));
    int lines = 0;
    std::string line;
    while (std::getline(summary, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 3);  // header + 2 runs

    const std::string text = render_records_text(records);
    CHECK(text.find(records[0].config.run_id) != std::string::npos);

    // idempotence: identical rerun loads, never re-executes
    const std::string rp0 = run_record_path(cfg, records[0].config.run_id);
    const std::string before = slurp(rp0);
    const auto t_before =
        std::filesystem::last_write_time(rp0);
    const auto again = run_all(cfg);
    REQUIRE(again.size() == 2);
    CHECK(again[0].avg_f1 == records[0].avg_f1);
    CHECK(again[1].avg_miou == records[1].avg_miou);
    CHECK(slurp(rp0) == before);
    CHECK(std::filesystem::last_write_time(rp0) == t_before);

    // loading records back in matrix order matches run_all's view
    const auto loaded = load_records(cfg);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].config.run_id == records[0].config.run_id);
    CHECK(loaded[0].avg_f1 == doctest::Approx(records[0].avg_f1));

    // corrupt one cell; a fresh out_root must fail that run only
    {
        std::ofstream corrupt(dir.sub(
            "data/patches/optical_dem_random_p32/index.json"));
        corrupt << "{broken";
    }
    ExperimentConfig cfg2 = cfg;
    cfg2.out_root = dir.sub("out2");
    const auto mixed = run_all(cfg2);
    REQUIRE(mixed.size() == 2);
    CHECK(mixed[0].status == "ok");       // regular cell untouched
    CHECK(mixed[1].status == "failed");   // random cell corrupted
    CHECK_FALSE(mixed[1].error.empty());
    CHECK_NOTHROW(write_tables(cfg2, mixed));
    const auto best = best_models(mixed, "f1");
    REQUIRE(best.size() == 1);
    CHECK(best[0].config.run_id == mixed[0].config.run_id);
}

TEST_CASE("ensure_data without a synth spec demands real data") {
    TempDir dir("nodata");
    ExperimentConfig cfg;
    cfg.data_root = dir.sub("data");
    cfg.out_root = dir.sub("out");
    cfg.matrix.datasets = {DatasetKind::optical};
    cfg.matrix.sampling = {SamplingMethod::regular};
    cfg.matrix.patch_sizes = {32};
    cfg.matrix.init_filters = {4};
    cfg.matrix.batch_sizes = {8};
    CHECK_THROWS_AS(ensure_data(cfg), Error);
}
