// scarseg: one executable, ten subcommands, config-file-first.
// JSON config values are overridden by explicit flags; the fully resolved
// configuration of every run is echoed into the output directory.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scarseg/augment.hpp"
#include "scarseg/checkpoint.hpp"
#include "scarseg/experiment.hpp"
#include "scarseg/inference.hpp"
#include "scarseg/log.hpp"
#include "scarseg/mask.hpp"
#include "scarseg/metrics.hpp"
#include "scarseg/polygon.hpp"
#include "scarseg/raster.hpp"
#include "scarseg/sampler.hpp"
#include "scarseg/synth.hpp"
#include "scarseg/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scarseg;

namespace {

json load_file_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw Error("cli", "cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("cli", "malformed config " + path + ": " + e.what());
    }
    if (!j.is_object()) throw Error("cli", "config must be a JSON object");
    return j;
}

// flag wins; else config file; else the default already in `value`
template <typename T>
void merge(const json& file, const CLI::Option* opt, const char* key,
           T& value) {
    if (opt->count() > 0) return;
    if (!file.contains(key)) return;
    try {
        value = file.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error("cli", std::string("config key '") + key +
                               "' has the wrong type: " + e.what());
    }
}

void write_manifest(const std::string& dir, const std::string& name,
                    const json& resolved) {
    fs::create_directories(dir);
    const fs::path p = fs::path(dir) / name;
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error("cli", "cannot write " + p.string());
    out << resolved.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// rasterize
// ---------------------------------------------------------------------------

struct RasterizeArgs {
    std::string config, polygons, reference, out;
};

void cmd_rasterize(const RasterizeArgs& a, const CLI::App* sub) {
    const json file = load_file_config(a.config);
    std::string polygons = a.polygons, reference = a.reference, out = a.out;
    merge(file, sub->get_option("--polygons"), "polygons", polygons);
    merge(file, sub->get_option("--reference"), "reference", reference);
    merge(file, sub->get_option("--out"), "out", out);
    if (polygons.empty() || reference.empty() || out.empty())
        throw Error("cli", "rasterize needs --polygons, --reference, --out");

    const PolygonSet ps = load_polygons(polygons);
    const Raster ref = load_raster(reference);
    Mask m = rasterize(ps, ref.transform, ref.height, ref.width);
    m.crs = ref.crs;
    save_mask(m, out);
    write_manifest(fs::path(out).parent_path().string(),
                   fs::path(out).filename().string() + ".rasterize.json",
                   json{{"polygons", polygons},
                        {"reference", reference},
                        {"out", out},
                        {"positive_pixels", m.count_ones()}});
    std::cout << "mask " << out << ": " << m.count_ones()
              << " positive pixels\n";
}

// ---------------------------------------------------------------------------
// resample
// ---------------------------------------------------------------------------

struct ResampleArgs {
    std::string config, in, out;
    double pixel = 0;
};

void cmd_resample(const ResampleArgs& a, const CLI::App* sub) {
    const json file = load_file_config(a.config);
    std::string in = a.in, out = a.out;
    double pixel = a.pixel;
    merge(file, sub->get_option("--in"), "in", in);
    merge(file, sub->get_option("--out"), "out", out);
    merge(file, sub->get_option("--pixel"), "pixel", pixel);
    if (in.empty() || out.empty() || pixel <= 0)
        throw Error("cli", "resample needs --in, --out and --pixel > 0");
    const Raster src = load_raster(in);
    const Raster dst = resample_bilinear(src, pixel);
    save_raster(dst, out);
    std::cout << "resampled " << src.width << "x" << src.height << " -> "
              << dst.width << "x" << dst.height << " at " << pixel << " m\n";
}

// ---------------------------------------------------------------------------
// stack
// ---------------------------------------------------------------------------

struct StackArgs {
    std::string config, optical, dem, out;
};

void cmd_stack(const StackArgs& a, const CLI::App* sub) {
    const json file = load_file_config(a.config);
    std::string optical = a.optical, dem = a.dem, out = a.out;
    merge(file, sub->get_option("--optical"), "optical", optical);
    merge(file, sub->get_option("--dem"), "dem", dem);
    merge(file, sub->get_option("--out"), "out", out);
    if (optical.empty() || dem.empty() || out.empty())
        throw Error("cli", "stack needs --optical, --dem, --out");
    const Raster opt = load_raster(optical);
    Raster d = load_raster(dem);
    // resample onto the optical grid when the DEM grid differs
    if (!d.transform.almost_equal(opt.transform) || d.height != opt.height ||
        d.width != opt.width)
        d = resample_bilinear(d, opt.transform.pixel_w);
    const Raster stacked = stack_bands(opt, d);
    save_raster(stacked, out);
    std::cout << "stacked " << stacked.bands << " bands -> " << out << "\n";
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

struct SampleArgs {
    std::string config, image, mask, out, method = "regular";
    int patch = 64, candidates = 5000;
    double overlap = 0.2;
    std::uint64_t seed = 0;
    bool keep_all = false;
    bool no_normalize = false;
};

void cmd_sample(const SampleArgs& a, const CLI::App* sub) {
    const json file = load_file_config(a.config);
    SampleArgs r = a;
    merge(file, sub->get_option("--image"), "image", r.image);
    merge(file, sub->get_option("--mask"), "mask", r.mask);
    merge(file, sub->get_option("--out"), "out", r.out);
    merge(file, sub->get_option("--method"), "method", r.method);
    merge(file, sub->get_option("--patch"), "patch", r.patch);
    merge(file, sub->get_option("--overlap"), "overlap", r.overlap);
    merge(file, sub->get_option("--candidates"), "candidates", r.candidates);
    merge(file, sub->get_option("--seed"), "seed", r.seed);
    merge(file, sub->get_option("--keep-all"), "keep_all", r.keep_all);
    merge(file, sub->get_option("--no-normalize"), "no_normalize",
          r.no_normalize);
    if (r.image.empty() || r.mask.empty() || r.out.empty())
        throw Error("cli", "sample needs --image, --mask, --out");

    Raster image = load_raster(r.image);
    const Mask mask = load_mask(r.mask);

    std::vector<ChannelRange> ranges;
    if (!r.no_normalize) {
        ranges = channel_ranges(image);
        image = normalize_channels(image, ranges);
    }

    SamplingSpec spec;
    spec.method = parse_sampling_method(r.method);
    spec.patch_size = r.patch;
    spec.overlap_fraction = r.overlap;
    spec.n_candidates = r.candidates;
    spec.seed = r.seed;
    const std::vector<Window> windows =
        spec.method == SamplingMethod::regular
            ? regular_grid(image.height, image.width, spec)
            : random_windows(image.height, image.width, spec);
    const std::vector<Window> kept =
        r.keep_all ? windows : filter_intersecting(windows, mask);
    PatchSet ps = extract_patches(image, mask, kept);
    ps.spec = spec;
    ps.normalization = ranges;
    save_patchset(ps, r.out);

    write_manifest(r.out, "sample_config.json",
                   json{{"image", r.image},
                        {"mask", r.mask},
                        {"method", r.method},
                        {"patch", r.patch},
                        {"overlap", r.overlap},
                        {"candidates", r.candidates},
                        {"seed", r.seed},
                        {"keep_all", r.keep_all},
                        {"normalized", !r.no_normalize},
                        {"windows_total", windows.size()},
                        {"windows_kept", kept.size()}});
    std::cout << "sampled " << windows.size() << " windows, kept "
              << kept.size() << " -> " << r.out << "\n";
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

struct AugmentArgs {
    std::string config, in, out;
    int copies = 2;
    std::uint64_t seed = 0;
};

void cmd_augment(const AugmentArgs& a, const CLI::App* sub) {
    const json file = load_file_config(a.config);
    AugmentArgs r = a;
    merge(file, sub->get_option("--in"), "in", r.in);
    merge(file, sub->get_option("--out"), "out", r.out);
    merge(file, sub->get_option("--copies"), "copies", r.copies);
    merge(file, sub->get_option("--seed"), "seed", r.seed);
    if (r.in.empty() || r.out.empty())
        throw Error("cli", "augment needs --in and --out");
    const PatchSet ps = load_patchset(r.in);
    AugmentSpec spec;
    spec.copies_per_patch = r.copies;
    spec.seed = r.seed;
    const PatchSet out = augment_dataset(ps, spec);
    save_patchset(out, r.out);
    write_manifest(r.out, "augment_config.json",
                   json{{"in", r.in},
                        {"copies", r.copies},
                        {"seed", r.seed},
                        {"patches_in", ps.items.size()},
                        {"patches_out", out.items.size()}});
    std::cout << "augmented " << ps.items.size() << " -> " << out.items.size()
              << " patches\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config, patches, out;
    int epochs = 200, batch = 16, filters = 16, depth = 4, jobs = 1;
    double lr = 0.001, val_fraction = 0.3;
    std::uint64_t seed = 0;
    bool sequential = false;
};

void cmd_train(const TrainArgs& a, const CLI::App* sub) {
    const json file = load_file_config(a.config);
    TrainArgs r = a;
    merge(file, sub->get_option("--patches"), "patches", r.patches);
    merge(file, sub->get_option("--out"), "out", r.out);
    merge(file, sub->get_option("--epochs"), "epochs", r.epochs);
    merge(file, sub->get_option("--batch"), "batch", r.batch);
    merge(file, sub->get_option("--filters"), "filters", r.filters);
    merge(file, sub->get_option("--depth"), "depth", r.depth);
    merge(file, sub->get_option("--lr"), "learning_rate", r.lr);
    merge(file, sub->get_option("--val-fraction"), "val_fraction",
          r.val_fraction);
    merge(file, sub->get_option("--seed"), "seed", r.seed);
    merge(file, sub->get_option("--jobs"), "jobs", r.jobs);
    if (r.patches.empty() || r.out.empty())
        throw Error("cli", "train needs --patches and --out");
    if (r.sequential) r.jobs = 1;

    const PatchSet ps = load_patchset(r.patches);
    UNetConfig net;
    net.in_channels = ps.channels;
    net.init_filters = r.filters;
    net.depth = r.depth;
    TrainConfig tc;
    tc.epochs = r.epochs;
    tc.learning_rate = r.lr;
    tc.batch_size = r.batch;
    tc.val_fraction = r.val_fraction;
    tc.shuffle_seed = r.seed;
    tc.threads = r.jobs;

    write_manifest(r.out, "train_config.json",
                   json{{"patches", r.patches},
                        {"epochs", r.epochs},
                        {"batch", r.batch},
                        {"filters", r.filters},
                        {"depth", r.depth},
                        {"learning_rate", r.lr},
                        {"val_fraction", r.val_fraction},
                        {"seed", r.seed},
                        {"jobs", r.jobs},
                        {"in_channels", net.in_channels},
                        {"patch_count", ps.items.size()}});
    const TrainResult res = train(tc, net, ps, r.out);
    std::cout << "best epoch " << res.best_epoch << " val loss "
              << res.best_val_loss << " -> " << r.out << "\n";
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string config, checkpoint, area, out;
    int tile = 64, jobs = 1;
    double overlap = 0.5, threshold = 0.5;
    bool sequential = false;
};

void cmd_predict(const PredictArgs& a, const CLI::App* sub) {
    const json file = load_file_config(a.config);
    PredictArgs r = a;
    merge(file, sub->get_option("--checkpoint"), "checkpoint", r.checkpoint);
    merge(file, sub->get_option("--area"), "area", r.area);
    merge(file, sub->get_option("--out"), "out", r.out);
    merge(file, sub->get_option("--tile"), "tile", r.tile);
    merge(file, sub->get_option("--overlap"), "overlap", r.overlap);
    merge(file, sub->get_option("--threshold"), "threshold", r.threshold);
    merge(file, sub->get_option("--jobs"), "jobs", r.jobs);
    if (r.checkpoint.empty() || r.area.empty() || r.out.empty())
        throw Error("cli", "predict needs --checkpoint, --area, --out");
    if (r.sequential) r.jobs = 1;

    const Checkpoint ck = load_checkpoint(r.checkpoint);
    Raster area = load_raster(r.area);
    const bool normalized = !ck.meta.normalization.empty();
    if (normalized) area = normalize_channels(area, ck.meta.normalization);
    const Raster probs = predict_tiled(ck.config, ck.params, area, r.tile,
                                       r.overlap, r.jobs);
    const Mask pred = binarize(probs, r.threshold);
    fs::create_directories(r.out);
    save_raster(probs, (fs::path(r.out) / "probs").string());
    save_mask(pred, (fs::path(r.out) / "pred").string());
    write_manifest(r.out, "predict_config.json",
                   json{{"checkpoint", r.checkpoint},
                        {"area", r.area},
                        {"tile", r.tile},
                        {"overlap", r.overlap},
                        {"threshold", r.threshold},
                        {"jobs", r.jobs},
                        {"normalized_with_checkpoint_ranges", normalized},
                        {"positive_pixels", pred.count_ones()}});
    std::cout << "predicted " << pred.count_ones() << " positive pixels -> "
              << r.out << "\n";
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string config, pred, truth, out;
    double pixel = 0;  // 0 = take from the mask transform
};

void cmd_evaluate(const EvaluateArgs& a, const CLI::App* sub) {
    const json file = load_file_config(a.config);
    EvaluateArgs r = a;
    merge(file, sub->get_option("--pred"), "pred", r.pred);
    merge(file, sub->get_option("--truth"), "truth", r.truth);
    merge(file, sub->get_option("--out"), "out", r.out);
    merge(file, sub->get_option("--pixel"), "pixel", r.pixel);
    if (r.pred.empty() || r.truth.empty())
        throw Error("cli", "evaluate needs --pred and --truth");
    const Mask pred = load_mask(r.pred);
    const Mask truth = load_mask(r.truth);
    const double pixel = r.pixel > 0 ? r.pixel : truth.transform.pixel_w;
    const MetricsReport m = compute_metrics(confusion(pred, truth), pixel);
    const std::string js = metrics_to_json(m);
    std::cout << js << "\n";
    if (!r.out.empty()) {
        std::ofstream out(r.out, std::ios::trunc);
        if (!out) throw Error("cli", "cannot write " + r.out);
        out << js << "\n";
    }
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string config, out;
    int size = 512, scars = 40, decoys = -1;
    double pixel = 5.0, dem_pixel = 10.0, noise = 0.04;
    std::uint64_t seed = 0;
};

void cmd_synth(const SynthArgs& a, const CLI::App* sub) {
    const json file = load_file_config(a.config);
    SynthArgs r = a;
    merge(file, sub->get_option("--out"), "out", r.out);
    merge(file, sub->get_option("--size"), "size", r.size);
    merge(file, sub->get_option("--scars"), "scars", r.scars);
    merge(file, sub->get_option("--decoys"), "decoys", r.decoys);
    merge(file, sub->get_option("--pixel"), "pixel", r.pixel);
    merge(file, sub->get_option("--dem-pixel"), "dem_pixel", r.dem_pixel);
    merge(file, sub->get_option("--noise"), "noise", r.noise);
    merge(file, sub->get_option("--seed"), "seed", r.seed);
    if (r.out.empty()) throw Error("cli", "synth needs --out");

    SynthSpec spec;
    spec.height = spec.width = r.size;
    spec.pixel = r.pixel;
    spec.dem_pixel = r.dem_pixel;
    spec.n_scars = r.scars;
    spec.n_decoys = r.decoys >= 0 ? r.decoys : std::max(1, r.scars / 3);
    spec.seed = r.seed;
    spec.noise = r.noise;
    const SynthScene scene = synth_scene(spec);

    fs::create_directories(r.out);
    save_raster(scene.optical, (fs::path(r.out) / "optical").string());
    save_raster(scene.dem, (fs::path(r.out) / "dem").string());
    save_mask(scene.truth, (fs::path(r.out) / "truth").string());
    save_polygons(scene.inventory,
                  (fs::path(r.out) / "inventory.geojson").string());
    write_manifest(r.out, "synth_config.json",
                   json{{"size", r.size},
                        {"scars", r.scars},
                        {"decoys", spec.n_decoys},
                        {"pixel", r.pixel},
                        {"dem_pixel", r.dem_pixel},
                        {"noise", r.noise},
                        {"seed", r.seed},
                        {"positive_pixels", scene.truth.count_ones()},
                        {"polygons", scene.inventory.polygons.size()}});
    std::cout << "synth scene -> " << r.out << " ("
              << scene.inventory.polygons.size() << " polygons, "
              << scene.truth.count_ones() << " positive pixels)\n";
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperimentArgs {
    std::string config, out, only_run;
    int jobs = 0;  // 0 = take from config
    std::uint64_t seed = 0;
    bool sequential = false;
    bool tables_only = false;
};

void spawn_workers(const ExperimentConfig& cfg,
                   const std::string& config_path,
                   const std::vector<std::string>& pending) {
    std::size_t next = 0;
    std::map<pid_t, std::string> active;
    auto spawn_one = [&](const std::string& run_id) {
        const pid_t pid = fork();
        if (pid < 0) throw Error("cli", "fork failed");
        if (pid == 0) {
            std::vector<std::string> args = {"scarseg",  "experiment",
                                             "--config", config_path,
                                             "--only-run", run_id};
            std::vector<char*> argv;
            for (auto& s : args) argv.push_back(s.data());
            argv.push_back(nullptr);
            execv("/proc/self/exe", argv.data());
            std::perror("execv");
            _exit(127);
        }
        active[pid] = run_id;
    };
    while (next < pending.size() || !active.empty()) {
        while (static_cast<int>(active.size()) < cfg.jobs &&
               next < pending.size())
            spawn_one(pending[next++]);
        int status = 0;
        const pid_t pid = waitpid(-1, &status, 0);
        if (pid < 0) throw Error("cli", "waitpid failed");
        const auto it = active.find(pid);
        if (it == active.end()) continue;
        const std::string run_id = it->second;
        active.erase(it);
        const bool clean = WIFEXITED(status) && WEXITSTATUS(status) == 0;
        const std::string rpath = run_record_path(cfg, run_id);
        if (!clean && !fs::exists(rpath)) {
            // worker died before writing its record; keep the batch going
            RunRecord rec;
            for (const auto& rc : expand_matrix(cfg.matrix))
                if (rc.run_id == run_id) rec.config = rc;
            rec.status = "failed";
            rec.error = "worker exited abnormally (status " +
                        std::to_string(status) + ")";
            rec.config_hash = config_hash(cfg, rec.config);
            save_record(rec, rpath);
        }
    }
}

void cmd_experiment(const ExperimentArgs& a, const CLI::App* sub) {
    if (a.config.empty()) throw Error("cli", "experiment needs --config");
    ExperimentConfig cfg = load_experiment_config(a.config);
    if (sub->get_option("--out")->count()) cfg.out_root = a.out;
    if (sub->get_option("--jobs")->count()) cfg.jobs = a.jobs;
    if (sub->get_option("--seed")->count()) cfg.matrix.base_seed = a.seed;
    if (a.sequential) {
        cfg.jobs = 1;
        cfg.threads = 1;
    }
    cfg.validate();

    if (!a.only_run.empty()) {
        // worker mode: execute exactly one run and exit
        ensure_data(cfg);
        for (const auto& rc : expand_matrix(cfg.matrix)) {
            if (rc.run_id != a.only_run) continue;
            const std::string rpath = run_record_path(cfg, rc.run_id);
            if (auto existing = load_record(rpath);
                existing && existing->config_hash == config_hash(cfg, rc)) {
                std::cout << "run " << rc.run_id << " already complete\n";
                return;
            }
            const RunRecord rec = run_one(cfg, rc);
            save_record(rec, rpath);
            std::cout << "run " << rc.run_id << ": " << rec.status << "\n";
            return;
        }
        throw Error("cli", "unknown run id '" + a.only_run + "'");
    }

    fs::create_directories(cfg.out_root);
    const std::string resolved_path =
        (fs::path(cfg.out_root) / "experiment_resolved.json").string();
    save_experiment_config(cfg, resolved_path);

    std::vector<RunRecord> records;
    if (a.tables_only) {
        records = load_records(cfg);
    } else if (cfg.jobs <= 1) {
        records = run_all(cfg);
    } else {
        ensure_data(cfg);
        std::vector<std::string> pending;
        for (const auto& rc : expand_matrix(cfg.matrix)) {
            const auto existing = load_record(run_record_path(cfg, rc.run_id));
            if (existing && existing->config_hash == config_hash(cfg, rc))
                continue;
            pending.push_back(rc.run_id);
        }
        log_info(std::to_string(pending.size()) + " runs pending on " +
                 std::to_string(cfg.jobs) + " workers");
        spawn_workers(cfg, resolved_path, pending);
        records = load_records(cfg);
    }

    write_tables(cfg, records);
    write_plots(cfg, records);
    std::cout << render_records_text(records);
    std::size_t failed = 0;
    for (const auto& r : records)
        if (r.status != "ok") ++failed;
    std::cout << records.size() << " records, " << failed << " failed\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"landslide-scar segmentation pipeline"};
    app.require_subcommand(1);

    // rasterize
    RasterizeArgs ra;
    auto* c_ras = app.add_subcommand("rasterize",
                                     "burn polygons into a binary mask");
    c_ras->add_option("--config", ra.config, "JSON config");
    c_ras->add_option("--polygons", ra.polygons, "GeoJSON inventory");
    c_ras->add_option("--reference", ra.reference,
                      "raster bundle defining the target grid");
    c_ras->add_option("--out", ra.out, "output mask bundle base path");

    // resample
    ResampleArgs rs;
    auto* c_res = app.add_subcommand("resample",
                                     "bilinear resample to a new pixel size");
    c_res->add_option("--config", rs.config, "JSON config");
    c_res->add_option("--in", rs.in, "input raster bundle");
    c_res->add_option("--pixel", rs.pixel, "target pixel size in meters");
    c_res->add_option("--out", rs.out, "output raster bundle base path");

    // stack
    StackArgs st;
    auto* c_stk = app.add_subcommand(
        "stack", "stack optical and DEM bands onto one grid");
    c_stk->add_option("--config", st.config, "JSON config");
    c_stk->add_option("--optical", st.optical, "optical raster bundle");
    c_stk->add_option("--dem", st.dem, "DEM raster bundle");
    c_stk->add_option("--out", st.out, "output raster bundle base path");

    // sample
    SampleArgs sa;
    auto* c_sam = app.add_subcommand("sample", "cut training patches");
    c_sam->add_option("--config", sa.config, "JSON config");
    c_sam->add_option("--image", sa.image, "input raster bundle");
    c_sam->add_option("--mask", sa.mask, "truth mask bundle");
    c_sam->add_option("--out", sa.out, "output PatchSet directory");
    c_sam->add_option("--method", sa.method, "regular | random");
    c_sam->add_option("--patch", sa.patch, "patch size in pixels");
    c_sam->add_option("--overlap", sa.overlap,
                      "regular-grid overlap fraction");
    c_sam->add_option("--candidates", sa.candidates,
                      "random candidate count");
    c_sam->add_option("--seed", sa.seed, "sampling seed");
    c_sam->add_flag("--keep-all", sa.keep_all,
                    "skip the landslide-intersection filter");
    c_sam->add_flag("--no-normalize", sa.no_normalize,
                    "do not min-max normalize channels");

    // augment
    AugmentArgs au;
    auto* c_aug = app.add_subcommand("augment",
                                     "add rotated/flipped patch copies");
    c_aug->add_option("--config", au.config, "JSON config");
    c_aug->add_option("--in", au.in, "input PatchSet directory");
    c_aug->add_option("--out", au.out, "output PatchSet directory");
    c_aug->add_option("--copies", au.copies, "copies per patch (0-7)");
    c_aug->add_option("--seed", au.seed, "augmentation seed");

    // train
    TrainArgs tr;
    auto* c_trn = app.add_subcommand("train", "train a U-net on a PatchSet");
    c_trn->add_option("--config", tr.config, "JSON config");
    c_trn->add_option("--patches", tr.patches, "PatchSet directory");
    c_trn->add_option("--out", tr.out, "output directory");
    c_trn->add_option("--epochs", tr.epochs, "training epochs");
    c_trn->add_option("--batch", tr.batch, "mini-batch size");
    c_trn->add_option("--filters", tr.filters, "initial filter count");
    c_trn->add_option("--depth", tr.depth, "down-sampling levels");
    c_trn->add_option("--lr", tr.lr, "learning rate");
    c_trn->add_option("--val-fraction", tr.val_fraction,
                      "validation fraction");
    c_trn->add_option("--seed", tr.seed, "shuffle/init seed");
    c_trn->add_option("--jobs", tr.jobs, "worker threads");
    c_trn->add_flag("--sequential", tr.sequential,
                    "force single-threaded bit-exact mode");

    // predict
    PredictArgs pr;
    auto* c_prd = app.add_subcommand("predict",
                                     "tiled inference over an area");
    c_prd->add_option("--config", pr.config, "JSON config");
    c_prd->add_option("--checkpoint", pr.checkpoint, "checkpoint directory");
    c_prd->add_option("--area", pr.area, "area raster bundle");
    c_prd->add_option("--out", pr.out, "output directory");
    c_prd->add_option("--tile", pr.tile, "tile size in pixels");
    c_prd->add_option("--overlap", pr.overlap, "tile overlap fraction");
    c_prd->add_option("--threshold", pr.threshold, "binarization threshold");
    c_prd->add_option("--jobs", pr.jobs, "worker threads");
    c_prd->add_flag("--sequential", pr.sequential,
                    "force single-threaded bit-exact mode");

    // evaluate
    EvaluateArgs ev;
    auto* c_evl = app.add_subcommand("evaluate",
                                     "confusion metrics for two masks");
    c_evl->add_option("--config", ev.config, "JSON config");
    c_evl->add_option("--pred", ev.pred, "predicted mask bundle");
    c_evl->add_option("--truth", ev.truth, "truth mask bundle");
    c_evl->add_option("--out", ev.out, "write metrics JSON here too");
    c_evl->add_option("--pixel", ev.pixel,
                      "pixel size in meters (default: from mask)");

    // synth
    SynthArgs sy;
    auto* c_syn = app.add_subcommand("synth",
                                     "generate a synthetic benchmark scene");
    c_syn->add_option("--config", sy.config, "JSON config");
    c_syn->add_option("--out", sy.out, "output directory");
    c_syn->add_option("--size", sy.size, "scene size in pixels");
    c_syn->add_option("--scars", sy.scars, "scar blob count");
    c_syn->add_option("--decoys", sy.decoys,
                      "decoy blob count (default scars/3)");
    c_syn->add_option("--pixel", sy.pixel, "optical pixel size (m)");
    c_syn->add_option("--dem-pixel", sy.dem_pixel, "DEM pixel size (m)");
    c_syn->add_option("--noise", sy.noise, "relative band noise");
    c_syn->add_option("--seed", sy.seed, "scene seed");

    // experiment
    ExperimentArgs ex;
    auto* c_exp = app.add_subcommand("experiment",
                                     "run the factorial experiment matrix");
    c_exp->add_option("--config", ex.config, "experiment.json")->required();
    c_exp->add_option("--out", ex.out, "override out_root");
    c_exp->add_option("--jobs", ex.jobs, "concurrent worker processes");
    c_exp->add_option("--seed", ex.seed, "override base seed");
    c_exp->add_flag("--sequential", ex.sequential,
                    "single process, single thread");
    c_exp->add_flag("--tables-only", ex.tables_only,
                    "regenerate tables from existing records");
    c_exp->add_option("--only-run", ex.only_run, "execute one run id")
        ->group("");  // internal: used by worker processes

    c_ras->callback([&] { cmd_rasterize(ra, c_ras); });
    c_res->callback([&] { cmd_resample(rs, c_res); });
    c_stk->callback([&] { cmd_stack(st, c_stk); });
    c_sam->callback([&] { cmd_sample(sa, c_sam); });
    c_aug->callback([&] { cmd_augment(au, c_aug); });
    c_trn->callback([&] { cmd_train(tr, c_trn); });
    c_prd->callback([&] { cmd_predict(pr, c_prd); });
    c_evl->callback([&] { cmd_evaluate(ev, c_evl); });
    c_syn->callback([&] { cmd_synth(sy, c_syn); });
    c_exp->callback([&] { cmd_experiment(ex, c_exp); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        json err{{"error",
                  {{"module", e.module()}, {"message", e.message()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        json err{{"error", {{"module", "cli"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
