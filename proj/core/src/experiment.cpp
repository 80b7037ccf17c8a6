#include "scarseg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "scarseg/augment.hpp"
#include "scarseg/checkpoint.hpp"
#include "scarseg/inference.hpp"
#include "scarseg/log.hpp"
#include "scarseg/rng.hpp"
#include "scarseg/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace scarseg {

namespace {
constexpr const char* kModule = "experiment";
}

const char* dataset_name(DatasetKind d) {
    switch (d) {
        case DatasetKind::optical: return "optical";
        case DatasetKind::optical_aug: return "optical_aug";
        case DatasetKind::optical_dem: return "optical_dem";
        case DatasetKind::optical_dem_aug: return "optical_dem_aug";
    }
    throw Error(kModule, "unknown dataset kind");
}

DatasetKind parse_dataset(const std::string& name) {
    if (name == "optical") return DatasetKind::optical;
    if (name == "optical_aug") return DatasetKind::optical_aug;
    if (name == "optical_dem") return DatasetKind::optical_dem;
    if (name == "optical_dem_aug") return DatasetKind::optical_dem_aug;
    throw Error(kModule, "unknown dataset '" + name + "'");
}

bool dataset_has_dem(DatasetKind d) {
    return d == DatasetKind::optical_dem || d == DatasetKind::optical_dem_aug;
}

bool dataset_has_aug(DatasetKind d) {
    return d == DatasetKind::optical_aug || d == DatasetKind::optical_dem_aug;
}

std::string make_run_id(const RunConfig& rc) {
    return std::string(dataset_name(rc.dataset)) + "_" +
           sampling_method_name(rc.sampling) + "_p" + std::to_string(rc.patch_size) +
           "_f" + std::to_string(rc.init_filters) + "_b" +
           std::to_string(rc.batch_size);
}

std::vector<RunConfig> expand_matrix(const ExperimentMatrix& m) {
    if (m.datasets.empty() || m.sampling.empty() || m.patch_sizes.empty() ||
        m.init_filters.empty() || m.batch_sizes.empty())
        throw Error(kModule, "matrix has an empty factor list");
    std::vector<RunConfig> runs;
    runs.reserve(m.datasets.size() * m.sampling.size() * m.patch_sizes.size() *
                 m.init_filters.size() * m.batch_sizes.size());
    for (DatasetKind d : m.datasets)
        for (SamplingMethod s : m.sampling)
            for (int ps : m.patch_sizes)
                for (int f : m.init_filters)
                    for (int b : m.batch_sizes) {
                        RunConfig rc;
                        rc.dataset = d;
                        rc.sampling = s;
                        rc.patch_size = ps;
                        rc.init_filters = f;
                        rc.batch_size = b;
                        rc.run_id = make_run_id(rc);
                        rc.seed = seed_from_label(m.base_seed, rc.run_id);
                        runs.push_back(std::move(rc));
                    }
    return runs;
}

void ExperimentConfig::validate() const {
    if (data_root.empty() || out_root.empty())
        throw Error(kModule, "data_root and out_root are required");
    if (epochs < 1) throw Error(kModule, "epochs must be >= 1");
    if (!(val_fraction > 0 && val_fraction < 1))
        throw Error(kModule, "val_fraction must be in (0, 1)");
    if (depth < 1) throw Error(kModule, "depth must be >= 1");
    if (threads < 1 || jobs < 1)
        throw Error(kModule, "threads and jobs must be >= 1");
    if (areas.empty()) throw Error(kModule, "at least one test area required");
    if (copies_per_patch < 0 || copies_per_patch > 7)
        throw Error(kModule, "copies_per_patch must be in [0, 7]");
}

// ---------------------------------------------------------------------------
// experiment.json
// ---------------------------------------------------------------------------

namespace {

json matrix_to_json(const ExperimentMatrix& m) {
    json j;
    json ds = json::array();
    for (auto d : m.datasets) ds.push_back(dataset_name(d));
    j["datasets"] = ds;
    json sm = json::array();
    for (auto s : m.sampling) sm.push_back(sampling_method_name(s));
    j["sampling"] = sm;
    j["patch_sizes"] = m.patch_sizes;
    j["init_filters"] = m.init_filters;
    j["batch_sizes"] = m.batch_sizes;
    j["base_seed"] = m.base_seed;
    return j;
}

ExperimentMatrix matrix_from_json(const json& j) {
    ExperimentMatrix m;
    if (j.contains("datasets")) {
        m.datasets.clear();
        for (const auto& d : j.at("datasets"))
            m.datasets.push_back(parse_dataset(d.get<std::string>()));
    }
    if (j.contains("sampling")) {
        m.sampling.clear();
        for (const auto& s : j.at("sampling"))
            m.sampling.push_back(parse_sampling_method(s.get<std::string>()));
    }
    if (j.contains("patch_sizes"))
        m.patch_sizes = j.at("patch_sizes").get<std::vector<int>>();
    if (j.contains("init_filters"))
        m.init_filters = j.at("init_filters").get<std::vector<int>>();
    if (j.contains("batch_sizes"))
        m.batch_sizes = j.at("batch_sizes").get<std::vector<int>>();
    m.base_seed = j.value("base_seed", std::uint64_t{0});
    return m;
}

json synth_to_json(const SynthDataSpec& s) {
    return json{{"scene_seed", s.scene_seed}, {"train_size", s.train_size},
                {"area_size", s.area_size},   {"area_seeds", s.area_seeds},
                {"n_scars", s.n_scars},       {"pixel", s.pixel},
                {"dem_pixel", s.dem_pixel},   {"noise", s.noise}};
}

SynthDataSpec synth_from_json(const json& j) {
    SynthDataSpec s;
    s.scene_seed = j.value("scene_seed", s.scene_seed);
    s.train_size = j.value("train_size", s.train_size);
    s.area_size = j.value("area_size", s.area_size);
    if (j.contains("area_seeds"))
        s.area_seeds = j.at("area_seeds").get<std::vector<std::uint64_t>>();
    s.n_scars = j.value("n_scars", s.n_scars);
    s.pixel = j.value("pixel", s.pixel);
    s.dem_pixel = j.value("dem_pixel", s.dem_pixel);
    s.noise = j.value("noise", s.noise);
    return s;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(kModule, "malformed " + path + ": " + e.what());
    }
    ExperimentConfig cfg;
    // matrix keys live at the top level; a nested "matrix" object also works
    cfg.matrix = matrix_from_json(j.contains("matrix") ? j.at("matrix") : j);
    cfg.data_root = j.value("data_root", std::string{});
    cfg.out_root = j.value("out_root", std::string{});
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    cfg.depth = j.value("depth", cfg.depth);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.jobs = j.value("jobs", cfg.jobs);
    cfg.sampling_overlap = j.value("sampling_overlap", cfg.sampling_overlap);
    cfg.n_candidates = j.value("n_candidates", cfg.n_candidates);
    cfg.copies_per_patch = j.value("copies_per_patch", cfg.copies_per_patch);
    cfg.tile_overlap = j.value("tile_overlap", cfg.tile_overlap);
    cfg.threshold = j.value("threshold", cfg.threshold);
    if (j.contains("areas"))
        cfg.areas = j.at("areas").get<std::vector<std::string>>();
    if (j.contains("synth")) cfg.synth = synth_from_json(j.at("synth"));
    cfg.validate();
    return cfg;
}

void save_experiment_config(const ExperimentConfig& cfg,
                            const std::string& path) {
    json j = matrix_to_json(cfg.matrix);
    j["data_root"] = cfg.data_root;
    j["out_root"] = cfg.out_root;
    j["epochs"] = cfg.epochs;
    j["learning_rate"] = cfg.learning_rate;
    j["val_fraction"] = cfg.val_fraction;
    j["depth"] = cfg.depth;
    j["threads"] = cfg.threads;
    j["jobs"] = cfg.jobs;
    j["sampling_overlap"] = cfg.sampling_overlap;
    j["n_candidates"] = cfg.n_candidates;
    j["copies_per_patch"] = cfg.copies_per_patch;
    j["tile_overlap"] = cfg.tile_overlap;
    j["threshold"] = cfg.threshold;
    j["areas"] = cfg.areas;
    if (cfg.synth) j["synth"] = synth_to_json(*cfg.synth);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(kModule, "cannot write " + path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Paths, hashing, record IO
// ---------------------------------------------------------------------------

std::string cell_path(const RunConfig& rc) {
    return std::string("patches/") + dataset_name(rc.dataset) + "_" +
           sampling_method_name(rc.sampling) + "_p" + std::to_string(rc.patch_size);
}

std::string run_record_path(const ExperimentConfig& cfg,
                            const std::string& run_id) {
    return (fs::path(cfg.out_root) / "records" / (run_id + ".json")).string();
}

std::string config_hash(const ExperimentConfig& cfg, const RunConfig& rc) {
    std::ostringstream os;
    os.precision(17);
    os << rc.run_id << '|' << rc.seed << '|' << cfg.epochs << '|'
       << cfg.learning_rate << '|' << cfg.val_fraction << '|' << cfg.depth
       << '|' << cfg.sampling_overlap << '|' << cfg.n_candidates << '|'
       << cfg.copies_per_patch << '|' << cfg.tile_overlap << '|'
       << cfg.threshold << '|';
    for (const auto& a : cfg.areas) os << a << ',';
    const std::string s = os.str();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

namespace {

json metrics_json_obj(const MetricsReport& m) {
    return json{{"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"miou", m.miou},
                {"miou_macro", m.miou_macro},
                {"areas_km2",
                 {{"tp", m.areas_km2.tp},
                  {"fp", m.areas_km2.fp},
                  {"fn", m.areas_km2.fn},
                  {"tn", m.areas_km2.tn}}},
                {"counts",
                 {{"tp", m.counts.tp},
                  {"fp", m.counts.fp},
                  {"fn", m.counts.fn},
                  {"tn", m.counts.tn}}},
                {"undefined_flags", m.undefined_flags}};
}

MetricsReport metrics_from_json(const json& j) {
    MetricsReport m;
    m.precision = j.value("precision", 0.0);
    m.recall = j.value("recall", 0.0);
    m.f1 = j.value("f1", 0.0);
    m.miou = j.value("miou", 0.0);
    m.miou_macro = j.value("miou_macro", 0.0);
    if (j.contains("areas_km2")) {
        const auto& a = j.at("areas_km2");
        m.areas_km2 = {a.value("tp", 0.0), a.value("fp", 0.0),
                       a.value("fn", 0.0), a.value("tn", 0.0)};
    }
    if (j.contains("counts")) {
        const auto& c = j.at("counts");
        m.counts.tp = c.value("tp", std::uint64_t{0});
        m.counts.fp = c.value("fp", std::uint64_t{0});
        m.counts.fn = c.value("fn", std::uint64_t{0});
        m.counts.tn = c.value("tn", std::uint64_t{0});
    }
    if (j.contains("undefined_flags"))
        m.undefined_flags =
            j.at("undefined_flags").get<std::vector<std::string>>();
    return m;
}

}  // namespace

void save_record(const RunRecord& rec, const std::string& path) {
    fs::create_directories(fs::path(path).parent_path());
    json j;
    j["run_id"] = rec.config.run_id;
    j["dataset"] = dataset_name(rec.config.dataset);
    j["sampling"] = sampling_method_name(rec.config.sampling);
    j["patch_size"] = rec.config.patch_size;
    j["init_filters"] = rec.config.init_filters;
    j["batch_size"] = rec.config.batch_size;
    j["seed"] = rec.config.seed;
    j["status"] = rec.status;
    j["error"] = rec.error;
    j["checkpoint"] = rec.checkpoint;
    j["config_hash"] = rec.config_hash;
    j["best_epoch"] = rec.best_epoch;
    j["best_val_loss"] = rec.best_val_loss;
    j["train_seconds"] = rec.train_seconds;
    j["avg_miou"] = rec.avg_miou;
    j["avg_f1"] = rec.avg_f1;
    json areas = json::array();
    for (const auto& a : rec.areas)
        areas.push_back(
            {{"area", a.area}, {"metrics", metrics_json_obj(a.metrics)}});
    j["areas"] = areas;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(kModule, "cannot write record " + path);
    out << j.dump(2) << "\n";
}

std::optional<RunRecord> load_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j;
    try {
        in >> j;
    } catch (const json::exception&) {
        return std::nullopt;  // treat unreadable records as absent
    }
    RunRecord rec;
    try {
        rec.config.run_id = j.at("run_id").get<std::string>();
        rec.config.dataset = parse_dataset(j.at("dataset").get<std::string>());
        rec.config.sampling =
            parse_sampling_method(j.at("sampling").get<std::string>());
        rec.config.patch_size = j.at("patch_size").get<int>();
        rec.config.init_filters = j.at("init_filters").get<int>();
        rec.config.batch_size = j.at("batch_size").get<int>();
        rec.config.seed = j.value("seed", std::uint64_t{0});
        rec.status = j.value("status", std::string{"failed"});
        rec.error = j.value("error", std::string{});
        rec.checkpoint = j.value("checkpoint", std::string{});
        rec.config_hash = j.value("config_hash", std::string{});
        rec.best_epoch = j.value("best_epoch", -1);
        rec.best_val_loss = j.value("best_val_loss", 0.0);
        rec.train_seconds = j.value("train_seconds", 0.0);
        rec.avg_miou = j.value("avg_miou", 0.0);
        rec.avg_f1 = j.value("avg_f1", 0.0);
        if (j.contains("areas"))
            for (const auto& a : j.at("areas"))
                rec.areas.push_back({a.at("area").get<std::string>(),
                                     metrics_from_json(a.at("metrics"))});
    } catch (const json::exception& e) {
        throw Error(kModule,
                    "record " + path + " is malformed: " + e.what());
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Data preparation
// ---------------------------------------------------------------------------

namespace {

struct CellKey {
    DatasetKind dataset;
    SamplingMethod sampling;
    int patch_size;
};

std::vector<CellKey> matrix_cells(const ExperimentMatrix& m) {
    std::vector<CellKey> cells;
    for (auto d : m.datasets)
        for (auto s : m.sampling)
            for (int p : m.patch_sizes) cells.push_back({d, s, p});
    return cells;
}

std::string cell_dir_name(const CellKey& c) {
    RunConfig rc;
    rc.dataset = c.dataset;
    rc.sampling = c.sampling;
    rc.patch_size = c.patch_size;
    return cell_path(rc);
}

SynthSpec scene_spec(const SynthDataSpec& s, int size, std::uint64_t seed,
                     int n_scars) {
    SynthSpec sp;
    sp.height = sp.width = size;
    sp.pixel = s.pixel;
    sp.dem_pixel = s.dem_pixel;
    sp.n_scars = n_scars;
    sp.n_decoys = std::max(1, n_scars / 3);
    sp.seed = seed;
    sp.noise = s.noise;
    return sp;
}

}  // namespace

void ensure_data(const ExperimentConfig& cfg) {
    cfg.validate();
    const fs::path root(cfg.data_root);

    std::vector<CellKey> missing_cells;
    for (const auto& c : matrix_cells(cfg.matrix))
        if (!fs::exists(root / cell_dir_name(c) / "index.json"))
            missing_cells.push_back(c);
    std::vector<std::string> missing_areas;
    for (const auto& a : cfg.areas)
        if (!fs::exists(root / "areas" / a / "truth.json"))
            missing_areas.push_back(a);
    if (missing_cells.empty() && missing_areas.empty()) return;
    if (!cfg.synth)
        throw Error(kModule, "missing PatchSet cell " +
                                 (missing_cells.empty()
                                      ? "areas/" + missing_areas.front()
                                      : cell_dir_name(missing_cells.front())) +
                                 " and no synth spec to generate it");

    const SynthDataSpec& sd = *cfg.synth;
    log_info("generating synthetic experiment data under " + cfg.data_root);
    const SynthScene train_scene =
        synth_scene(scene_spec(sd, sd.train_size, sd.scene_seed, sd.n_scars));

    const Raster dem_fine =
        resample_bilinear(train_scene.dem, train_scene.optical.transform.pixel_w);
    const Raster stacked_raw = stack_bands(train_scene.optical, dem_fine);
    const std::vector<ChannelRange> ranges6 = channel_ranges(stacked_raw);
    const std::vector<ChannelRange> ranges5(ranges6.begin(), ranges6.begin() + 5);
    const Raster norm_stacked = normalize_channels(stacked_raw, ranges6);
    const Raster norm_optical =
        normalize_channels(train_scene.optical, ranges5);

    for (const auto& c : missing_cells) {
        const std::string rel = cell_dir_name(c);
        SamplingSpec sspec;
        sspec.method = c.sampling;
        sspec.patch_size = c.patch_size;
        sspec.overlap_fraction = cfg.sampling_overlap;
        sspec.n_candidates = cfg.n_candidates;
        sspec.seed = seed_from_label(cfg.matrix.base_seed, rel);
        const Raster& base =
            dataset_has_dem(c.dataset) ? norm_stacked : norm_optical;
        std::vector<Window> windows =
            c.sampling == SamplingMethod::regular
                ? regular_grid(base.height, base.width, sspec)
                : random_windows(base.height, base.width, sspec);
        windows = filter_intersecting(windows, train_scene.truth);
        if (windows.empty())
            throw Error(kModule, "cell " + rel +
                                     " has no landslide-intersecting patches");
        PatchSet ps = extract_patches(base, train_scene.truth, windows);
        ps.spec = sspec;
        ps.normalization = dataset_has_dem(c.dataset) ? ranges6 : ranges5;
        if (dataset_has_aug(c.dataset)) {
            AugmentSpec aspec;
            aspec.copies_per_patch = cfg.copies_per_patch;
            aspec.seed = seed_from_label(cfg.matrix.base_seed, rel + "/aug");
            ps = augment_dataset(ps, aspec);
        }
        save_patchset(ps, (root / rel).string());
        log_info("cell " + rel + ": " + std::to_string(ps.items.size()) +
                 " patches");
    }

    const double foot = static_cast<double>(sd.area_size) * sd.area_size /
                        (static_cast<double>(sd.train_size) * sd.train_size);
    const int area_scars = std::max(
        3, static_cast<int>(std::llround(sd.n_scars * foot)));
    for (std::size_t i = 0; i < cfg.areas.size(); ++i) {
        const std::string& name = cfg.areas[i];
        if (std::find(missing_areas.begin(), missing_areas.end(), name) ==
            missing_areas.end())
            continue;
        const std::uint64_t aseed = i < sd.area_seeds.size()
                                        ? sd.area_seeds[i]
                                        : mix_seed(sd.scene_seed, 0xa0 + i);
        const SynthScene sc =
            synth_scene(scene_spec(sd, sd.area_size, aseed, area_scars));
        const fs::path adir = root / "areas" / name;
        fs::create_directories(adir);
        save_raster(sc.optical, (adir / "optical").string());
        const Raster adem =
            resample_bilinear(sc.dem, sc.optical.transform.pixel_w);
        save_raster(stack_bands(sc.optical, adem), (adir / "stacked").string());
        save_mask(sc.truth, (adir / "truth").string());
        log_info("area " + name + " written");
    }

    json manifest;
    manifest["synth"] = synth_to_json(sd);
    json r5 = json::array(), r6 = json::array();
    for (const auto& r : ranges5) r5.push_back({{"min", r.min}, {"max", r.max}});
    for (const auto& r : ranges6) r6.push_back({{"min", r.min}, {"max", r.max}});
    manifest["normalization_optical"] = r5;
    manifest["normalization_stacked"] = r6;
    manifest["sampling_overlap"] = cfg.sampling_overlap;
    manifest["n_candidates"] = cfg.n_candidates;
    manifest["copies_per_patch"] = cfg.copies_per_patch;
    manifest["base_seed"] = cfg.matrix.base_seed;
    std::ofstream mf(root / "data_manifest.json", std::ios::trunc);
    if (mf) mf << manifest.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

RunRecord run_one(const ExperimentConfig& cfg, const RunConfig& rc) {
    RunRecord rec;
    rec.config = rc;
    rec.config_hash = config_hash(cfg, rc);
    const fs::path run_dir = fs::path(cfg.out_root) / "runs" / rc.run_id;
    rec.checkpoint = (fs::path("runs") / rc.run_id).string();
    try {
        const std::string cell =
            (fs::path(cfg.data_root) / cell_path(rc)).string();
        if (!fs::exists(fs::path(cell) / "index.json"))
            throw Error(kModule, "missing PatchSet cell " + cell_path(rc));
        PatchSet ps = load_patchset(cell);

        UNetConfig net;
        net.in_channels = dataset_has_dem(rc.dataset) ? 6 : 5;
        net.init_filters = rc.init_filters;
        net.depth = cfg.depth;

        TrainConfig tc;
        tc.epochs = cfg.epochs;
        tc.learning_rate = cfg.learning_rate;
        tc.batch_size = rc.batch_size;
        tc.val_fraction = cfg.val_fraction;
        tc.shuffle_seed = rc.seed;
        tc.threads = cfg.threads;

        const TrainResult tr = train(tc, net, ps, run_dir.string());
        rec.best_epoch = tr.best_epoch;
        rec.best_val_loss = tr.best_val_loss;
        for (const auto& e : tr.history) rec.train_seconds += e.seconds;

        const Checkpoint ck = load_checkpoint(run_dir.string());
        double miou_sum = 0, f1_sum = 0;
        for (const auto& area : cfg.areas) {
            const fs::path adir = fs::path(cfg.data_root) / "areas" / area;
            const std::string raster_name =
                dataset_has_dem(rc.dataset) ? "stacked" : "optical";
            const Raster raw = load_raster((adir / raster_name).string());
            const Raster norm =
                normalize_channels(raw, ck.meta.normalization);
            const Raster probs =
                predict_tiled(ck.config, ck.params, norm, rc.patch_size,
                              cfg.tile_overlap, cfg.threads);
            const Mask pred = binarize(probs, cfg.threshold);
            const Mask truth = load_mask((adir / "truth").string());
            const MetricsReport m = compute_metrics(
                confusion(pred, truth), raw.transform.pixel_w);
            miou_sum += m.miou;
            f1_sum += m.f1;
            rec.areas.push_back({area, m});
        }
        rec.avg_miou = miou_sum / static_cast<double>(cfg.areas.size());
        rec.avg_f1 = f1_sum / static_cast<double>(cfg.areas.size());
        rec.status = "ok";
    } catch (const std::exception& e) {
        rec.status = "failed";
        rec.error = e.what();
        log_error("run " + rc.run_id + " failed: " + rec.error);
    }
    return rec;
}

std::vector<RunRecord> run_all(const ExperimentConfig& cfg) {
    cfg.validate();
    ensure_data(cfg);
    const std::vector<RunConfig> runs = expand_matrix(cfg.matrix);
    std::vector<RunRecord> records;
    records.reserve(runs.size());
    for (const auto& rc : runs) {
        const std::string rpath = run_record_path(cfg, rc.run_id);
        const std::string want_hash = config_hash(cfg, rc);
        if (auto existing = load_record(rpath);
            existing && existing->config_hash == want_hash) {
            log_info("skipping completed run " + rc.run_id);
            records.push_back(std::move(*existing));
            continue;
        }
        log_info("run " + rc.run_id);
        RunRecord rec = run_one(cfg, rc);
        save_record(rec, rpath);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<RunRecord> load_records(const ExperimentConfig& cfg) {
    std::vector<RunRecord> records;
    for (const auto& rc : expand_matrix(cfg.matrix))
        if (auto rec = load_record(run_record_path(cfg, rc.run_id)))
            records.push_back(std::move(*rec));
    return records;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

namespace {

double record_key(const RunRecord& r, const std::string& key) {
    if (key == "f1") return r.avg_f1;
    if (key == "miou") return r.avg_miou;
    throw Error(kModule, "unknown best-model key '" + key + "'");
}

// strictly better under the tie rules: higher value, then smaller batch,
// then smaller filters
bool beats(double va, const RunRecord& a, double vb, const RunRecord& b) {
    if (va != vb) return va > vb;
    if (a.config.batch_size != b.config.batch_size)
        return a.config.batch_size < b.config.batch_size;
    return a.config.init_filters < b.config.init_filters;
}

}  // namespace

std::vector<RunRecord> best_models(const std::vector<RunRecord>& records,
                                   const std::string& key) {
    std::map<std::tuple<int, int, int>, RunRecord> best;
    for (const auto& r : records) {
        if (r.status != "ok") continue;
        const auto k = std::make_tuple(static_cast<int>(r.config.dataset),
                                       static_cast<int>(r.config.sampling),
                                       r.config.patch_size);
        auto it = best.find(k);
        if (it == best.end() ||
            beats(record_key(r, key), r, record_key(it->second, key),
                  it->second))
            best[k] = r;
    }
    std::vector<RunRecord> out;
    out.reserve(best.size());
    for (auto& [k, r] : best) out.push_back(std::move(r));
    return out;
}

std::vector<RunRecord> generalization_table(
    const std::vector<RunRecord>& records) {
    for (const auto& r : records)
        if (r.status == "ok" && r.areas.empty())
            throw Error(kModule,
                        "record " + r.config.run_id + " has no area scores");
    std::map<std::pair<int, int>, RunRecord> best;
    for (const auto& r : records) {
        if (r.status != "ok") continue;
        const auto k = std::make_pair(static_cast<int>(r.config.sampling),
                                      r.config.patch_size);
        auto it = best.find(k);
        if (it == best.end() ||
            beats(r.avg_miou, r, it->second.avg_miou, it->second))
            best[k] = r;
    }
    std::vector<RunRecord> out;
    out.reserve(best.size());
    for (auto& [k, r] : best) out.push_back(std::move(r));
    std::stable_sort(out.begin(), out.end(),
                     [](const RunRecord& a, const RunRecord& b) {
                         return a.avg_miou > b.avg_miou;
                     });
    return out;
}

namespace {

std::string csv_row(const RunRecord& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%s,%s,%s,%d,%d,%d,%s,%d,%.6f,%.4f,%.4f,%.1f",
                  r.config.run_id.c_str(), dataset_name(r.config.dataset),
                  sampling_method_name(r.config.sampling), r.config.patch_size,
                  r.config.init_filters, r.config.batch_size,
                  r.status.c_str(), r.best_epoch, r.best_val_loss, r.avg_f1,
                  r.avg_miou, r.train_seconds);
    return buf;
}

constexpr const char* kSummaryHeader =
    "run_id,dataset,sampling,patch_size,init_filters,batch_size,status,"
    "best_epoch,best_val_loss,avg_f1,avg_miou,train_seconds";

void write_csv(const fs::path& path, const std::string& header,
               const std::vector<std::string>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(kModule, "cannot write " + path.string());
    out << header << "\n";
    for (const auto& r : rows) out << r << "\n";
}

}  // namespace

void write_tables(const ExperimentConfig& cfg,
                  const std::vector<RunRecord>& records) {
    fs::create_directories(cfg.out_root);
    std::vector<std::string> rows;
    for (const auto& r : records) rows.push_back(csv_row(r));
    write_csv(fs::path(cfg.out_root) / "summary.csv", kSummaryHeader, rows);

    for (const std::string key : {"f1", "miou"}) {
        rows.clear();
        for (const auto& r : best_models(records, key)) rows.push_back(csv_row(r));
        write_csv(fs::path(cfg.out_root) / ("best_" + key + ".csv"),
                  kSummaryHeader, rows);
    }

    // generalization: per-area miou columns plus the average
    std::string header = "sampling,patch_size,run_id";
    for (const auto& a : cfg.areas) header += ",miou_" + a;
    header += ",avg_miou";
    rows.clear();
    for (const auto& r : generalization_table(records)) {
        std::string row = std::string(sampling_method_name(r.config.sampling)) + "," +
                          std::to_string(r.config.patch_size) + "," +
                          r.config.run_id;
        char buf[32];
        for (const auto& a : r.areas) {
            std::snprintf(buf, sizeof(buf), ",%.4f", a.metrics.miou);
            row += buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.4f", r.avg_miou);
        row += buf;
        rows.push_back(row);
    }
    write_csv(fs::path(cfg.out_root) / "generalization.csv", header, rows);
}

std::string render_records_text(const std::vector<RunRecord>& records) {
    const std::vector<std::string> cols = {"run_id", "status", "best_epoch",
                                           "avg_f1", "avg_miou", "seconds"};
    std::vector<std::vector<std::string>> body;
    for (const auto& r : records) {
        char f1[16], mi[16], sec[24];
        std::snprintf(f1, sizeof(f1), "%.4f", r.avg_f1);
        std::snprintf(mi, sizeof(mi), "%.4f", r.avg_miou);
        std::snprintf(sec, sizeof(sec), "%.1f", r.train_seconds);
        body.push_back({r.config.run_id, r.status,
                        std::to_string(r.best_epoch), f1, mi, sec});
    }
    std::vector<std::size_t> w(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) w[i] = cols[i].size();
    for (const auto& row : body)
        for (std::size_t i = 0; i < row.size(); ++i)
            w[i] = std::max(w[i], row[i].size());
    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += row[i];
            if (i + 1 < row.size())
                out += std::string(w[i] - row[i].size() + 2, ' ');
        }
        out += "\n";
    };
    emit(cols);
    for (const auto& row : body) emit(row);
    return out;
}

// ---------------------------------------------------------------------------
// Plots (minimal hand-rolled SVG)
// ---------------------------------------------------------------------------

namespace {

void svg_bar_chart(const fs::path& path, const std::string& title,
                   const std::vector<std::string>& labels,
                   const std::vector<double>& values) {
    const int bar_w = 34, gap = 14, margin = 60, h = 320;
    const int plot_h = h - 2 * margin + 20;
    const int w = margin * 2 +
                  static_cast<int>(labels.size()) * (bar_w + gap);
    double vmax = 1e-9;
    for (double v : values) vmax = std::max(vmax, v);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(kModule, "cannot write " + path.string());
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
        << "' height='" << h << "'>\n";
    out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' "
        << "font-family='sans-serif' font-size='14'>" << title << "</text>\n";
    out << "<line x1='" << margin - 6 << "' y1='" << h - margin << "' x2='"
        << w - margin / 2 << "' y2='" << h - margin
        << "' stroke='black'/>\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double frac = values[i] / vmax;
        const int bh = static_cast<int>(frac * plot_h);
        const int x = margin + static_cast<int>(i) * (bar_w + gap);
        const int y = h - margin - bh;
        out << "<rect x='" << x << "' y='" << y << "' width='" << bar_w
            << "' height='" << bh << "' fill='#4477aa'/>\n";
        char val[16];
        std::snprintf(val, sizeof(val), "%.2f", values[i]);
        out << "<text x='" << x + bar_w / 2 << "' y='" << y - 4
            << "' text-anchor='middle' font-family='sans-serif' "
            << "font-size='10'>" << val << "</text>\n";
        out << "<text x='" << x + bar_w / 2 << "' y='" << h - margin + 12
            << "' text-anchor='middle' font-family='sans-serif' "
            << "font-size='9' transform='rotate(30 " << x + bar_w / 2 << " "
            << h - margin + 12 << ")'>" << labels[i] << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace

void write_plots(const ExperimentConfig& cfg,
                 const std::vector<RunRecord>& records) {
    const fs::path dir = fs::path(cfg.out_root) / "plots";
    fs::create_directories(dir);

    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& r : generalization_table(records)) {
        labels.push_back(std::string(sampling_method_name(r.config.sampling)) + " " +
                         std::to_string(r.config.patch_size));
        values.push_back(r.avg_miou);
    }
    if (!labels.empty())
        svg_bar_chart(dir / "generalization_miou.svg",
                      "Best average mIoU by sampling and patch size", labels,
                      values);

    labels.clear();
    values.clear();
    for (const auto& r : best_models(records, "f1")) {
        labels.push_back(r.config.run_id);
        values.push_back(r.avg_f1);
    }
    if (!labels.empty())
        svg_bar_chart(dir / "best_f1.svg", "Best F1 per group", labels,
                      values);
}

}  // namespace scarseg
