#pragma once

// Factorial experiment runner: expands the (dataset x sampling x patch size
// x init filters x batch size) matrix, trains and evaluates each cell, and
// aggregates best-model and generalization tables. Runs are idempotent:
// a record on disk whose config hash matches is never re-executed.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scarseg/metrics.hpp"
#include "scarseg/sampler.hpp"
#include "scarseg/trainer.hpp"

namespace scarseg {

enum class DatasetKind { optical, optical_aug, optical_dem, optical_dem_aug };

const char* dataset_name(DatasetKind d);
DatasetKind parse_dataset(const std::string& name);
bool dataset_has_dem(DatasetKind d);
bool dataset_has_aug(DatasetKind d);

struct ExperimentMatrix {
    std::vector<DatasetKind> datasets{
        DatasetKind::optical, DatasetKind::optical_aug, DatasetKind::optical_dem,
        DatasetKind::optical_dem_aug};
    std::vector<SamplingMethod> sampling{SamplingMethod::regular,
                                         SamplingMethod::random};
    std::vector<int> patch_sizes{32, 64, 128};
    std::vector<int> init_filters{16, 32, 64};
    std::vector<int> batch_sizes{16, 32, 64, 128};
    std::uint64_t base_seed = 0;
};

struct RunConfig {
    DatasetKind dataset{};
    SamplingMethod sampling{};
    int patch_size = 0;
    int init_filters = 0;
    int batch_size = 0;
    std::uint64_t seed = 0;
    std::string run_id;  // e.g. optical_dem_random_p64_f16_b32
};

// Cartesian product in (dataset, sampling, size, filters, batch) order with
// a per-run seed derived from base_seed and the run id.
std::vector<RunConfig> expand_matrix(const ExperimentMatrix& m);

std::string make_run_id(const RunConfig& rc);

// Synthetic data generation parameters for experiments without real data.
struct SynthDataSpec {
    std::uint64_t scene_seed = 1;
    int train_size = 256;
    int area_size = 256;
    std::vector<std::uint64_t> area_seeds{101, 102};
    int n_scars = 12;  // per train scene; test areas scale by footprint
    double pixel = 5.0;
    double dem_pixel = 10.0;
    double noise = 0.04;
};

struct ExperimentConfig {
    ExperimentMatrix matrix;
    std::string data_root;
    std::string out_root;
    // training
    int epochs = 200;
    double learning_rate = 0.001;
    double val_fraction = 0.3;
    int depth = 4;
    int threads = 1;  // intra-run parallelism
    int jobs = 1;     // concurrent runs as worker processes (CLI-driven)
    // sampling (cell preparation)
    double sampling_overlap = 0.2;
    int n_candidates = 5000;
    int copies_per_patch = 1;  // extra copies per patch in *_aug datasets
    // evaluation
    double tile_overlap = 0.5;
    double threshold = 0.5;
    std::vector<std::string> areas{"area1", "area2"};
    std::optional<SynthDataSpec> synth;  // generate missing data when set

    void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const ExperimentConfig& cfg,
                            const std::string& path);

struct AreaScore {
    std::string area;
    MetricsReport metrics;
};

struct RunRecord {
    RunConfig config;
    std::string status;  // "ok" | "failed"
    std::string error;
    std::string checkpoint;  // run output dir, relative to out_root
    std::vector<AreaScore> areas;
    double avg_miou = 0;
    double avg_f1 = 0;
    int best_epoch = -1;
    double best_val_loss = 0;
    double train_seconds = 0;
    std::string config_hash;
};

// Patch-cell directory for a run, relative to data_root.
std::string cell_path(const RunConfig& rc);
std::string run_record_path(const ExperimentConfig& cfg,
                            const std::string& run_id);

// Hash of everything that affects a run's result; guards idempotence.
std::string config_hash(const ExperimentConfig& cfg, const RunConfig& rc);

void save_record(const RunRecord& rec, const std::string& path);
std::optional<RunRecord> load_record(const std::string& path);

// Generates patch cells and test areas under data_root when missing.
// Without a synth spec, missing data is an error.
void ensure_data(const ExperimentConfig& cfg);

// Train + evaluate a single run. Failures inside the run are captured in
// the returned record (status "failed"), not thrown.
RunRecord run_one(const ExperimentConfig& cfg, const RunConfig& rc);

// Expand, skip hash-matched records, execute the rest sequentially
// in-process, persist records, and return all records in matrix order.
std::vector<RunRecord> run_all(const ExperimentConfig& cfg);

// Records present on disk, in matrix order.
std::vector<RunRecord> load_records(const ExperimentConfig& cfg);

// Per (dataset, sampling, size) group: the argmax record under key
// ("f1" or "miou", averaged over areas). Ties break toward smaller batch,
// then smaller filters. Failed runs are ignored.
std::vector<RunRecord> best_models(const std::vector<RunRecord>& records,
                                   const std::string& key);

// Per (sampling, size): best record by avg miou, sorted descending.
std::vector<RunRecord> generalization_table(
    const std::vector<RunRecord>& records);

// summary.csv, best_f1.csv, best_miou.csv, generalization.csv under out_root.
void write_tables(const ExperimentConfig& cfg,
                  const std::vector<RunRecord>& records);

// Fixed-width text rendering of the summary (for terminals and logs).
std::string render_records_text(const std::vector<RunRecord>& records);

// plots/*.svg bar charts (no plotting dependency).
void write_plots(const ExperimentConfig& cfg,
                 const std::vector<RunRecord>& records);

}  // namespace scarseg
