#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scarseg/mask.hpp"

namespace scarseg {

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

// Per-pixel 2x2 contingency tally; dims must match.
ConfusionCounts confusion(const Mask& pred, const Mask& truth);

struct AreasKm2 {
    double tp = 0, fp = 0, fn = 0, tn = 0;
};

// count * pixel^2 / 1e6 for each cell; pixel in meters.
AreasKm2 counts_to_area(const ConfusionCounts& c, double pixel_meters);

// Each metric returns 0 and sets *defined=false when its denominator is
// zero. miou is the single landslide-class IoU tp/(tp+fp+fn); the
// two-class average lives in miou_macro.
double precision(const ConfusionCounts& c, bool* defined = nullptr);
double recall(const ConfusionCounts& c, bool* defined = nullptr);
double f1(const ConfusionCounts& c, bool* defined = nullptr);
double miou(const ConfusionCounts& c, bool* defined = nullptr);
double miou_macro(const ConfusionCounts& c, bool* defined = nullptr);

struct MetricsReport {
    ConfusionCounts counts;
    double precision = 0, recall = 0, f1 = 0, miou = 0, miou_macro = 0;
    AreasKm2 areas_km2;
    std::vector<std::string> undefined_flags;  // metric names reported as 0
};

MetricsReport compute_metrics(const ConfusionCounts& c, double pixel_meters);

std::string metrics_to_json(const MetricsReport& r);
std::string metrics_csv_header();
std::string metrics_to_csv_row(const MetricsReport& r);

}  // namespace scarseg
