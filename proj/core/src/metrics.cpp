#include "scarseg/metrics.hpp"

#include <cstdio>

#include <json.hpp>

#include "scarseg/error.hpp"

using nlohmann::json;

namespace scarseg {

ConfusionCounts confusion(const Mask& pred, const Mask& truth) {
    if (pred.height != truth.height || pred.width != truth.width)
        throw Error("inference_eval",
                    "confusion dims differ: " + std::to_string(pred.height) +
                        "x" + std::to_string(pred.width) + " vs " +
                        std::to_string(truth.height) + "x" +
                        std::to_string(truth.width));
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] != 0;
        const bool t = truth.data[i] != 0;
        if (p && t)
            ++c.tp;
        else if (p && !t)
            ++c.fp;
        else if (!p && t)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

AreasKm2 counts_to_area(const ConfusionCounts& c, double pixel_meters) {
    if (!(pixel_meters > 0))
        throw Error("inference_eval", "pixel size must be > 0");
    const double k = pixel_meters * pixel_meters / 1e6;
    return {static_cast<double>(c.tp) * k, static_cast<double>(c.fp) * k,
            static_cast<double>(c.fn) * k, static_cast<double>(c.tn) * k};
}

namespace {
double ratio(double num, double den, bool* defined) {
    const bool ok = den > 0;
    if (defined) *defined = ok;
    return ok ? num / den : 0.0;
}
}  // namespace

double precision(const ConfusionCounts& c, bool* defined) {
    return ratio(static_cast<double>(c.tp),
                 static_cast<double>(c.tp + c.fp), defined);
}

double recall(const ConfusionCounts& c, bool* defined) {
    return ratio(static_cast<double>(c.tp),
                 static_cast<double>(c.tp + c.fn), defined);
}

double f1(const ConfusionCounts& c, bool* defined) {
    return ratio(2.0 * static_cast<double>(c.tp),
                 static_cast<double>(2 * c.tp + c.fp + c.fn), defined);
}

double miou(const ConfusionCounts& c, bool* defined) {
    return ratio(static_cast<double>(c.tp),
                 static_cast<double>(c.tp + c.fp + c.fn), defined);
}

double miou_macro(const ConfusionCounts& c, bool* defined) {
    bool d1 = false, d2 = false;
    const double scar = miou(c, &d1);
    const double bg = ratio(static_cast<double>(c.tn),
                            static_cast<double>(c.tn + c.fp + c.fn), &d2);
    if (defined) *defined = d1 && d2;
    if (d1 && d2) return 0.5 * (scar + bg);
    if (d1) return scar;
    if (d2) return bg;
    return 0.0;
}

MetricsReport compute_metrics(const ConfusionCounts& c, double pixel_meters) {
    MetricsReport r;
    r.counts = c;
    bool ok = false;
    r.precision = precision(c, &ok);
    if (!ok) r.undefined_flags.push_back("precision");
    r.recall = recall(c, &ok);
    if (!ok) r.undefined_flags.push_back("recall");
    r.f1 = f1(c, &ok);
    if (!ok) r.undefined_flags.push_back("f1");
    r.miou = miou(c, &ok);
    if (!ok) r.undefined_flags.push_back("miou");
    r.miou_macro = miou_macro(c, &ok);
    if (!ok) r.undefined_flags.push_back("miou_macro");
    r.areas_km2 = counts_to_area(c, pixel_meters);
    return r;
}

std::string metrics_to_json(const MetricsReport& r) {
    json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["miou"] = r.miou;
    j["miou_macro"] = r.miou_macro;
    j["areas_km2"] = {{"tp", r.areas_km2.tp},
                      {"fp", r.areas_km2.fp},
                      {"fn", r.areas_km2.fn},
                      {"tn", r.areas_km2.tn}};
    j["counts"] = {
        {"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn},
        {"tn", r.counts.tn}};
    j["undefined_flags"] = r.undefined_flags;
    return j.dump();
}

std::string metrics_csv_header() {
    return "precision,recall,f1,miou,miou_macro,tp_km2,fp_km2,fn_km2,tn_km2,"
           "undefined_flags";
}

std::string metrics_to_csv_row(const MetricsReport& r) {
    char buf[320];
    std::string flags;
    for (const auto& f : r.undefined_flags) {
        if (!flags.empty()) flags += ';';
        flags += f;
    }
    std::snprintf(buf, sizeof(buf),
                  "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%s",
                  r.precision, r.recall, r.f1, r.miou, r.miou_macro,
                  r.areas_km2.tp, r.areas_km2.fp, r.areas_km2.fn,
                  r.areas_km2.tn, flags.c_str());
    return buf;
}

}  // namespace scarseg
