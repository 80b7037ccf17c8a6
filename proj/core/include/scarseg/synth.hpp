#pragma once

// Deterministic synthetic benchmark scene: smooth analytic terrain, a
// 5-band optical stack with textured vegetation background, elliptical
// high-reflectance scars placed on high ground, and spectrally similar
// decoy patches on low ground (so the DEM channel carries real signal).
// The polygon inventory matches the painted scars exactly by construction.

#include <cstdint>
#include <string>

#include "scarseg/mask.hpp"
#include "scarseg/polygon.hpp"
#include "scarseg/raster.hpp"

namespace scarseg {

struct SynthSpec {
    int height = 512;
    int width = 512;
    double pixel = 5.0;      // optical pixel (m)
    double dem_pixel = 10.0; // DEM pixel (m); extent must divide evenly
    int n_scars = 40;
    int n_decoys = 13;
    std::uint64_t seed = 0;
    double noise = 0.04;     // relative per-pixel band noise
    std::string crs = "LOCAL:synthetic";

    void validate() const;
};

struct SynthScene {
    Raster optical;        // 5 bands on the optical grid
    Raster dem;            // 1 band on the coarser DEM grid
    PolygonSet inventory;  // scar outlines (decoys excluded)
    Mask truth;            // inventory rasterized on the optical grid
};

SynthScene synth_scene(const SynthSpec& spec);

}  // namespace scarseg
