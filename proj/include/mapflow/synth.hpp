#pragma once

#include "mapflow/rng.hpp"
#include "mapflow/tensor.hpp"

#include <vector>

namespace mapflow {

// Class alphabet of the synthetic scenes.
inline constexpr int kBackground = 0;
inline constexpr int kBuilding = 1;
inline constexpr int kRoad = 2;
inline constexpr int kClasses = 3;

// Building footprint: a rotated rectangle in pixel coordinates.
struct RotRect {
    float cx = 0, cy = 0; // center
    float w = 0, h = 0;   // side lengths
    float angle = 0;      // radians

    bool contains(float px, float py) const;
    float area() const { return w * h; }
};

// Road centerline with its true rasterization width.
struct RoadLine {
    std::vector<std::pair<float, float>> points;
    int width_px = 5;

    // Euclidean distance from a point to the polyline.
    float distance(float px, float py) const;
};

struct SceneObjects {
    std::vector<RotRect> buildings;
    std::vector<RoadLine> roads;
};

// Synthetic satellite-like scene: image in [0,1], exact truth labels, and an
// OSM-style imperfect reference produced by degrade_reference.
struct Scene {
    Tensor image;       // H x W x 3
    LabelMap truth;     // exact rasterization
    LabelMap noisy_ref; // degraded reference (equals truth until degraded)
    SceneObjects objects;
};

struct SceneStyle {
    float building_density = 0.10f; // target building pixel fraction
    int building_min_side = 8;
    int building_max_side = 26;
    int road_width_min = 5;
    int road_width_max = 9;
    int roads_per_256px = 3;
    float vegetation_density = 0.25f; // blob count scale
};

// OSM-like reference degradation: per-building translation, object omission,
// fixed-width road rasterization.
struct DegradationSpec {
    int max_shift = 6;       // per-building uniform integer shift, pixels
    float omit_prob = 0.15f; // per-object omission probability
    int road_width_px = 7;   // fixed rasterization width for every road
};

// Background with colored noise and vegetation patches, rotated-rectangle
// buildings with darker 1-px outlines, gray polyline roads of width 5..9 px.
// Deterministic per seed.
Scene generate_scene(int height, int width, Rng& rng, const SceneStyle& style);

// Rebuilds the reference from the object geometry: buildings translated by
// independent integer shifts in [-max_shift, max_shift]^2, objects dropped
// with omit_prob, roads re-rasterized at exactly road_width_px.
LabelMap degrade_reference(const LabelMap& truth, const SceneObjects& objects,
                           const DegradationSpec& spec, Rng& rng);

struct PatchRef {
    int scene = 0;
    int y0 = 0;
    int x0 = 0;
};

enum class LabelSource { Truth, NoisyRef };

struct Patch {
    Tensor image;
    LabelMap labels;
};

// Uniformly random top-left corners, patches fully inside the scene.
std::vector<PatchRef> sample_patch_refs(const std::vector<Scene>& scenes, int patch, int count,
                                        Rng& rng);
std::vector<Patch> sample_patches(const std::vector<Scene>& scenes, int patch, int count,
                                  Rng& rng, LabelSource source);

// Crop helpers shared by the trainers.
Tensor crop(const Tensor& t, int y0, int x0, int h, int w);
LabelMap crop(const LabelMap& m, int y0, int x0, int h, int w);

} // namespace mapflow
