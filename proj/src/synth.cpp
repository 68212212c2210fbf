#include "mapflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mapflow {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

struct Color {
    float r, g, b;
};

Color jitter(Color c, Rng& rng, float amp) {
    return {c.r + rng.uniform(-amp, amp), c.g + rng.uniform(-amp, amp),
            c.b + rng.uniform(-amp, amp)};
}

void put_pixel(Tensor& img, int y, int x, Color c) {
    img.at(y, x, 0) = c.r;
    img.at(y, x, 1) = c.g;
    img.at(y, x, 2) = c.b;
}

void raster_road(LabelMap& labels, const RoadLine& road, int width) {
    float minx = 1e9f, maxx = -1e9f, miny = 1e9f, maxy = -1e9f;
    for (auto [x, y] : road.points) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
    }
    const float half = static_cast<float>(width) / 2.0f;
    const int x0 = clampi(static_cast<int>(std::floor(minx - half)) - 1, 0, labels.width - 1);
    const int x1 = clampi(static_cast<int>(std::ceil(maxx + half)) + 1, 0, labels.width - 1);
    const int y0 = clampi(static_cast<int>(std::floor(miny - half)) - 1, 0, labels.height - 1);
    const int y1 = clampi(static_cast<int>(std::ceil(maxy + half)) + 1, 0, labels.height - 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (road.distance(static_cast<float>(x) + 0.5f, static_cast<float>(y) + 0.5f) <= half)
                labels.at(y, x) = kRoad;
}

void raster_building(LabelMap& labels, const RotRect& rect) {
    const float reach = 0.5f * std::sqrt(rect.w * rect.w + rect.h * rect.h) + 1.0f;
    const int x0 = clampi(static_cast<int>(rect.cx - reach), 0, labels.width - 1);
    const int x1 = clampi(static_cast<int>(rect.cx + reach), 0, labels.width - 1);
    const int y0 = clampi(static_cast<int>(rect.cy - reach), 0, labels.height - 1);
    const int y1 = clampi(static_cast<int>(rect.cy + reach), 0, labels.height - 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (rect.contains(static_cast<float>(x) + 0.5f, static_cast<float>(y) + 0.5f))
                labels.at(y, x) = kBuilding;
}

} // namespace

bool RotRect::contains(float px, float py) const {
    const float dx = px - cx, dy = py - cy;
    const float c = std::cos(angle), s = std::sin(angle);
    const float u = c * dx + s * dy;
    const float v = -s * dx + c * dy;
    return std::abs(u) <= 0.5f * w && std::abs(v) <= 0.5f * h;
}

float RoadLine::distance(float px, float py) const {
    float best = 1e9f;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const float ax = points[i].first, ay = points[i].second;
        const float bx = points[i + 1].first, by = points[i + 1].second;
        const float vx = bx - ax, vy = by - ay;
        const float len2 = vx * vx + vy * vy;
        float t = len2 > 0.0f ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0f;
        t = std::clamp(t, 0.0f, 1.0f);
        const float ex = ax + t * vx - px, ey = ay + t * vy - py;
        best = std::min(best, std::sqrt(ex * ex + ey * ey));
    }
    return best;
}

Scene generate_scene(int height, int width, Rng& rng, const SceneStyle& style) {
    if (height < 64 || width < 64)
        throw std::invalid_argument("generate_scene: dimensions must be >= 64");

    Scene scene;
    scene.image = Tensor({height, width, 3});
    scene.truth = LabelMap(height, width);

    const Color ground{0.34f, 0.32f, 0.28f};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) put_pixel(scene.image, y, x, ground);

    // vegetation patches: image-only ellipses, truth stays background
    const int veg_count = static_cast<int>(style.vegetation_density *
                                           static_cast<float>(height) * width / 2500.0f);
    for (int i = 0; i < veg_count; ++i) {
        const float cx = rng.uniform(0.0f, static_cast<float>(width));
        const float cy = rng.uniform(0.0f, static_cast<float>(height));
        const float rx = rng.uniform(5.0f, 18.0f);
        const float ry = rng.uniform(5.0f, 18.0f);
        const Color c = jitter({0.20f, 0.40f, 0.18f}, rng, 0.04f);
        const int x0 = clampi(static_cast<int>(cx - rx) - 1, 0, width - 1);
        const int x1 = clampi(static_cast<int>(cx + rx) + 1, 0, width - 1);
        const int y0 = clampi(static_cast<int>(cy - ry) - 1, 0, height - 1);
        const int y1 = clampi(static_cast<int>(cy + ry) + 1, 0, height - 1);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const float ex = (static_cast<float>(x) + 0.5f - cx) / rx;
                const float ey = (static_cast<float>(y) + 0.5f - cy) / ry;
                if (ex * ex + ey * ey <= 1.0f) put_pixel(scene.image, y, x, c);
            }
    }

    // roads: polylines crossing the scene, width 5..9 px, gray tones
    const int road_count = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(style.roads_per_256px) *
                                        (static_cast<double>(height) * width) / (256.0 * 256.0))));
    for (int i = 0; i < road_count; ++i) {
        RoadLine road;
        road.width_px = rng.uniform_int(style.road_width_min, style.road_width_max);
        const bool horizontal = rng.uniform() < 0.5;
        const int segments = rng.uniform_int(3, 5);
        float x = horizontal ? 0.0f : rng.uniform(0.1f, 0.9f) * static_cast<float>(width);
        float y = horizontal ? rng.uniform(0.1f, 0.9f) * static_cast<float>(height) : 0.0f;
        road.points.push_back({x, y});
        for (int s = 0; s < segments; ++s) {
            const float along = (horizontal ? static_cast<float>(width)
                                            : static_cast<float>(height)) /
                                static_cast<float>(segments);
            const float drift = rng.uniform(-0.25f, 0.25f) * along;
            x += horizontal ? along : drift;
            y += horizontal ? drift : along;
            road.points.push_back({x, y});
        }
        scene.objects.roads.push_back(std::move(road));
    }
    for (const RoadLine& road : scene.objects.roads) {
        raster_road(scene.truth, road, road.width_px);
        const Color c = jitter({0.50f, 0.49f, 0.47f}, rng, 0.03f);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (scene.truth.at(y, x) == kRoad &&
                    road.distance(static_cast<float>(x) + 0.5f, static_cast<float>(y) + 0.5f) <=
                        static_cast<float>(road.width_px) / 2.0f)
                    put_pixel(scene.image, y, x, c);
    }

    // buildings: rotated rectangles with distinct roofs and darker outlines
    const Color roofs[4] = {{0.62f, 0.28f, 0.24f},
                            {0.68f, 0.44f, 0.22f},
                            {0.74f, 0.72f, 0.70f},
                            {0.44f, 0.44f, 0.48f}};
    const float target_area = style.building_density * static_cast<float>(height) * width;
    float accum = 0.0f;
    int guard = 0;
    while (accum < target_area && guard++ < 4096) {
        RotRect rect;
        rect.w = static_cast<float>(rng.uniform_int(style.building_min_side, style.building_max_side));
        rect.h = static_cast<float>(rng.uniform_int(style.building_min_side, style.building_max_side));
        const float margin = 0.5f * std::sqrt(rect.w * rect.w + rect.h * rect.h) + 2.0f;
        rect.cx = rng.uniform(margin, static_cast<float>(width) - margin);
        rect.cy = rng.uniform(margin, static_cast<float>(height) - margin);
        rect.angle = rng.uniform() < 0.5 ? 0.0f : rng.uniform(0.0f, 1.5707963f);
        scene.objects.buildings.push_back(rect);
        accum += rect.area();
    }
    for (const RotRect& rect : scene.objects.buildings) {
        raster_building(scene.truth, rect);
        const Color roof = jitter(roofs[rng.uniform_int(0, 3)], rng, 0.03f);
        const Color edge{roof.r * 0.55f, roof.g * 0.55f, roof.b * 0.55f};
        const float reach = 0.5f * std::sqrt(rect.w * rect.w + rect.h * rect.h) + 1.0f;
        const int x0 = clampi(static_cast<int>(rect.cx - reach), 0, width - 1);
        const int x1 = clampi(static_cast<int>(rect.cx + reach), 0, width - 1);
        const int y0 = clampi(static_cast<int>(rect.cy - reach), 0, height - 1);
        const int y1 = clampi(static_cast<int>(rect.cy + reach), 0, height - 1);
        const float c = std::cos(rect.angle), s = std::sin(rect.angle);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const float dx = static_cast<float>(x) + 0.5f - rect.cx;
                const float dy = static_cast<float>(y) + 0.5f - rect.cy;
                const float u = c * dx + s * dy, v = -s * dx + c * dy;
                if (std::abs(u) > 0.5f * rect.w || std::abs(v) > 0.5f * rect.h) continue;
                const float edge_dist = std::min(0.5f * rect.w - std::abs(u),
                                                 0.5f * rect.h - std::abs(v));
                put_pixel(scene.image, y, x, edge_dist < 1.0f ? edge : roof);
            }
    }

    // sensor-like pixel noise over everything
    for (std::int64_t i = 0; i < scene.image.size(); ++i)
        scene.image[i] = std::clamp(scene.image[i] + rng.uniform(-0.02f, 0.02f), 0.0f, 1.0f);

    scene.noisy_ref = scene.truth;
    return scene;
}

// RNG draw order per object (stable contract for tests): roads consume one
// uniform (omission); buildings consume uniform_int dx, uniform_int dy, one
// uniform (omission), in object order, roads first.
LabelMap degrade_reference(const LabelMap& truth, const SceneObjects& objects,
                           const DegradationSpec& spec, Rng& rng) {
    if (spec.max_shift < 0) throw std::invalid_argument("degrade_reference: max_shift must be >= 0");
    if (spec.omit_prob < 0.0f || spec.omit_prob > 1.0f)
        throw std::invalid_argument("degrade_reference: omit_prob must be in [0, 1]");
    if (spec.road_width_px < 1)
        throw std::invalid_argument("degrade_reference: road_width_px must be >= 1");

    LabelMap out(truth.height, truth.width);
    for (const RoadLine& road : objects.roads) {
        const bool omit = rng.uniform() < spec.omit_prob;
        if (omit) continue;
        raster_road(out, road, spec.road_width_px);
    }
    for (const RotRect& rect : objects.buildings) {
        const int dx = rng.uniform_int(-spec.max_shift, spec.max_shift);
        const int dy = rng.uniform_int(-spec.max_shift, spec.max_shift);
        const bool omit = rng.uniform() < spec.omit_prob;
        if (omit) continue;
        RotRect shifted = rect;
        shifted.cx += static_cast<float>(dx);
        shifted.cy += static_cast<float>(dy);
        raster_building(out, shifted);
    }
    return out;
}

std::vector<PatchRef> sample_patch_refs(const std::vector<Scene>& scenes, int patch, int count,
                                        Rng& rng) {
    if (scenes.empty()) throw std::invalid_argument("sample_patch_refs: no scenes");
    std::vector<PatchRef> refs;
    refs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        PatchRef r;
        r.scene = rng.uniform_int(0, static_cast<int>(scenes.size()) - 1);
        const Scene& s = scenes[static_cast<std::size_t>(r.scene)];
        const int h = s.truth.height, w = s.truth.width;
        if (patch > h || patch > w)
            throw std::invalid_argument("sample_patch_refs: patch larger than scene");
        r.y0 = rng.uniform_int(0, h - patch);
        r.x0 = rng.uniform_int(0, w - patch);
        refs.push_back(r);
    }
    return refs;
}

std::vector<Patch> sample_patches(const std::vector<Scene>& scenes, int patch, int count,
                                  Rng& rng, LabelSource source) {
    std::vector<Patch> out;
    out.reserve(static_cast<std::size_t>(count));
    for (const PatchRef& r : sample_patch_refs(scenes, patch, count, rng)) {
        const Scene& s = scenes[static_cast<std::size_t>(r.scene)];
        Patch p;
        p.image = crop(s.image, r.y0, r.x0, patch, patch);
        p.labels = crop(source == LabelSource::Truth ? s.truth : s.noisy_ref,
                        r.y0, r.x0, patch, patch);
        out.push_back(std::move(p));
    }
    return out;
}

Tensor crop(const Tensor& t, int y0, int x0, int h, int w) {
    if (t.rank() != 3) throw std::invalid_argument("crop: expected H x W x C");
    const int c = t.extent(2);
    if (y0 < 0 || x0 < 0 || y0 + h > t.extent(0) || x0 + w > t.extent(1))
        throw std::invalid_argument("crop: window out of bounds");
    Tensor out({h, w, c});
    for (int y = 0; y < h; ++y) {
        const float* src = t.data() + ((static_cast<std::size_t>(y0 + y)) * t.extent(1) + x0) * c;
        std::copy(src, src + static_cast<std::size_t>(w) * c,
                  out.data() + static_cast<std::size_t>(y) * w * c);
    }
    return out;
}

LabelMap crop(const LabelMap& m, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || y0 + h > m.height || x0 + w > m.width)
        throw std::invalid_argument("crop: window out of bounds");
    LabelMap out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(y, x) = m.at(y0 + y, x0 + x);
    return out;
}

} // namespace mapflow
