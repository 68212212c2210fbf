#include "mapflow/errors.hpp"
#include "mapflow/pde.hpp"
#include "mapflow/rng.hpp"
#include "mapflow/tensor_ops.hpp"

#include "oracles.hpp"

#include <cmath>

#include <doctest.h>

using namespace mapflow;

namespace {

Tensor random_field(int h, int w, Rng& rng, float lo = 0.0f, float hi = 1.0f) {
    Tensor t({h, w, 1});
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// flat RGB image
Tensor flat_image(int h, int w, float v) { return Tensor::full({h, w, 3}, v); }

// vertical step edge at column x0
Tensor step_image(int h, int w, int x0) {
    Tensor img({h, w, 3});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = x < x0 ? 0.2f : 0.8f;
    return img;
}

double field_min(const Tensor& t) {
    double m = t[0];
    for (std::int64_t i = 0; i < t.size(); ++i) m = std::min(m, static_cast<double>(t[i]));
    return m;
}

double field_max(const Tensor& t) {
    double m = t[0];
    for (std::int64_t i = 0; i < t.size(); ++i) m = std::max(m, static_cast<double>(t[i]));
    return m;
}

} // namespace

TEST_CASE("edge_stop flat image, half point, step edge") {
    EdgeStopParams p;
    p.kind = EdgeStopParams::Kind::Rational;
    p.lambda = 0.3f;
    p.presmooth_sigma = 0.0f;

    const Tensor g = edge_stop(flat_image(8, 8, 0.5f), p);
    for (std::int64_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(1.0f));

    // a ramp with |grad| == lambda gives exactly one half
    Tensor img({4, 8, 3});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = 0.3f * x;
    const Tensor gh = edge_stop(img, p);
    CHECK(gh.at(2, 4, 0) == doctest::Approx(0.5f).epsilon(1e-4));

    // vertical step edge: minimum on the edge columns, verified directly
    const Tensor gs = edge_stop(step_image(8, 12, 6), p);
    auto [gx, gy] = grad_xy(luminance(step_image(8, 12, 6)));
    int min_col = 0;
    double min_val = 2.0;
    for (int x = 0; x < 12; ++x)
        if (gs.at(4, x, 0) < min_val) {
            min_val = gs.at(4, x, 0);
            min_col = x;
        }
    CHECK((min_col == 5 || min_col == 6));
    const double expected =
        1.0 / (1.0 + std::pow(gx.at(4, min_col, 0) / p.lambda, 2.0));
    CHECK(gs.at(4, min_col, 0) == doctest::Approx(expected).epsilon(1e-5));
    for (std::int64_t i = 0; i < gs.size(); ++i) {
        CHECK(gs[i] > 0.0f);
        CHECK(gs[i] <= 1.0f);
    }

    EdgeStopParams bad = p;
    bad.lambda = 0.0f;
    CHECK_THROWS_AS(edge_stop(img, bad), std::invalid_argument);
}

TEST_CASE("heat_step stencil values") {
    const Tensor c = Tensor::full({5, 5, 1}, 0.7f);
    const Tensor hc = heat_step(c, 0.2f);
    for (std::int64_t i = 0; i < hc.size(); ++i) CHECK(hc[i] == 0.7f);

    // single peak: center 0.6, four neighbors 0.1 (five-point stencil)
    Tensor peak({5, 5, 1});
    peak.at(2, 2, 0) = 1.0f;
    const Tensor hp = heat_step(peak, 0.1f);
    CHECK(hp.at(2, 2, 0) == doctest::Approx(0.6f).epsilon(1e-6));
    CHECK(hp.at(1, 2, 0) == doctest::Approx(0.1f).epsilon(1e-6));
    CHECK(hp.at(3, 2, 0) == doctest::Approx(0.1f).epsilon(1e-6));
    CHECK(hp.at(2, 1, 0) == doctest::Approx(0.1f).epsilon(1e-6));
    CHECK(hp.at(2, 3, 0) == doctest::Approx(0.1f).epsilon(1e-6));
    CHECK(hp.at(1, 1, 0) == 0.0f);

    CHECK_THROWS_AS(heat_step(peak, 0.3f), std::invalid_argument);
    CHECK_THROWS_AS(heat_step(peak, 0.0f), std::invalid_argument);
}

TEST_CASE("heat and perona-malik conserve the mean and obey the maximum principle") {
    Rng rng(3);
    Tensor u = random_field(16, 16, rng);
    const Tensor img = step_image(16, 16, 8);
    EdgeStopParams p;
    p.lambda = 0.2f;
    p.presmooth_sigma = 1.0f;
    const Tensor g = edge_stop(img, p);

    const double m0 = mean_value(u);
    const double lo = field_min(u), hi = field_max(u);
    Tensor uh = u, up = u;
    for (int s = 0; s < 30; ++s) {
        uh = heat_step(uh, 0.25f);
        up = perona_malik_step(up, g, 0.25f);
        CHECK(field_min(uh) >= lo);
        CHECK(field_max(uh) <= hi);
        CHECK(field_min(up) >= lo);
        CHECK(field_max(up) <= hi);
    }
    CHECK(std::abs(mean_value(uh) - m0) / std::abs(m0) < 1e-5);
    CHECK(std::abs(mean_value(up) - m0) / std::abs(m0) < 1e-5);
}

TEST_CASE("perona-malik reductions and flux balance") {
    Rng rng(4);
    const Tensor u = random_field(9, 7, rng);

    // g == 1 reduces to the heat step bit-exactly (same kernel by construction)
    const Tensor ones = Tensor::full({9, 7, 1}, 1.0f);
    CHECK(perona_malik_step(u, ones, 0.2f) == heat_step(u, 0.2f));

    // g == 0 blocks all flux
    const Tensor zeros({9, 7, 1});
    CHECK(perona_malik_step(u, zeros, 0.2f) == u);

    // 3x3 instance with nonuniform g against the hand flux balance
    Rng rng2(5);
    const Tensor u3 = random_field(3, 3, rng2);
    const Tensor g3 = random_field(3, 3, rng2, 0.1f, 0.9f);
    const Tensor stepped = perona_malik_step(u3, g3, 0.2f);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            CHECK(stepped.at(y, x, 0) ==
                  doctest::Approx(oracle::pm_update(u3, g3, y, x, 0.2)).epsilon(1e-6));

    CHECK_THROWS_AS(perona_malik_step(u3, Tensor({2, 2, 1}), 0.1f), std::invalid_argument);
    const Tensor gbad = Tensor::full({3, 3, 1}, 1.5f);
    CHECK_THROWS_AS(perona_malik_step(u3, gbad, 0.1f), std::invalid_argument);
}

TEST_CASE("anisotropic_step reductions") {
    Rng rng(6);
    const Tensor u = random_field(8, 8, rng);

    // identity tensor equals the heat step within 1e-6
    Tensor ident({8, 8, 3});
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            ident.at(y, x, 0) = 1.0f;
            ident.at(y, x, 2) = 1.0f;
        }
    const Tensor ua = anisotropic_step(u, DiffusionTensorField(ident), 0.2f);
    const Tensor uh = heat_step(u, 0.2f);
    for (std::int64_t i = 0; i < u.size(); ++i)
        CHECK(std::abs(ua[i] - uh[i]) <= 1e-6f);

    // diag(1, 0): a ramp in y is invariant (diffusion only along x)
    Tensor dx_only({8, 8, 3});
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) dx_only.at(y, x, 0) = 1.0f;
    Tensor ramp({8, 8, 1});
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(y, x, 0) = 0.3f * y;
    const Tensor ur = anisotropic_step(ramp, DiffusionTensorField(dx_only), 0.25f);
    CHECK(ur == ramp);

    // non-PSD field is rejected
    Tensor bad({8, 8, 3});
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            bad.at(y, x, 0) = 1.0f;
            bad.at(y, x, 1) = 2.0f; // dxy^2 > dxx * dyy
            bad.at(y, x, 2) = 1.0f;
        }
    CHECK_THROWS_AS(anisotropic_step(u, DiffusionTensorField(bad), 0.1f), NumericError);

    // stability bound ties dt to the largest eigenvalue
    Tensor big = ident;
    for (std::int64_t i = 0; i < big.size(); i += 3) big[i] = 4.0f;
    CHECK_THROWS_AS(anisotropic_step(u, DiffusionTensorField(big), 0.2f),
                    std::invalid_argument);
}

TEST_CASE("anisotropic_step random PSD field: conservation and flux oracle") {
    Rng rng(7);
    const Tensor u = random_field(4, 4, rng);
    // random PSD built as g v1 v1^T + v2 v2^T
    Tensor d({4, 4, 3});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            const float theta = rng.uniform(0.0f, 3.14159f);
            const float g = rng.uniform(0.05f, 1.0f);
            const float c = std::cos(theta), s = std::sin(theta);
            d.at(y, x, 0) = g * c * c + s * s;
            d.at(y, x, 1) = (g - 1.0f) * c * s;
            d.at(y, x, 2) = g * s * s + c * c;
        }
    const DiffusionTensorField D(d);
    D.validate_psd();
    const Tensor out = anisotropic_step(u, D, 0.2f);
    CHECK(std::abs(mean_value(out) - mean_value(u)) < 1e-6);

    // independent flux reconstruction
    auto clamp = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
    auto dy_at = [&](int y, int x) {
        return 0.5 * (static_cast<double>(u.at(clamp(y + 1, 0, 3), x, 0)) -
                      u.at(clamp(y - 1, 0, 3), x, 0));
    };
    auto dx_at = [&](int y, int x) {
        return 0.5 * (static_cast<double>(u.at(y, clamp(x + 1, 0, 3), 0)) -
                      u.at(y, clamp(x - 1, 0, 3), 0));
    };
    Tensor upd({4, 4, 1});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 3; ++x) {
            const double af = 0.5 * (d.at(y, x, 0) + d.at(y, x + 1, 0));
            const double bf = 0.5 * (d.at(y, x, 1) + d.at(y, x + 1, 1));
            const double flux = af * (u.at(y, x + 1, 0) - u.at(y, x, 0)) +
                                bf * 0.5 * (dy_at(y, x) + dy_at(y, x + 1));
            upd.at(y, x, 0) += static_cast<float>(flux);
            upd.at(y, x + 1, 0) -= static_cast<float>(flux);
        }
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) {
            const double cf = 0.5 * (d.at(y, x, 2) + d.at(y + 1, x, 2));
            const double bf = 0.5 * (d.at(y, x, 1) + d.at(y + 1, x, 1));
            const double flux = cf * (u.at(y + 1, x, 0) - u.at(y, x, 0)) +
                                bf * 0.5 * (dx_at(y, x) + dx_at(y + 1, x));
            upd.at(y, x, 0) += static_cast<float>(flux);
            upd.at(y + 1, x, 0) -= static_cast<float>(flux);
        }
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK(out.at(y, x, 0) ==
                  doctest::Approx(u.at(y, x, 0) + 0.2f * upd.at(y, x, 0)).epsilon(1e-5));
}

TEST_CASE("structure_tensor_D flat image and step edge") {
    EdgeStopParams p;
    p.lambda = 0.05f;
    p.presmooth_sigma = 1.0f;

    const DiffusionTensorField flat = structure_tensor_D(flat_image(10, 10, 0.4f), p);
    flat.validate_psd();
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            CHECK(flat.d.at(y, x, 0) == doctest::Approx(1.0f).epsilon(1e-4));
            CHECK(flat.d.at(y, x, 1) == doctest::Approx(0.0f).epsilon(1e-4));
            CHECK(flat.d.at(y, x, 2) == doctest::Approx(1.0f).epsilon(1e-4));
        }

    // vertical edge: gradient along x, so dxx ~ g < 1 and dyy ~ 1 on the edge
    const DiffusionTensorField edge = structure_tensor_D(step_image(16, 16, 8), p);
    edge.validate_psd();
    const float dxx = edge.d.at(8, 8, 0), dxy = edge.d.at(8, 8, 1), dyy = edge.d.at(8, 8, 2);
    CHECK(dxx < 0.2f);
    CHECK(dyy > 0.95f);
    CHECK(std::abs(dxy) < 0.05f);
}

TEST_CASE("gac_step: constants, planar ramps, disk shrinkage") {
    const Tensor c = Tensor::full({6, 6, 1}, 0.3f);
    const Tensor g1 = Tensor::full({6, 6, 1}, 1.0f);
    CHECK(gac_step(c, g1, 0.1f) == c);

    Tensor ramp({8, 8, 1});
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(y, x, 0) = static_cast<float>(x);
    const Tensor gr = Tensor::full({8, 8, 1}, 1.0f);
    const Tensor r1 = gac_step(ramp, gr, 0.1f);
    for (int y = 0; y < 8; ++y)
        for (int x = 1; x < 7; ++x)
            CHECK(r1.at(y, x, 0) == doctest::Approx(ramp.at(y, x, 0)).epsilon(1e-6));

    CHECK_THROWS_AS(gac_step(c, g1, 0.1f, 0.0f), std::invalid_argument);

    // curvature flow on a signed-distance disk: dr/dt = -1/r
    const int n = 64;
    const float r0 = 8.0f;
    Tensor u({n, n, 1});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const float dx = static_cast<float>(x) + 0.5f - n / 2.0f;
            const float dy = static_cast<float>(y) + 0.5f - n / 2.0f;
            u.at(y, x, 0) = std::sqrt(dx * dx + dy * dy) - r0;
        }
    const Tensor gd = Tensor::full({n, n, 1}, 1.0f);
    const float dt = 0.1f;
    const int steps = 40;

    auto radius = [&](const Tensor& f) {
        // interpolated zero crossing along +x from the center
        const int cy = n / 2;
        for (int x = n / 2; x < n - 1; ++x) {
            const float a = f.at(cy, x, 0), b = f.at(cy, x + 1, 0);
            if (a <= 0.0f && b > 0.0f)
                return static_cast<double>(x) + 0.5 - n / 2.0 + a / (a - b) + 0.5;
        }
        return 0.0;
    };

    const double before = radius(u);
    Tensor v = u;
    for (int s = 0; s < steps; ++s) v = gac_step(v, gd, dt);
    const double after = radius(v);
    const double per_step = (before - after) / steps;
    const double expected = dt / r0; // curvature-flow oracle
    CHECK(per_step == doctest::Approx(expected).epsilon(0.2));
}

TEST_CASE("evolve: identity, smoothing, sharpening, gac levels") {
    Rng rng(8);
    Tensor scores({16, 16, 3});
    for (std::int64_t i = 0; i < scores.size(); ++i) scores[i] = rng.uniform(-1.0f, 1.0f);
    const ScoreStack stack(scores);
    const Tensor img = step_image(16, 16, 8);
    EdgeStopParams p;
    p.lambda = 0.0f; // percentile default
    p.presmooth_sigma = 1.0f;

    EvolutionConfig none{0.2f, 0, Scheme::Heat};
    CHECK(evolve(stack, img, none, p).scores == stack.scores);

    // heat flow contracts each channel toward its mean
    EvolutionConfig heat{0.25f, 60, Scheme::Heat};
    const ScoreStack smoothed = evolve(stack, img, heat, p);
    for (int c = 0; c < 3; ++c) {
        const Tensor ch0 = slice_channel(stack.scores, c);
        const Tensor ch1 = slice_channel(smoothed.scores, c);
        CHECK(field_max(ch1) - field_min(ch1) < field_max(ch0) - field_min(ch0));
        CHECK(mean_value(ch1) == doctest::Approx(mean_value(ch0)).epsilon(1e-5));
    }

    // snapshots arrive once per step plus the initial state
    int snaps = 0;
    evolve(stack, img, EvolutionConfig{0.2f, 3, Scheme::PeronaMalik}, p,
           [&](int, const ScoreStack&) { ++snaps; });
    CHECK(snaps == 4);
}

TEST_CASE("perona-malik sharpens a fuzzy disk better than heat at equal steps") {
    // sharp disk in the image; fuzzy disk scores
    const int n = 48;
    Tensor img({n, n, 3});
    Tensor u({n, n, 1});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const float dx = static_cast<float>(x) - n / 2.0f;
            const float dy = static_cast<float>(y) - n / 2.0f;
            const float r = std::sqrt(dx * dx + dy * dy);
            const float inside = r < 12.0f ? 1.0f : 0.0f;
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = 0.2f + 0.6f * inside;
            u.at(y, x, 0) = inside;
        }
    u = gaussian_smooth(u, 2.0f);

    EdgeStopParams p;
    p.kind = EdgeStopParams::Kind::Exponential;
    p.lambda = 0.0f;
    p.presmooth_sigma = 1.0f;
    const Tensor g = edge_stop(img, [&] {
        EdgeStopParams q = p;
        q.lambda = default_lambda(img, q.presmooth_sigma);
        return q;
    }());

    Tensor uh = u, up = u;
    for (int s = 0; s < 20; ++s) {
        uh = heat_step(uh, 0.2f);
        up = perona_malik_step(up, g, 0.2f);
    }
    auto ring_sharpness = [&](const Tensor& f) {
        auto [gx, gy] = grad_xy(f);
        double best = 0.0;
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const float dx = static_cast<float>(x) - n / 2.0f;
                const float dy = static_cast<float>(y) - n / 2.0f;
                const float r = std::sqrt(dx * dx + dy * dy);
                if (std::abs(r - 12.0f) < 2.0f)
                    best = std::max(best, std::sqrt(static_cast<double>(gx.at(y, x, 0)) *
                                                        gx.at(y, x, 0) +
                                                    static_cast<double>(gy.at(y, x, 0)) *
                                                        gy.at(y, x, 0)));
            }
        return best;
    };
    CHECK(ring_sharpness(up) > ring_sharpness(uh));
}

TEST_CASE("gac evolve maps decision boundaries to zero levels and back") {
    // two-class stack: P(k) = 0.5 exactly where the channels tie
    Tensor scores({8, 8, 2});
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            scores.at(y, x, 0) = x < 4 ? 2.0f : -2.0f;
            scores.at(y, x, 1) = x < 4 ? -2.0f : 2.0f;
        }
    const ScoreStack stack(scores);
    EdgeStopParams p;
    p.lambda = 0.5f;
    EvolutionConfig gac{0.1f, 1, Scheme::Gac};
    const ScoreStack out = evolve(stack, flat_image(8, 8, 0.5f), gac, p);
    // outputs live in probability space around one half
    CHECK(out.scores.at(0, 0, 0) > 0.5f);
    CHECK(out.scores.at(0, 7, 0) < 0.5f);
    const LabelMap before = argmax_labels(stack.scores);
    const LabelMap after = argmax_labels(out.scores);
    CHECK(before == after); // one tiny step must not flip this crisp pattern
}
