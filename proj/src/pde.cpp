#include "mapflow/pde.hpp"

#include "mapflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mapflow {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_single_channel(const Tensor& u, const char* who) {
    if (u.rank() != 3 || u.extent(2) != 1)
        throw std::invalid_argument(std::string(who) + ": expected H x W x 1");
}

// u + dt * sum over faces of g_face * (u_neighbor - u); out-of-domain faces
// carry zero flux. g == nullptr means g is one everywhere (heat flow).
Tensor diffuse_flux_step(const Tensor& u, const Tensor* g, float dt) {
    const int h = u.extent(0), w = u.extent(1);
    Tensor out({h, w, 1});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float c = u.at(y, x, 0);
            const float gc = g ? g->at(y, x, 0) : 1.0f;
            float flux = 0.0f;
            if (x > 0)
                flux += (g ? 0.5f * (gc + g->at(y, x - 1, 0)) : 1.0f) * (u.at(y, x - 1, 0) - c);
            if (x < w - 1)
                flux += (g ? 0.5f * (gc + g->at(y, x + 1, 0)) : 1.0f) * (u.at(y, x + 1, 0) - c);
            if (y > 0)
                flux += (g ? 0.5f * (gc + g->at(y - 1, x, 0)) : 1.0f) * (u.at(y - 1, x, 0) - c);
            if (y < h - 1)
                flux += (g ? 0.5f * (gc + g->at(y + 1, x, 0)) : 1.0f) * (u.at(y + 1, x, 0) - c);
            out.at(y, x, 0) = c + dt * flux;
        }
    return out;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

} // namespace

DiffusionTensorField::DiffusionTensorField(Tensor t) : d(std::move(t)) {
    if (d.rank() != 3 || d.extent(2) != 3)
        throw std::invalid_argument("DiffusionTensorField: expected H x W x 3 (dxx, dxy, dyy)");
}

void DiffusionTensorField::validate_psd() const {
    for (int y = 0; y < height(); ++y)
        for (int x = 0; x < width(); ++x) {
            const float a = d.at(y, x, 0), b = d.at(y, x, 1), c = d.at(y, x, 2);
            if (!(a >= 0.0f && c >= 0.0f && a * c - b * b >= -1e-6f))
                throw NumericError("diffusion tensor is not PSD at a pixel");
        }
}

float DiffusionTensorField::max_eigenvalue() const {
    float m = 0.0f;
    for (int y = 0; y < height(); ++y)
        for (int x = 0; x < width(); ++x) {
            const float a = d.at(y, x, 0), b = d.at(y, x, 1), c = d.at(y, x, 2);
            const float half = 0.5f * (a + c);
            const float disc = std::sqrt(0.25f * (a - c) * (a - c) + b * b);
            m = std::max(m, half + disc);
        }
    return m;
}

Tensor luminance(const Tensor& image) {
    require(image.rank() == 3 && image.extent(2) == 3, "luminance: expected H x W x 3");
    const int h = image.extent(0), w = image.extent(1);
    Tensor out({h, w, 1});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(y, x, 0) =
                (image.at(y, x, 0) + image.at(y, x, 1) + image.at(y, x, 2)) / 3.0f;
    return out;
}

float default_lambda(const Tensor& image, float presmooth_sigma) {
    const Tensor lum = gaussian_smooth(luminance(image), presmooth_sigma);
    auto [gx, gy] = grad_xy(lum);
    std::vector<float> mags(static_cast<std::size_t>(gx.size()));
    for (std::int64_t i = 0; i < gx.size(); ++i)
        mags[static_cast<std::size_t>(i)] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
    std::sort(mags.begin(), mags.end());
    const float p90 = mags[static_cast<std::size_t>(0.9 * (mags.size() - 1))];
    return std::max(p90, 1e-4f);
}

Tensor edge_stop(const Tensor& image, const EdgeStopParams& params) {
    require(params.lambda > 0.0f, "edge_stop: lambda must be > 0");
    require(params.presmooth_sigma >= 0.0f, "edge_stop: presmooth_sigma must be >= 0");
    const Tensor lum = gaussian_smooth(luminance(image), params.presmooth_sigma);
    auto [gx, gy] = grad_xy(lum);
    Tensor g(gx.shape());
    for (std::int64_t i = 0; i < g.size(); ++i) {
        const float m2 = (gx[i] * gx[i] + gy[i] * gy[i]) / (params.lambda * params.lambda);
        g[i] = params.kind == EdgeStopParams::Kind::Rational ? 1.0f / (1.0f + m2)
                                                             : std::exp(-m2);
    }
    return g;
}

Tensor heat_step(const Tensor& u, float dt) {
    check_single_channel(u, "heat_step");
    if (!(dt > 0.0f && dt <= 0.25f))
        throw std::invalid_argument("heat_step: dt must be in (0, 0.25]");
    return diffuse_flux_step(u, nullptr, dt);
}

Tensor perona_malik_step(const Tensor& u, const Tensor& g, float dt) {
    check_single_channel(u, "perona_malik_step");
    if (!u.same_shape(g)) throw std::invalid_argument("perona_malik_step: g shape mismatch");
    if (!(dt > 0.0f && dt <= 0.25f))
        throw std::invalid_argument("perona_malik_step: dt must be in (0, 0.25]");
    for (std::int64_t i = 0; i < g.size(); ++i)
        if (!(g[i] >= 0.0f && g[i] <= 1.0f))
            throw std::invalid_argument("perona_malik_step: g must lie in [0, 1]");
    return diffuse_flux_step(u, &g, dt);
}

Tensor anisotropic_step(const Tensor& u, const DiffusionTensorField& D, float dt) {
    check_single_channel(u, "anisotropic_step");
    require(D.height() == u.extent(0) && D.width() == u.extent(1),
            "anisotropic_step: tensor field shape mismatch");
    D.validate_psd();
    const float lam = D.max_eigenvalue();
    if (lam > 0.0f && !(dt <= 0.25f / lam))
        throw std::invalid_argument("anisotropic_step: dt exceeds 0.25 / max eigenvalue");

    const int h = u.extent(0), w = u.extent(1);
    // central y-derivative (one-sided/2 is avoided: replicate clamp keeps it conservative)
    auto dy_at = [&](int y, int x) {
        return 0.5f * (u.at(clampi(y + 1, 0, h - 1), x, 0) - u.at(clampi(y - 1, 0, h - 1), x, 0));
    };
    auto dx_at = [&](int y, int x) {
        return 0.5f * (u.at(y, clampi(x + 1, 0, w - 1), 0) - u.at(y, clampi(x - 1, 0, w - 1), 0));
    };

    Tensor upd({h, w, 1});
    // x-faces between (y,x) and (y,x+1): flux = a_f du/dx + b_f du/dy
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w - 1; ++x) {
            const float af = 0.5f * (D.d.at(y, x, 0) + D.d.at(y, x + 1, 0));
            const float bf = 0.5f * (D.d.at(y, x, 1) + D.d.at(y, x + 1, 1));
            const float dudx = u.at(y, x + 1, 0) - u.at(y, x, 0);
            const float dudy = 0.5f * (dy_at(y, x) + dy_at(y, x + 1));
            const float flux = af * dudx + bf * dudy;
            upd.at(y, x, 0) += flux;
            upd.at(y, x + 1, 0) -= flux;
        }
    // y-faces between (y,x) and (y+1,x): flux = c_f du/dy + b_f du/dx
    for (int y = 0; y < h - 1; ++y)
        for (int x = 0; x < w; ++x) {
            const float cf = 0.5f * (D.d.at(y, x, 2) + D.d.at(y + 1, x, 2));
            const float bf = 0.5f * (D.d.at(y, x, 1) + D.d.at(y + 1, x, 1));
            const float dudy = u.at(y + 1, x, 0) - u.at(y, x, 0);
            const float dudx = 0.5f * (dx_at(y, x) + dx_at(y + 1, x));
            const float flux = cf * dudy + bf * dudx;
            upd.at(y, x, 0) += flux;
            upd.at(y + 1, x, 0) -= flux;
        }

    Tensor out({h, w, 1});
    for (std::int64_t i = 0; i < u.size(); ++i) out[i] = u[i] + dt * upd[i];
    return out;
}

DiffusionTensorField structure_tensor_D(const Tensor& image, const EdgeStopParams& params) {
    require(params.lambda > 0.0f, "structure_tensor_D: lambda must be > 0");
    const Tensor lum = gaussian_smooth(luminance(image), params.presmooth_sigma);
    auto [gx, gy] = grad_xy(lum);
    const int h = gx.extent(0), w = gx.extent(1);

    Tensor prods({h, w, 3});
    for (std::int64_t i = 0; i < gx.size(); ++i) {
        prods[i * 3 + 0] = gx[i] * gx[i];
        prods[i * 3 + 1] = gx[i] * gy[i];
        prods[i * 3 + 2] = gy[i] * gy[i];
    }
    const float rho = std::max(1.0f, params.presmooth_sigma);
    const Tensor st = gaussian_smooth(prods, rho);

    Tensor d({h, w, 3});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float jxx = st.at(y, x, 0), jxy = st.at(y, x, 1), jyy = st.at(y, x, 2);
            // major eigenvector of the structure tensor = gradient direction
            const float theta = 0.5f * std::atan2(2.0f * jxy, jxx - jyy);
            const float c = std::cos(theta), s = std::sin(theta);
            const float mag = std::sqrt(gx.at(y, x, 0) * gx.at(y, x, 0) +
                                        gy.at(y, x, 0) * gy.at(y, x, 0));
            const float m2 = (mag / params.lambda) * (mag / params.lambda);
            const float g = params.kind == EdgeStopParams::Kind::Rational
                                ? 1.0f / (1.0f + m2)
                                : std::exp(-m2);
            // D = g * v1 v1^T + 1 * v2 v2^T with v1 = (c, s), v2 = (-s, c)
            d.at(y, x, 0) = g * c * c + s * s;
            d.at(y, x, 1) = (g - 1.0f) * c * s;
            d.at(y, x, 2) = g * s * s + c * c;
        }
    return DiffusionTensorField(std::move(d));
}

Tensor gac_step(const Tensor& u, const Tensor& g, float dt, float epsilon_norm) {
    check_single_channel(u, "gac_step");
    if (!u.same_shape(g)) throw std::invalid_argument("gac_step: g shape mismatch");
    require(epsilon_norm > 0.0f, "gac_step: epsilon_norm must be > 0");
    require(dt > 0.0f, "gac_step: dt must be > 0");

    auto [gx, gy] = grad_xy(u);
    const int h = u.extent(0), w = u.extent(1);
    Tensor vx({h, w, 1}), vy({h, w, 1});
    for (std::int64_t i = 0; i < u.size(); ++i) {
        const float p = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i] + epsilon_norm * epsilon_norm);
        vx[i] = g[i] * gx[i] / p;
        vy[i] = g[i] * gy[i] / p;
    }
    auto [dvx_dx, dvx_dy] = grad_xy(vx);
    auto [dvy_dx, dvy_dy] = grad_xy(vy);
    (void)dvx_dy;
    (void)dvy_dx;

    Tensor out({h, w, 1});
    for (std::int64_t i = 0; i < u.size(); ++i) {
        const float norm = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
        out[i] = u[i] + dt * norm * (dvx_dx[i] + dvy_dy[i]);
    }
    return out;
}

ScoreStack evolve(const ScoreStack& scores, const Tensor& image, const EvolutionConfig& config,
                  const EdgeStopParams& params,
                  const std::function<void(int, const ScoreStack&)>& snapshot) {
    require(config.dt > 0.0f, "evolve: dt must be > 0");
    require(config.steps >= 0, "evolve: steps must be >= 0");
    const int h = scores.height(), w = scores.width(), k = scores.classes();
    require(image.rank() == 3 && image.extent(0) == h && image.extent(1) == w,
            "evolve: image shape mismatch");

    EdgeStopParams ep = params;
    if (ep.lambda <= 0.0f) ep.lambda = default_lambda(image, ep.presmooth_sigma);

    Tensor g;
    DiffusionTensorField D;
    switch (config.scheme) {
        case Scheme::Heat: break;
        case Scheme::PeronaMalik:
        case Scheme::Gac: g = edge_stop(image, ep); break;
        case Scheme::Anisotropic: D = structure_tensor_D(image, ep); break;
    }

    // GAC needs decision boundaries on the zero level: evolve softmax
    // probabilities shifted by one half, then shift back.
    const bool gac = config.scheme == Scheme::Gac;
    Tensor work = gac ? softmax_channels(scores.scores) : scores.scores;
    if (gac)
        for (std::int64_t i = 0; i < work.size(); ++i) work[i] -= 0.5f;

    std::vector<Tensor> channels;
    channels.reserve(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) channels.push_back(slice_channel(work, c));

    auto emit = [&](int step) {
        if (!snapshot) return;
        Tensor stack({h, w, k});
        for (int c = 0; c < k; ++c)
            for (std::int64_t p = 0; p < static_cast<std::int64_t>(h) * w; ++p)
                stack[p * k + c] = channels[static_cast<std::size_t>(c)][p] + (gac ? 0.5f : 0.0f);
        snapshot(step, ScoreStack(std::move(stack)));
    };

    emit(0);
    for (int s = 0; s < config.steps; ++s) {
        for (int c = 0; c < k; ++c) {
            Tensor& u = channels[static_cast<std::size_t>(c)];
            switch (config.scheme) {
                case Scheme::Heat: u = heat_step(u, config.dt); break;
                case Scheme::PeronaMalik: u = perona_malik_step(u, g, config.dt); break;
                case Scheme::Anisotropic: u = anisotropic_step(u, D, config.dt); break;
                case Scheme::Gac: u = gac_step(u, g, config.dt); break;
            }
        }
        emit(s + 1);
    }

    Tensor outs({h, w, k});
    for (int c = 0; c < k; ++c)
        for (std::int64_t p = 0; p < static_cast<std::int64_t>(h) * w; ++p)
            outs[p * k + c] = channels[static_cast<std::size_t>(c)][p] + (gac ? 0.5f : 0.0f);
    return ScoreStack(std::move(outs));
}

} // namespace mapflow
