#pragma once

#include "mapflow/tensor.hpp"
#include "mapflow/tensor_ops.hpp"

#include <functional>

namespace mapflow {

// Edge-stopping function g(I, x): near zero on image edges, 1 on flat areas.
struct EdgeStopParams {
    enum class Kind { Rational, Exponential };
    Kind kind = Kind::Exponential;
    float lambda = 0.0f;         // edge sensitivity, image-gradient units; > 0
    float presmooth_sigma = 1.0f; // Gaussian blur of the luminance before gradients
};

// Per-pixel symmetric 2x2 diffusion tensor, stored as H x W x 3 = (dxx, dxy, dyy).
struct DiffusionTensorField {
    Tensor d; // H x W x 3

    DiffusionTensorField() = default;
    explicit DiffusionTensorField(Tensor t);
    int height() const { return d.extent(0); }
    int width() const { return d.extent(1); }

    // Throws NumericError unless every pixel is PSD
    // (dxx >= 0, dyy >= 0, dxx*dyy - dxy^2 >= -1e-6).
    void validate_psd() const;
    float max_eigenvalue() const;
};

enum class Scheme { Heat, PeronaMalik, Anisotropic, Gac };

struct EvolutionConfig {
    float dt = 0.1f;
    int steps = 0;
    Scheme scheme = Scheme::Heat;
};

// (R+G+B)/3 of an H x W x 3 image.
Tensor luminance(const Tensor& image);

// 90th percentile of |grad| of the presmoothed luminance; a usable default
// for EdgeStopParams::lambda.
float default_lambda(const Tensor& image, float presmooth_sigma);

// g in (0, 1]: rational 1/(1+(|∇I|/λ)²) or exponential exp(−(|∇I|/λ)²) of
// the presmoothed luminance gradient.
Tensor edge_stop(const Tensor& image, const EdgeStopParams& params);

// Explicit diffusion steps on a single-channel H x W x 1 field, replicate
// (zero-flux) boundary. heat_step is perona_malik_step with g = 1 so the
// two are bit-identical when g is one everywhere.
Tensor heat_step(const Tensor& u, float dt);
Tensor perona_malik_step(const Tensor& u, const Tensor& g, float dt);

// div(D grad u) with face-averaged tensor entries; conservative by
// construction. dt must satisfy dt <= 0.25 / max eigenvalue of D.
Tensor anisotropic_step(const Tensor& u, const DiffusionTensorField& D, float dt);

// Structure-tensor construction of D: unit diffusion along the local edge
// tangent, g(|∇I|) across it.
DiffusionTensorField structure_tensor_D(const Tensor& image, const EdgeStopParams& params);

// Level-set geodesic-active-contours step:
// u + dt * |∇u| * div(g ∇u / sqrt(|∇u|² + ε²)).
Tensor gac_step(const Tensor& u, const Tensor& g, float dt, float epsilon_norm = 1e-3f);

// Runs the selected scheme independently per class channel. For GAC the
// channels are first mapped so the P(k) = 0.5 decision boundary sits at the
// zero level (softmax probability minus one half), then mapped back.
ScoreStack evolve(const ScoreStack& scores, const Tensor& image, const EvolutionConfig& config,
                  const EdgeStopParams& params,
                  const std::function<void(int, const ScoreStack&)>& snapshot = nullptr);

} // namespace mapflow
