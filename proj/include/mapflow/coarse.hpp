#pragma once

#include "mapflow/autodiff.hpp"
#include "mapflow/rng.hpp"
#include "mapflow/synth.hpp"
#include "mapflow/tensor.hpp"

#include <vector>

namespace mapflow {

// Fully convolutional coarse classifier:
// 64 filters 12x12 stride 4 -> 128 filters 3x3 -> 128 filters 3x3 ->
// K filters 9x9 -> learned x4 upsample back to full resolution.
struct CoarseNetConfig {
    int classes = 3;
};

// Registers kernels and biases under "coarse.*"; hidden layers Xavier, the
// upsample kernels bilinear-initialized.
void register_coarse_params(ParamStore& ps, const CoarseNetConfig& cfg, Rng& rng);

// Inference at full resolution; H and W must be divisible by 4.
ScoreStack coarse_forward(const Tensor& image, const ParamStore& ps, const CoarseNetConfig& cfg);

// Same network recorded on a tape with a softmax cross-entropy head.
Tape::Id record_coarse_loss(Tape& tape, ParamStore& ps, const CoarseNetConfig& cfg,
                            const Tensor& image, const LabelMap& labels);

struct CoarseTrainConfig {
    float lr = 0.01f;
    float momentum = 0.9f;
    float l2 = 0.0002f;
    int steps = 5000;
    int batch = 64;
    int patch = 64;
};

struct TrainLog {
    std::vector<std::pair<int, double>> loss; // (step, minibatch mean loss)
};

// SGD with momentum on cross-entropy over random patches labeled with the
// noisy reference. Deterministic given the rng seed; throws NumericError on
// a non-finite loss.
void train_coarse(ParamStore& ps, const CoarseNetConfig& cfg, const std::vector<Scene>& scenes,
                  const CoarseTrainConfig& train, Rng& rng, TrainLog* log = nullptr);

// Model-free stand-in for a trained coarse network: one-hot logits at
// +/- logit_magnitude, labels resampled uniformly at the noise rate, then
// Gaussian-blurred per channel.
struct CoarseProviderConfig {
    enum class Kind { Network, Degrader };
    Kind kind = Kind::Degrader;
    float sigma = 2.0f;
    float noise_rate = 0.1f;
    float logit_magnitude = 3.0f;
};

ScoreStack degrade_to_coarse(const LabelMap& labels, const CoarseProviderConfig& cfg, Rng& rng);

// Dispatches on cfg.kind; for the network path the image is replicate-padded
// up to a multiple of 4 and the scores cropped back.
ScoreStack coarse_provide(const CoarseProviderConfig& cfg, const Scene& scene,
                          const ParamStore* net, const CoarseNetConfig* net_cfg, Rng& rng);

} // namespace mapflow
