#pragma once

#include "mapflow/autodiff.hpp"
#include "mapflow/rng.hpp"
#include "mapflow/synth.hpp"
#include "mapflow/tensor.hpp"

#include <string>
#include <vector>

namespace mapflow {

// Learned iterative enhancement: shared 5x5 filter banks over the heat maps
// (M, one bank reused for every class) and the image (N, computed once per
// run), concatenated per pixel and fed to a per-class update perceptron whose
// output is added to the heat map. Unrolled `iterations` times with shared
// weights.
struct EnhancerConfig {
    int classes = 3;
    int filters = 32;    // M and N bank sizes
    int hidden = 32;     // MLP hidden neurons
    int iterations = 5;  // unroll count
    int kernel = 5;      // spatial extent of M and N
    bool class_agnostic = false; // one MLP shared by all classes
    bool unshared = false;       // ablation: independent parameters per iteration
};

// Parameter names under the given config ("enh.m", "enh.mlp1.w1", ...;
// unshared mode prefixes "enh.it{t}."). iter is ignored for shared configs.
std::string enh_m_name(const EnhancerConfig& cfg, int iter);
std::string enh_n_name(const EnhancerConfig& cfg, int iter);
std::string enh_mlp_name(const EnhancerConfig& cfg, int iter, int klass, const char* field);

// M and hidden weights Xavier, the MLP output layer zero so the initial
// process is exactly the identity.
void register_enhancer_params(ParamStore& ps, const EnhancerConfig& cfg, Rng& rng);

// N_j * I response maps, replicate-same convolution; iteration-independent.
Tensor image_features(const Tensor& image, const Tensor& n_filters);

// M_i * u_k response maps for a single class map.
Tensor heat_features(const Tensor& u_k, const Tensor& m_filters);

// One unrolled update: per class, concat(heat features, image features) ->
// hidden ReLU -> linear delta, added to the heat map. iter selects the
// parameter set in unshared mode.
ScoreStack iteration_step(const ScoreStack& u, const Tensor& img_feats, const ParamStore& ps,
                          const EnhancerConfig& cfg, int iter = 0);

// Applies iteration_step `iterations` times; the trajectory (when requested)
// holds iterations + 1 stacks starting at u0.
ScoreStack enhance(const ScoreStack& u0, const Tensor& image, const ParamStore& ps,
                   const EnhancerConfig& cfg, std::vector<ScoreStack>* trajectory = nullptr);

// The same forward recorded on a tape, ending in softmax cross-entropy
// against the reference labels. Shared parameters are registered once per
// unrolled iteration so backward averages the per-iteration adjoints.
Tape::Id record_enhance_loss(Tape& tape, ParamStore& ps, const EnhancerConfig& cfg,
                             const ScoreStack& u0, const Tensor& image, const LabelMap& target);

// Training inputs: full-scene image, coarse scores from the (frozen)
// provider, and accurate reference labels.
struct EnhancementScene {
    Tensor image;
    ScoreStack coarse;
    LabelMap truth;
};

struct EnhancerTrainConfig {
    float lr = 0.01f; // AdaGrad base rate
    float adagrad_epsilon = 1e-8f;
    int steps = 5000;
    int batch = 64;
    int patch = 64;
};

struct EnhancerTrainLog {
    std::vector<std::pair<int, double>> loss;
};

// AdaGrad on softmax cross-entropy over random patches; gradients averaged
// over the minibatch. Throws NumericError if the loss stops being finite.
void train_enhancer(ParamStore& ps, const EnhancerConfig& cfg,
                    const std::vector<EnhancementScene>& scenes,
                    const EnhancerTrainConfig& train, Rng& rng,
                    EnhancerTrainLog* log = nullptr);

} // namespace mapflow
