#include "mapflow/coarse.hpp"

#include "mapflow/errors.hpp"
#include "mapflow/optim.hpp"
#include "mapflow/tensor_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace mapflow {

namespace {

struct LayerSpec {
    const char* name;
    int cout, cin, k, stride;
};

constexpr int kUpFactor = 4;

LayerSpec layer_spec(int i, int classes) {
    switch (i) {
        case 0: return {"coarse.l1", 64, 3, 12, 4};
        case 1: return {"coarse.l2", 128, 64, 3, 1};
        case 2: return {"coarse.l3", 128, 128, 3, 1};
        default: return {"coarse.l4", classes, 128, 9, 1};
    }
}

} // namespace

void register_coarse_params(ParamStore& ps, const CoarseNetConfig& cfg, Rng& rng) {
    for (int i = 0; i < 4; ++i) {
        const LayerSpec l = layer_spec(i, cfg.classes);
        const int fan_in = l.cin * l.k * l.k;
        ps.add(std::string(l.name) + ".k",
               xavier_init({l.cout, l.cin, l.k, l.k}, fan_in, rng));
        ps.add(std::string(l.name) + ".b", Tensor({l.cout}));
    }
    ps.add("coarse.up.k", bilinear_upsample_kernels(cfg.classes, kUpFactor));
}

ScoreStack coarse_forward(const Tensor& image, const ParamStore& ps, const CoarseNetConfig& cfg) {
    if (image.rank() != 3 || image.extent(2) != 3)
        throw std::invalid_argument("coarse_forward: expected H x W x 3 image");
    if (image.extent(0) % 4 != 0 || image.extent(1) % 4 != 0)
        throw std::invalid_argument("coarse_forward: H and W must be divisible by 4");

    Tensor x = image;
    for (int i = 0; i < 4; ++i) {
        const LayerSpec l = layer_spec(i, cfg.classes);
        x = conv2d(x, ps.at(std::string(l.name) + ".k").value, l.stride, Pad::ReplicateSame);
        x = bias_add(x, ps.at(std::string(l.name) + ".b").value);
        if (i < 3) x = relu(x);
    }
    x = upsample_learned(x, ps.at("coarse.up.k").value, kUpFactor);
    return ScoreStack(std::move(x));
}

Tape::Id record_coarse_loss(Tape& tape, ParamStore& ps, const CoarseNetConfig& cfg,
                            const Tensor& image, const LabelMap& labels) {
    if (image.extent(0) % 4 != 0 || image.extent(1) % 4 != 0)
        throw std::invalid_argument("record_coarse_loss: H and W must be divisible by 4");
    Tape::Id x = tape.constant(image);
    for (int i = 0; i < 4; ++i) {
        const LayerSpec l = layer_spec(i, cfg.classes);
        x = tape.conv2d(x, tape.param(ps, std::string(l.name) + ".k"), l.stride,
                        Pad::ReplicateSame);
        x = tape.bias_add(x, tape.param(ps, std::string(l.name) + ".b"));
        if (i < 3) x = tape.relu(x);
    }
    x = tape.upsample_learned(x, tape.param(ps, "coarse.up.k"), kUpFactor);
    return tape.softmax_cross_entropy(x, labels);
}

void train_coarse(ParamStore& ps, const CoarseNetConfig& cfg, const std::vector<Scene>& scenes,
                  const CoarseTrainConfig& train, Rng& rng, TrainLog* log) {
    if (train.patch % 4 != 0)
        throw std::invalid_argument("train_coarse: patch must be divisible by 4");
    Tape tape;
    for (int step = 0; step < train.steps; ++step) {
        const std::vector<PatchRef> refs =
            sample_patch_refs(scenes, train.patch, train.batch, rng);
        ps.zero_grad();
        double loss_sum = 0.0;
        for (const PatchRef& r : refs) {
            const Scene& s = scenes[static_cast<std::size_t>(r.scene)];
            const Tensor img = crop(s.image, r.y0, r.x0, train.patch, train.patch);
            const LabelMap lab = crop(s.noisy_ref, r.y0, r.x0, train.patch, train.patch);
            tape.reset();
            const Tape::Id loss = record_coarse_loss(tape, ps, cfg, img, lab);
            loss_sum += tape.scalar(loss);
            tape.backward(loss);
        }
        const double mean_loss = loss_sum / train.batch;
        if (!std::isfinite(mean_loss))
            throw NumericError("train_coarse: loss diverged at step " + std::to_string(step));
        ps.scale_grad(1.0f / static_cast<float>(train.batch));
        sgd_momentum_step(ps, train.lr, train.momentum, train.l2);
        if (log) log->loss.push_back({step, mean_loss});
    }
}

ScoreStack degrade_to_coarse(const LabelMap& labels, const CoarseProviderConfig& cfg, Rng& rng) {
    if (cfg.sigma < 0.0f) throw std::invalid_argument("degrade_to_coarse: sigma must be >= 0");
    if (cfg.noise_rate < 0.0f || cfg.noise_rate >= 1.0f)
        throw std::invalid_argument("degrade_to_coarse: noise rate must be in [0, 1)");
    const int h = labels.height, w = labels.width;
    Tensor scores({h, w, kClasses});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int lab = labels.at(y, x);
            if (cfg.noise_rate > 0.0f && rng.uniform() < cfg.noise_rate)
                lab = rng.uniform_int(0, kClasses - 1);
            for (int c = 0; c < kClasses; ++c)
                scores.at(y, x, c) = c == lab ? cfg.logit_magnitude : -cfg.logit_magnitude;
        }
    if (cfg.sigma > 0.0f) scores = gaussian_smooth(scores, cfg.sigma);
    return ScoreStack(std::move(scores));
}

ScoreStack coarse_provide(const CoarseProviderConfig& cfg, const Scene& scene,
                          const ParamStore* net, const CoarseNetConfig* net_cfg, Rng& rng) {
    if (cfg.kind == CoarseProviderConfig::Kind::Degrader)
        return degrade_to_coarse(scene.noisy_ref, cfg, rng);

    if (net == nullptr || net_cfg == nullptr)
        throw ConfigError("coarse provider 'network' needs a trained checkpoint");
    const int h = scene.image.extent(0), w = scene.image.extent(1);
    const int ph = (h + 3) / 4 * 4, pw = (w + 3) / 4 * 4;
    if (ph == h && pw == w) return coarse_forward(scene.image, *net, *net_cfg);

    // replicate-pad to a stride multiple, then crop the scores back
    Tensor padded({ph, pw, 3});
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x)
            for (int c = 0; c < 3; ++c)
                padded.at(y, x, c) = scene.image.at(std::min(y, h - 1), std::min(x, w - 1), c);
    const ScoreStack full = coarse_forward(padded, *net, *net_cfg);
    return ScoreStack(crop(full.scores, 0, 0, h, w));
}

} // namespace mapflow
