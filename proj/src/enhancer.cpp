#include "mapflow/enhancer.hpp"

#include "mapflow/errors.hpp"
#include "mapflow/optim.hpp"
#include "mapflow/tensor_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace mapflow {

namespace {

std::string iter_prefix(const EnhancerConfig& cfg, int iter) {
    return cfg.unshared ? "enh.it" + std::to_string(iter) + "." : std::string("enh.");
}

void check_stack(const ScoreStack& u, const EnhancerConfig& cfg, const char* who) {
    if (u.classes() != cfg.classes)
        throw std::invalid_argument(std::string(who) +
                                    ": class count does not match the configured MLPs");
}

} // namespace

std::string enh_m_name(const EnhancerConfig& cfg, int iter) { return iter_prefix(cfg, iter) + "m"; }
std::string enh_n_name(const EnhancerConfig& cfg, int iter) { return iter_prefix(cfg, iter) + "n"; }

std::string enh_mlp_name(const EnhancerConfig& cfg, int iter, int klass, const char* field) {
    const std::string mlp = cfg.class_agnostic ? "mlp" : "mlp" + std::to_string(klass);
    return iter_prefix(cfg, iter) + mlp + "." + field;
}

void register_enhancer_params(ParamStore& ps, const EnhancerConfig& cfg, Rng& rng) {
    if (cfg.classes < 2 || cfg.filters < 1 || cfg.hidden < 1 || cfg.iterations < 0 ||
        cfg.kernel < 1 || cfg.kernel % 2 == 0)
        throw std::invalid_argument("register_enhancer_params: bad config");
    const int copies = cfg.unshared ? cfg.iterations : 1;
    const int phi = 2 * cfg.filters;
    for (int t = 0; t < copies; ++t) {
        ps.add(enh_m_name(cfg, t),
               xavier_init({cfg.filters, 1, cfg.kernel, cfg.kernel}, cfg.kernel * cfg.kernel, rng));
        ps.add(enh_n_name(cfg, t),
               xavier_init({cfg.filters, 3, cfg.kernel, cfg.kernel}, 3 * cfg.kernel * cfg.kernel,
                           rng));
        const int mlps = cfg.class_agnostic ? 1 : cfg.classes;
        for (int k = 0; k < mlps; ++k) {
            ps.add(enh_mlp_name(cfg, t, k, "w1"), xavier_init({cfg.hidden, phi}, phi, rng));
            ps.add(enh_mlp_name(cfg, t, k, "b1"), Tensor({cfg.hidden}));
            ps.add(enh_mlp_name(cfg, t, k, "w2"), Tensor({1, cfg.hidden}));
            ps.add(enh_mlp_name(cfg, t, k, "b2"), Tensor({1}));
        }
    }
}

Tensor image_features(const Tensor& image, const Tensor& n_filters) {
    return conv2d(image, n_filters, 1, Pad::ReplicateSame);
}

Tensor heat_features(const Tensor& u_k, const Tensor& m_filters) {
    if (u_k.rank() != 3 || u_k.extent(2) != 1)
        throw std::invalid_argument("heat_features: expected a single class map H x W x 1");
    return conv2d(u_k, m_filters, 1, Pad::ReplicateSame);
}

ScoreStack iteration_step(const ScoreStack& u, const Tensor& img_feats, const ParamStore& ps,
                          const EnhancerConfig& cfg, int iter) {
    check_stack(u, cfg, "iteration_step");
    const int h = u.height(), w = u.width(), k = u.classes();
    Tensor out({h, w, k});
    const Tensor& m = ps.at(enh_m_name(cfg, iter)).value;
    for (int c = 0; c < k; ++c) {
        const int mlp = cfg.class_agnostic ? 0 : c;
        const Tensor u_k = slice_channel(u.scores, c);
        const Tensor phi = concat_channels(heat_features(u_k, m), img_feats);
        const Tensor hid = relu(linear_pointwise(phi, ps.at(enh_mlp_name(cfg, iter, mlp, "w1")).value,
                                                 ps.at(enh_mlp_name(cfg, iter, mlp, "b1")).value));
        const Tensor delta = linear_pointwise(hid, ps.at(enh_mlp_name(cfg, iter, mlp, "w2")).value,
                                              ps.at(enh_mlp_name(cfg, iter, mlp, "b2")).value);
        for (std::int64_t p = 0; p < static_cast<std::int64_t>(h) * w; ++p)
            out[p * k + c] = u_k[p] + delta[p];
    }
    return ScoreStack(std::move(out));
}

ScoreStack enhance(const ScoreStack& u0, const Tensor& image, const ParamStore& ps,
                   const EnhancerConfig& cfg, std::vector<ScoreStack>* trajectory) {
    check_stack(u0, cfg, "enhance");
    if (cfg.iterations < 0) throw std::invalid_argument("enhance: iterations must be >= 0");
    if (image.extent(0) != u0.height() || image.extent(1) != u0.width())
        throw std::invalid_argument("enhance: image and score shapes differ");

    ScoreStack u = u0;
    if (trajectory) {
        trajectory->clear();
        trajectory->push_back(u);
    }
    Tensor img_feats;
    if (!cfg.unshared && cfg.iterations > 0)
        img_feats = image_features(image, ps.at(enh_n_name(cfg, 0)).value);
    for (int t = 0; t < cfg.iterations; ++t) {
        if (cfg.unshared) img_feats = image_features(image, ps.at(enh_n_name(cfg, t)).value);
        u = iteration_step(u, img_feats, ps, cfg, t);
        if (trajectory) trajectory->push_back(u);
    }
    return u;
}

Tape::Id record_enhance_loss(Tape& tape, ParamStore& ps, const EnhancerConfig& cfg,
                             const ScoreStack& u0, const Tensor& image, const LabelMap& target) {
    check_stack(u0, cfg, "record_enhance_loss");
    const int k = cfg.classes;
    const Tape::Id u0_id = tape.constant(u0.scores);
    std::vector<Tape::Id> u_ids;
    u_ids.reserve(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) u_ids.push_back(tape.slice_c(u0_id, c));

    Tape::Id img_id = -1, img_feats_id = -1;
    if (cfg.iterations > 0) {
        img_id = tape.constant(image);
        if (!cfg.unshared) {
            // one N node feeding all iterations; count one instance per unroll
            const Tape::Id n_id = tape.param(ps, enh_n_name(cfg, 0), cfg.iterations);
            img_feats_id = tape.conv2d(img_id, n_id, 1, Pad::ReplicateSame);
        }
    }

    for (int t = 0; t < cfg.iterations; ++t) {
        if (cfg.unshared) {
            const Tape::Id n_id = tape.param(ps, enh_n_name(cfg, t));
            img_feats_id = tape.conv2d(img_id, n_id, 1, Pad::ReplicateSame);
        }
        // one node per iteration, reused across classes
        const Tape::Id m_id = tape.param(ps, enh_m_name(cfg, t));
        Tape::Id agnostic_w1 = -1, agnostic_b1 = -1, agnostic_w2 = -1, agnostic_b2 = -1;
        if (cfg.class_agnostic) {
            agnostic_w1 = tape.param(ps, enh_mlp_name(cfg, t, 0, "w1"));
            agnostic_b1 = tape.param(ps, enh_mlp_name(cfg, t, 0, "b1"));
            agnostic_w2 = tape.param(ps, enh_mlp_name(cfg, t, 0, "w2"));
            agnostic_b2 = tape.param(ps, enh_mlp_name(cfg, t, 0, "b2"));
        }
        for (int c = 0; c < k; ++c) {
            const Tape::Id hf = tape.conv2d(u_ids[static_cast<std::size_t>(c)], m_id, 1,
                                            Pad::ReplicateSame);
            const Tape::Id phi = tape.concat_c(hf, img_feats_id);
            const Tape::Id w1 =
                cfg.class_agnostic ? agnostic_w1 : tape.param(ps, enh_mlp_name(cfg, t, c, "w1"));
            const Tape::Id b1 =
                cfg.class_agnostic ? agnostic_b1 : tape.param(ps, enh_mlp_name(cfg, t, c, "b1"));
            const Tape::Id w2 =
                cfg.class_agnostic ? agnostic_w2 : tape.param(ps, enh_mlp_name(cfg, t, c, "w2"));
            const Tape::Id b2 =
                cfg.class_agnostic ? agnostic_b2 : tape.param(ps, enh_mlp_name(cfg, t, c, "b2"));
            const Tape::Id hid = tape.relu(tape.linear1x1(phi, w1, b1));
            const Tape::Id delta = tape.linear1x1(hid, w2, b2);
            u_ids[static_cast<std::size_t>(c)] =
                tape.add(u_ids[static_cast<std::size_t>(c)], delta);
        }
    }
    const Tape::Id final_stack = tape.stack_c(u_ids);
    return tape.softmax_cross_entropy(final_stack, target);
}

void train_enhancer(ParamStore& ps, const EnhancerConfig& cfg,
                    const std::vector<EnhancementScene>& scenes,
                    const EnhancerTrainConfig& train, Rng& rng, EnhancerTrainLog* log) {
    if (scenes.empty()) throw std::invalid_argument("train_enhancer: no scenes");
    for (const EnhancementScene& s : scenes) {
        if (s.image.extent(0) != s.coarse.height() || s.image.extent(1) != s.coarse.width() ||
            s.truth.height != s.coarse.height() || s.truth.width != s.coarse.width())
            throw std::invalid_argument("train_enhancer: scene shapes disagree");
        if (s.image.extent(0) < train.patch || s.image.extent(1) < train.patch)
            throw std::invalid_argument("train_enhancer: patch larger than scene");
    }

    Tape tape;
    for (int step = 0; step < train.steps; ++step) {
        ps.zero_grad();
        double loss_sum = 0.0;
        for (int b = 0; b < train.batch; ++b) {
            const int si = rng.uniform_int(0, static_cast<int>(scenes.size()) - 1);
            const EnhancementScene& s = scenes[static_cast<std::size_t>(si)];
            const int y0 = rng.uniform_int(0, s.truth.height - train.patch);
            const int x0 = rng.uniform_int(0, s.truth.width - train.patch);
            const Tensor img = crop(s.image, y0, x0, train.patch, train.patch);
            const ScoreStack u0(crop(s.coarse.scores, y0, x0, train.patch, train.patch));
            const LabelMap lab = crop(s.truth, y0, x0, train.patch, train.patch);
            tape.reset();
            const Tape::Id loss = record_enhance_loss(tape, ps, cfg, u0, img, lab);
            loss_sum += tape.scalar(loss);
            tape.backward(loss);
        }
        const double mean_loss = loss_sum / train.batch;
        if (!std::isfinite(mean_loss))
            throw NumericError("train_enhancer: loss diverged at step " + std::to_string(step));
        ps.scale_grad(1.0f / static_cast<float>(train.batch));
        adagrad_step(ps, train.lr, train.adagrad_epsilon);
        if (log) log->loss.push_back({step, mean_loss});
    }
}

} // namespace mapflow
