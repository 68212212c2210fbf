#include "mapflow/autodiff.hpp"

#include "mapflow/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace mapflow {

int ParamStore::add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    Param p;
    p.name = name;
    p.grad = Tensor(init.shape());
    p.value = std::move(init);
    params_.push_back(std::move(p));
    const int idx = static_cast<int>(params_.size()) - 1;
    index_[name] = idx;
    return idx;
}

int ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return it->second;
}

void ParamStore::zero_grad() {
    for (Param& p : params_) p.grad.fill(0.0f);
}

void ParamStore::scale_grad(float s) {
    for (Param& p : params_)
        for (std::int64_t i = 0; i < p.grad.size(); ++i) p.grad[i] *= s;
}

std::int64_t ParamStore::parameter_count() const {
    std::int64_t n = 0;
    for (const Param& p : params_) n += p.value.size();
    return n;
}

Tape::Id Tape::push(Tensor value, std::function<void(Tape&, const Node&)> back) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

Tape::Id Tape::constant(Tensor v) { return push(std::move(v), nullptr); }

Tape::Id Tape::param(ParamStore& ps, const std::string& name, int instances) {
    if (store_ != nullptr && store_ != &ps)
        throw std::invalid_argument("Tape: one ParamStore per tape");
    if (instances < 1) throw std::invalid_argument("Tape: instances must be >= 1");
    store_ = &ps;
    const int idx = ps.index_of(name);
    const Id id = push(ps.at(idx).value, nullptr);
    nodes_.back().param_index = idx;
    nodes_.back().instances = instances;
    return id;
}

Tape::Id Tape::conv2d(Id input, Id kernels, int stride, Pad pad) {
    const Tensor& in = value(input);
    const Tensor& ker = value(kernels);
    Tensor out = mapflow::conv2d(in, ker, stride, pad);
    const int in_h = in.extent(0), in_w = in.extent(1);
    const int kh = ker.extent(2), kw = ker.extent(3);
    return push(std::move(out), [=](Tape& t, const Node& n) {
        const Tensor gi = conv2d_grad_input(n.adjoint, t.value(kernels), in_h, in_w, stride, pad);
        t.adj(input) = t.adj(input).empty() ? gi : mapflow::add(t.adj(input), gi);
        const Tensor gk = conv2d_grad_kernels(n.adjoint, t.value(input), kh, kw, stride, pad);
        t.adj(kernels) = t.adj(kernels).empty() ? gk : mapflow::add(t.adj(kernels), gk);
    });
}

Tape::Id Tape::upsample_learned(Id input, Id kernels, int factor) {
    Tensor out = mapflow::upsample_learned(value(input), value(kernels), factor);
    return push(std::move(out), [=](Tape& t, const Node& n) {
        const Tensor gi = upsample_learned_grad_input(n.adjoint, t.value(kernels), factor);
        t.adj(input) = t.adj(input).empty() ? gi : mapflow::add(t.adj(input), gi);
        const Tensor gk = upsample_learned_grad_kernels(n.adjoint, t.value(input), factor);
        t.adj(kernels) = t.adj(kernels).empty() ? gk : mapflow::add(t.adj(kernels), gk);
    });
}

Tape::Id Tape::bias_add(Id input, Id bias) {
    Tensor out = mapflow::bias_add(value(input), value(bias));
    return push(std::move(out), [=](Tape& t, const Node& n) {
        t.adj(input) = t.adj(input).empty() ? n.adjoint : mapflow::add(t.adj(input), n.adjoint);
        const int c = n.value.extent(2);
        Tensor gb = t.adj(bias).empty() ? Tensor({c}) : t.adj(bias);
        const float* a = n.adjoint.data();
        for (std::int64_t i = 0; i < n.adjoint.size(); ++i) gb[i % c] += a[i];
        t.adj(bias) = std::move(gb);
    });
}

Tape::Id Tape::relu(Id input) {
    Tensor out = mapflow::relu(value(input));
    return push(std::move(out), [=](Tape& t, const Node& n) {
        const Tensor& x = t.value(input);
        Tensor g = t.adj(input).empty() ? Tensor(x.shape()) : t.adj(input);
        const float* a = n.adjoint.data();
        for (std::int64_t i = 0; i < x.size(); ++i)
            if (x[i] > 0.0f) g[i] += a[i];
        t.adj(input) = std::move(g);
    });
}

Tape::Id Tape::linear1x1(Id input, Id weights, Id bias) {
    Tensor out = linear_pointwise(value(input), value(weights), value(bias));
    return push(std::move(out), [=](Tape& t, const Node& n) {
        const Tensor& in = t.value(input);
        const Tensor& w = t.value(weights);
        const int cin = in.extent(2), cout = w.extent(0);
        const std::int64_t npix = static_cast<std::int64_t>(in.extent(0)) * in.extent(1);

        Tensor gin = t.adj(input).empty() ? Tensor(in.shape()) : t.adj(input);
        Tensor gw = t.adj(weights).empty() ? Tensor(w.shape()) : t.adj(weights);
        Tensor gb = t.adj(bias).empty() ? Tensor({cout}) : t.adj(bias);

        const float* a = n.adjoint.data();
        const float* ip = in.data();
        const float* wp = w.data();
        float* gip = gin.data();
        float* gwp = gw.data();
        for (std::int64_t p = 0; p < npix; ++p) {
            const float* ar = a + p * cout;
            const float* ir = ip + p * cin;
            float* gir = gip + p * cin;
            for (int co = 0; co < cout; ++co) {
                const float av = ar[co];
                if (av == 0.0f) continue;
                const float* wrow = wp + static_cast<std::size_t>(co) * cin;
                float* gwrow = gwp + static_cast<std::size_t>(co) * cin;
                for (int ci = 0; ci < cin; ++ci) {
                    gir[ci] += av * wrow[ci];
                    gwrow[ci] += av * ir[ci];
                }
                gb[co] += av;
            }
        }
        t.adj(input) = std::move(gin);
        t.adj(weights) = std::move(gw);
        t.adj(bias) = std::move(gb);
    });
}

Tape::Id Tape::concat_c(Id a, Id b) {
    Tensor out = concat_channels(value(a), value(b));
    const int ca = value(a).extent(2);
    return push(std::move(out), [=](Tape& t, const Node& n) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        Tensor ga = t.adj(a).empty() ? Tensor(av.shape()) : t.adj(a);
        Tensor gb = t.adj(b).empty() ? Tensor(bv.shape()) : t.adj(b);
        const int cb = bv.extent(2);
        const std::int64_t npix = static_cast<std::int64_t>(av.extent(0)) * av.extent(1);
        const float* adj = n.adjoint.data();
        for (std::int64_t p = 0; p < npix; ++p) {
            const float* row = adj + p * (ca + cb);
            for (int c = 0; c < ca; ++c) ga[p * ca + c] += row[c];
            for (int c = 0; c < cb; ++c) gb[p * cb + c] += row[ca + c];
        }
        t.adj(a) = std::move(ga);
        t.adj(b) = std::move(gb);
    });
}

Tape::Id Tape::slice_c(Id stack, int channel) {
    Tensor out = slice_channel(value(stack), channel);
    return push(std::move(out), [=](Tape& t, const Node& n) {
        const Tensor& sv = t.value(stack);
        Tensor g = t.adj(stack).empty() ? Tensor(sv.shape()) : t.adj(stack);
        const int k = sv.extent(2);
        const float* a = n.adjoint.data();
        for (std::int64_t p = 0; p < n.adjoint.size(); ++p) g[p * k + channel] += a[p];
        t.adj(stack) = std::move(g);
    });
}

Tape::Id Tape::stack_c(const std::vector<Id>& channels) {
    if (channels.empty()) throw std::invalid_argument("stack_c: no channels");
    const Tensor& first = value(channels[0]);
    const int h = first.extent(0), w = first.extent(1);
    const int k = static_cast<int>(channels.size());
    Tensor out({h, w, k});
    for (int c = 0; c < k; ++c) {
        const Tensor& ch = value(channels[static_cast<std::size_t>(c)]);
        if (ch.extent(0) != h || ch.extent(1) != w || ch.extent(2) != 1)
            throw std::invalid_argument("stack_c: channel shape mismatch");
        for (std::int64_t p = 0; p < static_cast<std::int64_t>(h) * w; ++p)
            out[p * k + c] = ch[p];
    }
    std::vector<Id> ids = channels;
    return push(std::move(out), [ids, h, w, k](Tape& t, const Node& n) {
        for (int c = 0; c < k; ++c) {
            const Id id = ids[static_cast<std::size_t>(c)];
            Tensor g = t.adj(id).empty() ? Tensor({h, w, 1}) : t.adj(id);
            const float* a = n.adjoint.data();
            for (std::int64_t p = 0; p < static_cast<std::int64_t>(h) * w; ++p)
                g[p] += a[p * k + c];
            t.adj(id) = std::move(g);
        }
    });
}

Tape::Id Tape::add(Id a, Id b) {
    Tensor out = mapflow::add(value(a), value(b));
    return push(std::move(out), [=](Tape& t, const Node& n) {
        t.adj(a) = t.adj(a).empty() ? n.adjoint : mapflow::add(t.adj(a), n.adjoint);
        t.adj(b) = t.adj(b).empty() ? n.adjoint : mapflow::add(t.adj(b), n.adjoint);
    });
}

Tape::Id Tape::softmax_cross_entropy(Id scores, const LabelMap& target) {
    const Tensor probs = softmax_channels(value(scores));
    const double loss = cross_entropy(probs, target);
    Tensor out({1});
    out[0] = static_cast<float>(loss);
    LabelMap tgt = target;
    const Id id = push(std::move(out), [=, tgt = std::move(tgt)](Tape& t, const Node& n) {
        const Tensor& s = t.value(scores);
        const Tensor p = softmax_channels(s);
        const int h = s.extent(0), w = s.extent(1), k = s.extent(2);
        Tensor g = t.adj(scores).empty() ? Tensor(s.shape()) : t.adj(scores);
        const float seed = n.adjoint[0] / static_cast<float>(static_cast<std::int64_t>(h) * w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int tl = tgt.at(y, x);
                for (int c = 0; c < k; ++c) {
                    const float onehot = (c == tl) ? 1.0f : 0.0f;
                    g.at(y, x, c) += seed * (p.at(y, x, c) - onehot);
                }
            }
        t.adj(scores) = std::move(g);
    });
    nodes_.back().scalar_value = loss;
    nodes_.back().has_scalar = true;
    return id;
}

Tape::Id Tape::dot_sum(Id a, Id b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv)) throw std::invalid_argument("dot_sum: shape mismatch");
    double acc = 0.0;
    for (std::int64_t i = 0; i < av.size(); ++i)
        acc += static_cast<double>(av[i]) * bv[i];
    Tensor out({1});
    out[0] = static_cast<float>(acc);
    const Id id = push(std::move(out), [=](Tape& t, const Node& n) {
        const Tensor& x = t.value(a);
        const Tensor& y = t.value(b);
        const float s = n.adjoint[0];
        Tensor ga = t.adj(a).empty() ? Tensor(x.shape()) : t.adj(a);
        Tensor gb = t.adj(b).empty() ? Tensor(y.shape()) : t.adj(b);
        for (std::int64_t i = 0; i < x.size(); ++i) {
            ga[i] += s * y[i];
            gb[i] += s * x[i];
        }
        t.adj(a) = std::move(ga);
        t.adj(b) = std::move(gb);
    });
    nodes_.back().scalar_value = acc;
    nodes_.back().has_scalar = true;
    return id;
}

double Tape::scalar(Id id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.value.size() != 1) throw std::invalid_argument("Tape::scalar: node is not scalar");
    return n.has_scalar ? n.scalar_value : static_cast<double>(n.value[0]);
}

void Tape::backward(Id loss) {
    if (nodes_.empty()) throw NumericError("backward without a recorded forward pass");
    if (loss < 0 || loss >= static_cast<Id>(nodes_.size()))
        throw std::invalid_argument("backward: bad loss node");
    if (value(loss).size() != 1) throw std::invalid_argument("backward: loss must be scalar");

    for (Node& n : nodes_) n.adjoint = Tensor();
    Tensor seed({1});
    seed[0] = 1.0f;
    nodes_[static_cast<std::size_t>(loss)].adjoint = std::move(seed);

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.back && !n.adjoint.empty()) n.back(*this, n);
    }

    if (store_ == nullptr) return;
    // stored gradient = mean over unrolled instances of the per-instance adjoints
    std::unordered_map<int, std::pair<Tensor, int>> sums;
    for (Node& n : nodes_) {
        if (n.param_index < 0) continue;
        auto& slot = sums[n.param_index];
        if (!n.adjoint.empty())
            slot.first = slot.first.empty() ? n.adjoint : mapflow::add(slot.first, n.adjoint);
        slot.second += n.instances;
    }
    for (auto& [idx, slot] : sums) {
        if (slot.first.empty()) continue;
        Param& p = store_->at(idx);
        const float inv = 1.0f / static_cast<float>(slot.second);
        for (std::int64_t i = 0; i < p.grad.size(); ++i) p.grad[i] += slot.first[i] * inv;
    }
}

void Tape::reset() {
    nodes_.clear();
    store_ = nullptr;
}

int Tape::instances_of(const std::string& name) const {
    if (store_ == nullptr) return 0;
    const int idx = store_->index_of(name);
    int total = 0;
    for (const Node& n : nodes_)
        if (n.param_index == idx) total += n.instances;
    return total;
}

double grad_check(const std::function<Tape::Id(Tape&)>& build, ParamStore& ps, float h) {
    Tape tape;
    const Tape::Id loss = build(tape);
    if (!std::isfinite(tape.scalar(loss))) throw NumericError("grad_check: non-finite loss");
    ps.zero_grad();
    tape.backward(loss);

    std::vector<Tensor> analytic;
    std::vector<int> instances;
    analytic.reserve(static_cast<std::size_t>(ps.count()));
    for (int i = 0; i < ps.count(); ++i) {
        analytic.push_back(ps.at(i).grad);
        instances.push_back(tape.instances_of(ps.at(i).name));
    }

    auto eval = [&]() {
        Tape t;
        const Tape::Id l = build(t);
        const double v = t.scalar(l);
        if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
        return v;
    };

    // per-parameter comparison in the L2 norm: |analytic - numeric| /
    // max(|analytic|, |numeric|, 1e-8) with the stored per-instance means
    // scaled back to total derivatives
    double max_rel = 0.0;
    for (int i = 0; i < ps.count(); ++i) {
        if (instances[i] == 0) continue;
        Param& p = ps.at(i);
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (std::int64_t j = 0; j < p.value.size(); ++j) {
            const float saved = p.value[j];
            p.value[j] = saved + h;
            const double lp = eval();
            p.value[j] = saved - h;
            const double lm = eval();
            p.value[j] = saved;
            const double numeric = (lp - lm) / (2.0 * static_cast<double>(h));
            const double total = static_cast<double>(analytic[static_cast<std::size_t>(i)][j]) *
                                 instances[static_cast<std::size_t>(i)];
            diff2 += (total - numeric) * (total - numeric);
            a2 += total * total;
            n2 += numeric * numeric;
        }
        const double rel =
            std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-8});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

} // namespace mapflow
