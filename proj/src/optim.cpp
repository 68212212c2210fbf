#include "mapflow/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace mapflow {

void sgd_momentum_step(ParamStore& ps, float lr, float momentum, float l2) {
    for (int i = 0; i < ps.count(); ++i) {
        Param& p = ps.at(i);
        auto [it, fresh] = p.state.try_emplace("momentum", Tensor(p.value.shape()));
        Tensor& v = it->second;
        for (std::int64_t j = 0; j < p.value.size(); ++j) {
            v[j] = momentum * v[j] + p.grad[j] + l2 * p.value[j];
            p.value[j] -= lr * v[j];
        }
    }
    ps.bump_step();
}

void adagrad_step(ParamStore& ps, float lr, float epsilon) {
    for (int i = 0; i < ps.count(); ++i) {
        Param& p = ps.at(i);
        auto [it, fresh] = p.state.try_emplace("adagrad_g", Tensor(p.value.shape()));
        Tensor& g2 = it->second;
        for (std::int64_t j = 0; j < p.value.size(); ++j) {
            const float g = p.grad[j];
            g2[j] += g * g;
            p.value[j] -= lr * g / (std::sqrt(g2[j]) + epsilon);
        }
    }
    ps.bump_step();
}

Tensor xavier_init(const std::vector<int>& shape, int fan_in, Rng& rng) {
    if (fan_in < 1) throw std::invalid_argument("xavier_init: fan_in must be >= 1");
    const float bound = std::sqrt(3.0f / static_cast<float>(fan_in));
    Tensor t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

} // namespace mapflow
