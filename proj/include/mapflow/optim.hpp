#pragma once

#include "mapflow/autodiff.hpp"
#include "mapflow/rng.hpp"

namespace mapflow {

// v <- momentum * v + grad + l2 * w;  w <- w - lr * v
void sgd_momentum_step(ParamStore& ps, float lr, float momentum, float l2);

// G <- G + grad^2;  w <- w - lr * grad / (sqrt(G) + epsilon)
void adagrad_step(ParamStore& ps, float lr, float epsilon = 1e-8f);

// i.i.d. uniform on [-sqrt(3/fan_in), +sqrt(3/fan_in)].
Tensor xavier_init(const std::vector<int>& shape, int fan_in, Rng& rng);

} // namespace mapflow
