#pragma once

#include "mapflow/tensor.hpp"
#include "mapflow/tensor_ops.hpp"

#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace mapflow {

// One learnable tensor with its gradient accumulator and optimizer slots.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    std::map<std::string, Tensor> state; // optimizer state, created on demand
};

// Named parameter tensors with matching gradient buffers and a shared step
// counter. Iteration order is registration order, which keeps training and
// checkpoints deterministic.
class ParamStore {
public:
    int add(const std::string& name, Tensor init);
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    int index_of(const std::string& name) const;

    Param& at(int i) { return params_[static_cast<std::size_t>(i)]; }
    const Param& at(int i) const { return params_[static_cast<std::size_t>(i)]; }
    Param& at(const std::string& name) { return params_[static_cast<std::size_t>(index_of(name))]; }
    const Param& at(const std::string& name) const {
        return params_[static_cast<std::size_t>(index_of(name))];
    }

    int count() const { return static_cast<int>(params_.size()); }
    std::int64_t step() const { return step_; }
    void set_step(std::int64_t s) { step_ = s; }
    void bump_step() { ++step_; }

    void zero_grad();
    void scale_grad(float s);
    std::int64_t parameter_count() const;

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, int> index_;
    std::int64_t step_ = 0;
};

// Eager tape over the closed op set. Records forward values and replays
// adjoints in exact reverse execution order. A parameter contributing to n
// unrolled iterations stores the mean of its n per-iteration adjoints:
// reuse one param node within an iteration, create a fresh node per
// iteration (or pass `instances` when one node feeds several iterations).
class Tape {
public:
    using Id = int;

    Id constant(Tensor v);
    Id param(ParamStore& ps, const std::string& name, int instances = 1);

    Id conv2d(Id input, Id kernels, int stride, Pad pad);
    Id upsample_learned(Id input, Id kernels, int factor);
    Id bias_add(Id input, Id bias);
    Id relu(Id input);
    Id linear1x1(Id input, Id weights, Id bias);
    Id concat_c(Id a, Id b);
    Id slice_c(Id stack, int channel);
    Id stack_c(const std::vector<Id>& channels);
    Id add(Id a, Id b);
    // scalar: mean over pixels of -log softmax(scores)[target]
    Id softmax_cross_entropy(Id scores, const LabelMap& target);
    // scalar: sum(a * b), used to scalarize op outputs in gradient tests
    Id dot_sum(Id a, Id b);

    const Tensor& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    // Scalar node value; loss nodes carry a double-precision copy so
    // finite-difference checks are not limited by f32 quantization.
    double scalar(Id id) const;

    // Accumulates parameter gradients (mean over unrolled instances) into the
    // bound ParamStore. Throws if no forward pass was recorded.
    void backward(Id loss);

    void reset();
    bool empty() const { return nodes_.empty(); }

    // Total unrolled instances of a parameter in the recorded graph.
    int instances_of(const std::string& name) const;

private:
    struct Node {
        Tensor value;
        Tensor adjoint;
        std::function<void(Tape&, const Node&)> back; // empty for leaves
        int param_index = -1;
        int instances = 0;
        double scalar_value = 0.0;
        bool has_scalar = false;
    };

    Id push(Tensor value, std::function<void(Tape&, const Node&)> back);
    Tensor& adj(Id id) { return nodes_[static_cast<std::size_t>(id)].adjoint; }

    std::vector<Node> nodes_;
    ParamStore* store_ = nullptr;
};

// Runs the builder's forward once for the analytic gradients, then central
// finite differences (step h) over every parameter entry. Returns the max of
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8). The stored
// gradients are per-instance means, so the analytic total derivative is
// stored_grad * instance_count.
double grad_check(const std::function<Tape::Id(Tape&)>& build, ParamStore& ps, float h = 1e-3f);

} // namespace mapflow
