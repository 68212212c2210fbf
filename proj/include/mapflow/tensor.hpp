#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mapflow {

// Dense row-major float32 tensor of rank 1..4, the universal numeric carrier.
// Feature maps are laid out H x W x C (channels last), filter banks
// OutC x InC x Kh x Kw.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> extents) : shape_(std::move(extents)) {
        if (shape_.empty() || shape_.size() > 4)
            throw std::invalid_argument("Tensor: rank must be 1..4");
        std::int64_t n = 1;
        for (int e : shape_) {
            if (e < 1) throw std::invalid_argument("Tensor: extents must be >= 1");
            n *= e;
        }
        data_.assign(static_cast<std::size_t>(n), 0.0f);
    }

    Tensor(std::initializer_list<int> extents) : Tensor(std::vector<int>(extents)) {}

    static Tensor full(std::vector<int> extents, float v) {
        Tensor t(std::move(extents));
        t.fill(v);
        return t;
    }

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int extent(int d) const { return shape_[static_cast<std::size_t>(d)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    float& at(int i0) {
        assert(rank() == 1);
        return data_[static_cast<std::size_t>(i0)];
    }
    float& at(int i0, int i1) {
        assert(rank() == 2);
        return data_[static_cast<std::size_t>(i0) * shape_[1] + i1];
    }
    float& at(int i0, int i1, int i2) {
        assert(rank() == 3);
        return data_[(static_cast<std::size_t>(i0) * shape_[1] + i1) * shape_[2] + i2];
    }
    float& at(int i0, int i1, int i2, int i3) {
        assert(rank() == 4);
        return data_[((static_cast<std::size_t>(i0) * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3];
    }
    float at(int i0) const { return const_cast<Tensor*>(this)->at(i0); }
    float at(int i0, int i1) const { return const_cast<Tensor*>(this)->at(i0, i1); }
    float at(int i0, int i1, int i2) const { return const_cast<Tensor*>(this)->at(i0, i1, i2); }
    float at(int i0, int i1, int i2, int i3) const { return const_cast<Tensor*>(this)->at(i0, i1, i2, i3); }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

// Spatial grid extents of a feature map.
struct GridShape {
    int height = 0;
    int width = 0;
    int channels = 0;

    GridShape() = default;
    GridShape(int h, int w, int c) : height(h), width(w), channels(c) {
        if (h < 1 || w < 1 || c < 1)
            throw std::invalid_argument("GridShape: all extents must be >= 1");
    }
};

// Per-pixel class indices. Classes are 0 = background, 1 = building, 2 = road
// throughout the pipeline.
struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> labels;

    LabelMap() = default;
    LabelMap(int h, int w) : height(h), width(w), labels(static_cast<std::size_t>(h) * w, 0) {
        if (h < 1 || w < 1) throw std::invalid_argument("LabelMap: extents must be >= 1");
    }

    std::uint8_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::int64_t pixels() const { return static_cast<std::int64_t>(height) * width; }

    friend bool operator==(const LabelMap& a, const LabelMap& b) {
        return a.height == b.height && a.width == b.width && a.labels == b.labels;
    }
};

// Per-class heat maps u_k over a pixel grid, the object being refined.
struct ScoreStack {
    Tensor scores; // H x W x K

    ScoreStack() = default;
    explicit ScoreStack(Tensor t) : scores(std::move(t)) {
        if (scores.rank() != 3 || scores.extent(2) < 2)
            throw std::invalid_argument("ScoreStack: expected H x W x K with K >= 2");
    }
    ScoreStack(int h, int w, int k) : ScoreStack(Tensor({h, w, k})) {}

    int height() const { return scores.extent(0); }
    int width() const { return scores.extent(1); }
    int classes() const { return scores.extent(2); }
};

} // namespace mapflow
