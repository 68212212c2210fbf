#pragma once

#include "mapflow/tensor.hpp"

#include <utility>

namespace mapflow {

// Padding convention for spatial ops. Replicate (clamp-to-edge) implements
// zero-flux boundaries; it is the convention everywhere in this codebase.
enum class Pad {
    ReplicateSame, // output H' = ceil(H / stride), clamp-to-edge padding
    Valid          // no padding, output shrinks
};

struct ConvGeometry {
    int out_h = 0;
    int out_w = 0;
    int pad_top = 0;
    int pad_left = 0;
};

// Resolves output size and padding offsets for conv2d; throws on invalid
// shape/stride combinations.
ConvGeometry conv2d_geometry(int h, int w, int kh, int kw, int stride, Pad pad);

// input: H x W x Cin, kernels: Cout x Cin x Kh x Kw -> H' x W' x Cout.
// Kernels must be odd-sized for stride-1 replicate-same output.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, Pad pad);

// Adjoint helpers for the tape (and for finite-difference cross-checks).
Tensor conv2d_grad_input(const Tensor& out_grad, const Tensor& kernels,
                         int in_h, int in_w, int stride, Pad pad);
Tensor conv2d_grad_kernels(const Tensor& out_grad, const Tensor& input,
                           int kh, int kw, int stride, Pad pad);

// Bilinear interpolation by an integer factor, align-corners-false,
// clamp-to-edge at the borders. factor = 1 is the identity.
Tensor upsample_bilinear(const Tensor& input, int factor);

// Transposed convolution by an even integer factor with depthwise kernels
// (one Kh x Kw kernel per channel, Kh = Kw = 2*factor), clamp-to-edge
// source indexing so a bilinear-initialized kernel reproduces
// upsample_bilinear. input: h x w x C, kernels: C x 2f x 2f -> fh x fw x C.
Tensor upsample_learned(const Tensor& input, const Tensor& kernels, int factor);
Tensor upsample_learned_grad_input(const Tensor& out_grad, const Tensor& kernels, int factor);
Tensor upsample_learned_grad_kernels(const Tensor& out_grad, const Tensor& input, int factor);

// The 1D tent filter tensor that makes upsample_learned match
// upsample_bilinear: channels x 2f x 2f.
Tensor bilinear_upsample_kernels(int channels, int factor);

// Elementwise max(0, x).
Tensor relu(const Tensor& x);

// Per-pixel softmax over the channel axis of an H x W x K stack,
// max-subtracted for stability. Channel sums are 1 within 1e-6.
Tensor softmax_channels(const Tensor& scores);

// Mean over pixels of -log p(target). `probabilities` holds valid per-pixel
// distributions (H x W x K); accumulation is in double.
double cross_entropy(const Tensor& probabilities, const LabelMap& target);

// Central differences in the interior, one-sided at the borders.
// field: H x W x 1 -> (gx, gy).
std::pair<Tensor, Tensor> grad_xy(const Tensor& field);

// Separable Gaussian blur, kernel truncated at 3*sigma, zero-flux (mirror)
// boundary so the global mean is conserved, applied per channel.
// sigma = 0 is the identity.
Tensor gaussian_smooth(const Tensor& field, float sigma);

// Pointwise affine map, the dense form of a 1x1 convolution.
// input: H x W x Cin, weights: Cout x Cin, bias: Cout -> H x W x Cout.
Tensor linear_pointwise(const Tensor& input, const Tensor& weights, const Tensor& bias);

// Per-channel bias: input H x W x C + bias[C].
Tensor bias_add(const Tensor& input, const Tensor& bias);

// Channel concatenation of two H x W x * maps.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Single-channel view H x W x 1 of channel c.
Tensor slice_channel(const Tensor& stack, int c);

// Elementwise helpers.
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);

// Mean of all entries (double accumulation).
double mean_value(const Tensor& t);
bool all_finite(const Tensor& t);

// Argmax over channels; ties break to the lowest class index.
LabelMap argmax_labels(const Tensor& scores);

} // namespace mapflow
