#include "mapflow/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mapflow {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Kernels repacked to [Kh][Kw][Cin][Cout] so the inner output-channel loop
// walks contiguous memory.
std::vector<float> repack_kernels(const Tensor& k) {
    const int cout = k.extent(0), cin = k.extent(1), kh = k.extent(2), kw = k.extent(3);
    std::vector<float> r(static_cast<std::size_t>(k.size()));
    for (int co = 0; co < cout; ++co)
        for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx)
                    r[((static_cast<std::size_t>(ky) * kw + kx) * cin + ci) * cout + co] =
                        k.at(co, ci, ky, kx);
    return r;
}

} // namespace

ConvGeometry conv2d_geometry(int h, int w, int kh, int kw, int stride, Pad pad) {
    require(stride >= 1, "conv2d: stride must be >= 1");
    ConvGeometry g;
    if (pad == Pad::ReplicateSame) {
        if (stride == 1)
            require(kh % 2 == 1 && kw % 2 == 1,
                    "conv2d: replicate-same with stride 1 requires odd kernels");
        g.out_h = (h + stride - 1) / stride;
        g.out_w = (w + stride - 1) / stride;
        g.pad_top = std::max((g.out_h - 1) * stride + kh - h, 0) / 2;
        g.pad_left = std::max((g.out_w - 1) * stride + kw - w, 0) / 2;
    } else {
        require(h >= kh && w >= kw, "conv2d: input smaller than kernel in valid mode");
        g.out_h = (h - kh) / stride + 1;
        g.out_w = (w - kw) / stride + 1;
    }
    return g;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, Pad pad) {
    require(input.rank() == 3, "conv2d: input must be H x W x Cin");
    require(kernels.rank() == 4, "conv2d: kernels must be Cout x Cin x Kh x Kw");
    const int h = input.extent(0), w = input.extent(1), cin = input.extent(2);
    const int cout = kernels.extent(0), kh = kernels.extent(2), kw = kernels.extent(3);
    require(kernels.extent(1) == cin, "conv2d: kernel Cin does not match input channels");

    const ConvGeometry g = conv2d_geometry(h, w, kh, kw, stride, pad);
    const std::vector<float> kr = repack_kernels(kernels);
    Tensor out({g.out_h, g.out_w, cout});

    const float* in = input.data();
    float* o = out.data();
    // accumulate each output row in a local buffer so the stores happen once
    std::vector<float> acc(static_cast<std::size_t>(cout));
    for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            float* __restrict ap = acc.data();
            for (int co = 0; co < cout; ++co) ap[co] = 0.0f;
            for (int ky = 0; ky < kh; ++ky) {
                int iy = oy * stride - g.pad_top + ky;
                if (pad == Pad::ReplicateSame) iy = clampi(iy, 0, h - 1);
                for (int kx = 0; kx < kw; ++kx) {
                    int ix = ox * stride - g.pad_left + kx;
                    if (pad == Pad::ReplicateSame) ix = clampi(ix, 0, w - 1);
                    const float* ip = in + (static_cast<std::size_t>(iy) * w + ix) * cin;
                    const float* kp = kr.data() +
                        (static_cast<std::size_t>(ky) * kw + kx) * cin * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const float a = ip[ci];
                        const float* __restrict krow = kp + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) ap[co] += a * krow[co];
                    }
                }
            }
            float* op = o + (static_cast<std::size_t>(oy) * g.out_w + ox) * cout;
            for (int co = 0; co < cout; ++co) op[co] = ap[co];
        }
    }
    return out;
}

Tensor conv2d_grad_input(const Tensor& out_grad, const Tensor& kernels,
                         int in_h, int in_w, int stride, Pad pad) {
    const int cin = kernels.extent(1), kh = kernels.extent(2), kw = kernels.extent(3);
    const int cout = kernels.extent(0);
    const ConvGeometry g = conv2d_geometry(in_h, in_w, kh, kw, stride, pad);
    require(out_grad.extent(0) == g.out_h && out_grad.extent(1) == g.out_w &&
            out_grad.extent(2) == cout, "conv2d_grad_input: adjoint shape mismatch");

    const std::vector<float> kr = repack_kernels(kernels);
    Tensor gi({in_h, in_w, cin});
    const float* og = out_grad.data();
    float* gp = gi.data();
    for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            const float* op = og + (static_cast<std::size_t>(oy) * g.out_w + ox) * cout;
            for (int ky = 0; ky < kh; ++ky) {
                int iy = oy * stride - g.pad_top + ky;
                if (pad == Pad::ReplicateSame) iy = clampi(iy, 0, in_h - 1);
                for (int kx = 0; kx < kw; ++kx) {
                    int ix = ox * stride - g.pad_left + kx;
                    if (pad == Pad::ReplicateSame) ix = clampi(ix, 0, in_w - 1);
                    float* ip = gp + (static_cast<std::size_t>(iy) * in_w + ix) * cin;
                    const float* kp = kr.data() +
                        (static_cast<std::size_t>(ky) * kw + kx) * cin * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const float* krow = kp + static_cast<std::size_t>(ci) * cout;
                        float acc = 0.0f;
                        for (int co = 0; co < cout; ++co) acc += op[co] * krow[co];
                        ip[ci] += acc;
                    }
                }
            }
        }
    }
    return gi;
}

Tensor conv2d_grad_kernels(const Tensor& out_grad, const Tensor& input,
                           int kh, int kw, int stride, Pad pad) {
    const int h = input.extent(0), w = input.extent(1), cin = input.extent(2);
    const int cout = out_grad.extent(2);
    const ConvGeometry g = conv2d_geometry(h, w, kh, kw, stride, pad);
    require(out_grad.extent(0) == g.out_h && out_grad.extent(1) == g.out_w,
            "conv2d_grad_kernels: adjoint shape mismatch");

    // accumulate in the repacked layout, then transpose back
    std::vector<float> kg(static_cast<std::size_t>(cout) * cin * kh * kw, 0.0f);
    const float* in = input.data();
    const float* og = out_grad.data();
    for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            const float* op = og + (static_cast<std::size_t>(oy) * g.out_w + ox) * cout;
            for (int ky = 0; ky < kh; ++ky) {
                int iy = oy * stride - g.pad_top + ky;
                if (pad == Pad::ReplicateSame) iy = clampi(iy, 0, h - 1);
                for (int kx = 0; kx < kw; ++kx) {
                    int ix = ox * stride - g.pad_left + kx;
                    if (pad == Pad::ReplicateSame) ix = clampi(ix, 0, w - 1);
                    const float* ip = in + (static_cast<std::size_t>(iy) * w + ix) * cin;
                    float* kp = kg.data() +
                        (static_cast<std::size_t>(ky) * kw + kx) * cin * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const float a = ip[ci];
                        float* krow = kp + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) krow[co] += a * op[co];
                    }
                }
            }
        }
    }
    Tensor grad({cout, cin, kh, kw});
    for (int co = 0; co < cout; ++co)
        for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx)
                    grad.at(co, ci, ky, kx) =
                        kg[((static_cast<std::size_t>(ky) * kw + kx) * cin + ci) * cout + co];
    return grad;
}

Tensor upsample_bilinear(const Tensor& input, int factor) {
    require(input.rank() == 3, "upsample_bilinear: input must be H x W x C");
    require(factor >= 1, "upsample_bilinear: factor must be >= 1");
    if (factor == 1) return input;
    const int h = input.extent(0), w = input.extent(1), c = input.extent(2);
    const int oh = h * factor, ow = w * factor;
    Tensor out({oh, ow, c});
    for (int oy = 0; oy < oh; ++oy) {
        const float sy = (static_cast<float>(oy) + 0.5f) / static_cast<float>(factor) - 0.5f;
        const int y0 = static_cast<int>(std::floor(sy));
        const float wy = sy - static_cast<float>(y0);
        const int ya = clampi(y0, 0, h - 1), yb = clampi(y0 + 1, 0, h - 1);
        for (int ox = 0; ox < ow; ++ox) {
            const float sx = (static_cast<float>(ox) + 0.5f) / static_cast<float>(factor) - 0.5f;
            const int x0 = static_cast<int>(std::floor(sx));
            const float wx = sx - static_cast<float>(x0);
            const int xa = clampi(x0, 0, w - 1), xb = clampi(x0 + 1, 0, w - 1);
            for (int ch = 0; ch < c; ++ch) {
                const float top = (1.0f - wx) * input.at(ya, xa, ch) + wx * input.at(ya, xb, ch);
                const float bot = (1.0f - wx) * input.at(yb, xa, ch) + wx * input.at(yb, xb, ch);
                out.at(oy, ox, ch) = (1.0f - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

namespace {

struct DeconvTaps {
    // for each output coordinate: the two (kernel tap, source index) pairs
    std::vector<int> tap;
    std::vector<int> src;
};

// Output o gathers from taps t with (o + pad - t) divisible by f; the source
// index is clamped so the map is total (replicate boundary).
DeconvTaps deconv_taps(int in_extent, int factor) {
    const int k = 2 * factor;
    const int pad = factor / 2;
    DeconvTaps taps;
    const int out_extent = in_extent * factor;
    taps.tap.reserve(static_cast<std::size_t>(out_extent) * 2);
    taps.src.reserve(static_cast<std::size_t>(out_extent) * 2);
    for (int o = 0; o < out_extent; ++o) {
        for (int t = (o + pad) % factor; t < k; t += factor) {
            taps.tap.push_back(t);
            taps.src.push_back(clampi((o + pad - t) / factor, 0, in_extent - 1));
        }
    }
    return taps;
}

void check_deconv_shapes(const Tensor& input, const Tensor& kernels, int factor) {
    require(input.rank() == 3, "upsample_learned: input must be h x w x C");
    require(factor >= 2 && factor % 2 == 0, "upsample_learned: factor must be even and >= 2");
    require(kernels.rank() == 3 && kernels.extent(0) == input.extent(2) &&
            kernels.extent(1) == 2 * factor && kernels.extent(2) == 2 * factor,
            "upsample_learned: kernels must be C x 2f x 2f");
}

} // namespace

Tensor upsample_learned(const Tensor& input, const Tensor& kernels, int factor) {
    check_deconv_shapes(input, kernels, factor);
    const int h = input.extent(0), w = input.extent(1), c = input.extent(2);
    const DeconvTaps ty = deconv_taps(h, factor), tx = deconv_taps(w, factor);
    Tensor out({h * factor, w * factor, c});
    const int oh = h * factor, ow = w * factor;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float* op = out.data() + (static_cast<std::size_t>(oy) * ow + ox) * c;
            for (int a = 0; a < 2; ++a) {
                const int kty = ty.tap[2 * oy + a], iy = ty.src[2 * oy + a];
                for (int b = 0; b < 2; ++b) {
                    const int ktx = tx.tap[2 * ox + b], ix = tx.src[2 * ox + b];
                    const float* ip = input.data() + (static_cast<std::size_t>(iy) * w + ix) * c;
                    for (int ch = 0; ch < c; ++ch)
                        op[ch] += kernels.at(ch, kty, ktx) * ip[ch];
                }
            }
        }
    }
    return out;
}

Tensor upsample_learned_grad_input(const Tensor& out_grad, const Tensor& kernels, int factor) {
    const int c = kernels.extent(0);
    require(out_grad.rank() == 3 && out_grad.extent(2) == c,
            "upsample_learned_grad_input: adjoint shape mismatch");
    const int oh = out_grad.extent(0), ow = out_grad.extent(1);
    const int h = oh / factor, w = ow / factor;
    const DeconvTaps ty = deconv_taps(h, factor), tx = deconv_taps(w, factor);
    Tensor gi({h, w, c});
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const float* op = out_grad.data() + (static_cast<std::size_t>(oy) * ow + ox) * c;
            for (int a = 0; a < 2; ++a) {
                const int kty = ty.tap[2 * oy + a], iy = ty.src[2 * oy + a];
                for (int b = 0; b < 2; ++b) {
                    const int ktx = tx.tap[2 * ox + b], ix = tx.src[2 * ox + b];
                    float* ip = gi.data() + (static_cast<std::size_t>(iy) * w + ix) * c;
                    for (int ch = 0; ch < c; ++ch)
                        ip[ch] += kernels.at(ch, kty, ktx) * op[ch];
                }
            }
        }
    }
    return gi;
}

Tensor upsample_learned_grad_kernels(const Tensor& out_grad, const Tensor& input, int factor) {
    const int h = input.extent(0), w = input.extent(1), c = input.extent(2);
    const DeconvTaps ty = deconv_taps(h, factor), tx = deconv_taps(w, factor);
    Tensor gk({c, 2 * factor, 2 * factor});
    const int oh = h * factor, ow = w * factor;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const float* op = out_grad.data() + (static_cast<std::size_t>(oy) * ow + ox) * c;
            for (int a = 0; a < 2; ++a) {
                const int kty = ty.tap[2 * oy + a], iy = ty.src[2 * oy + a];
                for (int b = 0; b < 2; ++b) {
                    const int ktx = tx.tap[2 * ox + b], ix = tx.src[2 * ox + b];
                    const float* ip = input.data() + (static_cast<std::size_t>(iy) * w + ix) * c;
                    for (int ch = 0; ch < c; ++ch)
                        gk.at(ch, kty, ktx) += ip[ch] * op[ch];
                }
            }
        }
    }
    return gk;
}

Tensor bilinear_upsample_kernels(int channels, int factor) {
    const int k = 2 * factor;
    Tensor kernels({channels, k, k});
    const float center = (static_cast<float>(k) - 1.0f) / 2.0f;
    for (int ch = 0; ch < channels; ++ch)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const float wy = 1.0f - std::abs(static_cast<float>(ky) - center) / factor;
                const float wx = 1.0f - std::abs(static_cast<float>(kx) - center) / factor;
                kernels.at(ch, ky, kx) = wy * wx;
            }
    return kernels;
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    float* p = out.data();
    for (std::int64_t i = 0; i < out.size(); ++i) p[i] = p[i] > 0.0f ? p[i] : 0.0f;
    return out;
}

Tensor softmax_channels(const Tensor& scores) {
    require(scores.rank() == 3 && scores.extent(2) >= 1,
            "softmax_channels: expected H x W x K");
    const int h = scores.extent(0), w = scores.extent(1), k = scores.extent(2);
    Tensor out({h, w, k});
    const float* in = scores.data();
    float* o = out.data();
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(h) * w; ++p) {
        const float* s = in + p * k;
        float* q = o + p * k;
        float m = s[0];
        for (int c = 1; c < k; ++c) m = std::max(m, s[c]);
        float sum = 0.0f;
        for (int c = 0; c < k; ++c) {
            q[c] = std::exp(s[c] - m);
            sum += q[c];
        }
        const float inv = 1.0f / sum;
        for (int c = 0; c < k; ++c) q[c] *= inv;
    }
    return out;
}

double cross_entropy(const Tensor& probabilities, const LabelMap& target) {
    require(probabilities.rank() == 3, "cross_entropy: expected H x W x K");
    const int h = probabilities.extent(0), w = probabilities.extent(1), k = probabilities.extent(2);
    require(target.height == h && target.width == w, "cross_entropy: target shape mismatch");
    double sum = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int t = target.at(y, x);
            if (t < 0 || t >= k) throw std::invalid_argument("cross_entropy: target label out of range");
            const float p = probabilities.at(y, x, t);
            sum -= std::log(static_cast<double>(std::max(p, 1e-30f)));
        }
    return sum / (static_cast<double>(h) * w);
}

std::pair<Tensor, Tensor> grad_xy(const Tensor& field) {
    require(field.rank() == 3 && field.extent(2) == 1, "grad_xy: expected H x W x 1");
    const int h = field.extent(0), w = field.extent(1);
    require(h >= 2 && w >= 2, "grad_xy: grid must be at least 2 x 2");
    Tensor gx({h, w, 1}), gy({h, w, 1});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x == 0)
                gx.at(y, x, 0) = field.at(y, 1, 0) - field.at(y, 0, 0);
            else if (x == w - 1)
                gx.at(y, x, 0) = field.at(y, w - 1, 0) - field.at(y, w - 2, 0);
            else
                gx.at(y, x, 0) = 0.5f * (field.at(y, x + 1, 0) - field.at(y, x - 1, 0));
            if (y == 0)
                gy.at(y, x, 0) = field.at(1, x, 0) - field.at(0, x, 0);
            else if (y == h - 1)
                gy.at(y, x, 0) = field.at(h - 1, x, 0) - field.at(h - 2, x, 0);
            else
                gy.at(y, x, 0) = 0.5f * (field.at(y + 1, x, 0) - field.at(y - 1, x, 0));
        }
    return {std::move(gx), std::move(gy)};
}

namespace {

// Half-sample mirror index (-1 -> 0, n -> n-1, ...): the discrete zero-flux
// boundary for wide kernels. Out-of-range taps re-land on interior pixels
// bijectively, so a normalized kernel conserves the global sum exactly.
inline int mirrori(int v, int n) {
    while (v < 0 || v >= n) {
        if (v < 0) v = -1 - v;
        if (v >= n) v = 2 * n - 1 - v;
    }
    return v;
}

} // namespace

Tensor gaussian_smooth(const Tensor& field, float sigma) {
    require(field.rank() == 3, "gaussian_smooth: expected H x W x C");
    require(sigma >= 0.0f, "gaussian_smooth: sigma must be >= 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    if (radius == 0) return field;

    std::vector<float> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (static_cast<double>(i) * i) / (static_cast<double>(sigma) * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = static_cast<float>(v);
        norm += v;
    }
    for (float& v : kernel) v = static_cast<float>(v / norm);

    const int h = field.extent(0), w = field.extent(1), c = field.extent(2);
    Tensor tmp({h, w, c}), out({h, w, c});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[static_cast<std::size_t>(i + radius)] *
                           field.at(y, mirrori(x + i, w), ch);
                tmp.at(y, x, ch) = acc;
            }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[static_cast<std::size_t>(i + radius)] *
                           tmp.at(mirrori(y + i, h), x, ch);
                out.at(y, x, ch) = acc;
            }
    return out;
}

Tensor linear_pointwise(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require(input.rank() == 3, "linear_pointwise: input must be H x W x Cin");
    require(weights.rank() == 2, "linear_pointwise: weights must be Cout x Cin");
    require(bias.rank() == 1 && bias.extent(0) == weights.extent(0),
            "linear_pointwise: bias must be Cout");
    const int cin = input.extent(2), cout = weights.extent(0);
    require(weights.extent(1) == cin, "linear_pointwise: Cin mismatch");
    const int h = input.extent(0), w = input.extent(1);
    Tensor out({h, w, cout});
    const float* in = input.data();
    const float* wt = weights.data();
    const float* bp = bias.data();
    float* o = out.data();
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(h) * w; ++p) {
        const float* ip = in + p * cin;
        float* op = o + p * cout;
        for (int co = 0; co < cout; ++co) {
            const float* wrow = wt + static_cast<std::size_t>(co) * cin;
            float acc = bp[co];
            for (int ci = 0; ci < cin; ++ci) acc += wrow[ci] * ip[ci];
            op[co] = acc;
        }
    }
    return out;
}

Tensor bias_add(const Tensor& input, const Tensor& bias) {
    require(input.rank() == 3 && bias.rank() == 1 && bias.extent(0) == input.extent(2),
            "bias_add: bias length must match channels");
    Tensor out = input;
    const int c = input.extent(2);
    float* p = out.data();
    const float* b = bias.data();
    for (std::int64_t i = 0; i < out.size(); ++i) p[i] += b[i % c];
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require(a.rank() == 3 && b.rank() == 3 && a.extent(0) == b.extent(0) &&
            a.extent(1) == b.extent(1), "concat_channels: spatial shape mismatch");
    const int h = a.extent(0), w = a.extent(1), ca = a.extent(2), cb = b.extent(2);
    Tensor out({h, w, ca + cb});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float* op = out.data() + (static_cast<std::size_t>(y) * w + x) * (ca + cb);
            const float* ap = a.data() + (static_cast<std::size_t>(y) * w + x) * ca;
            const float* bp = b.data() + (static_cast<std::size_t>(y) * w + x) * cb;
            std::copy(ap, ap + ca, op);
            std::copy(bp, bp + cb, op + ca);
        }
    return out;
}

Tensor slice_channel(const Tensor& stack, int c) {
    require(stack.rank() == 3 && c >= 0 && c < stack.extent(2),
            "slice_channel: channel out of range");
    const int h = stack.extent(0), w = stack.extent(1), k = stack.extent(2);
    Tensor out({h, w, 1});
    const float* in = stack.data();
    float* o = out.data();
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(h) * w; ++p) o[p] = in[p * k + c];
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "add: shape mismatch");
    Tensor out = a;
    const float* bp = b.data();
    float* p = out.data();
    for (std::int64_t i = 0; i < out.size(); ++i) p[i] += bp[i];
    return out;
}

Tensor scale(const Tensor& a, float s) {
    Tensor out = a;
    float* p = out.data();
    for (std::int64_t i = 0; i < out.size(); ++i) p[i] *= s;
    return out;
}

double mean_value(const Tensor& t) {
    double sum = 0.0;
    const float* p = t.data();
    for (std::int64_t i = 0; i < t.size(); ++i) sum += p[i];
    return sum / static_cast<double>(t.size());
}

bool all_finite(const Tensor& t) {
    const float* p = t.data();
    for (std::int64_t i = 0; i < t.size(); ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

LabelMap argmax_labels(const Tensor& scores) {
    require(scores.rank() == 3, "argmax_labels: expected H x W x K");
    const int h = scores.extent(0), w = scores.extent(1), k = scores.extent(2);
    LabelMap out(h, w);
    const float* in = scores.data();
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(h) * w; ++p) {
        const float* s = in + p * k;
        int best = 0;
        for (int c = 1; c < k; ++c)
            if (s[c] > s[best]) best = c;
        out.labels[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(best);
    }
    return out;
}

} // namespace mapflow
