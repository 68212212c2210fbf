#include "mapflow/rng.hpp"
#include "mapflow/tensor_ops.hpp"

#include "oracles.hpp"

#include <cmath>

#include <doctest.h>

using namespace mapflow;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

void check_close(const Tensor& a, const Tensor& b, double tol) {
    REQUIRE(a.shape() == b.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(static_cast<double>(a[i])),
                                       std::abs(static_cast<double>(b[i])), 1.0});
        CHECK(std::abs(static_cast<double>(a[i]) - b[i]) / denom <= tol);
    }
}

} // namespace

TEST_CASE("conv2d delta kernel is the identity under replicate-same") {
    Rng rng(1);
    const Tensor input = random_tensor({7, 6, 2}, rng);
    Tensor delta({2, 2, 3, 3});
    delta.at(0, 0, 1, 1) = 1.0f; // out0 <- in0
    delta.at(1, 1, 1, 1) = 1.0f; // out1 <- in1
    const Tensor out = conv2d(input, delta, 1, Pad::ReplicateSame);
    REQUIRE(out.shape() == input.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == input[i]);
}

TEST_CASE("conv2d mean kernel over its valid region") {
    Rng rng(2);
    const Tensor input = random_tensor({3, 3, 1}, rng);
    Tensor k({1, 1, 3, 3});
    for (std::int64_t i = 0; i < k.size(); ++i) k[i] = 1.0f / 9.0f;

    const Tensor out = conv2d(input, k, 1, Pad::Valid);
    REQUIRE(out.shape() == std::vector<int>{1, 1, 1});

    // direct-summation reference
    const Tensor ref = oracle::conv2d(input, k, 1, false);
    double mean = 0.0;
    for (std::int64_t i = 0; i < input.size(); ++i) mean += input[i];
    mean /= 9.0;
    CHECK(out[0] == doctest::Approx(ref[0]).epsilon(1e-6));
    CHECK(out[0] == doctest::Approx(mean).epsilon(1e-6));
}

TEST_CASE("conv2d strided geometry matches the coarse front end") {
    Rng rng(3);
    const Tensor input = random_tensor({64, 64, 3}, rng);
    const Tensor kernels = random_tensor({64, 3, 12, 12}, rng, -0.1f, 0.1f);
    const Tensor out = conv2d(input, kernels, 4, Pad::ReplicateSame);
    // a quarter of the input resolution
    CHECK(out.shape() == std::vector<int>{16, 16, 64});
}

TEST_CASE("conv2d matches the plain-loop reference") {
    Rng rng(4);
    for (int trial = 0; trial < 4; ++trial) {
        const int cin = rng.uniform_int(1, 3), cout = rng.uniform_int(1, 5);
        const Tensor input = random_tensor({8, 7, cin}, rng);
        const Tensor kernels = random_tensor({cout, cin, 3, 3}, rng);
        check_close(conv2d(input, kernels, 1, Pad::ReplicateSame),
                    oracle::conv2d(input, kernels, 1, true), 1e-5);
        check_close(conv2d(input, kernels, 2, Pad::ReplicateSame),
                    oracle::conv2d(input, kernels, 2, true), 1e-5);
        check_close(conv2d(input, kernels, 1, Pad::Valid),
                    oracle::conv2d(input, kernels, 1, false), 1e-5);
    }
}

TEST_CASE("conv2d is linear") {
    Rng rng(5);
    const Tensor x = random_tensor({6, 6, 2}, rng);
    const Tensor y = random_tensor({6, 6, 2}, rng);
    const Tensor k = random_tensor({3, 2, 3, 3}, rng);
    const float a = 1.7f, b = -0.6f;

    Tensor combo({6, 6, 2});
    for (std::int64_t i = 0; i < combo.size(); ++i) combo[i] = a * x[i] + b * y[i];
    const Tensor lhs = conv2d(combo, k, 1, Pad::ReplicateSame);
    const Tensor cx = conv2d(x, k, 1, Pad::ReplicateSame);
    const Tensor cy = conv2d(y, k, 1, Pad::ReplicateSame);
    Tensor rhs(lhs.shape());
    for (std::int64_t i = 0; i < rhs.size(); ++i) rhs[i] = a * cx[i] + b * cy[i];
    check_close(lhs, rhs, 1e-5);
}

TEST_CASE("conv2d rejects bad arguments") {
    const Tensor input({4, 4, 2});
    CHECK_THROWS_AS(conv2d(input, Tensor({1, 3, 3, 3}), 1, Pad::ReplicateSame),
                    std::invalid_argument); // channel mismatch
    CHECK_THROWS_AS(conv2d(input, Tensor({1, 2, 3, 3}), 0, Pad::ReplicateSame),
                    std::invalid_argument); // stride < 1
    CHECK_THROWS_AS(conv2d(input, Tensor({1, 2, 2, 2}), 1, Pad::ReplicateSame),
                    std::invalid_argument); // even kernel at stride 1
}

TEST_CASE("upsample_bilinear identity and constants") {
    Rng rng(6);
    const Tensor input = random_tensor({3, 4, 2}, rng);
    CHECK(upsample_bilinear(input, 1) == input);

    const Tensor c = Tensor::full({3, 3, 1}, 0.37f);
    const Tensor up = upsample_bilinear(c, 3);
    for (std::int64_t i = 0; i < up.size(); ++i)
        CHECK(up[i] == doctest::Approx(0.37f).epsilon(1e-6));

    CHECK_THROWS_AS(upsample_bilinear(input, 0), std::invalid_argument);
}

TEST_CASE("upsample_bilinear matches the closed-form interpolation") {
    Tensor input({2, 2, 1});
    input.at(0, 0, 0) = 0.0f;
    input.at(0, 1, 0) = 1.0f;
    input.at(1, 0, 0) = 0.0f;
    input.at(1, 1, 0) = 1.0f;
    const Tensor out = upsample_bilinear(input, 2);
    const Tensor ref = oracle::upsample_bilinear(input, 2);
    check_close(out, ref, 1e-6);
    // hand-evaluated row of the align-corners-false formula
    const float expected[4] = {0.0f, 0.25f, 0.75f, 1.0f};
    for (int x = 0; x < 4; ++x) {
        CHECK(out.at(0, x, 0) == doctest::Approx(expected[x]));
        CHECK(ref.at(0, x, 0) == doctest::Approx(expected[x]));
    }

    Rng rng(7);
    const Tensor r = random_tensor({5, 3, 2}, rng);
    check_close(upsample_bilinear(r, 4), oracle::upsample_bilinear(r, 4), 1e-5);
}

TEST_CASE("upsample_learned with bilinear kernels reproduces upsample_bilinear") {
    Rng rng(8);
    for (const int factor : {2, 4}) {
        const Tensor input = random_tensor({6, 5, 3}, rng);
        const Tensor kernels = bilinear_upsample_kernels(3, factor);
        const Tensor learned = upsample_learned(input, kernels, factor);
        const Tensor bilinear = upsample_bilinear(input, factor);
        REQUIRE(learned.shape() == bilinear.shape());
        for (std::int64_t i = 0; i < learned.size(); ++i)
            CHECK(learned[i] == doctest::Approx(bilinear[i]).epsilon(1e-5));
    }
}

TEST_CASE("upsample_learned zero kernels and shape contract") {
    Rng rng(9);
    const Tensor input = random_tensor({16, 16, 2}, rng);
    const Tensor zero({2, 8, 8});
    const Tensor out = upsample_learned(input, zero, 4);
    REQUIRE(out.shape() == std::vector<int>{64, 64, 2}); // back to the original resolution
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0f);

    CHECK_THROWS_AS(upsample_learned(input, Tensor({2, 4, 4}), 4), std::invalid_argument);
    CHECK_THROWS_AS(upsample_learned(input, Tensor({3, 8, 8}), 4), std::invalid_argument);
}

TEST_CASE("relu definition") {
    Tensor x({1, 3, 1});
    x.at(0, 0, 0) = -1.0f;
    x.at(0, 1, 0) = 0.0f;
    x.at(0, 2, 0) = 2.0f;
    const Tensor y = relu(x);
    CHECK(y.at(0, 0, 0) == 0.0f);
    CHECK(y.at(0, 1, 0) == 0.0f);
    CHECK(y.at(0, 2, 0) == 2.0f);

    Rng rng(10);
    const Tensor pos = random_tensor({4, 4, 2}, rng, 0.1f, 2.0f);
    CHECK(relu(pos) == pos);
    const Tensor neg = random_tensor({4, 4, 2}, rng, -2.0f, -0.1f);
    const Tensor zeroed = relu(neg);
    for (std::int64_t i = 0; i < zeroed.size(); ++i) CHECK(zeroed[i] == 0.0f);
}

TEST_CASE("softmax_channels symmetry, shift invariance, formula") {
    Tensor equal({1, 1, 3});
    const Tensor p = softmax_channels(equal);
    for (int c = 0; c < 3; ++c) CHECK(p.at(0, 0, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

    // integer-valued scores: bitwise shift invariance after max-subtraction
    Tensor s({2, 2, 3});
    Rng rng(11);
    for (std::int64_t i = 0; i < s.size(); ++i) s[i] = static_cast<float>(rng.uniform_int(-4, 4));
    Tensor shifted = s;
    for (std::int64_t i = 0; i < s.size(); ++i) shifted[i] += 3.0f;
    const Tensor pa = softmax_channels(s);
    const Tensor pb = softmax_channels(shifted);
    for (std::int64_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);

    // direct formula evaluation for scores (1, 0, 0)
    Tensor one({1, 1, 3});
    one.at(0, 0, 0) = 1.0f;
    const Tensor q = softmax_channels(one);
    const double e = std::exp(1.0);
    const double z = e + 2.0;
    CHECK(q.at(0, 0, 0) == doctest::Approx(e / z).epsilon(1e-4));
    CHECK(q.at(0, 0, 1) == doctest::Approx(1.0 / z).epsilon(1e-4));
    CHECK(std::abs(q.at(0, 0, 0) - 0.5761f) < 1e-4);
    CHECK(std::abs(q.at(0, 0, 1) - 0.2119f) < 1e-4);
}

TEST_CASE("softmax_channels distribution properties") {
    Rng rng(12);
    const Tensor s = random_tensor({5, 4, 6}, rng, -30.0f, 30.0f);
    const Tensor p = softmax_channels(s);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 4; ++x) {
            double sum = 0.0;
            int argmax_s = 0, argmax_p = 0;
            for (int c = 0; c < 6; ++c) {
                const float v = p.at(y, x, c);
                CHECK(v > 0.0f);
                CHECK(v < 1.0f);
                sum += v;
                if (s.at(y, x, c) > s.at(y, x, argmax_s)) argmax_s = c;
                if (p.at(y, x, c) > p.at(y, x, argmax_p)) argmax_p = c;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-6);
            CHECK(argmax_s == argmax_p);
        }
}

TEST_CASE("cross_entropy closed forms") {
    // perfect one-hot prediction
    Tensor p({1, 2, 2});
    p.at(0, 0, 0) = 1.0f;
    p.at(0, 1, 1) = 1.0f;
    LabelMap t(1, 2);
    t.at(0, 0) = 0;
    t.at(0, 1) = 1;
    CHECK(cross_entropy(p, t) == doctest::Approx(0.0).epsilon(1e-9));

    // uniform prediction over three classes
    const Tensor u = Tensor::full({2, 2, 3}, 1.0f / 3.0f);
    LabelMap t3(2, 2);
    CHECK(cross_entropy(u, t3) == doctest::Approx(std::log(3.0)).epsilon(1e-5));

    // single pixel with probability one half on the target
    Tensor h({1, 1, 2});
    h.at(0, 0, 0) = 0.5f;
    h.at(0, 0, 1) = 0.5f;
    LabelMap th(1, 1);
    CHECK(cross_entropy(h, th) == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    LabelMap bad(1, 1);
    bad.at(0, 0) = 5;
    CHECK_THROWS_AS(cross_entropy(h, bad), std::invalid_argument);
}

TEST_CASE("grad_xy constants, ramps, reference") {
    const Tensor c = Tensor::full({4, 5, 1}, 2.5f);
    auto [cgx, cgy] = grad_xy(c);
    for (std::int64_t i = 0; i < cgx.size(); ++i) {
        CHECK(cgx[i] == 0.0f);
        CHECK(cgy[i] == 0.0f);
    }

    Tensor ramp({4, 5, 1});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) ramp.at(y, x, 0) = static_cast<float>(x);
    auto [rgx, rgy] = grad_xy(ramp);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) {
            CHECK(rgx.at(y, x, 0) == 1.0f);
            CHECK(rgy.at(y, x, 0) == 0.0f);
        }

    // u = a x + b y has exact interior gradient (a, b)
    Tensor plane({5, 5, 1});
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) plane.at(y, x, 0) = 0.5f * x - 1.25f * y;
    auto [pgx, pgy] = grad_xy(plane);
    for (int y = 1; y < 4; ++y)
        for (int x = 1; x < 4; ++x) {
            CHECK(pgx.at(y, x, 0) == doctest::Approx(0.5f).epsilon(1e-6));
            CHECK(pgy.at(y, x, 0) == doctest::Approx(-1.25f).epsilon(1e-6));
        }

    Rng rng(13);
    const Tensor r = random_tensor({4, 4, 1}, rng);
    auto [gx, gy] = grad_xy(r);
    auto [ox, oy] = oracle::grad_xy(r);
    check_close(gx, ox, 1e-6);
    check_close(gy, oy, 1e-6);

    CHECK_THROWS_AS(grad_xy(Tensor({1, 5, 1})), std::invalid_argument);
}

TEST_CASE("gaussian_smooth identity, constants, impulse, mean") {
    Rng rng(14);
    const Tensor f = random_tensor({6, 6, 2}, rng);
    CHECK(gaussian_smooth(f, 0.0f) == f);
    CHECK_THROWS_AS(gaussian_smooth(f, -1.0f), std::invalid_argument);

    const Tensor c = Tensor::full({5, 5, 1}, 0.8f);
    const Tensor sc = gaussian_smooth(c, 1.5f);
    for (std::int64_t i = 0; i < sc.size(); ++i)
        CHECK(sc[i] == doctest::Approx(0.8f).epsilon(1e-6));

    // impulse response equals the separable sampled-Gaussian product
    Tensor impulse({9, 9, 1});
    impulse.at(4, 4, 0) = 1.0f;
    const Tensor resp = gaussian_smooth(impulse, 1.0f);
    const std::vector<double> k = oracle::gaussian_kernel(1.0);
    const int r = static_cast<int>(k.size() / 2);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) {
            const int dy = y - 4, dx = x - 4;
            const double expected =
                (std::abs(dy) <= r && std::abs(dx) <= r)
                    ? k[static_cast<std::size_t>(dy + r)] * k[static_cast<std::size_t>(dx + r)]
                    : 0.0;
            CHECK(resp.at(y, x, 0) == doctest::Approx(expected).epsilon(1e-5));
        }

    // replicate boundary keeps the global mean
    const Tensor noisy = random_tensor({16, 16, 1}, rng, 0.0f, 1.0f);
    const double before = mean_value(noisy);
    const double after = mean_value(gaussian_smooth(noisy, 2.0f));
    CHECK(std::abs(after - before) / std::abs(before) < 1e-5);
}

TEST_CASE("argmax tie-break picks the lowest class") {
    Tensor s({1, 2, 3});
    s.at(0, 0, 0) = 1.0f;
    s.at(0, 0, 1) = 1.0f; // tie between 0 and 1
    s.at(0, 1, 2) = 0.5f;
    const LabelMap l = argmax_labels(s);
    CHECK(l.at(0, 0) == 0);
    CHECK(l.at(0, 1) == 2);
}

TEST_CASE("pointwise helpers") {
    Rng rng(15);
    const Tensor in = random_tensor({3, 3, 4}, rng);
    const Tensor w = random_tensor({2, 4}, rng);
    const Tensor b = random_tensor({2}, rng);
    const Tensor out = linear_pointwise(in, w, b);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            for (int co = 0; co < 2; ++co) {
                double acc = b.at(co);
                for (int ci = 0; ci < 4; ++ci) acc += static_cast<double>(w.at(co, ci)) * in.at(y, x, ci);
                CHECK(out.at(y, x, co) == doctest::Approx(acc).epsilon(1e-5));
            }

    const Tensor a = random_tensor({2, 2, 2}, rng);
    const Tensor bb = random_tensor({2, 2, 3}, rng);
    const Tensor cat = concat_channels(a, bb);
    CHECK(cat.extent(2) == 5);
    CHECK(cat.at(1, 1, 0) == a.at(1, 1, 0));
    CHECK(cat.at(1, 1, 2) == bb.at(1, 1, 0));
    const Tensor s0 = slice_channel(cat, 3);
    CHECK(s0.at(0, 1, 0) == bb.at(0, 1, 1));
}
