#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include <omp.h>

#include "mrecnn/kernels.hpp"
#include "mrecnn/reference.hpp"
#include "mrecnn/rng.hpp"
#include "testutil.hpp"

using namespace mrecnn;
using testutil::bitwise_equal;
using testutil::grad_close;
using testutil::numeric_derivative;
using testutil::random_tensor;

namespace {

ConvParams random_conv(int oc, int ic, int k, int stride, int pad, Rng& rng) {
    ConvParams p;
    p.weights = random_tensor({oc, ic, k, k}, rng);
    p.bias = random_tensor({oc}, rng);
    p.stride = stride;
    p.pad = pad;
    return p;
}

} // namespace

TEST_CASE("conv2d_forward shape arithmetic") {
    Rng rng(1);
    const Tensor input = random_tensor({1, 3, 224, 224}, rng, 0.0, 1.0);
    const ConvParams p = random_conv(64, 3, 3, 1, 1, rng);
    const Tensor out = conv2d_forward(input, p);
    CHECK(out.shape() == std::vector<int>({1, 64, 224, 224}));
    CHECK(out.all_finite());
}

TEST_CASE("conv2d_forward all-ones 3x3 window sums to 9") {
    const Tensor input = Tensor::full({1, 1, 3, 3}, 1.0f);
    ConvParams p;
    p.weights = Tensor::full({1, 1, 3, 3}, 1.0f);
    p.bias = Tensor({1});
    const Tensor out = conv2d_forward(input, p);
    REQUIRE(out.shape() == std::vector<int>({1, 1, 1, 1}));
    CHECK(out[0] == 9.0f);
}

TEST_CASE("conv2d_forward matches the direct-loop oracle") {
    Rng rng(7);
    SUBCASE("the 2x3x8x8 case") {
        const Tensor input = random_tensor({2, 3, 8, 8}, rng);
        const ConvParams p = random_conv(4, 3, 3, 1, 0, rng);
        const Tensor got = conv2d_forward(input, p);
        const Tensor want = ref::conv2d_forward_direct(input, p);
        REQUIRE(got.shape() == want.shape());
        for (std::size_t i = 0; i < got.numel(); ++i) {
            CHECK(std::abs(got[i] - want[i]) <= 1e-5);
        }
    }
    SUBCASE("random shapes, strides and pads") {
        for (int draw = 0; draw < 25; ++draw) {
            const int n = 1 + static_cast<int>(rng.below(2));
            const int ic = 1 + static_cast<int>(rng.below(4));
            const int k = 1 + static_cast<int>(rng.below(3));
            const int pad = static_cast<int>(rng.below(2));
            const int stride = 1 + static_cast<int>(rng.below(2));
            // choose the input extent so the output extent is integral
            const int oh = 1 + static_cast<int>(rng.below(4));
            const int h = (oh - 1) * stride + k - 2 * pad;
            if (h < 1 || h > 9) continue;
            const int oc = 1 + static_cast<int>(rng.below(4));
            const Tensor input = random_tensor({n, ic, h, h}, rng);
            const ConvParams p = random_conv(oc, ic, k, stride, pad, rng);
            const Tensor got = conv2d_forward(input, p);
            const Tensor want = ref::conv2d_forward_direct(input, p);
            REQUIRE(got.shape() == want.shape());
            for (std::size_t i = 0; i < got.numel(); ++i) {
                CHECK(std::abs(got[i] - want[i]) <= 1e-5);
            }
        }
    }
}

TEST_CASE("conv2d_forward rejects bad shapes") {
    Rng rng(3);
    const Tensor input = random_tensor({1, 5, 6, 6}, rng);
    const ConvParams p = random_conv(2, 3, 3, 1, 1, rng);
    CHECK_THROWS_WITH_AS(conv2d_forward(input, p),
                         doctest::Contains("channels"), std::invalid_argument);

    const Tensor odd = random_tensor({1, 3, 5, 5}, rng);
    const ConvParams strided = random_conv(2, 3, 2, 2, 0, rng);
    CHECK_THROWS_AS(conv2d_forward(odd, strided), std::invalid_argument);
}

TEST_CASE("conv2d_backward zero upstream gradient") {
    Rng rng(11);
    const Tensor input = random_tensor({2, 2, 4, 4}, rng);
    const ConvParams p = random_conv(3, 2, 3, 1, 1, rng);
    const Tensor zeros({2, 3, 4, 4});
    const ConvGrads g = conv2d_backward(input, p, zeros);
    for (std::size_t i = 0; i < g.input.numel(); ++i) CHECK(g.input[i] == 0.0f);
    for (std::size_t i = 0; i < g.weights.numel(); ++i) CHECK(g.weights[i] == 0.0f);
    for (std::size_t i = 0; i < g.bias.numel(); ++i) CHECK(g.bias[i] == 0.0f);
}

TEST_CASE("conv2d_backward grad_bias is the per-channel sum of grad_out") {
    Rng rng(13);
    const Tensor input = random_tensor({2, 2, 4, 4}, rng);
    const ConvParams p = random_conv(3, 2, 3, 1, 1, rng);
    const Tensor grad_out = random_tensor({2, 3, 4, 4}, rng);
    const ConvGrads g = conv2d_backward(input, p, grad_out);
    for (int f = 0; f < 3; ++f) {
        double want = 0.0;
        for (int n = 0; n < 2; ++n) {
            for (int y = 0; y < 4; ++y) {
                for (int x = 0; x < 4; ++x) want += grad_out.at4(n, f, y, x);
            }
        }
        CHECK(g.bias[static_cast<std::size_t>(f)] == doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("conv2d_backward matches finite differences") {
    Rng rng(17);
    SUBCASE("the 1x1x4x4 / 1x1x2x2 case") {
        Tensor input = random_tensor({1, 1, 4, 4}, rng);
        ConvParams p = random_conv(1, 1, 2, 1, 0, rng);
        const Tensor weights = random_tensor({1, 1, 3, 3}, rng); // upstream weighting
        const ConvGrads g = conv2d_backward(input, p, weights);
        for (std::size_t i = 0; i < input.numel(); ++i) {
            const double numeric = numeric_derivative(
                input, i, 1e-2, [&] { return conv2d_forward(input, p); }, weights);
            CHECK(grad_close(g.input[i], numeric));
        }
        for (std::size_t i = 0; i < p.weights.numel(); ++i) {
            const double numeric = numeric_derivative(
                p.weights, i, 1e-2, [&] { return conv2d_forward(input, p); }, weights);
            CHECK(grad_close(g.weights[i], numeric));
        }
        for (std::size_t i = 0; i < p.bias.numel(); ++i) {
            const double numeric = numeric_derivative(
                p.bias, i, 1e-2, [&] { return conv2d_forward(input, p); }, weights);
            CHECK(grad_close(g.bias[i], numeric));
        }
    }
    SUBCASE("random configurations") {
        for (int draw = 0; draw < 5; ++draw) {
            Tensor input = random_tensor({2, 2, 4, 4}, rng);
            ConvParams p = random_conv(2, 2, 3, 1, 1, rng);
            const Tensor weights = random_tensor({2, 2, 4, 4}, rng);
            const ConvGrads g = conv2d_backward(input, p, weights);
            for (int probe = 0; probe < 6; ++probe) {
                const std::size_t i = rng.below(input.numel());
                const double numeric = numeric_derivative(
                    input, i, 1e-2, [&] { return conv2d_forward(input, p); }, weights);
                CHECK(grad_close(g.input[i], numeric));
                const std::size_t j = rng.below(p.weights.numel());
                const double numeric_w = numeric_derivative(
                    p.weights, j, 1e-2, [&] { return conv2d_forward(input, p); }, weights);
                CHECK(grad_close(g.weights[j], numeric_w));
            }
        }
    }
}

TEST_CASE("maxpool2x2 forward basics") {
    Tensor input({1, 1, 2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
    const PoolResult res = maxpool2x2_forward(input);
    REQUIRE(res.output.shape() == std::vector<int>({1, 1, 1, 1}));
    CHECK(res.output[0] == 4.0f);
    CHECK(res.indices.argmax[0] == 3); // position (1,1)

    Rng rng(5);
    const Tensor big = random_tensor({1, 1, 224, 224}, rng);
    CHECK(maxpool2x2_forward(big).output.shape() == std::vector<int>({1, 1, 112, 112}));

    CHECK_THROWS_AS(maxpool2x2_forward(random_tensor({1, 1, 5, 6}, rng)), std::invalid_argument);
}

TEST_CASE("maxpool2x2 matches the serial reference") {
    Rng rng(29);
    const Tensor input = random_tensor({2, 3, 8, 8}, rng);
    CHECK(bitwise_equal(maxpool2x2_forward(input).output, ref::maxpool2x2_forward_direct(input)));
}

TEST_CASE("maxpool2x2 ties route the gradient to exactly one element per window") {
    const Tensor input = Tensor::full({1, 1, 4, 4}, 0.5f);
    const PoolResult res = maxpool2x2_forward(input);
    for (std::size_t i = 0; i < res.output.numel(); ++i) CHECK(res.output[i] == 0.5f);
    // first-encountered max in row-major window order: the top-left corner
    CHECK(res.indices.argmax[0] == 0);
    CHECK(res.indices.argmax[1] == 2);

    const Tensor grad_out = Tensor::full({1, 1, 2, 2}, 1.0f);
    const Tensor grad_in = maxpool2x2_backward(res.indices, grad_out);
    int nonzero = 0;
    double mass = 0.0;
    for (std::size_t i = 0; i < grad_in.numel(); ++i) {
        if (grad_in[i] != 0.0f) ++nonzero;
        mass += grad_in[i];
    }
    CHECK(nonzero == 4); // one per window
    CHECK(mass == doctest::Approx(4.0));
}

TEST_CASE("maxpool2x2 backward conserves gradient mass") {
    Rng rng(31);
    for (int draw = 0; draw < 10; ++draw) {
        const Tensor input = random_tensor({2, 2, 6, 6}, rng);
        const PoolResult res = maxpool2x2_forward(input);
        const Tensor grad_out = random_tensor({2, 2, 3, 3}, rng);
        const Tensor grad_in = maxpool2x2_backward(res.indices, grad_out);
        double in_mass = 0.0, out_mass = 0.0;
        for (std::size_t i = 0; i < grad_out.numel(); ++i) out_mass += grad_out[i];
        for (std::size_t i = 0; i < grad_in.numel(); ++i) in_mass += grad_in[i];
        CHECK(in_mass == doctest::Approx(out_mass).epsilon(1e-6));
    }
}

TEST_CASE("maxpool2x2 backward rejects a mismatched index map") {
    Rng rng(37);
    const Tensor input = random_tensor({1, 1, 4, 4}, rng);
    const PoolResult res = maxpool2x2_forward(input);
    CHECK_THROWS_AS(maxpool2x2_backward(res.indices, Tensor({1, 1, 4, 4})), std::invalid_argument);
}

TEST_CASE("maxpool2x2 backward matches finite differences away from ties") {
    Rng rng(41);
    Tensor input = random_tensor({1, 1, 4, 4}, rng); // continuous draws: ties have measure zero
    const Tensor weights = random_tensor({1, 1, 2, 2}, rng);
    const PoolResult res = maxpool2x2_forward(input);
    const Tensor analytic = maxpool2x2_backward(res.indices, weights);
    for (std::size_t i = 0; i < input.numel(); ++i) {
        const double numeric = numeric_derivative(
            input, i, 1e-3, [&] { return maxpool2x2_forward(input).output; }, weights);
        CHECK(grad_close(analytic[i], numeric));
    }
}

TEST_CASE("relu forward and backward") {
    Tensor input({3}, {-1.0f, 0.0f, 2.0f});
    const Tensor out = relu(input);
    CHECK(out[0] == 0.0f);
    CHECK(out[1] == 0.0f);
    CHECK(out[2] == 2.0f);

    const Tensor grad_out = Tensor::full({3}, 1.0f);
    const Tensor grad_in = relu_backward(input, grad_out);
    CHECK(grad_in[0] == 0.0f);
    CHECK(grad_in[1] == 0.0f); // subgradient 0 at exactly 0
    CHECK(grad_in[2] == 1.0f);

    Rng rng(43);
    const Tensor negatives = random_tensor({2, 3, 4, 4}, rng, -2.0, -0.5);
    const Tensor zeroed = relu(negatives);
    for (std::size_t i = 0; i < zeroed.numel(); ++i) CHECK(zeroed[i] == 0.0f);
}

TEST_CASE("relu backward matches finite differences away from zero") {
    Rng rng(47);
    Tensor input = random_tensor({2, 8}, rng);
    for (std::size_t i = 0; i < input.numel(); ++i) {
        if (std::abs(input[i]) < 0.05f) input[i] = 0.2f;
    }
    const Tensor weights = random_tensor({2, 8}, rng);
    const Tensor analytic = relu_backward(input, weights);
    for (std::size_t i = 0; i < input.numel(); ++i) {
        const double numeric =
            numeric_derivative(input, i, 1e-2, [&] { return relu(input); }, weights);
        CHECK(grad_close(analytic[i], numeric));
    }
}

TEST_CASE("linear_forward identity and bias broadcast") {
    Tensor identity({3, 3});
    for (int i = 0; i < 3; ++i) identity.at2(i, i) = 1.0f;
    Rng rng(53);
    const Tensor input = random_tensor({2, 3}, rng);
    CHECK(bitwise_equal(linear_forward(input, identity, Tensor({3})), input));

    const Tensor zero_in({2, 3});
    Tensor bias({4}, {0.5f, -1.0f, 2.0f, 0.0f});
    const Tensor weights = random_tensor({3, 4}, rng);
    const Tensor out = linear_forward(zero_in, weights, bias);
    for (int n = 0; n < 2; ++n) {
        for (int j = 0; j < 4; ++j) CHECK(out.at2(n, j) == bias[static_cast<std::size_t>(j)]);
    }

    CHECK_THROWS_AS(linear_forward(random_tensor({2, 5}, rng), weights, bias),
                    std::invalid_argument);
}

TEST_CASE("linear matches the serial reference") {
    Rng rng(59);
    const Tensor input = random_tensor({4, 16}, rng);
    const Tensor weights = random_tensor({16, 5}, rng);
    const Tensor bias = random_tensor({5}, rng);
    CHECK(bitwise_equal(linear_forward(input, weights, bias),
                        ref::linear_forward_direct(input, weights, bias)));
}

TEST_CASE("linear_backward matches finite differences on a 2x3 -> 4 layer") {
    Rng rng(61);
    Tensor input = random_tensor({2, 3}, rng);
    Tensor weights = random_tensor({3, 4}, rng);
    Tensor bias = random_tensor({4}, rng);
    const Tensor upstream = random_tensor({2, 4}, rng);
    const LinearGrads g = linear_backward(input, weights, upstream);
    for (std::size_t i = 0; i < input.numel(); ++i) {
        const double numeric = numeric_derivative(
            input, i, 1e-2, [&] { return linear_forward(input, weights, bias); }, upstream);
        CHECK(grad_close(g.input[i], numeric));
    }
    for (std::size_t i = 0; i < weights.numel(); ++i) {
        const double numeric = numeric_derivative(
            weights, i, 1e-2, [&] { return linear_forward(input, weights, bias); }, upstream);
        CHECK(grad_close(g.weights[i], numeric));
    }
    for (std::size_t i = 0; i < bias.numel(); ++i) {
        const double numeric = numeric_derivative(
            bias, i, 1e-2, [&] { return linear_forward(input, weights, bias); }, upstream);
        CHECK(grad_close(g.bias[i], numeric));
    }
}

TEST_CASE("concat_channels shapes and identity") {
    Rng rng(67);
    const Tensor a = random_tensor({1, 2, 7, 7}, rng);
    const Tensor b = random_tensor({1, 3, 7, 7}, rng);
    const Tensor out = concat_channels(a, b);
    CHECK(out.shape() == std::vector<int>({1, 5, 7, 7}));
    for (int c = 0; c < 2; ++c) {
        for (int y = 0; y < 7; ++y) {
            for (int x = 0; x < 7; ++x) CHECK(out.at4(0, c, y, x) == a.at4(0, c, y, x));
        }
    }
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 7; ++y) {
            for (int x = 0; x < 7; ++x) CHECK(out.at4(0, 2 + c, y, x) == b.at4(0, c, y, x));
        }
    }

    const Tensor empty({1, 0, 7, 7});
    CHECK(bitwise_equal(concat_channels(a, empty), a));

    CHECK_THROWS_AS(concat_channels(a, random_tensor({1, 3, 6, 7}, rng)), std::invalid_argument);
    CHECK_THROWS_AS(concat_channels(a, random_tensor({2, 3, 7, 7}, rng)), std::invalid_argument);
}

TEST_CASE("concat gradient split reproduces the branch gradients exactly") {
    Rng rng(71);
    const Tensor ga = random_tensor({2, 3, 4, 4}, rng);
    const Tensor gb = random_tensor({2, 5, 4, 4}, rng);
    const Tensor joined = concat_channels(ga, gb);
    const auto [sa, sb] = concat_channels_backward(joined, 3, 5);
    CHECK(bitwise_equal(sa, ga));
    CHECK(bitwise_equal(sb, gb));
}

TEST_CASE("softmax basics") {
    const Tensor uniform = softmax(Tensor({1, 7}));
    for (int j = 0; j < 7; ++j) {
        CHECK(uniform.at2(0, j) == doctest::Approx(1.0 / 7.0).epsilon(1e-6));
    }

    // shift invariance is bitwise when the additions are exact
    Tensor logits({1, 3}, {0.0f, 1.0f, 2.0f});
    Tensor shifted({1, 3}, {100.0f, 101.0f, 102.0f});
    CHECK(bitwise_equal(softmax(logits), softmax(shifted)));

    const Tensor two({1, 2}, {std::log(2.0f), 0.0f});
    const Tensor p = softmax(two);
    CHECK(p.at2(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(p.at2(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("softmax rows sum to 1 and stay positive") {
    Rng rng(73);
    const Tensor logits = random_tensor({8, 7}, rng, -30.0, 30.0);
    const Tensor p = softmax(logits);
    for (int row = 0; row < 8; ++row) {
        double sum = 0.0;
        for (int j = 0; j < 7; ++j) {
            CHECK(p.at2(row, j) > 0.0f);
            sum += p.at2(row, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("kernels are bitwise deterministic across thread counts") {
    Rng rng(79);
    const Tensor input = random_tensor({2, 3, 8, 8}, rng);
    const ConvParams p = random_conv(4, 3, 3, 1, 1, rng);
    const Tensor grad_out = random_tensor({2, 4, 8, 8}, rng);

    const int saved = omp_get_max_threads();
    omp_set_num_threads(2);
    const Tensor fwd2 = conv2d_forward(input, p);
    const ConvGrads bwd2 = conv2d_backward(input, p, grad_out);
    omp_set_num_threads(1);
    const Tensor fwd1 = conv2d_forward(input, p);
    const ConvGrads bwd1 = conv2d_backward(input, p, grad_out);
    omp_set_num_threads(saved);

    CHECK(bitwise_equal(fwd1, fwd2));
    CHECK(bitwise_equal(bwd1.input, bwd2.input));
    CHECK(bitwise_equal(bwd1.weights, bwd2.weights));
    CHECK(bitwise_equal(bwd1.bias, bwd2.bias));
}
