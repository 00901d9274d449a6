#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gmw/network.hpp"
#include "gmw/rng.hpp"

namespace gmw::test {

inline nn::Batch random_batch(const nn::NetworkSpec& spec, std::size_t n, RngStream& rng) {
    nn::Batch b;
    b.n = n;
    b.shape = spec.input;
    b.inputs.resize(n * spec.input.size());
    for (double& v : b.inputs) v = rng.uniform(-1.0, 1.0);
    const std::size_t classes = spec.class_count();
    b.labels.resize(n);
    for (int& label : b.labels) label = static_cast<int>(rng.uniform_index(classes));
    return b;
}

inline nn::Network random_net(const nn::NetworkSpec& spec, RngStream& rng, double scale = 0.5) {
    nn::Network net = nn::Network::zeros(spec);
    nn::ParamVector p(nn::param_count(spec));
    for (double& v : p) v = rng.uniform(-scale, scale);
    nn::load(net, p);
    return net;
}

/// Guarded relative error; negligible pairs count as exact.
inline double rel_error(double a, double b) {
    const double mag = std::max(std::abs(a), std::abs(b));
    if (mag < 1e-6) return 0.0;
    return std::abs(a - b) / mag;
}

/// Max guarded relative error between backward() gradients and central
/// finite differences of ce_loss(forward(.)) at step h.
inline double max_grad_error(const nn::NetworkSpec& spec, const nn::Network& net,
                             const nn::Batch& batch, double h = 1e-4) {
    const nn::BackwardResult res = nn::backward(net, batch);
    nn::ParamVector base = nn::flatten(net);

    nn::ParamVector analytic;
    for (const auto& w : res.grads.weights) analytic.insert(analytic.end(), w.begin(), w.end());
    for (const auto& b : res.grads.biases) analytic.insert(analytic.end(), b.begin(), b.end());

    nn::Network scratch = nn::Network::zeros(spec);
    auto loss_at = [&](const nn::ParamVector& p) {
        nn::load(scratch, p);
        return nn::ce_loss(nn::forward(scratch, batch), batch.labels);
    };

    double worst = 0.0;
    nn::ParamVector p = base;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double saved = p[k];
        p[k] = saved + h;
        const double up = loss_at(p);
        p[k] = saved - h;
        const double down = loss_at(p);
        p[k] = saved;
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, rel_error(analytic[k], fd));
    }
    return worst;
}

/// Independent direct convolution: materializes the zero-padded input and
/// gathers, unlike the production code's bounds-checked loop.
inline std::vector<double> naive_conv2d(const std::vector<double>& in, std::size_t n,
                                        std::size_t c, std::size_t h, std::size_t w,
                                        const std::vector<double>& kernel,
                                        const std::vector<double>& bias, std::size_t oc,
                                        std::size_t kh, std::size_t kw, std::size_t stride,
                                        std::size_t pad) {
    const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;
    std::vector<double> padded(n * c * ph * pw, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    padded[((r * c + ic) * ph + y + pad) * pw + x + pad] =
                        in[((r * c + ic) * h + y) * w + x];

    const std::size_t oh = (ph - kh) / stride + 1;
    const std::size_t ow = (pw - kw) / stride + 1;
    std::vector<double> out(n * oc * oh * ow, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < oc; ++o)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                    double acc = bias[o];
                    for (std::size_t ic = 0; ic < c; ++ic)
                        for (std::size_t ky = 0; ky < kh; ++ky)
                            for (std::size_t kx = 0; kx < kw; ++kx)
                                acc += padded[((r * c + ic) * ph + y * stride + ky) * pw +
                                              x * stride + kx] *
                                       kernel[((o * c + ic) * kh + ky) * kw + kx];
                    out[((r * oc + o) * oh + y) * ow + x] = acc;
                }
    return out;
}

}  // namespace gmw::test
