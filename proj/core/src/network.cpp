#include "gmw/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "gmw/errors.hpp"

namespace gmw::nn {

namespace {

std::string size_str(std::size_t v) { return std::to_string(v); }

[[noreturn]] void chain_error(std::size_t index, const Layer& layer, const std::string& prev_desc,
                              const Shape& got, const std::string& expected) {
    throw DimensionError("layer " + size_str(index) + " (" + layer.to_string() + ") expects " +
                         expected + " but " + prev_desc + " outputs " + got.to_string());
}

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

std::string Shape::to_string() const {
    if (is_flat()) return size_str(c);
    return size_str(c) + "x" + size_str(h) + "x" + size_str(w);
}

std::size_t Layer::weight_count() const {
    switch (kind) {
        case LayerKind::dense: return in * out;
        case LayerKind::conv2d: return out_channels * in_channels * kernel_h * kernel_w;
        default: return 0;
    }
}

std::size_t Layer::bias_count() const {
    switch (kind) {
        case LayerKind::dense: return out;
        case LayerKind::conv2d: return out_channels;
        default: return 0;
    }
}

std::string Layer::to_string() const {
    switch (kind) {
        case LayerKind::dense:
            return "dense:" + size_str(in) + ":" + size_str(out);
        case LayerKind::conv2d:
            return "conv:" + size_str(in_channels) + ":" + size_str(out_channels) + ":" +
                   size_str(kernel_h) + "x" + size_str(kernel_w) + ":" + size_str(stride) + ":" +
                   size_str(padding);
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool:" + size_str(pool) + ":" + size_str(pool_stride);
        case LayerKind::flatten: return "flatten";
    }
    return "?";
}

Layer dense(std::size_t in, std::size_t out) {
    Layer l;
    l.kind = LayerKind::dense;
    l.in = in;
    l.out = out;
    return l;
}

Layer conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h,
             std::size_t kernel_w, std::size_t stride, std::size_t padding) {
    Layer l;
    l.kind = LayerKind::conv2d;
    l.in_channels = in_channels;
    l.out_channels = out_channels;
    l.kernel_h = kernel_h;
    l.kernel_w = kernel_w;
    l.stride = stride;
    l.padding = padding;
    return l;
}

Layer relu() {
    Layer l;
    l.kind = LayerKind::relu;
    return l;
}

Layer maxpool(std::size_t k, std::size_t stride) {
    Layer l;
    l.kind = LayerKind::maxpool;
    l.pool = k;
    l.pool_stride = stride;
    return l;
}

Layer flatten_layer() {
    Layer l;
    l.kind = LayerKind::flatten;
    return l;
}

void NetworkSpec::validate() const {
    if (input.size() == 0) throw DimensionError("network input shape is empty");
    Shape cur = input;
    std::string prev_desc = "the input";
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        switch (l.kind) {
            case LayerKind::dense:
                if (l.in == 0 || l.out == 0)
                    throw DimensionError("layer " + size_str(i) + " (dense) has zero size");
                if (!cur.is_flat() || cur.c != l.in)
                    chain_error(i, l, prev_desc, cur, "a flat input of " + size_str(l.in));
                cur = Shape{l.out, 1, 1};
                break;
            case LayerKind::conv2d: {
                if (l.out_channels == 0 || l.kernel_h == 0 || l.kernel_w == 0 || l.stride == 0)
                    throw DimensionError("layer " + size_str(i) + " (conv) has a zero field");
                if (cur.c != l.in_channels)
                    chain_error(i, l, prev_desc, cur, size_str(l.in_channels) + " input channels");
                if (cur.h + 2 * l.padding < l.kernel_h || cur.w + 2 * l.padding < l.kernel_w)
                    chain_error(i, l, prev_desc, cur, "an input at least as large as the kernel");
                cur = Shape{l.out_channels, conv_out(cur.h, l.kernel_h, l.stride, l.padding),
                            conv_out(cur.w, l.kernel_w, l.stride, l.padding)};
                break;
            }
            case LayerKind::relu:
                break;
            case LayerKind::maxpool:
                if (l.pool == 0 || l.pool_stride == 0)
                    throw DimensionError("layer " + size_str(i) + " (maxpool) has a zero field");
                if (cur.h < l.pool || cur.w < l.pool)
                    chain_error(i, l, prev_desc, cur, "an input at least " + size_str(l.pool) +
                                                          "x" + size_str(l.pool));
                cur = Shape{cur.c, (cur.h - l.pool) / l.pool_stride + 1,
                            (cur.w - l.pool) / l.pool_stride + 1};
                break;
            case LayerKind::flatten:
                cur = Shape{cur.size(), 1, 1};
                break;
        }
        prev_desc = "layer " + size_str(i) + " (" + l.to_string() + ")";
    }
}

Shape NetworkSpec::output_shape() const {
    Shape cur = input;
    for (const Layer& l : layers) {
        switch (l.kind) {
            case LayerKind::dense: cur = Shape{l.out, 1, 1}; break;
            case LayerKind::conv2d:
                cur = Shape{l.out_channels, conv_out(cur.h, l.kernel_h, l.stride, l.padding),
                            conv_out(cur.w, l.kernel_w, l.stride, l.padding)};
                break;
            case LayerKind::relu: break;
            case LayerKind::maxpool:
                cur = Shape{cur.c, (cur.h - l.pool) / l.pool_stride + 1,
                            (cur.w - l.pool) / l.pool_stride + 1};
                break;
            case LayerKind::flatten: cur = Shape{cur.size(), 1, 1}; break;
        }
    }
    return cur;
}

std::size_t NetworkSpec::class_count() const { return output_shape().size(); }

std::string NetworkSpec::to_string() const {
    std::string s = "input:" + input.to_string();
    for (const Layer& l : layers) s += "|" + l.to_string();
    return s;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::size_t parse_size(const std::string& tok, const std::string& where) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ValidationError("network spec: bad number '" + tok + "' in " + where);
    }
}

// "5" -> (5,5); "5x3" -> (5,3)
std::pair<std::size_t, std::size_t> parse_hw(const std::string& tok, const std::string& where) {
    auto parts = split(tok, 'x');
    if (parts.size() == 1) {
        std::size_t k = parse_size(parts[0], where);
        return {k, k};
    }
    if (parts.size() == 2) return {parse_size(parts[0], where), parse_size(parts[1], where)};
    throw ValidationError("network spec: bad size '" + tok + "' in " + where);
}

}  // namespace

NetworkSpec NetworkSpec::parse(const std::string& text) {
    NetworkSpec spec;
    auto tokens = split(text, '|');
    if (tokens.empty() || tokens[0].empty())
        throw ValidationError("network spec: empty description");

    bool have_input = false;
    Shape cur{};
    for (const std::string& tok : tokens) {
        if (tok.empty()) continue;
        auto args = split(tok, ':');
        const std::string& head = args[0];
        if (head == "input") {
            if (args.size() != 2) throw ValidationError("network spec: input needs one argument");
            auto dims = split(args[1], 'x');
            if (dims.size() == 1) {
                cur = Shape{parse_size(dims[0], tok), 1, 1};
            } else if (dims.size() == 3) {
                cur = Shape{parse_size(dims[0], tok), parse_size(dims[1], tok),
                            parse_size(dims[2], tok)};
            } else {
                throw ValidationError("network spec: input must be F or CxHxW");
            }
            spec.input = cur;
            have_input = true;
            continue;
        }
        if (!have_input) throw ValidationError("network spec: must start with input:...");

        if (head == "dense") {
            if (args.size() == 2) {
                spec.layers.push_back(dense(cur.size(), parse_size(args[1], tok)));
            } else if (args.size() == 3) {
                spec.layers.push_back(dense(parse_size(args[1], tok), parse_size(args[2], tok)));
            } else {
                throw ValidationError("network spec: dense takes 1 or 2 arguments");
            }
            cur = Shape{spec.layers.back().out, 1, 1};
        } else if (head == "conv" || head == "conv2d") {
            std::size_t in_ch, out_ch, kh, kw, stride = 1, pad = 0;
            if (args.size() == 6) {
                in_ch = parse_size(args[1], tok);
                out_ch = parse_size(args[2], tok);
                std::tie(kh, kw) = parse_hw(args[3], tok);
                stride = parse_size(args[4], tok);
                pad = parse_size(args[5], tok);
            } else if (args.size() >= 3 && args.size() <= 5) {
                in_ch = cur.c;
                out_ch = parse_size(args[1], tok);
                std::tie(kh, kw) = parse_hw(args[2], tok);
                if (args.size() >= 4) stride = parse_size(args[3], tok);
                if (args.size() == 5) pad = parse_size(args[4], tok);
            } else {
                throw ValidationError("network spec: conv takes 2 to 5 arguments");
            }
            spec.layers.push_back(conv2d(in_ch, out_ch, kh, kw, stride, pad));
            if (cur.h + 2 * pad < kh || cur.w + 2 * pad < kw)
                throw ValidationError("network spec: kernel larger than input in " + tok);
            cur = Shape{out_ch, conv_out(cur.h, kh, stride, pad), conv_out(cur.w, kw, stride, pad)};
        } else if (head == "relu") {
            spec.layers.push_back(relu());
        } else if (head == "maxpool" || head == "pool") {
            if (args.size() < 2 || args.size() > 3)
                throw ValidationError("network spec: maxpool takes 1 or 2 arguments");
            std::size_t k = parse_size(args[1], tok);
            std::size_t s = args.size() == 3 ? parse_size(args[2], tok) : k;
            spec.layers.push_back(maxpool(k, s));
            if (cur.h < k || cur.w < k)
                throw ValidationError("network spec: pool window larger than input in " + tok);
            cur = Shape{cur.c, (cur.h - k) / s + 1, (cur.w - k) / s + 1};
        } else if (head == "flatten") {
            spec.layers.push_back(flatten_layer());
            cur = Shape{cur.size(), 1, 1};
        } else {
            throw ValidationError("network spec: unknown layer '" + head + "'");
        }
    }
    spec.validate();
    return spec;
}

std::size_t param_count(const NetworkSpec& spec) {
    spec.validate();
    std::size_t total = 0;
    for (const Layer& l : spec.layers) total += l.weight_count() + l.bias_count();
    return total;
}

Network Network::zeros(const NetworkSpec& spec) {
    spec.validate();
    Network net;
    net.spec = spec;
    net.weights.resize(spec.layers.size());
    net.biases.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        net.weights[i].assign(spec.layers[i].weight_count(), 0.0);
        net.biases[i].assign(spec.layers[i].bias_count(), 0.0);
    }
    return net;
}

ParamVector flatten(const Network& net) {
    ParamVector p;
    p.reserve(param_count(net.spec));
    for (const auto& w : net.weights) p.insert(p.end(), w.begin(), w.end());
    for (const auto& b : net.biases) p.insert(p.end(), b.begin(), b.end());
    return p;
}

void load(Network& net, std::span<const double> params) {
    const std::size_t expected = param_count(net.spec);
    if (params.size() != expected)
        throw DimensionError("load: parameter vector has " + size_str(params.size()) +
                             " entries, network needs " + size_str(expected));
    for (double v : params)
        if (!std::isfinite(v)) throw NumericError("load: non-finite parameter entry");
    std::size_t off = 0;
    for (auto& w : net.weights) {
        std::copy_n(params.begin() + off, w.size(), w.begin());
        off += w.size();
    }
    for (auto& b : net.biases) {
        std::copy_n(params.begin() + off, b.size(), b.begin());
        off += b.size();
    }
}

namespace {

struct ForwardCache {
    // acts[0] is the batch input; acts[i+1] the output of layer i.
    std::vector<std::vector<double>> acts;
    std::vector<Shape> shapes;
    // For each maxpool layer: source index of every output element.
    std::vector<std::vector<std::size_t>> pool_src;
};

void dense_forward(const Layer& l, const std::vector<double>& in, std::size_t n,
                   const std::vector<double>& w, const std::vector<double>& b,
                   std::vector<double>& out) {
    const std::size_t I = l.in, O = l.out;
    out.assign(n * O, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* x = in.data() + r * I;
        double* y = out.data() + r * O;
        for (std::size_t o = 0; o < O; ++o) {
            double acc = b[o];
            const double* wrow = w.data() + o * I;
            for (std::size_t i = 0; i < I; ++i) acc += x[i] * wrow[i];
            y[o] = acc;
        }
    }
}

void conv_forward(const Layer& l, const std::vector<double>& in, const Shape& is, std::size_t n,
                  const std::vector<double>& w, const std::vector<double>& b, const Shape& os,
                  std::vector<double>& out) {
    const std::size_t C = l.in_channels, OC = l.out_channels;
    const std::size_t H = is.h, W = is.w, OH = os.h, OW = os.w;
    const std::size_t KH = l.kernel_h, KW = l.kernel_w, S = l.stride, P = l.padding;
    out.assign(n * OC * OH * OW, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t oc = 0; oc < OC; ++oc) {
            for (std::size_t oy = 0; oy < OH; ++oy) {
                for (std::size_t ox = 0; ox < OW; ++ox) {
                    double acc = b[oc];
                    for (std::size_t ic = 0; ic < C; ++ic) {
                        for (std::size_t ky = 0; ky < KH; ++ky) {
                            const std::ptrdiff_t iy =
                                static_cast<std::ptrdiff_t>(oy * S + ky) -
                                static_cast<std::ptrdiff_t>(P);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                            for (std::size_t kx = 0; kx < KW; ++kx) {
                                const std::ptrdiff_t ix =
                                    static_cast<std::ptrdiff_t>(ox * S + kx) -
                                    static_cast<std::ptrdiff_t>(P);
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                                acc += in[((r * C + ic) * H + iy) * W + ix] *
                                       w[((oc * C + ic) * KH + ky) * KW + kx];
                            }
                        }
                    }
                    out[((r * OC + oc) * OH + oy) * OW + ox] = acc;
                }
            }
        }
    }
}

void maxpool_forward(const Layer& l, const std::vector<double>& in, const Shape& is,
                     std::size_t n, const Shape& os, std::vector<double>& out,
                     std::vector<std::size_t>* src) {
    const std::size_t C = is.c, H = is.h, W = is.w, OH = os.h, OW = os.w;
    const std::size_t K = l.pool, S = l.pool_stride;
    out.assign(n * C * OH * OW, 0.0);
    if (src) src->assign(n * C * OH * OW, 0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t oy = 0; oy < OH; ++oy) {
                for (std::size_t ox = 0; ox < OW; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = 0;
                    for (std::size_t ky = 0; ky < K; ++ky) {
                        for (std::size_t kx = 0; kx < K; ++kx) {
                            const std::size_t idx =
                                ((r * C + c) * H + oy * S + ky) * W + ox * S + kx;
                            if (in[idx] > best) {  // first maximum wins on ties
                                best = in[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const std::size_t oidx = ((r * C + c) * OH + oy) * OW + ox;
                    out[oidx] = best;
                    if (src) (*src)[oidx] = best_idx;
                }
            }
        }
    }
}

void run_forward(const Network& net, const Batch& batch, ForwardCache& cache, bool keep_cache) {
    const NetworkSpec& spec = net.spec;
    if (batch.shape != spec.input)
        throw DimensionError("forward: batch shape " + batch.shape.to_string() +
                             " does not match network input " + spec.input.to_string());
    if (batch.inputs.size() != batch.n * batch.shape.size())
        throw DimensionError("forward: batch buffer size does not match its shape");

    cache.acts.clear();
    cache.shapes.clear();
    cache.pool_src.assign(spec.layers.size(), {});
    cache.acts.push_back(batch.inputs);
    cache.shapes.push_back(spec.input);

    Shape cur = spec.input;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const Layer& l = spec.layers[i];
        const std::vector<double>& in = cache.acts.back();
        std::vector<double> out;
        Shape next = cur;
        switch (l.kind) {
            case LayerKind::dense:
                next = Shape{l.out, 1, 1};
                dense_forward(l, in, batch.n, net.weights[i], net.biases[i], out);
                break;
            case LayerKind::conv2d:
                next = Shape{l.out_channels, conv_out(cur.h, l.kernel_h, l.stride, l.padding),
                             conv_out(cur.w, l.kernel_w, l.stride, l.padding)};
                conv_forward(l, in, cur, batch.n, net.weights[i], net.biases[i], next, out);
                break;
            case LayerKind::relu:
                out.resize(in.size());
                for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
                break;
            case LayerKind::maxpool:
                next = Shape{cur.c, (cur.h - l.pool) / l.pool_stride + 1,
                             (cur.w - l.pool) / l.pool_stride + 1};
                maxpool_forward(l, in, cur, batch.n, next, out,
                                keep_cache ? &cache.pool_src[i] : nullptr);
                break;
            case LayerKind::flatten:
                next = Shape{cur.size(), 1, 1};
                out = in;
                break;
        }
        if (!keep_cache && i + 1 < spec.layers.size()) {
            // only the running activation is needed
            cache.acts.back() = std::move(out);
            cache.shapes.back() = next;
        } else {
            cache.acts.push_back(std::move(out));
            cache.shapes.push_back(next);
        }
        cur = next;
    }
}

// Softmax cross entropy gradient w.r.t. logits; returns mean loss.
double ce_grad(std::span<const double> logits, std::span<const int> labels, std::size_t classes,
               std::vector<double>* dlogits) {
    const std::size_t n = labels.size();
    if (dlogits) dlogits->assign(logits.size(), 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double* s = logits.data() + r * classes;
        double m = s[0];
        for (std::size_t c = 1; c < classes; ++c) m = std::max(m, s[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) z += std::exp(s[c] - m);
        const int label = labels[r];
        total += std::log(z) - (s[label] - m);
        if (dlogits) {
            double* d = dlogits->data() + r * classes;
            for (std::size_t c = 0; c < classes; ++c) {
                const double p = std::exp(s[c] - m) / z;
                d[c] = (p - (static_cast<int>(c) == label ? 1.0 : 0.0)) / static_cast<double>(n);
            }
        }
    }
    return total / static_cast<double>(n);
}

void check_labels(std::span<const double> logits, std::span<const int> labels,
                  std::size_t& classes_out) {
    if (labels.empty()) throw UsageError("empty batch");
    if (logits.size() % labels.size() != 0)
        throw DimensionError("logits size is not a multiple of the batch size");
    classes_out = logits.size() / labels.size();
    for (int label : labels)
        if (label < 0 || static_cast<std::size_t>(label) >= classes_out)
            throw UsageError("label " + std::to_string(label) + " outside [0, " +
                             size_str(classes_out) + ")");
}

}  // namespace

std::vector<double> forward(const Network& net, const Batch& batch) {
    ForwardCache cache;
    run_forward(net, batch, cache, /*keep_cache=*/false);
    return std::move(cache.acts.back());
}

double ce_loss(std::span<const double> logits, std::span<const int> labels) {
    std::size_t classes = 0;
    check_labels(logits, labels, classes);
    return ce_grad(logits, labels, classes, nullptr);
}

double accuracy(std::span<const double> logits, std::span<const int> labels) {
    std::size_t classes = 0;
    check_labels(logits, labels, classes);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        const double* s = logits.data() + r * classes;
        std::size_t arg = 0;
        for (std::size_t c = 1; c < classes; ++c)
            if (s[c] > s[arg]) arg = c;
        if (static_cast<std::size_t>(labels[r]) == arg) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double l2_regularizer(std::span<const double> p) {
    double acc = 0.0;
    for (double v : p) acc += v * v;
    return acc;
}

BackwardResult backward(const Network& net, const Batch& batch) {
    const NetworkSpec& spec = net.spec;
    const std::size_t classes = spec.class_count();
    if (batch.n == 0) throw UsageError("backward: empty batch");
    if (batch.labels.size() != batch.n)
        throw DimensionError("backward: label count does not match the batch");
    for (int label : batch.labels)
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw UsageError("backward: label " + std::to_string(label) + " outside [0, " +
                             size_str(classes) + ")");

    ForwardCache cache;
    run_forward(net, batch, cache, /*keep_cache=*/true);

    std::vector<double> dcur;
    BackwardResult result;
    result.loss = ce_grad(cache.acts.back(), batch.labels, classes, &dcur);

    result.grads.weights.resize(spec.layers.size());
    result.grads.biases.resize(spec.layers.size());

    for (std::size_t ii = spec.layers.size(); ii-- > 0;) {
        const Layer& l = spec.layers[ii];
        const std::vector<double>& in = cache.acts[ii];
        const Shape& is = cache.shapes[ii];
        const Shape& os = cache.shapes[ii + 1];
        std::vector<double> din;
        std::vector<double>& dw = result.grads.weights[ii];
        std::vector<double>& db = result.grads.biases[ii];
        dw.assign(l.weight_count(), 0.0);
        db.assign(l.bias_count(), 0.0);

        switch (l.kind) {
            case LayerKind::dense: {
                const std::size_t I = l.in, O = l.out;
                const std::vector<double>& w = net.weights[ii];
                din.assign(batch.n * I, 0.0);
                for (std::size_t r = 0; r < batch.n; ++r) {
                    const double* x = in.data() + r * I;
                    const double* g = dcur.data() + r * O;
                    double* dx = din.data() + r * I;
                    for (std::size_t o = 0; o < O; ++o) {
                        const double go = g[o];
                        db[o] += go;
                        const double* wrow = w.data() + o * I;
                        double* dwrow = dw.data() + o * I;
                        for (std::size_t i = 0; i < I; ++i) {
                            dwrow[i] += go * x[i];
                            dx[i] += go * wrow[i];
                        }
                    }
                }
                break;
            }
            case LayerKind::conv2d: {
                const std::size_t C = l.in_channels, OC = l.out_channels;
                const std::size_t H = is.h, W = is.w, OH = os.h, OW = os.w;
                const std::size_t KH = l.kernel_h, KW = l.kernel_w, S = l.stride, P = l.padding;
                const std::vector<double>& w = net.weights[ii];
                din.assign(batch.n * C * H * W, 0.0);
                for (std::size_t r = 0; r < batch.n; ++r) {
                    for (std::size_t oc = 0; oc < OC; ++oc) {
                        for (std::size_t oy = 0; oy < OH; ++oy) {
                            for (std::size_t ox = 0; ox < OW; ++ox) {
                                const double g = dcur[((r * OC + oc) * OH + oy) * OW + ox];
                                db[oc] += g;
                                for (std::size_t ic = 0; ic < C; ++ic) {
                                    for (std::size_t ky = 0; ky < KH; ++ky) {
                                        const std::ptrdiff_t iy =
                                            static_cast<std::ptrdiff_t>(oy * S + ky) -
                                            static_cast<std::ptrdiff_t>(P);
                                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H))
                                            continue;
                                        for (std::size_t kx = 0; kx < KW; ++kx) {
                                            const std::ptrdiff_t ix =
                                                static_cast<std::ptrdiff_t>(ox * S + kx) -
                                                static_cast<std::ptrdiff_t>(P);
                                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W))
                                                continue;
                                            const std::size_t iidx =
                                                ((r * C + ic) * H + iy) * W + ix;
                                            const std::size_t widx =
                                                ((oc * C + ic) * KH + ky) * KW + kx;
                                            dw[widx] += g * in[iidx];
                                            din[iidx] += g * w[widx];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::relu:
                din.assign(in.size(), 0.0);
                for (std::size_t k = 0; k < in.size(); ++k)
                    if (in[k] > 0.0) din[k] = dcur[k];
                break;
            case LayerKind::maxpool: {
                din.assign(in.size(), 0.0);
                const std::vector<std::size_t>& src = cache.pool_src[ii];
                for (std::size_t k = 0; k < dcur.size(); ++k) din[src[k]] += dcur[k];
                break;
            }
            case LayerKind::flatten:
                din = std::move(dcur);
                break;
        }
        dcur = std::move(din);
    }
    return result;
}

NetworkSpec default_cnn_spec() {
    NetworkSpec spec;
    spec.input = Shape{3, 32, 32};
    spec.layers = {conv2d(3, 12, 5, 5), relu(),          maxpool(2, 2), conv2d(12, 15, 5, 5),
                   relu(),              maxpool(2, 2),   flatten_layer(), dense(375, 138),
                   relu(),              dense(138, 10)};
    return spec;
}

NetworkSpec mlp_spec(std::size_t inputs, const std::vector<std::size_t>& hidden,
                     std::size_t classes) {
    NetworkSpec spec;
    spec.input = Shape{inputs, 1, 1};
    std::size_t cur = inputs;
    for (std::size_t h : hidden) {
        spec.layers.push_back(dense(cur, h));
        spec.layers.push_back(relu());
        cur = h;
    }
    spec.layers.push_back(dense(cur, classes));
    return spec;
}

}  // namespace gmw::nn
