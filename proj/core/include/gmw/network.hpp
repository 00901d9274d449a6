#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gmw::nn {

/// Activation shape (channels, height, width). Flat vectors use h = w = 1.
struct Shape {
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t size() const { return c * h * w; }
    bool is_flat() const { return h == 1 && w == 1; }
    bool operator==(const Shape&) const = default;
    std::string to_string() const;
};

enum class LayerKind { dense, conv2d, relu, maxpool, flatten };

/// One layer descriptor. Only the fields of the active kind are meaningful.
struct Layer {
    LayerKind kind = LayerKind::relu;

    // dense
    std::size_t in = 0;
    std::size_t out = 0;

    // conv2d
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t stride = 1;
    std::size_t padding = 0;

    // maxpool
    std::size_t pool = 0;
    std::size_t pool_stride = 0;

    bool trainable() const {
        return kind == LayerKind::dense || kind == LayerKind::conv2d;
    }
    std::size_t weight_count() const;
    std::size_t bias_count() const;
    std::string to_string() const;
    bool operator==(const Layer&) const = default;
};

Layer dense(std::size_t in, std::size_t out);
Layer conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h,
             std::size_t kernel_w, std::size_t stride = 1, std::size_t padding = 0);
Layer relu();
Layer maxpool(std::size_t k, std::size_t stride);
Layer flatten_layer();

/// Declarative network description. The layer chain must be shape-consistent;
/// validate() walks it and throws DimensionError naming the offending pair.
struct NetworkSpec {
    Shape input;
    std::vector<Layer> layers;

    void validate() const;
    Shape output_shape() const;
    /// Number of classes scored by the network (size of the final output).
    std::size_t class_count() const;

    /// Canonical text form, e.g.
    ///   input:3x32x32|conv:3:12:5x5:1:0|relu|maxpool:2:2|flatten|dense:400:10
    /// parse() also accepts the short forms conv:OUT:K and dense:OUT, inferring
    /// the input side from the running shape.
    std::string to_string() const;
    static NetworkSpec parse(const std::string& text);

    bool operator==(const NetworkSpec&) const = default;
};

/// Total trainable parameter count (weights + biases) of a spec.
std::size_t param_count(const NetworkSpec& spec);

/// A spec plus materialized parameters. weights[i]/biases[i] belong to
/// layers[i] and are empty for non-trainable layers.
/// Weight layouts (row-major): dense (out, in); conv2d (out_ch, in_ch, kh, kw).
struct Network {
    NetworkSpec spec;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Network zeros(const NetworkSpec& spec);
    bool operator==(const Network&) const = default;
};

/// Flat parameter encoding: all weight tensors in layer order, then all
/// biases in layer order.
using ParamVector = std::vector<double>;

struct Batch {
    std::vector<double> inputs;  // (n, c, h, w) row-major
    std::vector<int> labels;     // class indices in [0, C)
    std::size_t n = 0;
    Shape shape;
};

/// Per-layer gradient tensors, shape-congruent with the owning Network.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

ParamVector flatten(const Network& net);
void load(Network& net, std::span<const double> params);

/// Raw class scores (n x C, row-major); softmax is folded into ce_loss.
std::vector<double> forward(const Network& net, const Batch& batch);

/// Mean over the batch of -log softmax(logits)_label, max-shift stabilized.
double ce_loss(std::span<const double> logits, std::span<const int> labels);

struct BackwardResult {
    double loss = 0.0;
    Gradients grads;
};

/// Loss and exact parameter gradients of ce_loss(forward(net, batch)).
BackwardResult backward(const Network& net, const Batch& batch);

/// Fraction of rows whose argmax equals the label; argmax ties resolve to the
/// lowest class index.
double accuracy(std::span<const double> logits, std::span<const int> labels);

/// Sum of squared entries.
double l2_regularizer(std::span<const double> p);

/// Default CIFAR-10 network, 58,705 parameters:
///   conv 3->12 5x5            912   -> 12x28x28
///   relu, maxpool 2x2               -> 12x14x14
///   conv 12->15 5x5         4,515   -> 15x10x10
///   relu, maxpool 2x2               -> 15x5x5
///   flatten                         -> 375
///   dense 375->138         51,888
///   relu
///   dense 138->10           1,390
NetworkSpec default_cnn_spec();

/// Fully connected stack: input -> hidden... -> classes with relu between.
NetworkSpec mlp_spec(std::size_t inputs, const std::vector<std::size_t>& hidden,
                     std::size_t classes);

}  // namespace gmw::nn
