#include "gmw/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "gmw/errors.hpp"
#include "gmw/rng.hpp"

namespace gmw::data {

namespace {

constexpr std::size_t kCifarRecordBytes = 3073;  // 1 label + 3 * 1024 pixels
constexpr std::size_t kCifarPixels = 3072;

void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
}

void append_cifar_file(const std::string& path, Dataset& out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IngestionError("cannot open " + path);
    std::vector<unsigned char> record(kCifarRecordBytes);
    std::size_t offset = 0;
    while (true) {
        f.read(reinterpret_cast<char*>(record.data()), kCifarRecordBytes);
        const std::size_t got = static_cast<std::size_t>(f.gcount());
        if (got == 0) break;
        if (got != kCifarRecordBytes)
            throw IngestionError(path + ": truncated record at byte offset " +
                                 std::to_string(offset));
        const unsigned char label = record[0];
        if (label > 9)
            throw IngestionError(path + ": corrupt label " + std::to_string(label) +
                                 " at byte offset " + std::to_string(offset));
        out.labels.push_back(static_cast<int>(label));
        for (std::size_t i = 0; i < kCifarPixels; ++i)
            out.inputs.push_back(static_cast<double>(record[1 + i]) / 255.0 - 0.5);
        ++out.n;
        offset += kCifarRecordBytes;
    }
    if (out.n == 0) throw IngestionError(path + ": no records");
}

}  // namespace

void Dataset::validate() const {
    if (labels.size() != n || inputs.size() != n * shape.size())
        throw DimensionError("dataset '" + name + "': buffer sizes do not match n=" +
                             std::to_string(n));
    for (int label : labels)
        if (label < 0 || static_cast<std::size_t>(label) >= class_count)
            throw DimensionError("dataset '" + name + "': label " + std::to_string(label) +
                                 " outside [0, " + std::to_string(class_count) + ")");
}

std::pair<Dataset, Dataset> load_cifar10(const std::string& directory) {
    Dataset train, test;
    train.shape = test.shape = nn::Shape{3, 32, 32};
    train.class_count = test.class_count = 10;
    train.name = "cifar10-train";
    test.name = "cifar10-test";
    for (int i = 1; i <= 5; ++i)
        append_cifar_file(directory + "/data_batch_" + std::to_string(i) + ".bin", train);
    append_cifar_file(directory + "/test_batch.bin", test);
    train.validate();
    test.validate();
    return {std::move(train), std::move(test)};
}

Dataset make_blobs(std::size_t n, std::size_t classes, std::size_t dims, double spread,
                   std::uint64_t seed) {
    if (classes == 0 || n < classes) throw UsageError("make_blobs: need n >= classes >= 1");
    RngStream rng(seed);
    std::vector<double> centers(classes * dims);
    for (double& c : centers) c = rng.uniform(-1.0, 1.0);

    Dataset d;
    d.n = n;
    d.shape = nn::Shape{dims, 1, 1};
    d.class_count = classes;
    d.name = "blobs";
    d.inputs.resize(n * dims);
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % classes;  // balanced to within one
        d.labels[i] = static_cast<int>(cls);
        for (std::size_t j = 0; j < dims; ++j)
            d.inputs[i * dims + j] = centers[cls * dims + j] + spread * rng.normal();
    }
    d.validate();
    return d;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw UsageError("split: fraction must lie strictly between 0 and 1");
    d.validate();

    std::vector<std::vector<std::size_t>> per_class(d.class_count);
    for (std::size_t i = 0; i < d.n; ++i) per_class[d.labels[i]].push_back(i);

    RngStream rng(seed);
    std::vector<std::size_t> left_idx, right_idx;
    for (auto& idx : per_class) {
        shuffle_indices(idx, rng);
        const auto take = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k)
            (k < take ? left_idx : right_idx).push_back(idx[k]);
    }
    if (left_idx.empty() || right_idx.empty())
        throw UsageError("split: fraction " + std::to_string(fraction) + " leaves a side empty");
    std::sort(left_idx.begin(), left_idx.end());
    std::sort(right_idx.begin(), right_idx.end());

    auto build = [&](const std::vector<std::size_t>& idx, const char* tag) {
        Dataset part;
        part.shape = d.shape;
        part.class_count = d.class_count;
        part.name = d.name + tag;
        part.n = idx.size();
        part.labels.reserve(idx.size());
        part.inputs.reserve(idx.size() * d.shape.size());
        const std::size_t stride = d.shape.size();
        for (std::size_t i : idx) {
            part.labels.push_back(d.labels[i]);
            part.inputs.insert(part.inputs.end(), d.inputs.begin() + i * stride,
                               d.inputs.begin() + (i + 1) * stride);
        }
        return part;
    };
    return {build(left_idx, "-a"), build(right_idx, "-b")};
}

std::vector<nn::Batch> batches(const Dataset& d, const BatchPlan& plan) {
    if (plan.batch_size == 0) throw UsageError("batches: batch_size must be positive");
    d.validate();
    std::vector<std::size_t> order(d.n);
    std::iota(order.begin(), order.end(), 0);
    if (plan.shuffle) {
        RngStream rng(plan.seed);
        shuffle_indices(order, rng);
    }
    std::vector<nn::Batch> out;
    out.reserve((d.n + plan.batch_size - 1) / plan.batch_size);
    for (std::size_t start = 0; start < d.n; start += plan.batch_size) {
        const std::size_t end = std::min(d.n, start + plan.batch_size);
        out.push_back(gather(d, std::span<const std::size_t>(order.data() + start, end - start)));
    }
    return out;
}

Dataset select_classes(const Dataset& d, const std::vector<int>& classes) {
    if (classes.empty()) throw UsageError("select_classes: class list is empty");
    d.validate();
    std::vector<int> remap(d.class_count, -1);
    for (std::size_t k = 0; k < classes.size(); ++k) {
        const int c = classes[k];
        if (c < 0 || static_cast<std::size_t>(c) >= d.class_count)
            throw UsageError("select_classes: class " + std::to_string(c) + " outside [0, " +
                             std::to_string(d.class_count) + ")");
        if (remap[c] != -1) throw UsageError("select_classes: duplicate class in list");
        remap[c] = static_cast<int>(k);
    }
    Dataset out;
    out.shape = d.shape;
    out.class_count = classes.size();
    out.name = d.name + "-subset";
    const std::size_t stride = d.shape.size();
    for (std::size_t i = 0; i < d.n; ++i) {
        const int m = remap[d.labels[i]];
        if (m < 0) continue;
        out.labels.push_back(m);
        out.inputs.insert(out.inputs.end(), d.inputs.begin() + i * stride,
                          d.inputs.begin() + (i + 1) * stride);
        ++out.n;
    }
    if (out.n == 0) throw UsageError("select_classes: no samples left");
    out.validate();
    return out;
}

nn::Batch gather(const Dataset& d, std::span<const std::size_t> indices) {
    nn::Batch b;
    b.n = indices.size();
    b.shape = d.shape;
    const std::size_t stride = d.shape.size();
    b.inputs.reserve(b.n * stride);
    b.labels.reserve(b.n);
    for (std::size_t i : indices) {
        if (i >= d.n) throw UsageError("gather: index out of range");
        b.labels.push_back(d.labels[i]);
        b.inputs.insert(b.inputs.end(), d.inputs.begin() + i * stride,
                        d.inputs.begin() + (i + 1) * stride);
    }
    return b;
}

void export_csv(const Dataset& d, const std::string& path) {
    d.validate();
    std::ofstream f(path);
    if (!f) throw IngestionError("cannot write " + path);
    const std::size_t stride = d.shape.size();
    for (std::size_t j = 0; j < stride; ++j) f << "feat_" << j << ",";
    f << "label\n";
    char buf[32];
    for (std::size_t i = 0; i < d.n; ++i) {
        for (std::size_t j = 0; j < stride; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", d.inputs[i * stride + j]);
            f << buf << ",";
        }
        f << d.labels[i] << "\n";
    }
}

}  // namespace gmw::data
