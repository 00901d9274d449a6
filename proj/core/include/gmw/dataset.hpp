#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmw/network.hpp"

namespace gmw::data {

/// Immutable sample collection. Inputs are (n, c, h, w) row-major; flat
/// feature data uses shape (features, 1, 1).
struct Dataset {
    std::vector<double> inputs;
    std::vector<int> labels;
    std::size_t n = 0;
    nn::Shape shape;
    std::size_t class_count = 0;
    std::string name;

    void validate() const;
};

struct BatchPlan {
    std::size_t batch_size = 32;
    bool shuffle = false;
    std::uint64_t seed = 0;
};

/// Reads the CIFAR-10 binary distribution: data_batch_1..5.bin plus
/// test_batch.bin, 3073-byte records (1 label byte, then 1024-byte R, G, B
/// planes of a row-major 32x32 image). Pixels are scaled to [0,1] and
/// shifted by -0.5, so values land in [-0.5, 0.5].
std::pair<Dataset, Dataset> load_cifar10(const std::string& directory);

/// Isotropic Gaussian clusters at seed-determined centers in [-1,1]^dims;
/// labels balanced to within one sample.
Dataset make_blobs(std::size_t n, std::size_t classes, std::size_t dims, double spread,
                   std::uint64_t seed);

/// Stratified split: per class a seed-determined shuffle, first
/// round(fraction * count) samples to the left side. Disjoint and exhaustive.
std::pair<Dataset, Dataset> split(const Dataset& d, double fraction, std::uint64_t seed);

/// ceil(n / batch_size) batches covering every sample once; the final batch
/// may be short. Order is the seeded permutation when shuffle is set, else
/// the dataset order.
std::vector<nn::Batch> batches(const Dataset& d, const BatchPlan& plan);

/// Keeps only the listed classes and relabels them 0..k-1 in list order.
Dataset select_classes(const Dataset& d, const std::vector<int>& classes);

/// Gathers the given sample indices into one batch.
nn::Batch gather(const Dataset& d, std::span<const std::size_t> indices);

/// Writes feature columns plus a label column, one row per sample.
void export_csv(const Dataset& d, const std::string& path);

}  // namespace gmw::data
