#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "gmw/dataset.hpp"
#include "gmw/errors.hpp"
#include "gmw/hybrid.hpp"
#include "gmw/rng.hpp"

using namespace gmw;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("gmw_data_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

// writes CIFAR-format records with label = i % 10 and pixel value = i % 256
void write_cifar_file(const fs::path& p, std::size_t records, unsigned label_offset = 0) {
    std::ofstream f(p, std::ios::binary);
    REQUIRE(f.good());
    for (std::size_t i = 0; i < records; ++i) {
        const unsigned char label = static_cast<unsigned char>((i + label_offset) % 10);
        f.put(static_cast<char>(label));
        for (std::size_t b = 0; b < 3072; ++b)
            f.put(static_cast<char>((i + b) % 256));
    }
}

void write_cifar_layout(const fs::path& dir, std::size_t per_file) {
    for (int i = 1; i <= 5; ++i)
        write_cifar_file(dir / ("data_batch_" + std::to_string(i) + ".bin"), per_file, i);
    write_cifar_file(dir / "test_batch.bin", per_file, 7);
}

}  // namespace

TEST_CASE("cifar10 loader parses the binary layout") {
    TempDir tmp;
    write_cifar_layout(tmp.path, 20);
    auto [train, test] = data::load_cifar10(tmp.path.string());
    CHECK(train.n == 100);
    CHECK(test.n == 20);
    CHECK(train.shape == nn::Shape{3, 32, 32});
    CHECK(train.class_count == 10);

    // byte 255 scales to 255/255 - 0.5 = 0.5; byte 0 to -0.5
    for (double v : train.inputs) {
        CHECK(v >= -0.5);
        CHECK(v <= 0.5);
    }
    // first record of data_batch_1: label (0+1)%10 = 1, first pixel byte (0+0)%256
    CHECK(train.labels[0] == 1);
    CHECK(train.inputs[0] == doctest::Approx(0.0 / 255.0 - 0.5));
    // a byte of exactly 255 appears at pixel index 254 of record 1 (1+254=255)
    CHECK(train.inputs[1 * 3072 + 254] == doctest::Approx(0.5));

    // byte-exact re-read
    auto [train2, test2] = data::load_cifar10(tmp.path.string());
    CHECK(train2.inputs == train.inputs);
    CHECK(train2.labels == train.labels);
}

TEST_CASE("cifar10 loader reports truncation with the byte offset") {
    TempDir tmp;
    write_cifar_layout(tmp.path, 3);
    // chop the second record of data_batch_2 in half
    const fs::path victim = tmp.path / "data_batch_2.bin";
    fs::resize_file(victim, 3073 + 1500);
    CHECK_THROWS_WITH_AS(data::load_cifar10(tmp.path.string()),
                         doctest::Contains("byte offset 3073"), IngestionError);
}

TEST_CASE("cifar10 loader rejects corrupt labels and missing files") {
    TempDir tmp;
    write_cifar_layout(tmp.path, 3);
    {
        std::fstream f(tmp.path / "data_batch_4.bin",
                       std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(3073);  // label byte of the second record
        f.put(static_cast<char>(11));
    }
    CHECK_THROWS_WITH_AS(data::load_cifar10(tmp.path.string()), doctest::Contains("label 11"),
                         IngestionError);

    fs::remove(tmp.path / "data_batch_4.bin");
    CHECK_THROWS_WITH_AS(data::load_cifar10(tmp.path.string()),
                         doctest::Contains("data_batch_4.bin"), IngestionError);
}

TEST_CASE("make_blobs") {
    SUBCASE("zero spread collapses each class to its center") {
        const data::Dataset d = data::make_blobs(30, 3, 4, 0.0, 42);
        CHECK(d.n == 30);
        // nearest-centroid on the exact centers scores 1.0: all same-class
        // samples are identical
        for (std::size_t i = 0; i < d.n; ++i) {
            const std::size_t j = (i % 3);  // class of sample i
            for (std::size_t k = 0; k < 4; ++k)
                CHECK(d.inputs[i * 4 + k] == d.inputs[j * 4 + k]);
        }
    }
    SUBCASE("same seed reproduces the dataset; labels balanced") {
        const data::Dataset a = data::make_blobs(100, 3, 5, 0.7, 9);
        const data::Dataset b = data::make_blobs(100, 3, 5, 0.7, 9);
        CHECK(a.inputs == b.inputs);
        CHECK(a.labels == b.labels);
        std::vector<int> counts(3, 0);
        for (int label : a.labels) ++counts[label];
        for (int c : counts) CHECK(std::abs(c - 33) <= 1);
    }
    SUBCASE("well-separated blobs are learnable by a small MLP") {
        const data::Dataset d = data::make_blobs(300, 3, 8, 0.05, 7);
        const nn::NetworkSpec spec = nn::mlp_spec(8, {16}, 3);
        nn::Network net = nn::Network::zeros(spec);
        RngStream rng(1);
        nn::ParamVector p(nn::param_count(spec));
        for (double& v : p) v = rng.uniform(-0.1, 0.1);
        nn::load(net, p);
        for (int epoch = 0; epoch < 60; ++epoch)
            hybrid::sgd_epoch(net, d, 0.05, 16, rng);
        const hybrid::DataEval ev = hybrid::evaluate_on(net, d);
        CHECK(ev.accuracy >= 0.99);
    }
}

TEST_CASE("split is stratified, disjoint and exhaustive") {
    const data::Dataset d = data::make_blobs(100, 5, 3, 0.5, 21);
    auto [left, right] = data::split(d, 0.8, 5);
    CHECK(left.n == 80);
    CHECK(right.n == 20);

    std::vector<int> lcount(5, 0), rcount(5, 0);
    for (int label : left.labels) ++lcount[label];
    for (int label : right.labels) ++rcount[label];
    for (int c = 0; c < 5; ++c) {
        CHECK(std::abs(lcount[c] - 16) <= 1);
        CHECK(lcount[c] + rcount[c] == 20);
    }

    // union of parts == original multiset of rows
    auto row_key = [&](const data::Dataset& ds, std::size_t i) {
        std::string k = std::to_string(ds.labels[i]);
        for (std::size_t j = 0; j < 3; ++j) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "|%.17g", ds.inputs[i * 3 + j]);
            k += buf;
        }
        return k;
    };
    std::vector<std::string> all, parts;
    for (std::size_t i = 0; i < d.n; ++i) all.push_back(row_key(d, i));
    for (std::size_t i = 0; i < left.n; ++i) parts.push_back(row_key(left, i));
    for (std::size_t i = 0; i < right.n; ++i) parts.push_back(row_key(right, i));
    std::sort(all.begin(), all.end());
    std::sort(parts.begin(), parts.end());
    CHECK(all == parts);

    CHECK_THROWS_AS(data::split(d, 0.0001, 5), UsageError);
    CHECK_THROWS_AS(data::split(d, 1.5, 5), UsageError);
}

TEST_CASE("batches cover every sample once") {
    const data::Dataset d = data::make_blobs(10, 2, 3, 0.5, 33);
    SUBCASE("sizes and natural order") {
        const auto bs = data::batches(d, {3, false, 0});
        REQUIRE(bs.size() == 4);
        CHECK(bs[0].n == 3);
        CHECK(bs[3].n == 1);
        CHECK(bs[0].labels[0] == d.labels[0]);
        CHECK(bs[0].inputs[0] == d.inputs[0]);
    }
    SUBCASE("shuffle is a seed-determined permutation") {
        const auto a = data::batches(d, {4, true, 77});
        const auto b = data::batches(d, {4, true, 77});
        const auto c = data::batches(d, {4, true, 78});
        REQUIRE(a.size() == b.size());
        bool same_as_c = true;
        std::vector<int> seen;
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k].labels == b[k].labels);
            CHECK(a[k].inputs == b[k].inputs);
            if (a[k].labels != c[k].labels) same_as_c = false;
            for (int label : a[k].labels) seen.push_back(label);
        }
        CHECK_FALSE(same_as_c);
        std::vector<int> want = d.labels;
        std::sort(want.begin(), want.end());
        std::sort(seen.begin(), seen.end());
        CHECK(seen == want);  // every epoch is a permutation
    }
}

TEST_CASE("select_classes relabels in list order") {
    const data::Dataset d = data::make_blobs(60, 5, 3, 0.3, 11);
    const data::Dataset sub = data::select_classes(d, {3, 1});
    CHECK(sub.class_count == 2);
    CHECK(sub.n == 24);
    for (int label : sub.labels) CHECK((label == 0 || label == 1));
    CHECK_THROWS_AS(data::select_classes(d, {9}), UsageError);
    CHECK_THROWS_AS(data::select_classes(d, {1, 1}), UsageError);
}

TEST_CASE("export_csv writes one row per sample") {
    TempDir tmp;
    const data::Dataset d = data::make_blobs(12, 3, 2, 0.4, 8);
    const auto path = (tmp.path / "blobs.csv").string();
    data::export_csv(d, path);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "feat_0,feat_1,label");
    std::size_t rows = 0;
    while (std::getline(f, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 12);
}
