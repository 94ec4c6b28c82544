#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "lanenum/dataset.hpp"

using namespace lanenum;
namespace fs = std::filesystem;

namespace {

DatasetRequest small_request() {
    DatasetRequest req;
    req.name = "unit";
    req.sample_count = 40;
    req.gen.width = 40;
    req.gen.height = 40;
    req.gen.temporal_radius = 1;
    req.seed = 77;
    req.corruption.line_dropout_p = 0.2;
    req.corruption.pixel_flip_q = 0.001;
    return req;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("dataset rejects fewer than 10 samples") {
    DatasetRequest req = small_request();
    req.sample_count = 9;
    CHECK_THROWS_AS(generate_dataset(req), DataError);
}

TEST_CASE("split is a disjoint 80:20 cover in sorted order") {
    DatasetRequest req = small_request();
    req.sample_count = 1000;
    req.gen.width = 24;  // keep the render cheap, geometry is irrelevant here
    req.gen.height = 24;
    const Dataset ds = generate_dataset(req);
    REQUIRE(ds.train_indices.size() == 800);
    REQUIRE(ds.test_indices.size() == 200);

    std::vector<int> all = ds.train_indices;
    all.insert(all.end(), ds.test_indices.begin(), ds.test_indices.end());
    std::sort(all.begin(), all.end());
    std::vector<int> expect(1000);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
    CHECK(std::is_sorted(ds.train_indices.begin(), ds.train_indices.end()));
    CHECK(std::is_sorted(ds.test_indices.begin(), ds.test_indices.end()));
}

TEST_CASE("class histogram counts every sample") {
    const Dataset ds = generate_dataset(small_request());
    int sum = 0;
    for (const int c : ds.meta.class_histogram) sum += c;
    CHECK(sum == ds.meta.sample_count);
}

TEST_CASE("the same request writes byte-identical files") {
    TempDir d1("lanenum_ds_a"), d2("lanenum_ds_b");
    save_dataset(d1.path, generate_dataset(small_request()));
    save_dataset(d2.path, generate_dataset(small_request()));
    for (const char* f : {"samples.bin", "manifest.json", "split.json"})
        CHECK(slurp(d1.path / f) == slurp(d2.path / f));
}

TEST_CASE("datasets round-trip through disk exactly") {
    TempDir dir("lanenum_ds_rt");
    const Dataset ds = generate_dataset(small_request());
    save_dataset(dir.path, ds);
    const Dataset back = load_dataset(dir.path);

    CHECK(back.meta.name == ds.meta.name);
    CHECK(back.meta.seed == ds.meta.seed);
    CHECK(back.meta.class_histogram == ds.meta.class_histogram);
    CHECK(back.train_indices == ds.train_indices);
    CHECK(back.test_indices == ds.test_indices);
    REQUIRE(back.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].label == ds.samples[i].label);
        CHECK(back.samples[i].image == ds.samples[i].image);
        REQUIRE(back.samples[i].masks.size() == ds.samples[i].masks.size());
        for (std::size_t k = 0; k < ds.samples[i].masks.size(); ++k)
            CHECK(back.samples[i].masks[k] == ds.samples[i].masks[k]);
        CHECK(!back.samples[i].scene.has_value());  // ground truth is not serialized
    }

    // Saving what was loaded reproduces the bytes.
    TempDir dir2("lanenum_ds_rt2");
    save_dataset(dir2.path, back);
    CHECK(slurp(dir.path / "samples.bin") == slurp(dir2.path / "samples.bin"));
}

TEST_CASE("generate_sample is order-independent") {
    const DatasetRequest req = small_request();
    const Sample direct = generate_sample(req, 17);
    const Dataset ds = generate_dataset(req);
    CHECK(direct.label == ds.samples[17].label);
    CHECK(direct.image == ds.samples[17].image);
    CHECK(direct.masks[0] == ds.samples[17].masks[0]);
    CHECK(direct.masks[2] == ds.samples[17].masks[2]);
    CHECK(direct.scene.has_value());
}

TEST_CASE("corrupt metadata and truncated payloads are rejected") {
    TempDir dir("lanenum_ds_bad");
    save_dataset(dir.path, generate_dataset(small_request()));

    SUBCASE("bad magic") {
        std::string bin = slurp(dir.path / "samples.bin");
        bin[0] = 'X';
        std::ofstream(dir.path / "samples.bin", std::ios::binary | std::ios::trunc) << bin;
        CHECK_THROWS_AS(load_dataset(dir.path), DataError);
    }
    SUBCASE("truncated samples") {
        std::string bin = slurp(dir.path / "samples.bin");
        bin.resize(bin.size() - 100);
        std::ofstream(dir.path / "samples.bin", std::ios::binary | std::ios::trunc) << bin;
        CHECK_THROWS_AS(load_dataset(dir.path), DataError);
    }
    SUBCASE("trailing bytes") {
        std::ofstream(dir.path / "samples.bin", std::ios::binary | std::ios::app) << "xx";
        CHECK_THROWS_AS(load_dataset(dir.path), DataError);
    }
    SUBCASE("manifest mismatch") {
        std::string manifest = slurp(dir.path / "manifest.json");
        const auto pos = manifest.find("\"sample_count\": 40");
        REQUIRE(pos != std::string::npos);
        manifest.replace(pos, 18, "\"sample_count\": 39");
        std::ofstream(dir.path / "manifest.json", std::ios::trunc) << manifest;
        CHECK_THROWS_AS(load_dataset(dir.path), DataError);
    }
    SUBCASE("missing file") {
        fs::remove(dir.path / "split.json");
        CHECK_THROWS_AS(load_dataset(dir.path), DataError);
    }
}
