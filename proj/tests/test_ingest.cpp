#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "simret/error.hpp"
#include "simret/features.hpp"
#include "simret/image_io.hpp"
#include "simret/ingest.hpp"
#include "simret/raster.hpp"
#include "support/synth.hpp"
#include "support/tmpdir.hpp"

using namespace simret;
namespace fs = std::filesystem;

namespace {

ExtractorConfig small_cfg() {
    ExtractorConfig cfg;
    cfg.grid_spacing = 16;
    cfg.scales = {32};
    return cfg;
}

// 16-bit PGM keeps enough precision that preprocessing tests see smooth data.
void put_image(const std::string& dir, const std::string& name,
               const GrayRaster& r) {
    save_pgm(r, (fs::path(dir) / name).string(), 16);
}

std::vector<std::string> srfs_entries(const std::string& root) {
    std::vector<std::string> out;
    if (!fs::exists(root)) return out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".srfs")
            out.push_back(e.path().string());
    return out;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("scan_space loads supported rasters sorted by filename") {
    synth::TmpDir tmp("ingest-scan");
    put_image(tmp.str(), "c.pgm", synth::gabor_texture(48, 48, 1));
    put_image(tmp.str(), "a.pgm", synth::gabor_texture(48, 48, 2));
    save_png_gray(synth::gabor_texture(48, 48, 3), tmp.file("b.png"));
    std::ofstream(tmp.file("notes.txt")) << "ignored";
    fs::create_directory(tmp.file("subdir"));

    SpaceDescriptor sd;
    sd.name = "demo";
    sd.root = tmp.str();
    const std::vector<GrayRaster> got = scan_space(sd);
    REQUIRE(got.size() == 3);
    CHECK(got[0].id == "a");
    CHECK(got[1].id == "b");
    CHECK(got[2].id == "c");
    for (const GrayRaster& r : got) {
        CHECK(r.width == 48);
        CHECK(r.height == 48);
    }
}

TEST_CASE("log_transform preprocessing equals the composed operation") {
    synth::TmpDir tmp("ingest-log");
    put_image(tmp.str(), "x.pgm", synth::ramp_x(32, 16));

    SpaceDescriptor plain;
    plain.name = "raw";
    plain.root = tmp.str();
    SpaceDescriptor logd = plain;
    logd.name = "shg";
    logd.preprocessing = {"log_transform"};

    const GrayRaster raw = scan_space(plain)[0];
    const GrayRaster cooked = scan_space(logd)[0];
    const GrayRaster want = log_transform(raw);
    REQUIRE(cooked.pixels.size() == want.pixels.size());
    for (std::size_t i = 0; i < want.pixels.size(); ++i)
        CHECK(cooked.pixels[i] == want.pixels[i]);
}

TEST_CASE("preprocessing chain semantics") {
    const GrayRaster r = synth::ramp_x(16, 8);

    const GrayRaster same = apply_preprocessing(r, {});
    for (std::size_t i = 0; i < r.pixels.size(); ++i)
        CHECK(same.pixels[i] == r.pixels[i]);
    const GrayRaster none = apply_preprocessing(r, {"none", "none"});
    for (std::size_t i = 0; i < r.pixels.size(); ++i)
        CHECK(none.pixels[i] == r.pixels[i]);

    const GrayRaster twice = apply_preprocessing(r, {"log_transform", "log_transform"});
    const GrayRaster want = log_transform(log_transform(r));
    for (std::size_t i = 0; i < r.pixels.size(); ++i)
        CHECK(twice.pixels[i] == want.pixels[i]);

    CHECK_THROWS_AS(apply_preprocessing(r, {"sharpen"}), DataError);
}

TEST_CASE("scan_space error cases") {
    synth::TmpDir tmp("ingest-err");

    SpaceDescriptor sd;
    sd.name = "bad";
    sd.root = tmp.file("missing-dir");
    CHECK_THROWS_AS(scan_space(sd), DataError);

    sd.root = tmp.str();  // exists but empty
    CHECK_THROWS_AS(scan_space(sd), DataError);

    put_image(tmp.str(), "a.pgm", synth::gabor_texture(32, 32, 1));
    put_image(tmp.str(), "b.pgm", synth::gabor_texture(32, 32, 2));
    sd.expected_count = 3;
    CHECK_THROWS_AS(scan_space(sd), DataError);
    sd.expected_count = 2;
    CHECK(scan_space(sd).size() == 2);

    // Same stem under two supported extensions.
    save_png_gray(synth::gabor_texture(32, 32, 3), tmp.file("a.png"));
    sd.expected_count.reset();
    CHECK_THROWS_AS(scan_space(sd), DataError);
}

TEST_CASE("feature cache hits skip extraction and reproduce bytes") {
    synth::TmpDir tmp("ingest-cache");
    FeatureCache cache(tmp.file("cache"));
    REQUIRE(cache.enabled());

    const GrayRaster img = synth::gabor_texture(96, 96, 9);
    const auto cfg = small_cfg();

    const FeatureSet first = cache.get("spaceA", img, cfg);
    CHECK(cache.extractions() == 1);
    const FeatureSet again = cache.get("spaceA", img, cfg);
    CHECK(cache.extractions() == 1);
    CHECK(serialize_features(again) == serialize_features(first));

    // Cached result equals a fresh canonical extraction.
    FeatureSet fresh = extract_grid(img, cfg);
    canonicalize_f32(fresh);
    CHECK(serialize_features(first) == serialize_features(fresh));

    CHECK(srfs_entries(tmp.file("cache")).size() == 1);
}

TEST_CASE("config or content changes force a recompute") {
    synth::TmpDir tmp("ingest-rekey");
    FeatureCache cache(tmp.file("cache"));
    const GrayRaster img = synth::gabor_texture(96, 96, 10);

    auto cfg = small_cfg();
    (void)cache.get("s", img, cfg);
    CHECK(cache.extractions() == 1);

    auto cfg2 = cfg;
    cfg2.grid_spacing = 8;
    (void)cache.get("s", img, cfg2);
    CHECK(cache.extractions() == 2);

    GrayRaster poked = img;
    poked.pixels[500] = 1.0f - poked.pixels[500];
    (void)cache.get("s", poked, cfg);
    CHECK(cache.extractions() == 3);

    // All three keys now live side by side; no more extractions needed.
    (void)cache.get("s", img, cfg);
    (void)cache.get("s", img, cfg2);
    (void)cache.get("s", poked, cfg);
    CHECK(cache.extractions() == 3);
    CHECK(srfs_entries(tmp.file("cache")).size() == 3);
}

TEST_CASE("corrupt cache entries are recomputed and rewritten") {
    synth::TmpDir tmp("ingest-corrupt");
    FeatureCache cache(tmp.file("cache"));
    const GrayRaster img = synth::gabor_texture(96, 96, 11);
    const auto cfg = small_cfg();

    const FeatureSet good = cache.get("s", img, cfg);
    const auto entries = srfs_entries(tmp.file("cache"));
    REQUIRE(entries.size() == 1);

    {
        std::ofstream out(entries[0], std::ios::binary | std::ios::trunc);
        out << "garbage bytes, not a feature file";
    }
    const FeatureSet redone = cache.get("s", img, cfg);
    CHECK(cache.extractions() == 2);
    CHECK(serialize_features(redone) == serialize_features(good));

    // The rewrite healed the entry.
    const FeatureSet cached = cache.get("s", img, cfg);
    CHECK(cache.extractions() == 2);
    CHECK(serialize_features(cached) == serialize_features(good));
}

TEST_CASE("disabled cache always extracts and writes nothing") {
    synth::TmpDir tmp("ingest-nocache");
    FeatureCache cache(tmp.file("cache"), false);
    CHECK(!cache.enabled());
    const GrayRaster img = synth::gabor_texture(96, 96, 12);
    const auto cfg = small_cfg();

    const FeatureSet a = cache.get("s", img, cfg);
    const FeatureSet b = cache.get("s", img, cfg);
    CHECK(cache.extractions() == 2);
    CHECK(serialize_features(a) == serialize_features(b));
    CHECK(srfs_entries(tmp.file("cache")).empty());

    FeatureCache enabled(tmp.file("cache"));
    const FeatureSet c = enabled.get("s", img, cfg);
    CHECK(serialize_features(c) == serialize_features(a));
}

TEST_CASE("cache root resolution order") {
    synth::TmpDir tmp("ingest-root");

    const FeatureCache explicit_root(tmp.file("explicit"));
    CHECK(explicit_root.root() == tmp.file("explicit"));

    REQUIRE(setenv("SIMRET_CACHE_DIR", tmp.file("from-env").c_str(), 1) == 0);
    CHECK(FeatureCache::default_root() == tmp.file("from-env"));
    const FeatureCache env_root;
    CHECK(env_root.root() == tmp.file("from-env"));
    // Explicit argument still wins over the environment.
    const FeatureCache still_explicit(tmp.file("explicit"));
    CHECK(still_explicit.root() == tmp.file("explicit"));

    REQUIRE(unsetenv("SIMRET_CACHE_DIR") == 0);
    CHECK(FeatureCache::default_root() == ".simret-cache");
}

TEST_CASE("cache keys separate spaces") {
    synth::TmpDir tmp("ingest-spaces");
    FeatureCache cache(tmp.file("cache"));
    const GrayRaster img = synth::gabor_texture(96, 96, 13);
    const auto cfg = small_cfg();

    (void)cache.get("alpha", img, cfg);
    (void)cache.get("beta", img, cfg);
    // Same content hashes to the same key material, but the space prefix
    // keeps the entries apart on disk.
    CHECK(srfs_entries(tmp.file("cache")).size() == 2);
    CHECK(fs::exists(fs::path(tmp.file("cache")) / "alpha"));
    CHECK(fs::exists(fs::path(tmp.file("cache")) / "beta"));
}

}  // TEST_SUITE
