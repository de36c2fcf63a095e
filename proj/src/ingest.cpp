#include "simret/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <set>

#include "simret/binio.hpp"
#include "simret/error.hpp"
#include "simret/hash.hpp"
#include "simret/image_io.hpp"

namespace simret {

namespace fs = std::filesystem;

GrayRaster apply_preprocessing(GrayRaster r, const std::vector<std::string>& steps) {
    for (const std::string& s : steps) {
        if (s == "none") continue;
        if (s == "log_transform") {
            r = log_transform(r);
            continue;
        }
        throw DataError("unknown preprocessing step '" + s + "'");
    }
    return r;
}

std::vector<GrayRaster> scan_space(const SpaceDescriptor& sd) {
    std::error_code ec;
    if (!fs::is_directory(sd.root, ec))
        throw DataError("space '" + sd.name + "': root '" + sd.root +
                        "' is not a directory");

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(sd.root)) {
        if (!entry.is_regular_file()) continue;
        const std::string p = entry.path().string();
        if (is_supported_raster(p)) files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw DataError("space '" + sd.name + "': no rasters in '" + sd.root + "'");
    if (sd.expected_count && static_cast<int>(files.size()) != *sd.expected_count)
        throw DataError("space '" + sd.name + "': expected " +
                        std::to_string(*sd.expected_count) + " rasters, found " +
                        std::to_string(files.size()));

    std::set<std::string> stems;
    std::vector<GrayRaster> out;
    out.reserve(files.size());
    for (const std::string& f : files) {
        GrayRaster r = load_raster(f);
        if (!stems.insert(r.id).second)
            throw DataError("space '" + sd.name + "': duplicate image stem '" +
                            r.id + "'");
        out.push_back(apply_preprocessing(std::move(r), sd.preprocessing));
    }
    return out;
}

FeatureCache::FeatureCache(std::string root, bool enabled)
    : root_(root.empty() ? default_root() : std::move(root)), enabled_(enabled) {}

std::string FeatureCache::default_root() {
    if (const char* env = std::getenv("SIMRET_CACHE_DIR"); env && *env)
        return env;
    return ".simret-cache";
}

std::string FeatureCache::entry_path(const std::string& space,
                                     const GrayRaster& r,
                                     const ExtractorConfig& cfg) const {
    std::uint64_t content = fnv1a64(&r.width, sizeof r.width);
    content = fnv1a64(&r.height, sizeof r.height, content);
    content = fnv1a64(r.pixels.data(), r.pixels.size() * sizeof(float), content);
    const std::uint64_t conf = fnv1a64(cfg.cache_key_material());
    char name[128];
    std::snprintf(name, sizeof name, "%s-%016llx-%016llx.srfs", r.id.c_str(),
                  static_cast<unsigned long long>(content),
                  static_cast<unsigned long long>(conf));
    return (fs::path(root_) / space / name).string();
}

FeatureSet FeatureCache::get(const std::string& space, const GrayRaster& r,
                             const ExtractorConfig& cfg) {
    if (!enabled_) {
        FeatureSet fs_out = extract_grid(r, cfg);
        ++extractions_;
        canonicalize_f32(fs_out);
        return fs_out;
    }
    const std::string path = entry_path(space, r, cfg);
    if (fs::exists(path)) {
        try {
            return deserialize_features(binio::read_file(path));
        } catch (const DataError&) {
            std::fprintf(stderr, "warning: corrupt cache entry '%s'; recomputing\n",
                         path.c_str());
        }
    }
    FeatureSet fresh = extract_grid(r, cfg);
    ++extractions_;
    canonicalize_f32(fresh);
    try {
        std::error_code ec;
        fs::create_directories(fs::path(path).parent_path(), ec);
        binio::write_file_atomic(path, serialize_features(fresh));
    } catch (const DataError& e) {
        std::fprintf(stderr, "warning: cannot write cache entry: %s\n", e.what());
    }
    return fresh;
}

}  // namespace simret
