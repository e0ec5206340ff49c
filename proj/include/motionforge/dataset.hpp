#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "motionforge/image.hpp"
#include "motionforge/synthesis.hpp"

namespace motionforge::dataset {

struct PersonAsset {
    std::string id;
    std::filesystem::path image_path;
    std::filesystem::path mask_path;
    imaging::ImageBuffer image;
    imaging::MaskBuffer mask;
};

struct BackgroundAsset {
    std::string id;
    std::filesystem::path image_path;
    imaging::ImageBuffer image;
};

struct ManifestRecord {
    std::string path;  // relative to the manifest root
    int label = 0;     // class index: falling=0 walking=1 standing=2 lying_down=3
    std::string action;
    std::string person_id;
    std::string background_id;
    std::uint64_t seed = 0;
    std::string settings_hash;
};

// Tab-separated, UTF-8, LF line endings. First line carries the format
// version, second line the column names, then one record per line.
struct Manifest {
    static constexpr int kFormatVersion = 1;
    std::filesystem::path root;  // directory the record paths are relative to
    std::vector<ManifestRecord> records;

    std::size_t size() const { return records.size(); }
};

void write_manifest(const Manifest& manifest, const std::filesystem::path& file);
Manifest read_manifest(const std::filesystem::path& file);  // root = file's directory

// Scans `person_dir` for `<id>/image.png` + `<id>/mask.png` pairs or flat
// `<id>.png` + `<id>_mask.png` pairs, and `background_dir` for PNG scenes.
// Pairs violating the invariants (size mismatch, empty mask, unreadable
// file) are skipped with a warning on stderr; empty results are an error.
std::pair<std::vector<PersonAsset>, std::vector<BackgroundAsset>> ingest_assets(
    const std::filesystem::path& person_dir, const std::filesystem::path& background_dir);

// Writes per_class_count samples for each of the four actions under
// out_dir/<action>/<index>.png plus out_dir/manifest.tsv. Persons and
// backgrounds are drawn uniformly per sample from a seed derived as
// mix(global_seed, sample_index); regeneration is byte-identical.
Manifest generate_dataset(const std::vector<PersonAsset>& persons,
                          const std::vector<BackgroundAsset>& backgrounds,
                          const synthesis::BlendSettings& settings,
                          const synthesis::JitterConfig& jitter_cfg,
                          int per_class_count, std::uint64_t global_seed,
                          const std::filesystem::path& out_dir);

// Stratified train/validation partition; exact and deterministic given seed.
std::pair<Manifest, Manifest> split(const Manifest& manifest, double val_fraction,
                                    std::uint64_t seed);

// Mini-batch tensors: CHW float per sample, RGB order, samples scaled to
// [0,1] after bilinear resize to target_size x target_size.
struct Batch {
    int count = 0;
    int size = 0;  // spatial side length
    std::vector<float> values;  // count * 3 * size * size
    std::vector<int> labels;
};

Batch load_batch(const Manifest& manifest, const std::vector<std::size_t>& indices,
                 int target_size);

// Converts one already-loaded image the same way load_batch does; the
// streaming path reuses this so online and offline inputs agree exactly.
std::vector<float> image_to_tensor(const imaging::ImageBuffer& image, int target_size);

}  // namespace motionforge::dataset
