#include "motionforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "motionforge/imaging.hpp"
#include "motionforge/png_io.hpp"
#include "motionforge/rng.hpp"

namespace motionforge::dataset {

namespace fs = std::filesystem;

void write_manifest(const Manifest& manifest, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);  // binary: LF endings everywhere
    if (!out) throw std::runtime_error("cannot write manifest: " + file.string());
    out << "motionforge-manifest\t" << Manifest::kFormatVersion << "\n";
    out << "path\tlabel\taction\tperson_id\tbackground_id\tseed\tsettings_hash\n";
    for (const auto& r : manifest.records) {
        out << r.path << '\t' << r.label << '\t' << r.action << '\t' << r.person_id << '\t'
            << r.background_id << '\t' << r.seed << '\t' << r.settings_hash << "\n";
    }
    if (!out) throw std::runtime_error("manifest write failed: " + file.string());
}

Manifest read_manifest(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read manifest: " + file.string());

    auto split_tabs = [](const std::string& line) {
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto pos = line.find('\t', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        return fields;
    };
    auto bad_line = [&](int line_no, const std::string& why) {
        throw std::runtime_error("manifest " + file.string() + " line " +
                                 std::to_string(line_no) + ": " + why);
    };

    Manifest manifest;
    manifest.root = file.parent_path();

    std::string line;
    int line_no = 0;

    if (!std::getline(in, line)) bad_line(1, "missing header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_tabs(line);
    if (header.size() != 2 || header[0] != "motionforge-manifest") {
        bad_line(line_no, "not a motionforge manifest");
    }
    if (header[1] != std::to_string(Manifest::kFormatVersion)) {
        bad_line(line_no, "unsupported manifest version " + header[1]);
    }
    if (!std::getline(in, line)) bad_line(2, "missing column header");
    ++line_no;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 7) bad_line(line_no, "expected 7 tab-separated fields");
        ManifestRecord r;
        r.path = fields[0];
        try {
            r.label = std::stoi(fields[1]);
            r.seed = std::stoull(fields[5]);
        } catch (const std::exception&) {
            bad_line(line_no, "malformed numeric field");
        }
        r.action = fields[2];
        r.person_id = fields[3];
        r.background_id = fields[4];
        r.settings_hash = fields[6];
        if (r.label < 0 || r.label > 3) bad_line(line_no, "label out of range");
        try {
            if (synthesis::action_index(synthesis::action_from_name(r.action)) != r.label) {
                bad_line(line_no, "label/action mismatch");
            }
        } catch (const std::invalid_argument&) {
            bad_line(line_no, "unknown action " + r.action);
        }
        manifest.records.push_back(std::move(r));
    }
    return manifest;
}

namespace {

bool load_person(PersonAsset& asset) {
    try {
        asset.image = imaging::read_png(asset.image_path);
        asset.mask = imaging::read_mask_png(asset.mask_path);
    } catch (const std::exception& e) {
        std::cerr << "warning: skipping person '" << asset.id << "': " << e.what() << "\n";
        return false;
    }
    if (asset.image.width != asset.mask.width || asset.image.height != asset.mask.height) {
        std::cerr << "warning: skipping person '" << asset.id
                  << "': image/mask size mismatch\n";
        return false;
    }
    if (std::find_if(asset.mask.data.begin(), asset.mask.data.end(),
                     [](std::uint8_t v) { return v != 0; }) == asset.mask.data.end()) {
        std::cerr << "warning: skipping person '" << asset.id << "': empty mask\n";
        return false;
    }
    return true;
}

}  // namespace

std::pair<std::vector<PersonAsset>, std::vector<BackgroundAsset>> ingest_assets(
    const fs::path& person_dir, const fs::path& background_dir) {
    if (!fs::is_directory(person_dir)) {
        throw std::runtime_error("person directory does not exist: " + person_dir.string());
    }
    if (!fs::is_directory(background_dir)) {
        throw std::runtime_error("background directory does not exist: " +
                                 background_dir.string());
    }

    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(person_dir)) entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());

    std::vector<PersonAsset> persons;
    for (const auto& entry : entries) {
        PersonAsset asset;
        if (fs::is_directory(entry)) {
            asset.id = entry.filename().string();
            asset.image_path = entry / "image.png";
            asset.mask_path = entry / "mask.png";
            if (!fs::exists(asset.image_path) || !fs::exists(asset.mask_path)) {
                std::cerr << "warning: skipping person '" << asset.id
                          << "': missing image.png or mask.png\n";
                continue;
            }
        } else {
            const std::string stem = entry.stem().string();
            if (entry.extension() != ".png" || stem.ends_with("_mask")) continue;
            asset.id = stem;
            asset.image_path = entry;
            asset.mask_path = entry.parent_path() / (stem + "_mask.png");
            if (!fs::exists(asset.mask_path)) {
                std::cerr << "warning: skipping person '" << asset.id
                          << "': missing " << asset.mask_path.filename().string() << "\n";
                continue;
            }
        }
        if (load_person(asset)) persons.push_back(std::move(asset));
    }
    if (persons.empty()) {
        throw std::runtime_error("no valid person assets in " + person_dir.string());
    }

    entries.clear();
    for (const auto& e : fs::directory_iterator(background_dir)) entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());

    std::vector<BackgroundAsset> backgrounds;
    for (const auto& entry : entries) {
        if (!fs::is_regular_file(entry) || entry.extension() != ".png") continue;
        BackgroundAsset asset;
        asset.id = entry.stem().string();
        asset.image_path = entry;
        try {
            asset.image = imaging::read_png(entry);
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping background '" << asset.id << "': " << e.what()
                      << "\n";
            continue;
        }
        backgrounds.push_back(std::move(asset));
    }
    if (backgrounds.empty()) {
        throw std::runtime_error("no valid background assets in " + background_dir.string());
    }
    return {std::move(persons), std::move(backgrounds)};
}

Manifest generate_dataset(const std::vector<PersonAsset>& persons,
                          const std::vector<BackgroundAsset>& backgrounds,
                          const synthesis::BlendSettings& settings,
                          const synthesis::JitterConfig& jitter_cfg,
                          int per_class_count, std::uint64_t global_seed,
                          const fs::path& out_dir) {
    if (per_class_count < 1) throw std::invalid_argument("per_class_count must be >= 1");
    if (persons.empty() || backgrounds.empty()) {
        throw std::invalid_argument("need at least one person and one background asset");
    }
    settings.validate();
    jitter_cfg.validate();

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    for (auto action : synthesis::kAllActions) {
        fs::create_directories(out_dir / synthesis::action_name(action), ec);
    }
    if (ec) throw std::runtime_error("cannot create dataset directory: " + out_dir.string());

    const int total = 4 * per_class_count;
    Manifest manifest;
    manifest.root = out_dir;
    manifest.records.resize(total);

    std::string first_error;

#pragma omp parallel for schedule(dynamic)
    for (int idx = 0; idx < total; ++idx) {
        const auto action = synthesis::action_from_index(idx / per_class_count);
        const int within = idx % per_class_count;
        try {
            const std::uint64_t sample_seed = mix_seed(global_seed, idx);
            Rng rng(sample_seed);
            const auto& person = persons[rng.uniform_int(persons.size())];
            const auto& bg = backgrounds[rng.uniform_int(backgrounds.size())];

            auto sample = synthesis::synthesize_sample(
                person.image, person.mask, person.id, bg.image, bg.id, action, settings,
                jitter_cfg, mix_seed(sample_seed, 3));

            char name[64];
            std::snprintf(name, sizeof(name), "%s/%06d.png",
                          synthesis::action_name(action), within);
            imaging::write_png(out_dir / name, sample.image);

            ManifestRecord r;
            r.path = name;
            r.label = synthesis::action_index(action);
            r.action = synthesis::action_name(action);
            r.person_id = sample.provenance.person_id;
            r.background_id = sample.provenance.background_id;
            r.seed = sample.provenance.seed;
            r.settings_hash = sample.provenance.settings_hash;
            manifest.records[idx] = std::move(r);
        } catch (const std::exception& e) {
#pragma omp critical
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!first_error.empty()) {
        throw std::runtime_error("dataset generation failed: " + first_error);
    }

    write_manifest(manifest, out_dir / "manifest.tsv");
    return manifest;
}

std::pair<Manifest, Manifest> split(const Manifest& manifest, double val_fraction,
                                    std::uint64_t seed) {
    if (!(val_fraction > 0.0) || !(val_fraction < 1.0)) {
        throw std::invalid_argument("val_fraction must lie in (0, 1)");
    }
    const std::size_t total = manifest.records.size();
    if (total < 2) throw std::invalid_argument("manifest too small to split");

    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < total; ++i) by_label[manifest.records[i].label].push_back(i);

    std::size_t total_val = static_cast<std::size_t>(std::llround(val_fraction * total));
    total_val = std::clamp<std::size_t>(total_val, 1, total - 1);

    // Largest-remainder apportionment of total_val across labels.
    struct Share {
        int label;
        std::size_t base;
        double remainder;
        std::size_t count;
    };
    std::vector<Share> shares;
    std::size_t assigned = 0;
    for (const auto& [label, idxs] : by_label) {
        const double ideal = val_fraction * static_cast<double>(idxs.size());
        Share s{label, static_cast<std::size_t>(std::floor(ideal)),
                ideal - std::floor(ideal), 0};
        s.base = std::min(s.base, idxs.size());
        s.count = s.base;
        assigned += s.base;
        shares.push_back(s);
    }
    std::vector<std::size_t> order(shares.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return shares[a].remainder > shares[b].remainder;
    });
    for (std::size_t i = 0; assigned < total_val; i = (i + 1) % order.size()) {
        Share& s = shares[order[i]];
        if (s.count < by_label[s.label].size()) {
            ++s.count;
            ++assigned;
        }
    }

    std::vector<bool> in_val(total, false);
    for (const auto& s : shares) {
        auto idxs = by_label[s.label];
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(s.label)));
        for (std::size_t i = idxs.size(); i > 1; --i) {  // Fisher-Yates
            std::swap(idxs[i - 1], idxs[rng.uniform_int(i)]);
        }
        for (std::size_t i = 0; i < s.count; ++i) in_val[idxs[i]] = true;
    }

    Manifest train, val;
    train.root = manifest.root;
    val.root = manifest.root;
    for (std::size_t i = 0; i < total; ++i) {
        (in_val[i] ? val : train).records.push_back(manifest.records[i]);
    }
    return {std::move(train), std::move(val)};
}

std::vector<float> image_to_tensor(const imaging::ImageBuffer& image, int target_size) {
    const imaging::ImageBuffer resized =
        (image.width == target_size && image.height == target_size)
            ? image
            : imaging::resize_bilinear(image, target_size, target_size);
    std::vector<float> values(static_cast<std::size_t>(3) * target_size * target_size);
    const std::size_t plane = static_cast<std::size_t>(target_size) * target_size;
    for (std::size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) {
            values[c * plane + p] = static_cast<float>(resized.data[p * 3 + c]) / 255.0f;
        }
    }
    return values;
}

Batch load_batch(const Manifest& manifest, const std::vector<std::size_t>& indices,
                 int target_size) {
    if (target_size < 1) throw std::invalid_argument("target_size must be >= 1");
    Batch batch;
    batch.count = static_cast<int>(indices.size());
    batch.size = target_size;
    const std::size_t per_sample = static_cast<std::size_t>(3) * target_size * target_size;
    batch.values.resize(per_sample * indices.size());
    batch.labels.resize(indices.size());

    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= manifest.records.size()) {
            throw std::out_of_range("batch index out of range");
        }
        const auto& record = manifest.records[indices[i]];
        const fs::path file = manifest.root / record.path;
        if (!fs::exists(file)) {
            throw std::runtime_error("missing sample file for record '" + record.path + "'");
        }
        const auto tensor = image_to_tensor(imaging::read_png(file), target_size);
        std::copy(tensor.begin(), tensor.end(), batch.values.begin() + i * per_sample);
        batch.labels[i] = record.label;
    }
    return batch;
}

}  // namespace motionforge::dataset
