#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "motionforge/image.hpp"

namespace motionforge::synthesis {

enum class ActionKind { Falling = 0, Walking = 1, Standing = 2, LyingDown = 3 };

constexpr std::array<ActionKind, 4> kAllActions = {
    ActionKind::Falling, ActionKind::Walking, ActionKind::Standing, ActionKind::LyingDown};

// Falling and Walking are motional (trained on avg of the rendered
// sequence); Standing and LyingDown are motionless (trained on the last
// rendered frame alone).
inline bool is_motional(ActionKind a) {
    return a == ActionKind::Falling || a == ActionKind::Walking;
}

const char* action_name(ActionKind a);
ActionKind action_from_name(const std::string& name);  // throws on unknown
inline int action_index(ActionKind a) { return static_cast<int>(a); }
ActionKind action_from_index(int idx);  // throws on out-of-range

// Photometric / geometric jitter applied to a person image before cutout.
// Each effect fires independently with its probability; values are drawn
// uniformly from the stated range.
struct JitterConfig {
    double brightness_prob = 0.5;
    double brightness_min = -0.2, brightness_max = 0.2;  // fraction of full scale
    double contrast_prob = 0.5;
    double contrast_min = 0.8, contrast_max = 1.25;
    double hue_prob = 0.5;
    double hue_min = -0.05, hue_max = 0.05;  // fraction of the full hue circle
    double blur_prob = 0.5;
    double blur_sigma_min = 0.0, blur_sigma_max = 1.5;  // pixels
    double noise_prob = 0.5;
    double noise_sigma_min = 0.0, noise_sigma_max = 8.0;  // sample units
    double flip_prob = 0.5;

    void validate() const;  // throws on out-of-range fields

    // Identity configuration: nothing ever fires.
    static JitterConfig disabled();
};

// Geometry of one scripted action: N sprite->background transforms.
struct MotionScript {
    ActionKind action;
    int n_steps = 0;
    std::vector<imaging::AffineTransform> poses;
};

// Placement ranges for scripting, all as fractions of the background size.
struct BlendSettings {
    double scale_min = 0.4, scale_max = 0.6;        // person height / background height
    double transition_min = 0.01, transition_max = 0.02;  // per-step displacement
    double floor_min = 0.8, floor_max = 0.95;       // floor line / background height
    int n_steps = 10;

    void validate() const;

    static BlendSettings preset(const std::string& name);  // "urfd-like" | "aihub-like"
};

struct SampleProvenance {
    std::string person_id;
    std::string background_id;
    std::uint64_t seed = 0;
    std::string settings_hash;
};

struct TrainingSample {
    imaging::ImageBuffer image;
    ActionKind label;
    SampleProvenance provenance;
};

// FNV-1a over the canonical serialization of the synthesis knobs; recorded
// per sample so a manifest pins the exact generator configuration.
std::string settings_hash(const BlendSettings& settings, const JitterConfig& cfg);

// Applies a seeded random subset of jitter effects. Photometric effects touch
// only the pixels; a horizontal flip (if drawn) flips pixels and mask both.
std::pair<imaging::ImageBuffer, imaging::MaskBuffer> jitter(
    const imaging::ImageBuffer& image, const imaging::MaskBuffer& mask,
    const JitterConfig& cfg, std::uint64_t rng_seed);

// Crops to the mask bounding box; the mask becomes the sprite alpha and the
// anchor sits at the bottom-center of the box. Throws on an all-zero mask.
imaging::Sprite cutout(const imaging::ImageBuffer& image, const imaging::MaskBuffer& mask);

// Draws scale / placement / motion parameters from the settings ranges and
// builds the N-pose script for the action. Deterministic given the seed.
MotionScript script_for_action(ActionKind action, const BlendSettings& settings,
                               int sprite_width, int sprite_height,
                               int background_width, int background_height,
                               std::uint64_t rng_seed);

// r_i = composite(background, warp(sprite, pose_i)) for each scripted pose.
std::vector<imaging::ImageBuffer> render_sequence(const imaging::Sprite& sprite,
                                                  const imaging::ImageBuffer& background,
                                                  const MotionScript& script);

// Full pipeline: jitter -> cutout -> script -> render -> (last frame for
// motionless actions, mean of all frames for motional ones).
TrainingSample synthesize_sample(const imaging::ImageBuffer& person,
                                 const imaging::MaskBuffer& mask,
                                 const std::string& person_id,
                                 const imaging::ImageBuffer& background,
                                 const std::string& background_id,
                                 ActionKind action, const BlendSettings& settings,
                                 const JitterConfig& cfg, std::uint64_t seed);

// Same pipeline, also returning the rendered sequence (contact-sheet previews
// and closed-loop stream tests consume the individual frames).
TrainingSample synthesize_sample_with_frames(const imaging::ImageBuffer& person,
                                             const imaging::MaskBuffer& mask,
                                             const std::string& person_id,
                                             const imaging::ImageBuffer& background,
                                             const std::string& background_id,
                                             ActionKind action, const BlendSettings& settings,
                                             const JitterConfig& cfg, std::uint64_t seed,
                                             std::vector<imaging::ImageBuffer>& frames_out);

}  // namespace motionforge::synthesis
