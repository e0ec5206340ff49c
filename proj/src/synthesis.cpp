#include "motionforge/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "motionforge/imaging.hpp"
#include "motionforge/rng.hpp"

namespace motionforge::synthesis {

using imaging::AffineTransform;
using imaging::ImageBuffer;
using imaging::MaskBuffer;
using imaging::Sprite;

const char* action_name(ActionKind a) {
    switch (a) {
        case ActionKind::Falling: return "falling";
        case ActionKind::Walking: return "walking";
        case ActionKind::Standing: return "standing";
        case ActionKind::LyingDown: return "lying_down";
    }
    throw std::invalid_argument("invalid action");
}

ActionKind action_from_name(const std::string& name) {
    for (ActionKind a : kAllActions) {
        if (name == action_name(a)) return a;
    }
    throw std::invalid_argument("unknown action name: " + name);
}

ActionKind action_from_index(int idx) {
    if (idx < 0 || idx > 3) throw std::invalid_argument("action index out of range");
    return static_cast<ActionKind>(idx);
}

void JitterConfig::validate() const {
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob_ok(brightness_prob) || !prob_ok(contrast_prob) || !prob_ok(hue_prob) ||
        !prob_ok(blur_prob) || !prob_ok(noise_prob) || !prob_ok(flip_prob)) {
        throw std::invalid_argument("jitter probabilities must lie in [0,1]");
    }
    if (brightness_min > brightness_max || contrast_min > contrast_max ||
        hue_min > hue_max || blur_sigma_min > blur_sigma_max ||
        noise_sigma_min > noise_sigma_max) {
        throw std::invalid_argument("jitter range lower bound exceeds upper bound");
    }
}

JitterConfig JitterConfig::disabled() {
    JitterConfig cfg;
    cfg.brightness_prob = cfg.contrast_prob = cfg.hue_prob = 0.0;
    cfg.blur_prob = cfg.noise_prob = cfg.flip_prob = 0.0;
    return cfg;
}

void BlendSettings::validate() const {
    if (!(scale_min > 0.0) || scale_max > 1.0 || scale_min > scale_max) {
        throw std::invalid_argument("scale range must lie within (0, 1]");
    }
    if (transition_min < 0.0 || transition_min > transition_max) {
        throw std::invalid_argument("transition range must be nonnegative");
    }
    if (floor_min < 0.0 || floor_max > 1.0 || floor_min > floor_max) {
        throw std::invalid_argument("floor-line band must lie within [0, 1]");
    }
    if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
}

BlendSettings BlendSettings::preset(const std::string& name) {
    // urfd-like: close-range indoor camera -> large person, small travel.
    // aihub-like: wide surveillance view -> small person, larger travel.
    BlendSettings s;
    if (name == "urfd-like") {
        s.scale_min = 0.4;
        s.scale_max = 0.6;
        s.transition_min = 0.01;
        s.transition_max = 0.02;
        s.floor_min = 0.8;
        s.floor_max = 0.95;
    } else if (name == "aihub-like") {
        s.scale_min = 0.15;
        s.scale_max = 0.3;
        s.transition_min = 0.02;
        s.transition_max = 0.045;
        s.floor_min = 0.7;
        s.floor_max = 0.95;
    } else {
        throw std::invalid_argument("unknown blend preset: " + name);
    }
    return s;
}

std::string settings_hash(const BlendSettings& settings, const JitterConfig& cfg) {
    char buf[1024];
    const int n = std::snprintf(
        buf, sizeof(buf),
        "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%d|"
        "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|"
        "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g",
        settings.scale_min, settings.scale_max, settings.transition_min,
        settings.transition_max, settings.floor_min, settings.floor_max, settings.n_steps,
        cfg.brightness_prob, cfg.brightness_min, cfg.brightness_max, cfg.contrast_prob,
        cfg.contrast_min, cfg.contrast_max, cfg.hue_prob, cfg.hue_min, cfg.hue_max,
        cfg.blur_prob, cfg.blur_sigma_min, cfg.blur_sigma_max, cfg.noise_prob,
        cfg.noise_sigma_min, cfg.noise_sigma_max, cfg.flip_prob);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (int i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(buf[i]);
        h *= 0x100000001b3ull;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

namespace {

inline std::uint8_t clamp_u8(double v) {
    const double r = std::floor(v + 0.5);
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

void apply_brightness(ImageBuffer& img, double delta_fraction) {
    const double delta = delta_fraction * 255.0;
    for (auto& s : img.data) s = clamp_u8(s + delta);
}

void apply_contrast(ImageBuffer& img, double factor) {
    for (auto& s : img.data) s = clamp_u8((s - 127.5) * factor + 127.5);
}

// Hue rotation through HSV; saturation and value are preserved.
void apply_hue_shift(ImageBuffer& img, double circle_fraction) {
    const double shift = circle_fraction * 6.0;
    const std::size_t px = img.data.size() / 3;
    for (std::size_t i = 0; i < px; ++i) {
        std::uint8_t* p = img.data.data() + i * 3;
        const double r = p[0], g = p[1], b = p[2];
        const double mx = std::max({r, g, b});
        const double mn = std::min({r, g, b});
        const double delta = mx - mn;
        if (delta == 0.0) continue;  // gray: hue undefined
        double h;
        if (mx == r) h = std::fmod((g - b) / delta, 6.0);
        else if (mx == g) h = (b - r) / delta + 2.0;
        else h = (r - g) / delta + 4.0;
        h = std::fmod(h + shift + 12.0, 6.0);
        const double c = delta;
        const double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
        const double m = mx - c;
        double rr = 0, gg = 0, bb = 0;
        switch (static_cast<int>(h)) {
            case 0: rr = c; gg = x; break;
            case 1: rr = x; gg = c; break;
            case 2: gg = c; bb = x; break;
            case 3: gg = x; bb = c; break;
            case 4: rr = x; bb = c; break;
            default: rr = c; bb = x; break;
        }
        p[0] = clamp_u8(rr + m);
        p[1] = clamp_u8(gg + m);
        p[2] = clamp_u8(bb + m);
    }
}

void apply_gaussian_blur(ImageBuffer& img, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    if (radius < 1) return;
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int j = -radius; j <= radius; ++j) {
        kernel[j + radius] = std::exp(-(j * j) / (2.0 * sigma * sigma));
        sum += kernel[j + radius];
    }
    for (auto& k : kernel) k /= sum;

    const int w = img.width, h = img.height;
    auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    std::vector<double> tmp(img.data.size());
    // horizontal pass
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                double acc = 0.0;
                for (int j = -radius; j <= radius; ++j) {
                    acc += kernel[j + radius] * img.at(clampi(x + j, w - 1), y, ch);
                }
                tmp[(static_cast<std::size_t>(y) * w + x) * 3 + ch] = acc;
            }
        }
    }
    // vertical pass
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                double acc = 0.0;
                for (int j = -radius; j <= radius; ++j) {
                    acc += kernel[j + radius] *
                           tmp[(static_cast<std::size_t>(clampi(y + j, h - 1)) * w + x) * 3 + ch];
                }
                img.at(x, y, ch) = clamp_u8(acc);
            }
        }
    }
}

void apply_noise(ImageBuffer& img, double sigma, Rng& rng) {
    for (auto& s : img.data) s = clamp_u8(s + rng.gaussian() * sigma);
}

void flip_horizontal(ImageBuffer& img, MaskBuffer& mask) {
    const int w = img.width, h = img.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w / 2; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                std::swap(img.at(x, y, ch), img.at(w - 1 - x, y, ch));
            }
            std::swap(mask.at(x, y), mask.at(w - 1 - x, y));
        }
    }
}

}  // namespace

std::pair<ImageBuffer, MaskBuffer> jitter(const ImageBuffer& image, const MaskBuffer& mask,
                                          const JitterConfig& cfg, std::uint64_t rng_seed) {
    cfg.validate();
    if (image.width != mask.width || image.height != mask.height) {
        throw std::invalid_argument("jitter: image/mask dimension mismatch");
    }
    ImageBuffer out = image;
    MaskBuffer out_mask = mask;
    Rng rng(rng_seed);

    // Fixed draw order keeps a seed reproducible regardless of which effects fire.
    if (rng.bernoulli(cfg.brightness_prob)) {
        apply_brightness(out, rng.uniform(cfg.brightness_min, cfg.brightness_max));
    }
    if (rng.bernoulli(cfg.contrast_prob)) {
        apply_contrast(out, rng.uniform(cfg.contrast_min, cfg.contrast_max));
    }
    if (rng.bernoulli(cfg.hue_prob)) {
        apply_hue_shift(out, rng.uniform(cfg.hue_min, cfg.hue_max));
    }
    if (rng.bernoulli(cfg.blur_prob)) {
        apply_gaussian_blur(out, rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max));
    }
    if (rng.bernoulli(cfg.noise_prob)) {
        apply_noise(out, rng.uniform(cfg.noise_sigma_min, cfg.noise_sigma_max), rng);
    }
    if (rng.bernoulli(cfg.flip_prob)) {
        flip_horizontal(out, out_mask);
    }
    return {std::move(out), std::move(out_mask)};
}

Sprite cutout(const ImageBuffer& image, const MaskBuffer& mask) {
    if (image.width != mask.width || image.height != mask.height) {
        throw std::invalid_argument("cutout: image/mask dimension mismatch");
    }
    int min_x = mask.width, min_y = mask.height, max_x = -1, max_y = -1;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.at(x, y) != 0) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
        }
    }
    if (max_x < 0) throw std::runtime_error("empty person mask");

    const int w = max_x - min_x + 1;
    const int h = max_y - min_y + 1;
    Sprite sprite;
    sprite.pixels = ImageBuffer(w, h);
    sprite.alpha = MaskBuffer(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                sprite.pixels.at(x, y, ch) = image.at(min_x + x, min_y + y, ch);
            }
            sprite.alpha.at(x, y) = mask.at(min_x + x, min_y + y);
        }
    }
    sprite.anchor_x = w / 2.0;
    sprite.anchor_y = h;
    return sprite;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// translate(x, y) * rotate(theta) * scale(s) * translate(-anchor), i.e. the
// sprite anchor lands at (x, y) after scaling and rotating about it.
AffineTransform place_sprite(double anchor_x, double anchor_y, double scale,
                             double theta, double x, double y) {
    const AffineTransform to_origin = AffineTransform::translation(-anchor_x, -anchor_y);
    const AffineTransform scaled = AffineTransform::scaling(scale, scale).after(to_origin);
    const AffineTransform rotated = AffineTransform::rotation(theta).after(scaled);
    return AffineTransform::translation(x, y).after(rotated);
}

}  // namespace

MotionScript script_for_action(ActionKind action, const BlendSettings& settings,
                               int sprite_width, int sprite_height,
                               int background_width, int background_height,
                               std::uint64_t rng_seed) {
    settings.validate();
    if (sprite_width < 1 || sprite_height < 1) {
        throw std::invalid_argument("sprite dimensions must be >= 1");
    }
    Rng rng(rng_seed);
    const int n = settings.n_steps;
    const double bw = background_width;
    const double bh = background_height;

    const double scale_frac = rng.uniform(settings.scale_min, settings.scale_max);
    const double floor_y = rng.uniform(settings.floor_min, settings.floor_max) * bh;
    const double transition = rng.uniform(settings.transition_min, settings.transition_max);
    const bool rightward = rng.bernoulli(0.5);
    const double dir = rightward ? 1.0 : -1.0;

    const double scale = scale_frac * bh / sprite_height;
    if (scale * sprite_width > bw || scale * sprite_height > bh) {
        throw std::runtime_error("sprite exceeds background");
    }

    const double ax = sprite_width / 2.0;  // cutout anchor convention
    const double ay = sprite_height;

    MotionScript script;
    script.action = action;
    script.n_steps = n;
    script.poses.reserve(n);

    auto eased = [n](int i) {
        if (n == 1) return 1.0;
        const double p = static_cast<double>(i) / (n - 1);
        return p * p;
    };

    switch (action) {
        case ActionKind::Standing: {
            const double x0 = rng.uniform(0.2, 0.8) * bw;
            const AffineTransform pose = place_sprite(ax, ay, scale, 0.0, x0, floor_y);
            script.poses.assign(n, pose);
            break;
        }
        case ActionKind::LyingDown: {
            const double x0 = rng.uniform(0.3, 0.7) * bw;
            const AffineTransform pose =
                place_sprite(ax, ay, scale, dir * kPi / 2.0, x0, floor_y);
            script.poses.assign(n, pose);
            break;
        }
        case ActionKind::Walking: {
            const double step = transition * bw;
            const double span = step * (n - 1);
            const double lo = 0.05 * bw;
            const double hi = std::max(lo, 0.95 * bw - span);
            double x0 = rng.uniform(lo, hi);
            if (!rightward) x0 = bw - x0;
            for (int i = 0; i < n; ++i) {
                script.poses.push_back(
                    place_sprite(ax, ay, scale, 0.0, x0 + dir * step * i, floor_y));
            }
            break;
        }
        case ActionKind::Falling: {
            const double theta_final = rng.uniform(70.0, 90.0) * kPi / 180.0;
            const double x0 = rng.uniform(0.3, 0.7) * bw;
            const double total_drift = 0.5 * transition * bh * (n - 1);
            for (int i = 0; i < n; ++i) {
                const double p = eased(i);
                script.poses.push_back(place_sprite(ax, ay, scale, dir * theta_final * p,
                                                    x0, floor_y + total_drift * p));
            }
            break;
        }
    }
    return script;
}

std::vector<ImageBuffer> render_sequence(const Sprite& sprite, const ImageBuffer& background,
                                         const MotionScript& script) {
    if (script.n_steps < 1 || script.poses.size() != static_cast<std::size_t>(script.n_steps)) {
        throw std::invalid_argument("motion script pose count mismatch");
    }
    std::vector<ImageBuffer> frames;
    frames.reserve(script.n_steps);
    for (const auto& pose : script.poses) {
        Sprite placed = imaging::affine_warp(sprite, pose, background.width, background.height);
        frames.push_back(imaging::alpha_composite(background, placed));
    }
    return frames;
}

TrainingSample synthesize_sample_with_frames(
    const ImageBuffer& person, const MaskBuffer& mask, const std::string& person_id,
    const ImageBuffer& background, const std::string& background_id, ActionKind action,
    const BlendSettings& settings, const JitterConfig& cfg, std::uint64_t seed,
    std::vector<ImageBuffer>& frames_out) {
    auto [jittered, jittered_mask] = jitter(person, mask, cfg, mix_seed(seed, 1));
    const Sprite sprite = cutout(jittered, jittered_mask);
    const MotionScript script =
        script_for_action(action, settings, sprite.width(), sprite.height(),
                          background.width, background.height, mix_seed(seed, 2));
    frames_out = render_sequence(sprite, background, script);

    TrainingSample sample;
    sample.label = action;
    sample.image = is_motional(action)
                       ? imaging::mean_stack(frames_out)
                       : frames_out.back();
    sample.provenance = {person_id, background_id, seed, settings_hash(settings, cfg)};
    return sample;
}

TrainingSample synthesize_sample(const ImageBuffer& person, const MaskBuffer& mask,
                                 const std::string& person_id, const ImageBuffer& background,
                                 const std::string& background_id, ActionKind action,
                                 const BlendSettings& settings, const JitterConfig& cfg,
                                 std::uint64_t seed) {
    std::vector<ImageBuffer> frames;
    return synthesize_sample_with_frames(person, mask, person_id, background, background_id,
                                         action, settings, cfg, seed, frames);
}

}  // namespace motionforge::synthesis
