#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "motionforge/imaging.hpp"
#include "motionforge/reference.hpp"
#include "motionforge/synthesis.hpp"
#include "test_support.hpp"

using namespace motionforge;
using namespace motionforge::synthesis;
using imaging::AffineTransform;
using imaging::ImageBuffer;
using imaging::MaskBuffer;
using imaging::Sprite;
using testsupport::make_background;
using testsupport::make_person;
using testsupport::random_image;
using testsupport::random_mask;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

// Rotation angle of a pose's linear part (uniform scale * rotation).
double pose_angle(const AffineTransform& t) { return std::atan2(t.c, t.a); }

// Background position of the sprite anchor under a pose.
std::pair<double, double> anchor_position(const AffineTransform& t, double ax, double ay) {
    double x = 0, y = 0;
    t.apply(ax, ay, x, y);
    return {x, y};
}

BlendSettings pinned_settings() {
    BlendSettings s;
    s.scale_min = s.scale_max = 0.5;
    s.transition_min = s.transition_max = 0.02;
    s.floor_min = s.floor_max = 0.85;
    s.n_steps = 10;
    return s;
}

}  // namespace

TEST_CASE("jitter: all-zero probabilities return the input unchanged") {
    const auto [img, mask] = make_person(20, 30, 1);
    const auto [out_img, out_mask] = jitter(img, mask, JitterConfig::disabled(), 9);
    CHECK(out_img == img);
    CHECK(out_mask == mask);
}

TEST_CASE("jitter: forced flip mirrors pixels and mask, twice restores") {
    const auto [img, mask] = make_person(21, 15, 2);
    JitterConfig cfg = JitterConfig::disabled();
    cfg.flip_prob = 1.0;

    const auto [flipped, flipped_mask] = jitter(img, mask, cfg, 4);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                CHECK(flipped.at(x, y, c) == img.at(img.width - 1 - x, y, c));
            }
            CHECK(flipped_mask.at(x, y) == mask.at(img.width - 1 - x, y));
        }
    }
    const auto [restored, restored_mask] = jitter(flipped, flipped_mask, cfg, 5);
    CHECK(restored == img);
    CHECK(restored_mask == mask);
}

TEST_CASE("jitter: deterministic given the seed") {
    const auto [img, mask] = make_person(24, 32, 3);
    JitterConfig cfg;  // all defaults enabled at 0.5
    const auto a = jitter(img, mask, cfg, 42);
    const auto b = jitter(img, mask, cfg, 42);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("jitter: photometric effects never touch the mask") {
    const auto [img, mask] = make_person(18, 25, 4);
    JitterConfig cfg;
    cfg.brightness_prob = cfg.contrast_prob = cfg.hue_prob = 1.0;
    cfg.blur_prob = cfg.noise_prob = 1.0;
    cfg.flip_prob = 0.0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto [out_img, out_mask] = jitter(img, mask, cfg, seed);
        REQUIRE(out_mask == mask);
        CHECK(out_img.width == img.width);
    }
}

TEST_CASE("cutout: full-frame mask keeps the whole image, anchor at bottom-center") {
    const auto img = random_image(14, 9, 6);
    const MaskBuffer mask(14, 9, 255);
    const Sprite sprite = cutout(img, mask);
    CHECK(sprite.pixels == img);
    CHECK(sprite.alpha == mask);
    CHECK(sprite.anchor_x == 7.0);
    CHECK(sprite.anchor_y == 9.0);
}

TEST_CASE("cutout: bounding box crop and anchor arithmetic") {
    const auto img = random_image(40, 80, 7);
    MaskBuffer mask(40, 80, 0);
    for (int y = 30; y <= 60; ++y) {
        for (int x = 10; x <= 20; ++x) mask.at(x, y) = 255;
    }
    const Sprite sprite = cutout(img, mask);
    CHECK(sprite.width() == 11);
    CHECK(sprite.height() == 31);
    CHECK(sprite.anchor_x == 5.5);
    CHECK(sprite.anchor_y == 31.0);
    for (int y = 0; y < 31; ++y) {
        for (int x = 0; x < 11; ++x) {
            for (int c = 0; c < 3; ++c) {
                REQUIRE(sprite.pixels.at(x, y, c) == img.at(10 + x, 30 + y, c));
            }
        }
    }
}

TEST_CASE("cutout: blob mask alpha equals mask restricted to bounding box") {
    const auto img = random_image(30, 30, 8);
    MaskBuffer mask = random_mask(30, 30, 9, 0.2);
    mask.at(3, 5) = 255;  // keep it nonempty
    const Sprite sprite = cutout(img, mask);

    int min_x = 30, min_y = 30, max_x = -1, max_y = -1;
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 30; ++x) {
            if (mask.at(x, y)) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
        }
    }
    REQUIRE(sprite.width() == max_x - min_x + 1);
    REQUIRE(sprite.height() == max_y - min_y + 1);
    for (int y = 0; y < sprite.height(); ++y) {
        for (int x = 0; x < sprite.width(); ++x) {
            REQUIRE(sprite.alpha.at(x, y) == mask.at(min_x + x, min_y + y));
        }
    }
}

TEST_CASE("cutout: all-zero mask is an error") {
    const auto img = random_image(10, 10, 10);
    const MaskBuffer mask(10, 10, 0);
    CHECK_THROWS_WITH_AS(cutout(img, mask), "empty person mask", std::runtime_error);
}

TEST_CASE("script_for_action: standing scripts are N identical poses") {
    const auto script =
        script_for_action(ActionKind::Standing, pinned_settings(), 20, 40, 100, 100, 11);
    REQUIRE(script.n_steps == 10);
    REQUIRE(script.poses.size() == 10);
    for (const auto& pose : script.poses) CHECK(pose == script.poses.front());
}

TEST_CASE("script_for_action: falling angles increase strictly into [70, 90] degrees") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto script =
            script_for_action(ActionKind::Falling, pinned_settings(), 20, 40, 200, 150, seed);
        double prev = -1.0;
        for (const auto& pose : script.poses) {
            const double angle = std::fabs(pose_angle(pose));
            REQUIRE(angle > prev);
            prev = angle;
        }
        REQUIRE(prev >= 70.0 * kDeg - 1e-9);
        REQUIRE(prev <= 90.0 * kDeg + 1e-9);
        CHECK(std::fabs(pose_angle(script.poses.front())) == doctest::Approx(0.0));
    }
}

TEST_CASE("script_for_action: falling anchors drift downward monotonically") {
    const auto script =
        script_for_action(ActionKind::Falling, pinned_settings(), 20, 40, 200, 150, 3);
    double prev_y = -1.0;
    for (const auto& pose : script.poses) {
        const auto [x, y] = anchor_position(pose, 10.0, 40.0);
        REQUIRE(y >= prev_y);
        prev_y = y;
    }
}

TEST_CASE("script_for_action: walking spans (N-1) * transition of the background width") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto script =
            script_for_action(ActionKind::Walking, pinned_settings(), 20, 40, 300, 200, seed);
        std::vector<double> xs;
        for (const auto& pose : script.poses) {
            xs.push_back(anchor_position(pose, 10.0, 40.0).first);
        }
        const bool increasing = xs.back() > xs.front();
        for (std::size_t i = 1; i < xs.size(); ++i) {
            REQUIRE((increasing ? xs[i] > xs[i - 1] : xs[i] < xs[i - 1]));
            REQUIRE(std::fabs(std::fabs(xs[i] - xs[i - 1]) - 0.02 * 300) < 1e-6);
        }
        REQUIRE(std::fabs(xs.back() - xs.front()) == doctest::Approx(0.18 * 300));
    }
}

TEST_CASE("script_for_action: lying-down poses are static and near-horizontal") {
    const auto script =
        script_for_action(ActionKind::LyingDown, pinned_settings(), 20, 40, 200, 150, 5);
    for (const auto& pose : script.poses) {
        CHECK(pose == script.poses.front());
    }
    CHECK(std::fabs(pose_angle(script.poses.front())) == doctest::Approx(90.0 * kDeg));
}

TEST_CASE("script_for_action: oversized sprite is rejected") {
    BlendSettings s = pinned_settings();
    s.scale_min = s.scale_max = 1.0;
    CHECK_THROWS_WITH_AS(
        script_for_action(ActionKind::Standing, s, 200, 50, 100, 100, 1),
        "sprite exceeds background", std::runtime_error);
}

TEST_CASE("render_sequence: motionless scripts render N identical frames") {
    const auto [img, mask] = make_person(20, 40, 12);
    const Sprite sprite = cutout(img, mask);
    const auto bg = make_background(100, 100, 13);
    const auto script =
        script_for_action(ActionKind::Standing, pinned_settings(), sprite.width(),
                          sprite.height(), 100, 100, 14);
    const auto frames = render_sequence(sprite, bg, script);
    REQUIRE(frames.size() == 10);
    for (const auto& f : frames) REQUIRE(f == frames.front());
}

TEST_CASE("render_sequence: N=1 equals a direct warp + composite") {
    const auto [img, mask] = make_person(20, 40, 15);
    const Sprite sprite = cutout(img, mask);
    const auto bg = make_background(80, 90, 16);
    BlendSettings s = pinned_settings();
    s.n_steps = 1;
    const auto script = script_for_action(ActionKind::Walking, s, sprite.width(),
                                          sprite.height(), 80, 90, 17);
    const auto frames = render_sequence(sprite, bg, script);
    REQUIRE(frames.size() == 1);
    const auto direct = imaging::alpha_composite(
        bg, imaging::affine_warp(sprite, script.poses[0], 80, 90));
    CHECK(frames[0] == direct);
}

TEST_CASE("render_sequence: each frame matches the serial per-frame oracle") {
    const auto [img, mask] = make_person(16, 32, 18);
    const Sprite sprite = cutout(img, mask);
    const auto bg = make_background(90, 70, 19);
    BlendSettings s = pinned_settings();
    s.n_steps = 4;
    const auto script = script_for_action(ActionKind::Walking, s, sprite.width(),
                                          sprite.height(), 90, 70, 20);
    const auto frames = render_sequence(sprite, bg, script);
    REQUIRE(frames.size() == 4);
    for (int i = 0; i < 4; ++i) {
        const auto oracle =
            ref::alpha_composite(bg, ref::affine_warp(sprite, script.poses[i], 90, 70));
        REQUIRE(frames[i] == oracle);
    }
}

TEST_CASE("synthesize_sample: deterministic given the full input tuple") {
    const auto [img, mask] = make_person(24, 48, 21);
    const auto bg = make_background(96, 96, 22);
    const JitterConfig cfg;
    for (auto action : kAllActions) {
        const auto a = synthesize_sample(img, mask, "p0", bg, "b0", action,
                                         pinned_settings(), cfg, 77);
        const auto b = synthesize_sample(img, mask, "p0", bg, "b0", action,
                                         pinned_settings(), cfg, 77);
        REQUIRE(a.image == b.image);
        REQUIRE(a.label == b.label);
        REQUIRE(a.provenance.seed == b.provenance.seed);
        REQUIRE(a.provenance.settings_hash == b.provenance.settings_hash);
    }
}

TEST_CASE("synthesize_sample: labeling rule ties image to the action family") {
    const auto [img, mask] = make_person(24, 48, 23);
    const auto bg = make_background(96, 96, 24);
    const JitterConfig cfg = JitterConfig::disabled();

    // Motionless actions emit the last rendered frame exactly.
    for (auto action : {ActionKind::Standing, ActionKind::LyingDown}) {
        std::vector<ImageBuffer> frames;
        const auto sample = synthesize_sample_with_frames(img, mask, "p", bg, "b", action,
                                                          pinned_settings(), cfg, 31, frames);
        REQUIRE(sample.image == frames.back());
        REQUIRE(!is_motional(sample.label));
    }
    // Motional actions emit the integer mean of all rendered frames.
    for (auto action : {ActionKind::Falling, ActionKind::Walking}) {
        std::vector<ImageBuffer> frames;
        const auto sample = synthesize_sample_with_frames(img, mask, "p", bg, "b", action,
                                                          pinned_settings(), cfg, 32, frames);
        REQUIRE(frames.size() == 10);
        REQUIRE(sample.image == ref::mean_stack(frames));
        REQUIRE(sample.image != frames.back());  // ghosting distinguishes it
        REQUIRE(is_motional(sample.label));
    }
}

TEST_CASE("synthesize_sample: background pixels outside every footprint are untouched") {
    const auto [img, mask] = make_person(24, 48, 25);
    const auto bg = make_background(96, 96, 26);
    const JitterConfig cfg = JitterConfig::disabled();

    std::vector<ImageBuffer> frames;
    const auto sample = synthesize_sample_with_frames(img, mask, "p", bg, "b",
                                                      ActionKind::Falling, pinned_settings(),
                                                      cfg, 33, frames);
    // Union footprint: any pixel whose value differs from the background in
    // any frame. Everywhere else the sample must equal the background.
    int untouched = 0;
    for (int y = 0; y < bg.height; ++y) {
        for (int x = 0; x < bg.width; ++x) {
            bool touched = false;
            for (const auto& f : frames) {
                for (int c = 0; c < 3; ++c) {
                    if (f.at(x, y, c) != bg.at(x, y, c)) touched = true;
                }
            }
            if (!touched) {
                ++untouched;
                for (int c = 0; c < 3; ++c) {
                    REQUIRE(sample.image.at(x, y, c) == bg.at(x, y, c));
                }
            }
        }
    }
    CHECK(untouched > 0);
}

TEST_CASE("settings_hash: sensitive to every knob") {
    const BlendSettings s = pinned_settings();
    const JitterConfig j;
    const auto base = settings_hash(s, j);

    BlendSettings s2 = s;
    s2.scale_max += 0.01;
    CHECK(settings_hash(s2, j) != base);

    JitterConfig j2 = j;
    j2.flip_prob = 0.25;
    CHECK(settings_hash(s, j2) != base);
    CHECK(settings_hash(s, j) == base);
}

TEST_CASE("action names and indices are a bijection") {
    for (auto action : kAllActions) {
        CHECK(action_from_name(action_name(action)) == action);
        CHECK(action_from_index(action_index(action)) == action);
    }
    CHECK_THROWS_AS(action_from_name("sprinting"), std::invalid_argument);
    CHECK_THROWS_AS(action_from_index(4), std::invalid_argument);
    CHECK(action_index(ActionKind::Falling) == 0);
    CHECK(action_index(ActionKind::Walking) == 1);
    CHECK(action_index(ActionKind::Standing) == 2);
    CHECK(action_index(ActionKind::LyingDown) == 3);
}
