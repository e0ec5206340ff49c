#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "motionforge/evaluation.hpp"
#include "motionforge/png_io.hpp"
#include "test_support.hpp"

using namespace motionforge;
using namespace motionforge::evaluation;
using imaging::ImageBuffer;
using synthesis::ActionKind;
using testsupport::TempDir;
using testsupport::random_image;

namespace {

LabeledVideo memory_video(const std::string& id, int frames, std::optional<bool> fall) {
    LabeledVideo v;
    v.id = id;
    v.fall_video = fall;
    for (int i = 0; i < frames; ++i) v.frames.push_back(random_image(8, 8, i));
    return v;
}

// Deterministic stand-in classifier: predicts falling exactly at the
// scheduled instants of each video.
InstantClassifier scripted(std::map<std::string, std::set<std::int64_t>> schedule) {
    return [schedule = std::move(schedule)](const LabeledVideo& video, std::int64_t t,
                                            const ImageBuffer&) {
        InstantPrediction pred{};
        const auto it = schedule.find(video.id);
        const bool fall = it != schedule.end() && it->second.count(t) > 0;
        pred.action = fall ? ActionKind::Falling : ActionKind::Walking;
        pred.probabilities[synthesis::action_index(pred.action)] = 1.0;
        return pred;
    };
}

streaming::WindowConfig window_cfg(int n, int interval, int stride = 1) {
    streaming::WindowConfig cfg;
    cfg.window = n;
    cfg.stride = stride;
    cfg.interval = interval;
    return cfg;
}

}  // namespace

TEST_CASE("metrics: the 30-falls / 40-adl confusion row") {
    const ConfusionCounts counts{28, 2, 40, 0};
    const Metrics m = metrics(counts);
    CHECK(format_metric(m.sensitivity) == "93.33");
    CHECK(format_metric(m.specificity) == "100.00");
    CHECK(format_metric(m.precision) == "100.00");
    CHECK(format_metric(m.accuracy) == "97.14");
}

TEST_CASE("metrics: perfect counts give 100 everywhere") {
    const Metrics m = metrics({10, 0, 20, 0});
    CHECK(format_metric(m.sensitivity) == "100.00");
    CHECK(format_metric(m.specificity) == "100.00");
    CHECK(format_metric(m.precision) == "100.00");
    CHECK(format_metric(m.accuracy) == "100.00");
}

TEST_CASE("metrics: zero denominators are undefined, not zero") {
    const Metrics m = metrics({0, 5, 10, 0});  // no positive predictions
    CHECK(!m.precision.has_value());
    CHECK(format_metric(m.precision) == "undefined");
    CHECK(m.sensitivity.has_value());
    CHECK(m.specificity.has_value());
    CHECK(m.accuracy.has_value());

    const Metrics empty = metrics({0, 0, 0, 0});
    CHECK(!empty.sensitivity.has_value());
    CHECK(!empty.specificity.has_value());
    CHECK(!empty.precision.has_value());
    CHECK(!empty.accuracy.has_value());
}

TEST_CASE("metrics: accuracy decomposes over sensitivity and specificity") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        ConfusionCounts c;
        c.tp = rng.uniform_int(50);
        c.fn = rng.uniform_int(50);
        c.tn = rng.uniform_int(50);
        c.fp = rng.uniform_int(50);
        const auto pos = c.tp + c.fn;
        const auto neg = c.tn + c.fp;
        if (pos == 0 || neg == 0) continue;
        const Metrics m = metrics(c);
        const double recomposed =
            (*m.sensitivity * pos + *m.specificity * neg) / static_cast<double>(pos + neg);
        REQUIRE(*m.accuracy == doctest::Approx(recomposed).epsilon(1e-12));
    }
}

TEST_CASE("video_level_eval: a single falling instant marks the whole video") {
    std::vector<LabeledVideo> videos;
    videos.push_back(memory_video("fall_hit", 20, true));     // one fall instant -> tp
    videos.push_back(memory_video("fall_missed", 20, true));  // never predicted -> fn
    videos.push_back(memory_video("adl_clean", 20, false));   // never predicted -> tn
    videos.push_back(memory_video("adl_alarm", 20, false));   // one fall instant -> fp

    const auto classify = scripted({{"fall_hit", {15}}, {"adl_alarm", {10}}});
    const auto counts = video_level_eval(videos, classify, window_cfg(5, 5));
    CHECK(counts.tp == 1);
    CHECK(counts.fn == 1);
    CHECK(counts.tn == 1);
    CHECK(counts.fp == 1);

    // Counts conservation.
    CHECK(counts.tp + counts.fn == 2);
    CHECK(counts.tn + counts.fp == 2);
}

TEST_CASE("video_level_eval: too-short videos count as non-fall predictions") {
    std::vector<LabeledVideo> videos;
    videos.push_back(memory_video("short_fall", 3, true));
    videos.push_back(memory_video("short_adl", 3, false));
    const auto counts =
        video_level_eval(videos, scripted({}), window_cfg(25, 25));
    CHECK(counts.fn == 1);
    CHECK(counts.tn == 1);
}

TEST_CASE("video_level_eval: empty input and missing ground truth") {
    CHECK(video_level_eval({}, scripted({}), window_cfg(5, 5)).total() == 0);

    std::vector<LabeledVideo> videos;
    videos.push_back(memory_video("nolabel", 10, std::nullopt));
    CHECK_THROWS_AS(video_level_eval(videos, scripted({}), window_cfg(5, 5)),
                    std::runtime_error);
}

TEST_CASE("frame_level_eval: instants are scored against per-frame flags") {
    // 450 frames at a 150-frame interval: instants 150, 300, 450.
    LabeledVideo video = memory_video("v", 450, true);
    video.frame_fall.assign(450, false);
    for (int f = 140; f < 310; ++f) video.frame_fall[f] = true;  // covers 150 and 300

    const auto classify = scripted({{"v", {150, 450}}});  // hit at 150, miss 300, alarm 450
    const auto counts = frame_level_eval({video}, classify, window_cfg(150, 150));
    CHECK(counts.total() == 3);
    CHECK(counts.tp == 1);  // 150: gt fall, predicted fall
    CHECK(counts.fn == 1);  // 300: gt fall, predicted non-fall
    CHECK(counts.fp == 1);  // 450: gt non-fall, predicted fall
    CHECK(counts.tn == 0);
}

TEST_CASE("frame_level_eval: hand-tallied two-video micro-corpus") {
    LabeledVideo a = memory_video("a", 30, true);
    a.frame_fall.assign(30, false);
    for (int f = 9; f < 20; ++f) a.frame_fall[f] = true;  // frames 10..20

    LabeledVideo b = memory_video("b", 30, false);
    b.frame_fall.assign(30, false);

    // Window 5, interval 5: instants 5, 10, 15, 20, 25, 30 per video.
    // a: gt fall at 10, 15, 20; predictions fall at 10, 25.
    // b: gt never; predictions fall at 5.
    const auto classify = scripted({{"a", {10, 25}}, {"b", {5}}});
    const auto counts = frame_level_eval({a, b}, classify, window_cfg(5, 5));

    // Manual tally: a: 5->tn, 10->tp, 15->fn, 20->fn, 25->fp, 30->tn.
    //               b: 5->fp, rest (10..30) -> tn x5.
    CHECK(counts.tp == 1);
    CHECK(counts.fn == 2);
    CHECK(counts.fp == 2);
    CHECK(counts.tn == 7);

    LabeledVideo unlabeled = memory_video("c", 30, false);
    CHECK_THROWS_AS(frame_level_eval({unlabeled}, classify, window_cfg(5, 5)),
                    std::runtime_error);
}

TEST_CASE("oracle closure: both protocols score 100 on a six-video corpus") {
    std::vector<LabeledVideo> videos;
    for (int i = 0; i < 3; ++i) {
        LabeledVideo v = memory_video("fall" + std::to_string(i), 40, true);
        v.frame_fall.assign(40, false);
        for (int f = 10 + i; f < 30; ++f) v.frame_fall[f] = true;
        videos.push_back(std::move(v));
    }
    for (int i = 0; i < 3; ++i) {
        LabeledVideo v = memory_video("adl" + std::to_string(i), 40, false);
        v.frame_fall.assign(40, false);
        videos.push_back(std::move(v));
    }

    const auto oracle = oracle_classifier();
    const auto cfg = window_cfg(5, 5);

    const auto video_counts = video_level_eval(videos, oracle, cfg);
    const Metrics vm = metrics(video_counts);
    CHECK(video_counts.tp == 3);
    CHECK(video_counts.tn == 3);
    for (const auto& metric : {vm.sensitivity, vm.specificity, vm.precision, vm.accuracy}) {
        REQUIRE(metric.has_value());
        REQUIRE(*metric == 100.0);
    }

    const auto frame_counts = frame_level_eval(videos, oracle, cfg);
    const Metrics fm = metrics(frame_counts);
    CHECK(frame_counts.fp == 0);
    CHECK(frame_counts.fn == 0);
    CHECK(frame_counts.tp > 0);
    for (const auto& metric : {fm.sensitivity, fm.specificity, fm.precision, fm.accuracy}) {
        REQUIRE(metric.has_value());
        REQUIRE(*metric == 100.0);
    }
}

TEST_CASE("interval_sweep: the seconds-to-frames column at 25 fps") {
    std::vector<LabeledVideo> videos;
    videos.push_back(memory_video("fall0", 45, true));
    videos.push_back(memory_video("adl0", 45, false));

    const std::vector<double> seconds = {0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6};
    const auto rows = interval_sweep(videos, oracle_classifier(), seconds, 25.0);
    REQUIRE(rows.size() == 7);
    const int expected_frames[] = {10, 15, 20, 25, 30, 35, 40};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].seconds == seconds[i]);
        CHECK(rows[i].frames == expected_frames[i]);
    }
}

TEST_CASE("interval_sweep: one row equals a direct video-level run") {
    std::vector<LabeledVideo> videos;
    videos.push_back(memory_video("fall0", 60, true));
    videos.push_back(memory_video("adl0", 60, false));
    const auto classify = scripted({{"fall0", {20}}});

    const auto rows = interval_sweep(videos, classify, {0.8}, 25.0);
    REQUIRE(rows.size() == 1);
    const auto direct = video_level_eval(videos, classify, window_cfg(20, 20));
    CHECK(rows[0].counts.tp == direct.tp);
    CHECK(rows[0].counts.fn == direct.fn);
    CHECK(rows[0].counts.tn == direct.tn);
    CHECK(rows[0].counts.fp == direct.fp);
}

TEST_CASE("ground truth files: video-level labels, frame ranges, and mismatches") {
    const TempDir dir("gt");
    std::filesystem::create_directories(dir / "corpus" / "v1");
    std::filesystem::create_directories(dir / "corpus" / "v2");
    for (int i = 0; i < 6; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%03d.png", i);
        imaging::write_png(dir / "corpus" / "v1" / name, random_image(8, 8, i));
        imaging::write_png(dir / "corpus" / "v2" / name, random_image(8, 8, 10 + i));
    }
    auto videos = load_corpus(dir / "corpus");
    REQUIRE(videos.size() == 2);
    CHECK(videos[0].id == "v1");
    CHECK(videos[0].frame_count() == 6);

    SUBCASE("video-level") {
        std::ofstream gt(dir / "gt.tsv", std::ios::binary);
        gt << "v1\tfall\nv2\tadl\n";
        gt.close();
        apply_ground_truth(videos, dir / "gt.tsv", false);
        CHECK(*videos[0].fall_video);
        CHECK(!*videos[1].fall_video);
    }

    SUBCASE("frame-level ranges") {
        std::ofstream gt(dir / "gt.tsv", std::ios::binary);
        gt << "v1\t2-3,5-6\nv2\t-\n";
        gt.close();
        apply_ground_truth(videos, dir / "gt.tsv", true);
        CHECK(videos[0].frame_fall ==
              std::vector<bool>{false, true, true, false, true, true});
        CHECK(videos[1].frame_fall == std::vector<bool>(6, false));
    }

    SUBCASE("unmatched ids are reported") {
        std::ofstream gt(dir / "gt.tsv", std::ios::binary);
        gt << "v1\tfall\nv3\tadl\n";
        gt.close();
        CHECK_THROWS_WITH_AS(apply_ground_truth(videos, dir / "gt.tsv", false),
                             doctest::Contains("v3"), std::runtime_error);
    }

    SUBCASE("malformed labels are rejected") {
        std::ofstream gt(dir / "gt.tsv", std::ios::binary);
        gt << "v1\tmaybe\nv2\tadl\n";
        gt.close();
        CHECK_THROWS_AS(apply_ground_truth(videos, dir / "gt.tsv", false),
                        std::runtime_error);
    }
}
