#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "vlpr/alphabet.hpp"
#include "vlpr/error.hpp"
#include "vlpr/model_io.hpp"
#include "vlpr/pipeline.hpp"

using namespace vlpr;
using namespace vlpr::imaging;
namespace fs = std::filesystem;

namespace {

pipeline::RecognizedChar rc(int label, int x, int w = 20) {
    pipeline::RecognizedChar c;
    c.label = label;
    c.box = BBox{x, 40, w, 50};
    return c;
}

// Trained once; a small Cycle corpus covers every class.
const pipeline::CharModel& char_model() {
    static const pipeline::CharModel model = [] {
        synth::CorpusRanges r;
        r.text_mode = synth::TextMode::Cycle;
        r.noise_max = 2.0;
        const std::string dir = testutil::temp_dir("pipeline_train");
        const std::string manifest = synth::generate_corpus(18, 1001, r, dir);
        pipeline::CharTrainConfig cfg;
        cfg.exemplars_per_class = 3;
        const auto samples = pipeline::collect_char_samples(synth::read_manifest(manifest), dir,
                                                            detect::DetectConfig{}, segment::SegmentConfig{}, cfg);
        return pipeline::train_char_model(samples, cfg);
    }();
    return model;
}

synth::SceneSpec scene_spec(std::uint64_t seed, double skew) {
    synth::SceneSpec s;
    s.seed = seed;
    s.digits = {1, 3, 6};
    s.letters = {11, 18, 23};
    s.skew = skew;
    s.plate_width = 380;
    s.pos_x = 650;
    s.pos_y = 400;
    s.noise_sigma = 1.5;
    s.clutter_density = 0.3;
    return s;
}

// Canonical-size plate faces for an identity, views differ by seed and noise.
GrayImage view(const synth::SceneSpec& text, std::uint64_t seed) {
    synth::SceneSpec s = text;
    s.seed = seed;
    s.noise_sigma = 3.0;
    s.plate_width = 256;
    s.subtitle = seed % 2 == 0;
    return synth::render_plate(s).image;
}

std::vector<synth::SceneSpec> identity_texts(int n) {
    synth::CorpusRanges r;
    r.text_mode = synth::TextMode::Identity;
    r.identities = n;
    std::vector<synth::SceneSpec> out(n);
    std::vector<bool> have(n, false);
    for (std::uint64_t i = 0; std::count(have.begin(), have.end(), false) > 0; ++i) {
        const auto s = synth::draw_spec(77, i, r);
        if (!have[s.identity]) {
            out[s.identity] = s;
            have[s.identity] = true;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("assemble plate string") {
    SUBCASE("splits at the widest gap") {
        const auto ps = pipeline::assemble_plate_string({rc(12, 150), rc(0, 10), rc(4, 40), rc(15, 180)});
        CHECK(ps.digits == std::vector<int>{0, 4});
        CHECK(ps.letters == std::vector<int>{12, 15});
        CHECK(ps.split == 2);
        for (const auto& c : ps.chars) CHECK(!c.flagged);
        CHECK(ps.text() == LabelAlphabet::render({0, 4}, {12, 15}));
    }
    SUBCASE("equal gaps go to the leftmost") {
        const auto ps = pipeline::assemble_plate_string({rc(1, 0), rc(2, 40), rc(3, 80)});
        CHECK(ps.split == 1);
    }
    SUBCASE("wrong kind is flagged") {
        const auto ps = pipeline::assemble_plate_string({rc(10, 0), rc(2, 25), rc(3, 100)});
        CHECK(ps.chars[0].flagged);
        CHECK(!ps.chars[1].flagged);
        CHECK(ps.chars[2].flagged);
    }
    SUBCASE("single character") {
        CHECK(pipeline::assemble_plate_string({rc(14, 5)}).letters == std::vector<int>{14});
        CHECK(pipeline::assemble_plate_string({rc(4, 5)}).digits == std::vector<int>{4});
    }
    SUBCASE("empty") { CHECK_THROWS_AS(pipeline::assemble_plate_string({}), Error); }
}

TEST_CASE("character recognition end to end") {
    const auto& model = char_model();
    REQUIRE_NOTHROW(model.validate());
    CHECK(model.knn.X.size() == 3u * LabelAlphabet::kSize);
    detect::DetectConfig det;
    segment::SegmentConfig seg;

    SUBCASE("clean scene") {
        const auto scene = synth::render_scene(scene_spec(2024, 0.0));
        const auto r = pipeline::recognize_plate_chars(scene.image, det, seg, model);
        CHECK(r.plate.text() == scene.truth.plate_text);
        CHECK(r.plate.rejected == 0);
    }
    SUBCASE("skewed scene") {
        const auto scene = synth::render_scene(scene_spec(2025, 6.0));
        const auto r = pipeline::recognize_plate_chars(scene.image, det, seg, model);
        CHECK(r.plate.text() == scene.truth.plate_text);
        CHECK(std::abs(r.location.angle + 6.0) <= 0.5);
    }
    SUBCASE("no plate") {
        try {
            pipeline::recognize_plate_chars(GrayImage(1920, 1080, 128), det, seg, model);
            FAIL("expected NoPlate");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NoPlate);
            CHECK(std::string(e.what()) == "no plate found");
        }
    }
    SUBCASE("missing class") {
        std::vector<pipeline::CharSample> s(4, pipeline::CharSample{std::vector<double>(576, 0.5), 0});
        CHECK_THROWS_AS(pipeline::train_char_model(s, pipeline::CharTrainConfig{}), Error);
    }
}

TEST_CASE("gallery enrollment") {
    const auto texts = identity_texts(10);
    std::vector<GrayImage> plates;
    std::vector<int> ids;
    for (int id = 0; id < 10; ++id) {
        for (std::uint64_t v = 0; v < 5; ++v) {
            plates.push_back(view(texts[id], 1000 + 10 * id + v));
            ids.push_back(id);
        }
    }
    const features::DctConfig dct;
    const auto model = pipeline::enroll_gallery(plates, ids, dct, 1.0, 200, 0.4);
    REQUIRE_NOTHROW(model.validate());
    CHECK(model.svm.classes.size() == 10);
    CHECK(model.unknown_margin > 0.0);

    SUBCASE("enrolled views are recognized above the threshold") {
        for (std::size_t i = 0; i < plates.size(); ++i) {
            const auto r = pipeline::identify_plate(plates[i], model);
            CHECK(r.identity == ids[i]);
            CHECK(!r.unknown);
        }
    }
    SUBCASE("held-out view") {
        int right = 0;
        for (int id = 0; id < 10; ++id) {
            const auto r = pipeline::identify_plate(view(texts[id], 5000 + id), model);
            right += r.identity == id && !r.unknown;
        }
        CHECK(right >= 9);
    }
    SUBCASE("unenrolled plate") {
        const auto more = identity_texts(14);
        int unknown = 0;
        for (int id = 10; id < 14; ++id) unknown += pipeline::identify_plate(view(more[id], 7000 + id), model).unknown;
        CHECK(unknown >= 3);
    }
    SUBCASE("re-enrollment is byte-identical") {
        const auto again = pipeline::enroll_gallery(plates, ids, dct, 1.0, 200, 0.4);
        CHECK(model_io::serialize(again) == model_io::serialize(model));
    }
    SUBCASE("degenerate galleries") {
        const std::vector<GrayImage> one(plates.begin(), plates.begin() + 5);
        CHECK_THROWS_AS(pipeline::enroll_gallery(one, std::vector<int>(5, 0), dct, 1.0, 200, 0.4), Error);
        std::vector<int> single_view(ids);
        single_view[0] = 99;
        CHECK_THROWS_AS(pipeline::enroll_gallery(plates, single_view, dct, 1.0, 200, 0.4), Error);
    }
}

TEST_CASE("parallel_for") {
    std::vector<int> hit(100, 0);
    pipeline::parallel_for(100, 4, [&](std::size_t i) { hit[i] = static_cast<int>(i); });
    for (int i = 0; i < 100; ++i) CHECK(hit[i] == i);
    try {
        pipeline::parallel_for(50, 3, [](std::size_t i) {
            if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
        });
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "7");
    }
}
