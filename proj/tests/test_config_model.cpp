#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "vlpr/config.hpp"
#include "vlpr/error.hpp"
#include "vlpr/model_io.hpp"

using namespace vlpr;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void write(const fs::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Internal;
}

classify::Matrix random_matrix(std::mt19937_64& rng, int n, int d) {
    std::normal_distribution<double> g(0.0, 1.0);
    classify::Matrix m(n, std::vector<double>(d));
    for (auto& row : m)
        for (auto& v : row) v = g(rng);
    return m;
}

}  // namespace

TEST_CASE("config keys") {
    RunConfig c;
    CHECK(RunConfig::keys().size() >= 40);
    for (const auto& k : RunConfig::keys()) CHECK_NOTHROW(c.get(k));
    c.set("features.k", "15");
    CHECK(c.dct.k == 15);
    c.apply_assignment("classify.metric=standardized");
    CHECK(c.chars.metric == classify::Metric::Standardized);
    c.set("synth.text_mode", "identity");
    CHECK(c.get("synth.text_mode") == "identity");
    CHECK(code_of([&] { c.set("features.nope", "1"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { c.set("features.k", "nine"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { c.set("features.k", "9x"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { c.apply_assignment("features.k"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { c.set("classify.metric", "cosine"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("config validation") {
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    c.set("classify.knn_k", "2");
    CHECK_THROWS_AS(c.validate(), Error);
    c = RunConfig{};
    c.set("features.k", "65");
    CHECK_THROWS_AS(c.validate(), Error);
    c = RunConfig{};
    c.set("eval.iou_min", "0");
    CHECK_THROWS_AS(c.validate(), Error);
    c = RunConfig{};
    c.set("synth.skew_max", "12");
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("config files") {
    const fs::path dir = testutil::temp_dir("config");
    SUBCASE("nested and dotted keys") {
        write(dir / "c.json", R"({"detect": {"sweep_step": 0.25}, "features.k": 12, "classify": {"metric": "standardized"}})");
        RunConfig c;
        c.load_file((dir / "c.json").string());
        CHECK(c.detect.sweep_step == 0.25);
        CHECK(c.dct.k == 12);
        CHECK(c.chars.metric == classify::Metric::Standardized);
    }
    SUBCASE("to_json loads back to the same config") {
        RunConfig c;
        c.set("segment.expand_step", "3");
        c.set("classify.unknown_fraction", "0.35");
        write(dir / "round.json", c.to_json());
        RunConfig d;
        d.load_file((dir / "round.json").string());
        CHECK(d.to_json() == c.to_json());
        for (const auto& k : RunConfig::keys()) CHECK(d.get(k) == c.get(k));
    }
    SUBCASE("errors") {
        write(dir / "bad.json", "{ not json");
        write(dir / "unknown.json", R"({"detect": {"colour": 1}})");
        write(dir / "array.json", "[1, 2]");
        RunConfig c;
        CHECK(code_of([&] { c.load_file((dir / "bad.json").string()); }) == ErrorCode::InvalidArgument);
        CHECK(code_of([&] { c.load_file((dir / "unknown.json").string()); }) == ErrorCode::InvalidArgument);
        CHECK(code_of([&] { c.load_file((dir / "array.json").string()); }) == ErrorCode::InvalidArgument);
        CHECK(code_of([&] { c.load_file((dir / "absent.json").string()); }) == ErrorCode::Io);
    }
}

TEST_CASE("model files") {
    std::mt19937_64 rng(12);
    const fs::path dir = testutil::temp_dir("models");
    const auto X = random_matrix(rng, 30, 8);
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) labels.push_back(i % 3);

    std::vector<model_io::AnyModel> models;
    models.emplace_back(features::pca_fit(X, 4, 4, 2));
    models.emplace_back(classify::knn_fit(X, labels, classify::Metric::Standardized, 3));
    models.emplace_back(classify::svm_train(X, labels, 1.0, 50));
    pipeline::CharModel cm;
    cm.pca = features::pca_fit(X, 4, 4, 2);
    classify::Matrix proj;
    for (const auto& x : X) proj.push_back(features::pca_project(cm.pca, x));
    cm.knn = classify::knn_fit(proj, labels, classify::Metric::Euclidean, 1);
    models.emplace_back(cm);
    pipeline::PlateModel pm;
    pm.dct.k = 1;
    pm.dct.plate_w = 8;
    pm.dct.plate_h = 8;
    pm.svm = classify::svm_train(random_matrix(rng, 10, 1), {0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 1.0, 20);
    pm.unknown_margin = 0.123456789012345;
    models.emplace_back(pm);

    SUBCASE("save, load, save is byte-identical") {
        int i = 0;
        for (const auto& m : models) {
            const std::string path = (dir / ("m" + std::to_string(i++) + ".json")).string();
            model_io::save(m, path);
            const auto loaded = model_io::load(path);
            CHECK(model_io::model_type(loaded) == model_io::model_type(m));
            CHECK(model_io::serialize(loaded) == model_io::serialize(m));
            CHECK(!model_io::describe(loaded).empty());
        }
        const auto back = std::get<pipeline::PlateModel>(model_io::deserialize(model_io::serialize(pm)));
        CHECK(back.unknown_margin == pm.unknown_margin);
        CHECK(back.svm.weights == pm.svm.weights);
    }
    SUBCASE("bad headers") {
        json j = json::parse(model_io::serialize(models[0]));
        j["header"]["format_version"] = 99;
        CHECK(code_of([&] { model_io::deserialize(j.dump()); }) == ErrorCode::Format);
        j = json::parse(model_io::serialize(models[0]));
        j["header"]["model_type"] = "forest";
        CHECK(code_of([&] { model_io::deserialize(j.dump()); }) == ErrorCode::Format);
        CHECK(code_of([&] { model_io::deserialize("{"); }) == ErrorCode::Format);
        CHECK(code_of([&] { model_io::load((dir / "absent.json").string()); }) == ErrorCode::Io);
    }
    SUBCASE("inconsistent payload") {
        json j = json::parse(model_io::serialize(models[1]));
        std::string text = j.dump();
        // Drop one label so counts disagree.
        for (auto& [k, v] : j.items()) {
            if (v.is_object() && v.contains("labels")) v["labels"].erase(0);
        }
        CHECK_THROWS_AS(model_io::deserialize(j.dump()), Error);
        CHECK_NOTHROW(model_io::deserialize(text));
    }
}
