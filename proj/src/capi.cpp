#include "vlpr/vlpr.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>
#include <variant>

#include "json.hpp"
#include "vlpr/alphabet.hpp"
#include "vlpr/config.hpp"
#include "vlpr/evaluate.hpp"
#include "vlpr/model_io.hpp"
#include "vlpr/pipeline.hpp"

struct vlpr_config {
    vlpr::RunConfig cfg;
};

struct vlpr_model {
    vlpr::model_io::AnyModel model;
};

namespace {

using namespace vlpr;
using nlohmann::json;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

int status_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return VLPR_ERR_INVALID_ARGUMENT;
        case ErrorCode::Io: return VLPR_ERR_IO;
        case ErrorCode::Format: return VLPR_ERR_FORMAT;
        case ErrorCode::Degenerate: return VLPR_ERR_DEGENERATE;
        case ErrorCode::NoPlate: return VLPR_ERR_NO_PLATE;
        case ErrorCode::Unreadable: return VLPR_ERR_UNREADABLE;
        case ErrorCode::AlignmentNotFound: return VLPR_ERR_ALIGNMENT;
        case ErrorCode::Internal: return VLPR_ERR_INTERNAL;
    }
    return VLPR_ERR_INTERNAL;
}

template <typename F>
int guarded(F&& f) {
    g_last_error.clear();
    try {
        f();
        return VLPR_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
    } catch (const std::exception& e) {
        g_last_error = e.what();
    } catch (...) {
        g_last_error = "unknown error";
    }
    return VLPR_ERR_INTERNAL;
}

void need(const void* p, const char* name) {
    if (!p) fail(ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

std::string manifest_dir_of(const std::string& manifest) {
    const fs::path parent = fs::path(manifest).parent_path();
    return parent.empty() ? std::string(".") : parent.string();
}

std::vector<synth::ManifestRecord> load_manifest(const std::string& path) {
    if (!fs::exists(path)) fail(ErrorCode::Io, path + ": manifest not found");
    return synth::read_manifest(path);
}

json box_json(const imaging::BBox& b) { return json{b.x, b.y, b.w, b.h}; }

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

json recognize_one(const RunConfig& cfg, const model_io::AnyModel& model, const std::string& path,
                   const std::string& display, const std::string& debug_dir) {
    json rec;
    rec["image"] = display;
    imaging::GrayImage scene;
    try {
        scene = imaging::read_image(path);
    } catch (const Error& e) {
        rec["status"] = "read-error";
        rec["error"] = e.what();
        return rec;
    }
    detect::DetectConfig det = cfg.detect;
    if (!debug_dir.empty()) det.debug_dir = (fs::path(debug_dir) / fs::path(display).stem()).string();

    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (const auto* chars = std::get_if<pipeline::CharModel>(&model)) {
            const pipeline::CharRecognition r = pipeline::recognize_plate_chars(scene, det, cfg.segment, *chars);
            const double ms = elapsed_ms(t0);
            rec["status"] = "ok";
            rec["plate_string"] = r.plate.text();
            rec["plate_box"] = box_json(r.location.scene_box);
            rec["angle"] = r.location.angle;
            json cs = json::array();
            for (const auto& c : r.plate.chars) {
                const Symbol& s = LabelAlphabet::at(c.label);
                cs.push_back(json{{"label", std::string(s.id)},
                                  {"glyph", std::string(s.glyph)},
                                  {"box", box_json(c.box)},
                                  {"distance", c.distance},
                                  {"flagged", c.flagged}});
            }
            rec["chars"] = std::move(cs);
            rec["rejected"] = r.plate.rejected;
            rec["timing_ms"] = ms;
        } else if (const auto* plates = std::get_if<pipeline::PlateModel>(&model)) {
            const pipeline::PlateIdentity id = pipeline::recognize_whole_plate(scene, det, *plates);
            const double ms = elapsed_ms(t0);
            rec["status"] = id.unknown ? "unknown" : "ok";
            rec["identity"] = id.unknown ? json(nullptr) : json(id.identity);
            rec["nearest_identity"] = id.identity;
            rec["margin"] = id.margin;
            rec["plate_box"] = box_json(id.location.scene_box);
            rec["angle"] = id.location.angle;
            rec["timing_ms"] = ms;
        } else {
            fail(ErrorCode::InvalidArgument, "recognition needs a pipeline-bundle model");
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NoPlate) {
            rec["status"] = "no-plate";
        } else if (e.code() == ErrorCode::Unreadable) {
            rec["status"] = "unreadable";
        } else {
            throw;
        }
        rec["timing_ms"] = elapsed_ms(t0);
    }
    return rec;
}

}  // namespace

extern "C" {

const char* vlpr_last_error(void) { return g_last_error.c_str(); }

const char* vlpr_status_name(int status) {
    switch (status) {
        case VLPR_OK: return "ok";
        case VLPR_ERR_INTERNAL: return "internal error";
        case VLPR_ERR_INVALID_ARGUMENT: return "invalid argument";
        case VLPR_ERR_IO: return "i/o error";
        case VLPR_ERR_FORMAT: return "format error";
        case VLPR_ERR_DEGENERATE: return "degenerate input";
        case VLPR_ERR_NO_PLATE: return "no plate found";
        case VLPR_ERR_UNREADABLE: return "unreadable plate";
        case VLPR_ERR_ALIGNMENT: return "alignment not found";
        default: return "unknown status";
    }
}

const char* vlpr_version(void) { return "1.0.0"; }

void vlpr_string_free(char* s) { std::free(s); }

int vlpr_config_new(vlpr_config** out) {
    return guarded([&] {
        need(out, "out");
        *out = new vlpr_config();
    });
}

void vlpr_config_free(vlpr_config* cfg) { delete cfg; }

int vlpr_config_load_file(vlpr_config* cfg, const char* path) {
    return guarded([&] {
        need(cfg, "cfg");
        need(path, "path");
        RunConfig next = cfg->cfg;
        next.load_file(path);
        next.validate();
        cfg->cfg = next;
    });
}

int vlpr_config_apply(vlpr_config* cfg, const char* assignment) {
    return guarded([&] {
        need(cfg, "cfg");
        need(assignment, "assignment");
        cfg->cfg.apply_assignment(assignment);
    });
}

int vlpr_config_set(vlpr_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        cfg->cfg.set(key, value);
    });
}

int vlpr_config_get(const vlpr_config* cfg, const char* key, char** out) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(out, "out");
        *out = dup_string(cfg->cfg.get(key));
    });
}

int vlpr_config_validate(const vlpr_config* cfg) {
    return guarded([&] {
        need(cfg, "cfg");
        cfg->cfg.validate();
    });
}

int vlpr_config_to_json(const vlpr_config* cfg, char** out) {
    return guarded([&] {
        need(cfg, "cfg");
        need(out, "out");
        *out = dup_string(cfg->cfg.to_json());
    });
}

int vlpr_synth(const vlpr_config* cfg, uint64_t n, uint64_t seed, const char* out_dir, int parallelism,
               char** manifest_path) {
    return guarded([&] {
        need(cfg, "cfg");
        need(out_dir, "out_dir");
        need(manifest_path, "manifest_path");
        cfg->cfg.validate();
        require(n > 0, "n must be >= 1");
        const fs::path dir(out_dir);
        const fs::path parent = dir.parent_path();
        if (!parent.empty() && !fs::is_directory(parent)) {
            fail(ErrorCode::Io, parent.string() + ": parent directory does not exist");
        }
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) fail(ErrorCode::Io, dir.string() + ": " + ec.message());
        *manifest_path = dup_string(synth::generate_corpus(n, seed, cfg->cfg.synth, out_dir, 0, parallelism));
    });
}

int vlpr_train(const vlpr_config* cfg, const char* stage, const char* manifest, int parallelism,
               vlpr_model** out) {
    return guarded([&] {
        need(cfg, "cfg");
        need(stage, "stage");
        need(manifest, "manifest");
        need(out, "out");
        const RunConfig& c = cfg->cfg;
        c.validate();
        const std::string which(stage);
        if (which != "chars" && which != "plates") {
            fail(ErrorCode::InvalidArgument, "unknown training stage '" + which + "' (expected chars or plates)");
        }
        const auto records = load_manifest(manifest);
        const std::string dir = manifest_dir_of(manifest);
        if (which == "chars") {
            const auto samples = pipeline::collect_char_samples(records, dir, c.detect, c.segment, c.chars);
            *out = new vlpr_model{pipeline::train_char_model(samples, c.chars)};
        } else {
            for (const auto& r : records) {
                if (r.truth.identity < 0) {
                    fail(ErrorCode::InvalidArgument, "plates training needs identities in the manifest");
                }
            }
            const auto s = pipeline::collect_plate_samples(records, dir, c.detect, parallelism);
            *out = new vlpr_model{pipeline::enroll_gallery(s.plates, s.identities, c.dct, c.classify.svm_c,
                                                           c.classify.svm_epochs, c.classify.unknown_fraction)};
        }
    });
}

int vlpr_model_load(const char* path, vlpr_model** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new vlpr_model{model_io::load(path)};
    });
}

int vlpr_model_save(const vlpr_model* model, const char* path) {
    return guarded([&] {
        need(model, "model");
        need(path, "path");
        model_io::save(model->model, path);
    });
}

void vlpr_model_free(vlpr_model* model) { delete model; }

int vlpr_model_kind(const vlpr_model* model, char** out) {
    return guarded([&] {
        need(model, "model");
        need(out, "out");
        std::string kind = model_io::model_type(model->model);
        if (std::holds_alternative<pipeline::CharModel>(model->model)) kind = "chars";
        if (std::holds_alternative<pipeline::PlateModel>(model->model)) kind = "plates";
        *out = dup_string(kind);
    });
}

int vlpr_model_describe(const vlpr_model* model, char** out) {
    return guarded([&] {
        need(model, "model");
        need(out, "out");
        *out = dup_string(model_io::describe(model->model));
    });
}

int vlpr_recognize(const vlpr_config* cfg, const vlpr_model* model, const char* input, const char* debug_dir,
                   int parallelism, char** records, size_t* n_records, size_t* n_ok) {
    return guarded([&] {
        need(cfg, "cfg");
        need(model, "model");
        need(input, "input");
        need(records, "records");
        cfg->cfg.validate();
        if (!std::holds_alternative<pipeline::CharModel>(model->model) &&
            !std::holds_alternative<pipeline::PlateModel>(model->model)) {
            fail(ErrorCode::InvalidArgument, "recognition needs a pipeline-bundle model");
        }
        const std::string in(input);
        std::vector<std::string> paths;
        std::vector<std::string> names;
        if (fs::path(in).extension() == ".jsonl") {
            const auto recs = load_manifest(in);
            const std::string dir = manifest_dir_of(in);
            for (const auto& r : recs) {
                paths.push_back((fs::path(dir) / r.image).string());
                names.push_back(r.image);
            }
        } else {
            paths.push_back(in);
            names.push_back(in);
        }
        const std::string dbg = debug_dir ? debug_dir : "";
        std::vector<json> out(paths.size());
        pipeline::parallel_for(paths.size(), parallelism, [&](std::size_t i) {
            out[i] = recognize_one(cfg->cfg, model->model, paths[i], names[i], dbg);
        });
        std::string text;
        std::size_t ok = 0;
        for (const json& r : out) {
            text += r.dump() + "\n";
            if (r.at("status") == "ok" || r.at("status") == "unknown") ++ok;
        }
        *records = dup_string(text);
        if (n_records) *n_records = out.size();
        if (n_ok) *n_ok = ok;
    });
}

int vlpr_eval(const vlpr_config* cfg, const vlpr_model* model, const char* manifest, const char* stage,
              int parallelism, char** report_csv, char** detail_csv, long long* plates_exact,
              long long* plates_total) {
    return guarded([&] {
        need(cfg, "cfg");
        need(manifest, "manifest");
        need(stage, "stage");
        const evaluate::Stage st = evaluate::parse_stage(stage);
        evaluate::EvalModels models;
        if (model) {
            models.chars = std::get_if<pipeline::CharModel>(&model->model);
            models.plates = std::get_if<pipeline::PlateModel>(&model->model);
        }
        cfg->cfg.validate();
        const auto records = load_manifest(manifest);
        const auto report = evaluate::run_eval(records, manifest_dir_of(manifest), st, cfg->cfg, models, parallelism);
        if (report_csv) *report_csv = dup_string(evaluate::report_csv(report));
        if (detail_csv) *detail_csv = dup_string(evaluate::detail_csv(report));
        if (plates_exact) *plates_exact = report.plates_exact;
        if (plates_total) *plates_total = report.plates_total;
    });
}

int vlpr_write_file(const char* path, const char* content, size_t size) {
    return guarded([&] {
        need(path, "path");
        if (size > 0) need(content, "content");
        model_io::write_file_atomic(path, std::string(content ? content : "", size));
    });
}

}  // extern "C"
