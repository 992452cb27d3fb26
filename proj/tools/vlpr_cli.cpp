#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vlpr/vlpr.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;

struct CliFailure {
    int exit_code;
};

int exit_code_for(int status) {
    switch (status) {
        case VLPR_OK: return kExitOk;
        case VLPR_ERR_IO: return kExitIo;
        case VLPR_ERR_INTERNAL: return kExitFailed;
        default: return kExitInvalid;
    }
}

void check(int status, const std::string& what) {
    if (status == VLPR_OK) return;
    std::cerr << "vlpr: " << what << ": " << vlpr_last_error() << "\n";
    throw CliFailure{exit_code_for(status)};
}

// Owning wrapper for strings handed out by the library.
struct Text {
    char* p = nullptr;
    ~Text() { vlpr_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

struct Config {
    vlpr_config* p = nullptr;
    ~Config() { vlpr_config_free(p); }
};

struct Model {
    vlpr_model* p = nullptr;
    ~Model() { vlpr_model_free(p); }
};

struct Globals {
    std::string config_path;
    std::vector<std::string> sets;
    std::string debug_dir;
    int parallelism = 1;
    std::uint64_t seed = 0;
};

void make_config(const Globals& g, Config& cfg) {
    check(vlpr_config_new(&cfg.p), "config");
    if (!g.config_path.empty()) check(vlpr_config_load_file(cfg.p, g.config_path.c_str()), "--config");
    for (const auto& s : g.sets) check(vlpr_config_apply(cfg.p, s.c_str()), "--set " + s);
    check(vlpr_config_validate(cfg.p), "config");
}

void write_out(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    check(vlpr_write_file(path.c_str(), content.data(), content.size()), "write " + path);
}

int cmd_synth(const Globals& g, std::uint64_t n, const std::string& out_dir) {
    Config cfg;
    make_config(g, cfg);
    if (n == 0) {
        std::cerr << "vlpr: synth: --n must be >= 1\n";
        return kExitInvalid;
    }
    Text manifest;
    check(vlpr_synth(cfg.p, n, g.seed, out_dir.c_str(), g.parallelism, &manifest.p), "synth");
    std::cout << manifest.str() << "\n";
    return kExitOk;
}

int cmd_train(const Globals& g, const std::string& stage, const std::string& manifest, const std::string& out) {
    Config cfg;
    make_config(g, cfg);
    Model model;
    check(vlpr_train(cfg.p, stage.c_str(), manifest.c_str(), g.parallelism, &model.p), "train");
    check(vlpr_model_save(model.p, out.c_str()), "save model");
    std::cout << out << "\n";
    return kExitOk;
}

int cmd_recognize(const Globals& g, const std::string& model_path, const std::string& input, const std::string& out) {
    Config cfg;
    make_config(g, cfg);
    Model model;
    check(vlpr_model_load(model_path.c_str(), &model.p), "load model");
    Text records;
    std::size_t n = 0;
    std::size_t ok = 0;
    check(vlpr_recognize(cfg.p, model.p, input.c_str(), g.debug_dir.empty() ? nullptr : g.debug_dir.c_str(),
                         g.parallelism, &records.p, &n, &ok),
          "recognize");
    write_out(out, records.str());
    if (n > 0 && ok == 0) {
        std::cerr << "vlpr: recognize: no image was recognized\n";
        return kExitFailed;
    }
    return kExitOk;
}

int cmd_eval(const Globals& g, const std::string& manifest, const std::string& stage, const std::string& model_path,
             const std::string& out, const std::string& detail) {
    Config cfg;
    make_config(g, cfg);
    Model model;
    if (!model_path.empty()) check(vlpr_model_load(model_path.c_str(), &model.p), "load model");
    Text report;
    Text rows;
    long long exact = 0;
    long long total = 0;
    check(vlpr_eval(cfg.p, model.p, manifest.c_str(), stage.c_str(), g.parallelism, &report.p, &rows.p, &exact,
                    &total),
          "eval");
    if (!out.empty()) write_out(out, report.str());
    if (!detail.empty()) write_out(detail, rows.str());
    std::cout << report.str();
    std::cerr << "plates exact: " << exact << "/" << total << "\n";
    return kExitOk;
}

int cmd_inspect(const std::string& model_path) {
    Model model;
    check(vlpr_model_load(model_path.c_str(), &model.p), "load model");
    Text text;
    check(vlpr_model_describe(model.p, &text.p), "inspect");
    std::cout << text.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vehicle licence plate recognition"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", vlpr_version());

    Globals g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--set", g.sets, "Override one config key (key=value), repeatable")->allow_extra_args(false);
    app.add_option("--debug-dir", g.debug_dir, "Write intermediate images here");
    app.add_option("--parallelism", g.parallelism, "Worker threads")->check(CLI::Range(1, 256));
    app.add_option("--seed", g.seed, "Random seed");

    std::uint64_t n = 0;
    std::string out_dir;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    synth->add_option("--n", n, "Number of scenes")->required();
    synth->add_option("--out", out_dir, "Output directory")->required();

    std::string train_stage, manifest, model_out;
    auto* train = app.add_subcommand("train", "Train a recognizer");
    train->add_option("stage", train_stage, "chars or plates")->required();
    train->add_option("--manifest", manifest, "Training manifest")->required();
    train->add_option("--out", model_out, "Model file to write")->required();

    std::string model_path, input, rec_out;
    auto* recognize = app.add_subcommand("recognize", "Recognize plates in an image or manifest");
    recognize->add_option("--model", model_path, "Model file")->required();
    recognize->add_option("--input", input, "Image (PGM/PNG) or manifest.jsonl")->required();
    recognize->add_option("--out", rec_out, "Results file (JSON lines); stdout if absent");

    std::string eval_manifest, stage, eval_model, eval_out, eval_detail;
    auto* eval = app.add_subcommand("eval", "Evaluate one stage on a manifest");
    eval->add_option("--manifest", eval_manifest, "Evaluation manifest")->required();
    eval->add_option("--stage", stage, "plate-detect | char-detect | char-recognize | plate-recognize")->required();
    eval->add_option("--model", eval_model, "Model file (recognition stages)");
    eval->add_option("--out", eval_out, "Report CSV");
    eval->add_option("--detail", eval_detail, "Per-scene CSV");

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect-model", "Print a model file header");
    inspect->add_option("model", inspect_path, "Model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    try {
        if (*synth) return cmd_synth(g, n, out_dir);
        if (*train) return cmd_train(g, train_stage, manifest, model_out);
        if (*recognize) return cmd_recognize(g, model_path, input, rec_out);
        if (*eval) return cmd_eval(g, eval_manifest, stage, eval_model, eval_out, eval_detail);
        if (*inspect) return cmd_inspect(inspect_path);
    } catch (const CliFailure& f) {
        return f.exit_code;
    }
    return kExitInvalid;
}
