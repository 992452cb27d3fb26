#include "vlpr/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vlpr::model_io {

using nlohmann::json;

namespace {

constexpr const char* kCreatedBy = "vlpr 1.0";

template <typename... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json pca_json(const features::PcaModel& m) {
    json j;
    j["input_w"] = m.input_w;
    j["input_h"] = m.input_h;
    j["mean"] = m.mean;
    j["eigenvalues"] = m.eigenvalues;
    j["basis"] = m.basis;
    if (!m.covariance.empty()) j["covariance"] = m.covariance;
    return j;
}

json knn_json(const classify::KnnModel& m) {
    json j;
    j["metric"] = m.metric == classify::Metric::Euclidean ? "euclidean" : "standardized";
    j["k"] = m.k;
    j["labels"] = m.labels;
    j["X"] = m.X;
    if (m.metric == classify::Metric::Standardized) j["variances"] = m.variances;
    j["reject_threshold"] = m.reject_threshold ? json(*m.reject_threshold) : json(nullptr);
    return j;
}

json svm_json(const classify::SvmModel& m) {
    json j;
    j["reg_c"] = m.reg_c;
    j["epochs"] = m.epochs;
    j["classes"] = m.classes;
    j["feature_mean"] = m.feature_mean;
    j["feature_scale"] = m.feature_scale;
    j["bias"] = m.bias;
    j["weights"] = m.weights;
    return j;
}

json dct_json(const features::DctConfig& c) {
    return json{{"k", c.k}, {"plate_w", c.plate_w}, {"plate_h", c.plate_h}};
}

template <typename T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        fail(ErrorCode::Format, std::string("model file: missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::Format, std::string("model file: field '") + key + "' has the wrong type");
    }
}

features::PcaModel pca_from(const json& j) {
    features::PcaModel m;
    m.input_w = field<int>(j, "input_w");
    m.input_h = field<int>(j, "input_h");
    m.mean = field<std::vector<double>>(j, "mean");
    m.eigenvalues = field<std::vector<double>>(j, "eigenvalues");
    m.basis = field<std::vector<std::vector<double>>>(j, "basis");
    if (j.contains("covariance")) m.covariance = field<std::vector<double>>(j, "covariance");
    m.validate();
    return m;
}

classify::KnnModel knn_from(const json& j) {
    classify::KnnModel m;
    const std::string metric = field<std::string>(j, "metric");
    if (metric == "euclidean") {
        m.metric = classify::Metric::Euclidean;
    } else if (metric == "standardized") {
        m.metric = classify::Metric::Standardized;
        m.variances = field<std::vector<double>>(j, "variances");
    } else {
        fail(ErrorCode::Format, "model file: unknown knn metric '" + metric + "'");
    }
    m.k = field<int>(j, "k");
    m.labels = field<std::vector<int>>(j, "labels");
    m.X = field<std::vector<std::vector<double>>>(j, "X");
    if (j.contains("reject_threshold") && !j.at("reject_threshold").is_null()) {
        m.reject_threshold = field<double>(j, "reject_threshold");
    }
    m.validate();
    return m;
}

classify::SvmModel svm_from(const json& j) {
    classify::SvmModel m;
    m.reg_c = field<double>(j, "reg_c");
    m.epochs = field<int>(j, "epochs");
    m.classes = field<std::vector<int>>(j, "classes");
    m.feature_mean = field<std::vector<double>>(j, "feature_mean");
    m.feature_scale = field<std::vector<double>>(j, "feature_scale");
    m.bias = field<std::vector<double>>(j, "bias");
    m.weights = field<std::vector<std::vector<double>>>(j, "weights");
    m.validate();
    return m;
}

features::DctConfig dct_from(const json& j) {
    features::DctConfig c;
    c.k = field<int>(j, "k");
    c.plate_w = field<int>(j, "plate_w");
    c.plate_h = field<int>(j, "plate_h");
    c.validate();
    return c;
}

json dims_of(const AnyModel& model) {
    return std::visit(overloaded{
                          [](const features::PcaModel& m) { return json{m.input_w, m.input_h, m.components()}; },
                          [](const classify::KnnModel& m) { return json{m.X.size(), m.dim()}; },
                          [](const classify::SvmModel& m) { return json{m.classes.size(), m.dim()}; },
                          [](const pipeline::CharModel& m) {
                              return json{m.pca.input_w, m.pca.input_h, m.pca.components(), m.knn.X.size()};
                          },
                          [](const pipeline::PlateModel& m) { return json{m.svm.classes.size(), m.svm.dim()}; },
                      },
                      model);
}

}  // namespace

std::string model_type(const AnyModel& model) {
    return std::visit(overloaded{
                          [](const features::PcaModel&) { return std::string("pca"); },
                          [](const classify::KnnModel&) { return std::string("knn"); },
                          [](const classify::SvmModel&) { return std::string("svm"); },
                          [](const pipeline::CharModel&) { return std::string("pipeline-bundle"); },
                          [](const pipeline::PlateModel&) { return std::string("pipeline-bundle"); },
                      },
                      model);
}

std::string serialize(const AnyModel& model) {
    json payload = std::visit(overloaded{
                                  [](const features::PcaModel& m) { return pca_json(m); },
                                  [](const classify::KnnModel& m) { return knn_json(m); },
                                  [](const classify::SvmModel& m) { return svm_json(m); },
                                  [](const pipeline::CharModel& m) {
                                      return json{{"system", "chars"}, {"pca", pca_json(m.pca)}, {"knn", knn_json(m.knn)}};
                                  },
                                  [](const pipeline::PlateModel& m) {
                                      return json{{"system", "plates"},
                                                  {"dct", dct_json(m.dct)},
                                                  {"svm", svm_json(m.svm)},
                                                  {"unknown_margin", m.unknown_margin}};
                                  },
                              },
                              model);
    json j;
    j["header"] = json{{"format_version", kFormatVersion},
                       {"model_type", model_type(model)},
                       {"created", kCreatedBy},
                       {"dims", dims_of(model)}};
    j["payload"] = std::move(payload);
    return j.dump(1) + "\n";
}

AnyModel deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("model file: ") + e.what());
    }
    const json header = field<json>(j, "header");
    const int version = field<int>(header, "format_version");
    if (version != kFormatVersion) {
        fail(ErrorCode::Format, "model file: unsupported format_version " + std::to_string(version));
    }
    const std::string type = field<std::string>(header, "model_type");
    const json payload = field<json>(j, "payload");
    try {
        if (type == "pca") return pca_from(payload);
        if (type == "knn") return knn_from(payload);
        if (type == "svm") return svm_from(payload);
        if (type == "pipeline-bundle") {
            const std::string system = field<std::string>(payload, "system");
            if (system == "chars") {
                pipeline::CharModel m{pca_from(field<json>(payload, "pca")), knn_from(field<json>(payload, "knn"))};
                m.validate();
                return m;
            }
            if (system == "plates") {
                pipeline::PlateModel m;
                m.dct = dct_from(field<json>(payload, "dct"));
                m.svm = svm_from(field<json>(payload, "svm"));
                m.unknown_margin = field<double>(payload, "unknown_margin");
                m.validate();
                return m;
            }
            fail(ErrorCode::Format, "model file: unknown bundle system '" + system + "'");
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) fail(ErrorCode::Format, std::string("model file: ") + e.what());
        throw;
    }
    fail(ErrorCode::Format, "model file: unknown model_type '" + type + "'");
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path parent = target.parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
        fail(ErrorCode::Io, path + ": parent directory does not exist");
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, tmp.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) fail(ErrorCode::Io, tmp.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorCode::Io, path + ": cannot rename temporary file");
    }
}

void save(const AnyModel& model, const std::string& path) { write_file_atomic(path, serialize(model)); }

AnyModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, path + ": cannot open model file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return deserialize(ss.str());
    } catch (const Error& e) {
        fail(e.code(), path + ": " + e.what());
    }
}

std::string describe(const AnyModel& model) {
    std::ostringstream out;
    out << "format_version: " << kFormatVersion << "\n";
    out << "model_type: " << model_type(model) << "\n";
    out << "created: " << kCreatedBy << "\n";
    out << "dims: " << dims_of(model).dump() << "\n";
    std::visit(overloaded{
                   [&](const features::PcaModel& m) {
                       out << "pca: " << m.input_w << "x" << m.input_h << ", " << m.components() << " components\n";
                   },
                   [&](const classify::KnnModel& m) {
                       out << "knn: " << m.X.size() << " vectors of " << m.dim() << ", k=" << m.k << "\n";
                   },
                   [&](const classify::SvmModel& m) {
                       out << "svm: " << m.classes.size() << " classes, " << m.dim() << " features\n";
                   },
                   [&](const pipeline::CharModel& m) {
                       out << "system: chars\n";
                       out << "pca: " << m.pca.input_w << "x" << m.pca.input_h << ", " << m.pca.components()
                           << " components\n";
                       out << "knn: " << m.knn.X.size() << " vectors, k=" << m.knn.k << ", metric="
                           << (m.knn.metric == classify::Metric::Euclidean ? "euclidean" : "standardized") << "\n";
                       out << "reject_threshold: "
                           << (m.knn.reject_threshold ? json(*m.knn.reject_threshold).dump() : "none") << "\n";
                   },
                   [&](const pipeline::PlateModel& m) {
                       out << "system: plates\n";
                       out << "dct: " << m.dct.plate_w << "x" << m.dct.plate_h << ", k=" << m.dct.k << "\n";
                       out << "svm: " << m.svm.classes.size() << " identities, " << m.svm.dim() << " features\n";
                       out << "unknown_margin: " << json(m.unknown_margin).dump() << "\n";
                   },
               },
               model);
    return out.str();
}

}  // namespace vlpr::model_io
