#pragma once

#include <string>
#include <variant>

#include "vlpr/classify.hpp"
#include "vlpr/features.hpp"
#include "vlpr/pipeline.hpp"

namespace vlpr::model_io {

inline constexpr int kFormatVersion = 1;

/// One of the model kinds a model file can hold. Bundles carry everything
/// a recognizer needs.
using AnyModel = std::variant<features::PcaModel, classify::KnnModel, classify::SvmModel,
                              pipeline::CharModel, pipeline::PlateModel>;

/// "pca", "knn", "svm" or "pipeline-bundle".
std::string model_type(const AnyModel& model);

/// Text serialization; doubles round-trip exactly and the output depends only
/// on the model, so save -> load -> save is byte-identical.
std::string serialize(const AnyModel& model);
AnyModel deserialize(const std::string& text);

/// Atomic write (temporary file + rename).
void save(const AnyModel& model, const std::string& path);
AnyModel load(const std::string& path);

/// Human-readable header summary.
std::string describe(const AnyModel& model);

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace vlpr::model_io
