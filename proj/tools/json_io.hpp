#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "h2mm/lti_system.hpp"
#include "h2mm/reduced_model.hpp"

namespace h2mm::cli {

using nlohmann::json;

json matrix_to_json(const Matrix& m);
/// Row-major nested arrays; `rows`/`cols` of -1 accept any size.
Matrix matrix_from_json(const json& j, const std::string& name, int rows = -1,
                        int cols = -1);
json complex_list(const CVector& v);

json read_json(const std::string& path);
/// Pretty-printed JSON with a trailing newline.
void write_json(const std::string& path, const json& j);
void write_text(const std::string& path, const std::string& text);

/// {"n", "m", "p", "A", "B", "C"} with dimensions checked.
LtiSystem load_system(const std::string& path);
LtiSystem system_from_json(const json& j);

struct ModelFile {
  ReducedModel model;
  std::optional<Matrix> S;
  std::optional<Matrix> L;
  std::optional<Matrix> Pi;
  std::optional<CVector> points;
  std::string mode;
};

ModelFile load_model(const std::string& path);
json model_to_json(const ModelFile& file);

}  // namespace h2mm::cli
