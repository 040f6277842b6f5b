#pragma once

// Transform files: a JSON object
//   {"model": "...", "matrix": [[a11,a12,tx],[a21,a22,ty]], "support": n, "inliers": n}
// or plain text with one matrix row per line.

#include <cstdio>
#include <sstream>
#include <string>

#include "json.hpp"
#include "msreg/error.hpp"
#include "msreg/io.hpp"
#include "msreg/transform.hpp"

namespace msreg {

struct TransformRecord {
  AffineTransform transform;
  int support = 0;
  int inliers = 0;
};

[[nodiscard]] inline std::string transform_to_json(const TransformRecord& rec) {
  const auto& m = rec.transform.matrix();
  nlohmann::ordered_json j;
  j["model"] = std::string(to_string(rec.transform.kind()));
  j["matrix"] = {{m[0], m[1], m[2]}, {m[3], m[4], m[5]}};
  j["support"] = rec.support;
  j["inliers"] = rec.inliers;
  return j.dump(2) + "\n";
}

[[nodiscard]] inline std::string transform_to_text(const AffineTransform& t) {
  const auto& m = t.matrix();
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n%.17g %.17g %.17g\n", m[0], m[1], m[2], m[3], m[4], m[5]);
  return buf;
}

/// Narrowest kind whose structure the matrix satisfies exactly.
[[nodiscard]] inline ModelKind infer_model_kind(const AffineTransform::Matrix& m) noexcept {
  if (m[0] == 1.0 && m[1] == 0.0 && m[3] == 0.0 && m[4] == 1.0) return ModelKind::Translation;
  if (m[0] == m[4] && m[1] == -m[3]) return ModelKind::Similarity;
  return ModelKind::Affine;
}

/// Accepts either format; `source` is only used in error messages.
[[nodiscard]] inline TransformRecord parse_transform(const std::string& text, const std::string& source = "<text>") {
  TransformRecord rec;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw IoError(source, "empty transform file");
  AffineTransform::Matrix m{};
  if (text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
      const auto& rows = j.at("matrix");
      if (!rows.is_array() || rows.size() != 2) throw IoError(source, "\"matrix\" must have two rows");
      for (std::size_t r = 0; r < 2; ++r) {
        if (!rows[r].is_array() || rows[r].size() != 3) throw IoError(source, "each matrix row needs three numbers");
        for (std::size_t c = 0; c < 3; ++c) m[r * 3 + c] = rows[r][c].get<double>();
      }
      const ModelKind kind =
          j.contains("model") ? parse_model_kind(j["model"].get<std::string>()) : infer_model_kind(m);
      rec.transform = AffineTransform(m, kind);
      rec.support = j.value("support", 0);
      rec.inliers = j.value("inliers", 0);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(source, std::string("invalid transform JSON: ") + e.what());
    } catch (const ParameterError& e) {
      throw IoError(source, e.what());
    }
    return rec;
  }
  std::istringstream in(text);
  for (double& v : m) {
    if (!(in >> v)) throw IoError(source, "expected six numbers (2x3 matrix)");
  }
  std::string extra;
  if (in >> extra) throw IoError(source, "trailing content after 2x3 matrix");
  rec.transform = AffineTransform(m, infer_model_kind(m));
  return rec;
}

[[nodiscard]] inline TransformRecord read_transform(const std::string& path) {
  const auto bytes = io_detail::read_file(path);
  return parse_transform(std::string(bytes.begin(), bytes.end()), path);
}

}  // namespace msreg
