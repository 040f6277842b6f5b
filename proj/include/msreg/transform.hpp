#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "msreg/error.hpp"

namespace msreg {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Ordered by generality: composing two kinds yields the larger one.
enum class ModelKind { Translation = 0, Similarity = 1, Affine = 2 };

/// Number of free parameters of a model.
[[nodiscard]] constexpr int parameter_count(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Translation:
      return 2;
    case ModelKind::Similarity:
      return 4;
    case ModelKind::Affine:
      return 6;
  }
  return 6;
}

/// Each correspondence gives two equations, so ceil(n / 2) matches pin a model.
[[nodiscard]] constexpr int minimal_sample_size(ModelKind kind) noexcept {
  return (parameter_count(kind) + 1) / 2;
}

[[nodiscard]] inline std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Translation:
      return "translation";
    case ModelKind::Similarity:
      return "similarity";
    case ModelKind::Affine:
      return "affine";
  }
  return "affine";
}

[[nodiscard]] inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "translation") return ModelKind::Translation;
  if (s == "similarity") return ModelKind::Similarity;
  if (s == "affine") return ModelKind::Affine;
  throw ParameterError("unknown model kind '" + std::string(s) + "' (expected translation|similarity|affine)");
}

/// 2x3 map  [a11 a12 tx; a21 a22 ty]  applied as  p' = A p + t.
class AffineTransform {
 public:
  using Matrix = std::array<double, 6>;

  AffineTransform() = default;

  /// Kind is taken as given; callers building from raw numbers should use
  /// `affine()` unless they know the structure holds.
  AffineTransform(const Matrix& m, ModelKind kind) : m_(m), kind_(kind) {}

  [[nodiscard]] static AffineTransform identity() { return {}; }

  [[nodiscard]] static AffineTransform translation(double tx, double ty) {
    return {{1.0, 0.0, tx, 0.0, 1.0, ty}, ModelKind::Translation};
  }

  /// a = s cos(theta), b = s sin(theta).
  [[nodiscard]] static AffineTransform similarity(double a, double b, double tx, double ty) {
    return {{a, -b, tx, b, a, ty}, ModelKind::Similarity};
  }

  [[nodiscard]] static AffineTransform scale_rotation(double scale, double angle, double tx, double ty) {
    return similarity(scale * std::cos(angle), scale * std::sin(angle), tx, ty);
  }

  [[nodiscard]] static AffineTransform affine(double a11, double a12, double tx, double a21, double a22, double ty) {
    return {{a11, a12, tx, a21, a22, ty}, ModelKind::Affine};
  }

  [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
  [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return m_[i]; }

  [[nodiscard]] double tx() const noexcept { return m_[2]; }
  [[nodiscard]] double ty() const noexcept { return m_[5]; }
  [[nodiscard]] double det() const noexcept { return m_[0] * m_[4] - m_[1] * m_[3]; }

  /// Isotropic scale; for non-similarity maps the geometric mean sqrt(|det|).
  [[nodiscard]] double scale() const noexcept {
    if (kind_ == ModelKind::Affine) return std::sqrt(std::abs(det()));
    return std::hypot(m_[0], m_[3]);
  }

  [[nodiscard]] Point2 apply(Point2 p) const noexcept {
    return {m_[0] * p.x + m_[1] * p.y + m_[2], m_[3] * p.x + m_[4] * p.y + m_[5]};
  }
  [[nodiscard]] Point2 operator()(Point2 p) const noexcept { return apply(p); }

  /// (*this)(other(p)).
  [[nodiscard]] AffineTransform compose(const AffineTransform& other) const noexcept {
    const Matrix& a = m_;
    const Matrix& b = other.m_;
    return {{a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4], a[0] * b[2] + a[1] * b[5] + a[2],
             a[3] * b[0] + a[4] * b[3], a[3] * b[1] + a[4] * b[4], a[3] * b[2] + a[4] * b[5] + a[5]},
            std::max(kind_, other.kind_)};
  }

  [[nodiscard]] bool invertible() const noexcept { return std::abs(det()) > 1e-12; }

  [[nodiscard]] AffineTransform inverse() const {
    const double d = det();
    if (!(std::abs(d) > 1e-12)) {
      throw ParameterError("transform is singular (|det| <= 1e-12)");
    }
    if (kind_ == ModelKind::Translation) {
      return translation(-m_[2], -m_[5]);
    }
    const double i00 = m_[4] / d;
    const double i01 = -m_[1] / d;
    const double i10 = -m_[3] / d;
    const double i11 = m_[0] / d;
    return {{i00, i01, -(i00 * m_[2] + i01 * m_[5]), i10, i11, -(i10 * m_[2] + i11 * m_[5])}, kind_};
  }

  friend bool operator==(const AffineTransform&, const AffineTransform&) = default;

 private:
  Matrix m_{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  ModelKind kind_ = ModelKind::Translation;
};

[[nodiscard]] inline double distance(Point2 a, Point2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace msreg
