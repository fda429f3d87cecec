#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nnrb {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double norm2() const { return x * x + y * y + z * z; }
};

inline double dot(const Vec3 &a, const Vec3 &b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

// Nondecreasing parameter sequence. Validated on construction.
class KnotVector {
 public:
  KnotVector() = default;
  explicit KnotVector(std::vector<double> knots) : knots_(std::move(knots)) {
    validate();
  }

  const std::vector<double> &values() const { return knots_; }
  double operator[](std::size_t i) const { return knots_[i]; }
  std::size_t size() const { return knots_.size(); }
  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }

 private:
  void validate() const {
    if (knots_.size() < 2)
      throw std::invalid_argument("knot-vector: need at least 2 knots");
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
      if (knots_[i] > knots_[i + 1])
        throw std::invalid_argument("knot-vector: knots must be nondecreasing");
    if (!(knots_.front() < knots_.back()))
      throw std::invalid_argument("knot-vector: zero parameter span");
  }

  std::vector<double> knots_;
};

struct NurbsCurve {
  int degree = 0;
  KnotVector knots;
  std::vector<Vec3> control_points;
  std::vector<double> weights;

  void validate() const {
    if (degree < 0) throw std::invalid_argument("curve: negative degree");
    if (knots.size() != control_points.size() + static_cast<std::size_t>(degree) + 1)
      throw std::invalid_argument("curve: |knots| != |control| + degree + 1");
    if (weights.size() != control_points.size())
      throw std::invalid_argument("curve: |weights| != |control|");
    for (double w : weights)
      if (!(w > 0.0)) throw std::invalid_argument("curve: nonpositive weight");
  }
};

// Row-major n x m grid of T.
template <typename T>
struct Grid {
  std::size_t rows = 0, cols = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

  T &at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const T &at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  bool empty() const { return data.empty(); }
};

struct NurbsSurface {
  int degree_u = 0, degree_v = 0;
  KnotVector knots_u, knots_v;
  Grid<Vec3> control_points;
  Grid<double> weights;

  std::size_t num_ctrl_u() const { return control_points.rows; }
  std::size_t num_ctrl_v() const { return control_points.cols; }

  void validate() const {
    if (degree_u < 0 || degree_v < 0)
      throw std::invalid_argument("surface: negative degree");
    if (control_points.empty())
      throw std::invalid_argument("surface: empty control grid");
    if (knots_u.size() != control_points.rows + static_cast<std::size_t>(degree_u) + 1)
      throw std::invalid_argument("surface: |U| != n + p + 1");
    if (knots_v.size() != control_points.cols + static_cast<std::size_t>(degree_v) + 1)
      throw std::invalid_argument("surface: |V| != m + q + 1");
    if (weights.rows != control_points.rows || weights.cols != control_points.cols)
      throw std::invalid_argument("surface: weight grid dims != control grid dims");
    for (double w : weights.data)
      if (!(w > 0.0)) throw std::invalid_argument("surface: nonpositive weight");
  }
};

struct UvGrid {
  Grid<Vec3> points;
  double u_min = 0.0, u_max = 1.0, v_min = 0.0, v_max = 1.0;
};

struct PointCloud {
  std::vector<Vec3> points;
};

}  // namespace nnrb
