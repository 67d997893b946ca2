#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gpawp/error.hpp"

namespace gpawp {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

// Dense row-major 64-bit float tensor. Rank 0 = scalar (one value),
// rank 1 = vector, rank 2 = matrix.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    if (shape_size(shape) != values.size())
      throw ShapeError("tensor value count " + std::to_string(values.size()) +
                       " does not match shape " + shape_str(shape));
  }

  static Tensor zeros(Shape s) {
    std::size_t n = shape_size(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }
  static Tensor full(Shape s, double fill) {
    std::size_t n = shape_size(s);
    return Tensor(std::move(s), std::vector<double>(n, fill));
  }
  static Tensor scalar(double v) { return Tensor({}, {v}); }
  static Tensor vec(std::vector<double> v) {
    Shape s{v.size()};
    return Tensor(std::move(s), std::move(v));
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
  }

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  bool is_scalar() const { return shape.empty(); }

  std::size_t rows() const { return rank() == 2 ? shape[0] : (rank() == 1 ? 1 : 1); }
  std::size_t cols() const { return rank() == 2 ? shape[1] : (rank() == 1 ? shape[0] : 1); }

  double& at(std::size_t i) { return values[i]; }
  double at(std::size_t i) const { return values[i]; }
  double& at(std::size_t r, std::size_t c) { return values[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * shape[1] + c]; }

  double item() const {
    if (values.size() != 1)
      throw ContractError("item() on tensor of size " + std::to_string(values.size()));
    return values[0];
  }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ShapeError("cosine of vectors with lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  double na = l2_norm(a), nb = l2_norm(b);
  if (na < 1e-12 || nb < 1e-12)
    throw DegenerateVectorError("cosine similarity of near-zero vector (norms " +
                                std::to_string(na) + ", " + std::to_string(nb) + ")");
  return dot(a, b) / (na * nb);
}

}  // namespace gpawp
