#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace camta {

using Index = std::int64_t;
using MatrixRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatrixRM>;
using ConstMatMap = Eigen::Map<const MatrixRM>;

// Dense row-major tensor of doubles. The graph only ever needs rank 1 or 2;
// rank-1 tensors behave as single-row matrices where a matrix view is asked for.
struct Tensor {
  std::vector<Index> shape;
  Eigen::VectorXd data;

  Tensor() = default;

  explicit Tensor(std::vector<Index> s) : shape(std::move(s)) {
    data = Eigen::VectorXd::Zero(numel_of(shape));
  }

  Tensor(std::vector<Index> s, std::initializer_list<double> vals)
      : shape(std::move(s)) {
    if (static_cast<Index>(vals.size()) != numel_of(shape))
      throw std::invalid_argument("Tensor: literal size does not match shape");
    data.resize(static_cast<Eigen::Index>(vals.size()));
    Index i = 0;
    for (double v : vals) data[i++] = v;
  }

  static Index numel_of(const std::vector<Index>& s) {
    Index n = 1;
    for (Index d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: nonpositive dimension");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(Index rows, Index cols) { return Tensor({rows, cols}); }
  static Tensor zeros(Index n) { return Tensor({n}); }

  static Tensor scalar(double v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
  }

  Index numel() const { return data.size(); }
  Index rank() const { return static_cast<Index>(shape.size()); }

  // matrix view: rank-2 as-is, rank-1 as a 1 x n row
  Index rows() const { return shape.size() == 2 ? shape[0] : 1; }
  Index cols() const { return shape.empty() ? 0 : shape.back(); }

  MatMap mat() { return MatMap(data.data(), rows(), cols()); }
  ConstMatMap mat() const { return ConstMatMap(data.data(), rows(), cols()); }

  double& at(Index r, Index c) { return data[r * cols() + c]; }
  double at(Index r, Index c) const { return data[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const { return data.allFinite(); }
};

inline std::string shape_str(const std::vector<Index>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace camta
