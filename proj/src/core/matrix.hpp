#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "core/errors.hpp"

namespace stochchain {

inline constexpr std::size_t kMaxDim = 64;
inline constexpr double kDefaultValidateTol = 1e-12;

// Dense square matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t dim, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t dim);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  std::vector<std::vector<double>> to_rows() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
std::vector<double> operator*(const Matrix& a, std::span<const double> x);
// x^T A
std::vector<double> left_multiply(std::span<const double> x, const Matrix& a);

double max_abs_difference(const Matrix& a, const Matrix& b);

// Nonnegative matrix with unit row sums (within the tolerance it was
// validated against). Immutable once built.
class StochasticMatrix {
 public:
  static StochasticMatrix identity(std::size_t dim);

  std::size_t dim() const noexcept { return m_.dim(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }
  std::span<const double> row(std::size_t i) const { return m_.row(i); }
  bool renormalized() const noexcept { return renormalized_; }

  // Product of two stochastic matrices; no revalidation.
  friend StochasticMatrix operator*(const StochasticMatrix& a, const StochasticMatrix& b);
  friend bool operator==(const StochasticMatrix& a, const StochasticMatrix& b) {
    return a.m_ == b.m_;
  }

  // Wraps a matrix known to be stochastic by construction (products,
  // convex combinations). Callers own the invariant.
  static StochasticMatrix trusted(Matrix m);

 private:
  friend StochasticMatrix validate(const Matrix&, double, bool);
  StochasticMatrix(Matrix m, bool renormalized) : m_(std::move(m)), renormalized_(renormalized) {}

  Matrix m_;
  bool renormalized_ = false;
};

// Rejects negative entries and rows whose sum is farther than `tol` from 1.
// With `renormalize`, rows inside the tolerance are rescaled to sum to 1 and
// the result is flagged.
StochasticMatrix validate(const Matrix& raw, double tol = kDefaultValidateTol,
                          bool renormalize = false);
StochasticMatrix validate(const std::vector<std::vector<double>>& raw,
                          double tol = kDefaultValidateTol, bool renormalize = false);

double max_row_sum_drift(const Matrix& m);

class StochasticVector {
 public:
  static StochasticVector uniform(std::size_t dim);
  static StochasticVector basis(std::size_t dim, std::size_t i);
  static StochasticVector trusted(std::vector<double> v);

  std::size_t dim() const noexcept { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<const double> values() const noexcept { return v_; }
  double min() const;
  double max() const;

  friend bool operator==(const StochasticVector&, const StochasticVector&) = default;

 private:
  friend StochasticVector validate_vector(std::span<const double>, double);
  explicit StochasticVector(std::vector<double> v) : v_(std::move(v)) {}
  std::vector<double> v_;
};

StochasticVector validate_vector(std::span<const double> raw, double tol = kDefaultValidateTol);

double dot(std::span<const double> a, std::span<const double> b);
double l1_distance(std::span<const double> a, std::span<const double> b);

// W(k:t0) = W(k)...W(t0+1), starting from the identity at k = t0.
class ProductAccumulator {
 public:
  ProductAccumulator(std::size_t dim, std::size_t t0)
      : t0_(t0), k_(t0), product_(StochasticMatrix::identity(dim)) {}

  std::size_t t0() const noexcept { return t0_; }
  std::size_t k() const noexcept { return k_; }
  const StochasticMatrix& product() const noexcept { return product_; }

  // product <- m * product, k <- k+1
  void absorb(const StochasticMatrix& m);

 private:
  std::size_t t0_;
  std::size_t k_;
  StochasticMatrix product_;
};

ProductAccumulator left_absorb(ProductAccumulator acc, const StochasticMatrix& m);

enum class RowNorm { MaxAbs, L1 };

double row_disagreement(const StochasticMatrix& m, std::size_t i, std::size_t j,
                        RowNorm norm = RowNorm::MaxAbs);
double row_distance(std::span<const double> a, std::span<const double> b, RowNorm norm);

double column_inner_product(const StochasticMatrix& m, std::size_t i, std::size_t j);

}  // namespace stochchain
