#include "core/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stochchain {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::RowSumOutOfTolerance: return "RowSumOutOfTolerance";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::DimensionTooLargeForCutEnumeration: return "DimensionTooLargeForCutEnumeration";
    case ErrorCode::TrivialSubset: return "TrivialSubset";
    case ErrorCode::NotDeterministic: return "NotDeterministic";
    case ErrorCode::InfeasibleBound: return "InfeasibleBound";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotAFixedVector: return "NotAFixedVector";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Validation: return "ValidationError";
  }
  return "Unknown";
}

Matrix::Matrix(std::size_t dim, double fill) : dim_(dim), data_(dim * dim, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) : dim_(rows.size()) {
  data_.reserve(dim_ * dim_);
  for (const auto& r : rows) {
    if (r.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t dim) {
  Matrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size())
      throw Error(ErrorCode::DimensionMismatch, "matrix is not square", i);
    std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * m.dim_));
  }
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> rows(dim_);
  for (std::size_t i = 0; i < dim_; ++i) rows[i].assign(row(i).begin(), row(i).end());
  return rows;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  const std::size_t m = a.dim();
  if (b.dim() != m) throw Error(ErrorCode::DimensionMismatch, "dimension mismatch in product");
  Matrix c(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < m; ++l) {
      const double ail = a(i, l);
      if (ail == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) c(i, j) += ail * b(l, j);
    }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "dimension mismatch in sum");
  Matrix c = a;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) c(i, j) += b(i, j);
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) c(i, j) *= s;
  return c;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.dim()) throw Error(ErrorCode::DimensionMismatch, "dimension mismatch in matrix-vector product");
  std::vector<double> y(a.dim(), 0.0);
  for (std::size_t i = 0; i < a.dim(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

std::vector<double> left_multiply(std::span<const double> x, const Matrix& a) {
  if (x.size() != a.dim()) throw Error(ErrorCode::DimensionMismatch, "dimension mismatch in vector-matrix product");
  std::vector<double> y(a.dim(), 0.0);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (x[i] == 0.0) continue;
    for (std::size_t j = 0; j < a.dim(); ++j) y[j] += x[i] * a(i, j);
  }
  return y;
}

double max_abs_difference(const Matrix& a, const Matrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

StochasticMatrix StochasticMatrix::identity(std::size_t dim) {
  return StochasticMatrix(Matrix::identity(dim), false);
}

StochasticMatrix StochasticMatrix::trusted(Matrix m) { return StochasticMatrix(std::move(m), false); }

StochasticMatrix operator*(const StochasticMatrix& a, const StochasticMatrix& b) {
  return StochasticMatrix(a.m_ * b.m_, false);
}

StochasticMatrix validate(const Matrix& raw, double tol, bool renormalize) {
  const std::size_t m = raw.dim();
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "matrix dimension must be >= 1");
  if (m > kMaxDim) {
    std::ostringstream os;
    os << "dimension " << m << " exceeds cap " << kMaxDim;
    throw Error(ErrorCode::DimensionTooLarge, os.str(), m);
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  Matrix out = raw;
  bool renormalized = false;
  for (std::size_t i = 0; i < m; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double v = raw(i, j);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << "NegativeEntry(" << i << "," << j << ") = " << v;
        throw Error(ErrorCode::NegativeEntry, os.str(), i, j, v);
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
      std::ostringstream os;
      os.precision(17);
      os << "RowSumOutOfTolerance(" << i << ", " << sum << ")";
      throw Error(ErrorCode::RowSumOutOfTolerance, os.str(), i, 0, sum);
    }
    if (renormalize && sum != 1.0) {
      for (std::size_t j = 0; j < m; ++j) out(i, j) /= sum;
      renormalized = true;
    }
  }
  return StochasticMatrix(std::move(out), renormalized);
}

StochasticMatrix validate(const std::vector<std::vector<double>>& raw, double tol, bool renormalize) {
  return validate(Matrix::from_rows(raw), tol, renormalize);
}

double max_row_sum_drift(const Matrix& m) {
  double d = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v;
    d = std::max(d, std::abs(s - 1.0));
  }
  return d;
}

StochasticVector StochasticVector::uniform(std::size_t dim) {
  return StochasticVector(std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
}

StochasticVector StochasticVector::basis(std::size_t dim, std::size_t i) {
  std::vector<double> v(dim, 0.0);
  v.at(i) = 1.0;
  return StochasticVector(std::move(v));
}

StochasticVector StochasticVector::trusted(std::vector<double> v) { return StochasticVector(std::move(v)); }

double StochasticVector::min() const { return *std::min_element(v_.begin(), v_.end()); }
double StochasticVector::max() const { return *std::max_element(v_.begin(), v_.end()); }

StochasticVector validate_vector(std::span<const double> raw, double tol) {
  if (raw.empty()) throw Error(ErrorCode::InvalidArgument, "vector dimension must be >= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] >= 0.0) || !std::isfinite(raw[i]))
      throw Error(ErrorCode::NegativeEntry, "negative vector entry", i, 0, raw[i]);
    sum += raw[i];
  }
  if (std::abs(sum - 1.0) > tol)
    throw Error(ErrorCode::RowSumOutOfTolerance, "vector does not sum to 1", 0, 0, sum);
  return StochasticVector(std::vector<double>(raw.begin(), raw.end()));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

void ProductAccumulator::absorb(const StochasticMatrix& m) {
  if (m.dim() != product_.dim())
    throw Error(ErrorCode::DimensionMismatch, "dimension mismatch in left_absorb");
  product_ = m * product_;
  ++k_;
}

ProductAccumulator left_absorb(ProductAccumulator acc, const StochasticMatrix& m) {
  acc.absorb(m);
  return acc;
}

double row_distance(std::span<const double> a, std::span<const double> b, RowNorm norm) {
  double d = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    const double diff = std::abs(a[l] - b[l]);
    d = norm == RowNorm::MaxAbs ? std::max(d, diff) : d + diff;
  }
  return d;
}

double row_disagreement(const StochasticMatrix& m, std::size_t i, std::size_t j, RowNorm norm) {
  if (i >= m.dim() || j >= m.dim()) throw Error(ErrorCode::OutOfRange, "row index out of range");
  return row_distance(m.row(i), m.row(j), norm);
}

double column_inner_product(const StochasticMatrix& m, std::size_t i, std::size_t j) {
  if (i >= m.dim() || j >= m.dim()) throw Error(ErrorCode::OutOfRange, "column index out of range");
  double s = 0.0;
  for (std::size_t l = 0; l < m.dim(); ++l) s += m(l, i) * m(l, j);
  return s;
}

}  // namespace stochchain
