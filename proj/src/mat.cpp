#include "normkit/mat.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace normkit {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

// Row i of C accumulated serially in k order; rows are independent, so the
// OpenMP split cannot change the result.
void matmul_row(const Mat& a, const Mat& b, Mat& c, std::size_t i) {
  const std::size_t n = b.cols();
  const std::size_t kk = a.cols();
  double* ci = c.row(i);
  const double* ai = a.row(i);
  for (std::size_t k = 0; k < kk; ++k) {
    const double aik = ai[k];
    const double* bk = b.row(k);
    for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("Mat: data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(rows_) + "x" +
                                std::to_string(cols_));
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("Mat: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(const std::vector<double>& entries) {
  Mat m(entries.size(), entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
  return m;
}

Mat Mat::transposed() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat& Mat::operator+=(const Mat& other) {
  require_same_shape(*this, other, "Mat::operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  require_same_shape(*this, other, "Mat::operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

bool Mat::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Mat::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

double Mat::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Mat::trace() const {
  const std::size_t n = std::min(rows_, cols_);
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) t += (*this)(i, i);
  return t;
}

void Mat::require_finite(const std::string& what) const {
  if (!all_finite()) throw std::invalid_argument(what + ": non-finite entry");
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dim mismatch");
  Mat c(a.rows(), b.cols());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (a.size() * b.cols() > 65536)
#endif
  for (std::ptrdiff_t i = 0; i < m; ++i) matmul_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: inner dim mismatch");
  Mat c(a.cols(), b.cols());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.cols());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (a.size() * b.cols() > 65536)
#endif
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    double* ci = c.row(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < a.rows(); ++k) {
      const double aki = a(k, static_cast<std::size_t>(i));
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dim mismatch");
  Mat c(a.rows(), b.rows());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (a.size() * b.rows() > 65536)
#endif
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double* ai = a.row(static_cast<std::size_t>(i));
    double* ci = c.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return c;
}

double dot(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

Mat hadamard(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "hadamard");
  Mat c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * b.data()[i];
  return c;
}

Mat symmetrized(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("symmetrized: square required");
  Mat s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

namespace ref {

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("ref::matmul: inner dim mismatch");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) { return ref::matmul(a.transposed(), b); }

Mat matmul_nt(const Mat& a, const Mat& b) { return ref::matmul(a, b.transposed()); }

}  // namespace ref

}  // namespace normkit
