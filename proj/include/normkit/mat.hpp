#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace normkit {

/// Dense row-major matrix of doubles. The single data carrier for
/// activations, covariances, whitening matrices and gradients.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat diag(const std::vector<double>& entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  Mat transposed() const;

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

  /// True if every entry is finite (no NaN/Inf).
  bool all_finite() const;

  /// max_ij |a_ij|
  double max_abs() const;
  double frobenius_norm() const;
  double trace() const;

  /// Throws std::invalid_argument when any entry is NaN/Inf; `what` names
  /// the offending value in the message.
  void require_finite(const std::string& what) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);

/// C = A * B. Parallel over output rows; each entry is accumulated in a
/// fixed order, so results do not depend on the thread count.
Mat matmul(const Mat& a, const Mat& b);
/// C = A^T * B
Mat matmul_tn(const Mat& a, const Mat& b);
/// C = A * B^T
Mat matmul_nt(const Mat& a, const Mat& b);

double dot(const Mat& a, const Mat& b);
Mat hadamard(const Mat& a, const Mat& b);
Mat symmetrized(const Mat& a);

/// max_ij |a_ij - b_ij|
double max_abs_diff(const Mat& a, const Mat& b);

namespace ref {
/// Serial reference kernels. Kept alongside the parallel versions so tests
/// can assert the OpenMP paths are bit-identical to them.
Mat matmul(const Mat& a, const Mat& b);
Mat matmul_tn(const Mat& a, const Mat& b);
Mat matmul_nt(const Mat& a, const Mat& b);
}  // namespace ref

}  // namespace normkit
