#pragma once

#include <cstddef>
#include <vector>

namespace dblab {

using Vector = std::vector<double>;

// Dense column-major matrix. Column-major so that per-sample feature columns
// and orthonormal basis columns are contiguous in the hot loops.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[j * rows_ + i]; }

    double* col(std::size_t j) { return a_.data() + j * rows_; }
    const double* col(std::size_t j) const { return a_.data() + j * rows_; }

    std::vector<double>& data() { return a_; }
    const std::vector<double>& data() const { return a_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

// y = A x
Vector matvec(const Matrix& a, const Vector& x);
// y = A^T x
Vector tmatvec(const Matrix& a, const Vector& x);
// C = A B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T B
Matrix tmatmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

double frobenius_norm(const Matrix& a);

double dot(const Vector& x, const Vector& y);
double norm2(const Vector& x);
// y += alpha * x
void axpy(double alpha, const Vector& x, Vector& y);
void scale(double alpha, Vector& x);
Vector sub(const Vector& x, const Vector& y);

bool all_finite(const Vector& x);

}  // namespace dblab
