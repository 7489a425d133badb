#include "dblab/mat.hpp"

#include <cmath>
#include <cstddef>

#include "dblab/errors.hpp"

namespace dblab {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector matvec(const Matrix& a, const Vector& x) {
    if (x.size() != a.cols()) throw ContractError("matvec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double* c = a.col(j);
        const double xj = x[j];
        for (std::size_t i = 0; i < a.rows(); ++i) y[i] += xj * c[i];
    }
    return y;
}

Vector tmatvec(const Matrix& a, const Vector& x) {
    if (x.size() != a.rows()) throw ContractError("tmatvec: dimension mismatch");
    Vector y(a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double* c = a.col(j);
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += c[i] * x[i];
        y[j] = s;
    }
    return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ContractError("matmul: dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        double* cj = c.col(j);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double bkj = b(k, j);
            const double* ak = a.col(k);
            for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
        }
    }
    return c;
}

Matrix tmatmul(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ContractError("tmatmul: dimension mismatch");
    Matrix c(a.cols(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        const double* bj = b.col(j);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double* ai = a.col(i);
            double s = 0.0;
            for (std::size_t r = 0; r < a.rows(); ++r) s += ai[r] * bj[r];
            c(i, j) = s;
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
    return t;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double dot(const Vector& x, const Vector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

void axpy(double alpha, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, Vector& x) {
    for (double& v : x) v *= alpha;
}

Vector sub(const Vector& x, const Vector& y) {
    Vector z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
    return z;
}

bool all_finite(const Vector& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace dblab
