#pragma once

#include <cstddef>
#include <vector>

#include "dblab/mat.hpp"

namespace dblab {

// Symmetric matrix; construction validates |a_ij - a_ji| <= tol (absolute).
class SymMatrix {
public:
    explicit SymMatrix(Matrix m, double tol = 1e-12);

    std::size_t dim() const { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const Matrix& matrix() const { return m_; }

private:
    Matrix m_;
};

// Eigenvalues in non-increasing order; eigenvectors[.,i] pairs with eigenvalues[i].
struct Spectrum {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
};

// Cyclic Jacobi for symmetric matrices. Stops when the off-diagonal Frobenius
// mass falls below 1e-12 * ||A||_F; hard cap of 100 sweeps, after which a
// NumericalError carrying the residual is thrown.
Spectrum sym_eig(const SymMatrix& a);

// Orthonormal-basis view of the span of the data columns, with the pivot
// column's residual direction kept separate. q_span = [rest basis | pivot dir];
// this is the object the large-scale paths use instead of d x d projectors.
struct ProjectionBasis {
    Matrix q_span;          // d x r, orthonormal columns; spans col(X)
    std::size_t rest_cols;  // first rest_cols columns span the non-pivot columns
    int pivot_index;        // 1-based index of the pivot column in X

    std::size_t dim() const { return q_span.rows(); }
    std::size_t rank() const { return q_span.cols(); }

    // Coordinates of v in the span basis (Q^T v).
    Vector span_coords(const Vector& v) const;
    Vector apply_p(const Vector& v) const;
    Vector apply_p_rest(const Vector& v) const;
    Vector apply_p_pivot(const Vector& v) const;
    Vector apply_p_perp(const Vector& v) const;
};

// The four explicit projectors (desk scale; d x d each).
struct ProjectionSet {
    SymMatrix p;
    SymMatrix p_perp;
    SymMatrix p_pivot;
    SymMatrix p_rest;
    int pivot_index;  // 1-based
};

// Modified Gram-Schmidt with one re-orthogonalization pass. Throws
// DegenerateDataError if some column's residual drops below
// rel_tol * ||column|| (linearly dependent columns).
ProjectionBasis build_projection_basis(const Matrix& x, int pivot, double rel_tol = 1e-10);
ProjectionSet build_projections(const Matrix& x, int pivot, double rel_tol = 1e-10);

// v^T H v / ||v||^2. Throws ContractError when ||v|| <= 1e-12 * (1 + ||H||_F)
// (the quotient is undefined; the iterate has effectively reached the optimum).
double rayleigh(const SymMatrix& h, const Vector& v);

struct GershgorinDisc {
    double center;
    double radius;
};

// Discs in row order plus the connected groups they form on the real line;
// a group of k discs contains exactly k eigenvalues.
struct GershgorinResult {
    std::vector<GershgorinDisc> discs;
    std::vector<std::vector<int>> groups;      // disc indices per group
    std::vector<int> group_eigenvalue_counts;  // == group size

    bool contains(double x) const;
};

GershgorinResult gershgorin_discs(const SymMatrix& a);

struct HoffmanWielandtGap {
    double lhs;  // sum of squared sorted-eigenvalue gaps between A+E and A
    double rhs;  // ||E||_F^2
    bool holds;  // lhs <= rhs + 1e-10
};

HoffmanWielandtGap hoffman_wielandt_gap(const SymMatrix& a, const SymMatrix& e);

}  // namespace dblab
