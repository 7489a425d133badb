#include "dblab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>

#include "dblab/errors.hpp"

namespace dblab {

SymMatrix::SymMatrix(Matrix m, double tol) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw ContractError("SymMatrix: not square");
    for (std::size_t j = 0; j < m_.cols(); ++j)
        for (std::size_t i = j + 1; i < m_.rows(); ++i)
            if (std::abs(m_(i, j) - m_(j, i)) > tol)
                throw ContractError("SymMatrix: asymmetry exceeds tolerance at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
}

namespace {

double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace

Spectrum sym_eig(const SymMatrix& sym) {
    const std::size_t n = sym.dim();
    Matrix a = sym.matrix();
    Matrix v = Matrix::identity(n);

    const double norm = frobenius_norm(a);
    const double tol = 1e-12 * norm;
    constexpr int kMaxSweeps = 100;

    if (n > 1) {
        bool converged = offdiag_frobenius(a) <= tol;
        for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
            for (std::size_t p = 0; p + 1 < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    const double apq = a(p, q);
                    if (apq == 0.0) continue;
                    // Classic stable rotation: t = sign(theta)/(|theta|+sqrt(theta^2+1)).
                    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                    double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                    const double c = 1.0 / std::sqrt(t * t + 1.0);
                    const double s = t * c;
                    const double tau = s / (1.0 + c);

                    const double app = a(p, p), aqq = a(q, q);
                    a(p, p) = app - t * apq;
                    a(q, q) = aqq + t * apq;
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        if (i == p || i == q) continue;
                        const double aip = a(i, p), aiq = a(i, q);
                        a(i, p) = aip - s * (aiq + tau * aip);
                        a(p, i) = a(i, p);
                        a(i, q) = aiq + s * (aip - tau * aiq);
                        a(q, i) = a(i, q);
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        const double vip = v(i, p), viq = v(i, q);
                        v(i, p) = vip - s * (viq + tau * vip);
                        v(i, q) = viq + s * (vip - tau * viq);
                    }
                }
            }
            converged = offdiag_frobenius(a) <= tol;
        }
        if (!converged) {
            throw NumericalError("sym_eig: Jacobi did not converge within 100 sweeps",
                                 offdiag_frobenius(a));
        }
    }

    // Sort descending; stable so ties keep Jacobi output order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&a](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    Spectrum out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
    }
    return out;
}

Vector ProjectionBasis::span_coords(const Vector& v) const { return tmatvec(q_span, v); }

Vector ProjectionBasis::apply_p(const Vector& v) const { return matvec(q_span, span_coords(v)); }

Vector ProjectionBasis::apply_p_rest(const Vector& v) const {
    Vector c = span_coords(v);
    for (std::size_t j = rest_cols; j < c.size(); ++j) c[j] = 0.0;
    return matvec(q_span, c);
}

Vector ProjectionBasis::apply_p_pivot(const Vector& v) const {
    Vector c = span_coords(v);
    for (std::size_t j = 0; j < rest_cols; ++j) c[j] = 0.0;
    return matvec(q_span, c);
}

Vector ProjectionBasis::apply_p_perp(const Vector& v) const {
    Vector pv = apply_p(v);
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - pv[i];
    return out;
}

namespace {

// Orthogonalize `w` against the first `k` columns of q, twice through.
void orthogonalize_against(const Matrix& q, std::size_t k, Vector& w) {
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < k; ++j) {
            const double* qj = q.col(j);
            double s = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) s += qj[i] * w[i];
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= s * qj[i];
        }
    }
}

}  // namespace

ProjectionBasis build_projection_basis(const Matrix& x, int pivot, double rel_tol) {
    const std::size_t d = x.rows();
    const std::size_t n = x.cols();
    if (n == 0) throw ContractError("build_projection_basis: no columns");
    if (pivot < 1 || static_cast<std::size_t>(pivot) > n)
        throw ContractError("build_projection_basis: pivot out of range");
    if (n > d) throw DegenerateDataError("build_projection_basis: more columns than dimensions");

    // Non-pivot columns first (in order), pivot last, so the pivot residual
    // direction is the final basis column.
    std::vector<std::size_t> cols;
    cols.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
        if (j != static_cast<std::size_t>(pivot - 1)) cols.push_back(j);
    cols.push_back(static_cast<std::size_t>(pivot - 1));

    Matrix q(d, n);
    std::size_t r = 0;
    for (std::size_t idx : cols) {
        Vector w(x.col(idx), x.col(idx) + d);
        const double orig = norm2(w);
        if (orig == 0.0) throw DegenerateDataError("build_projection_basis: zero column");
        orthogonalize_against(q, r, w);
        const double res = norm2(w);
        if (res < rel_tol * orig)
            throw DegenerateDataError("build_projection_basis: columns linearly dependent (residual " +
                                      std::to_string(res) + ")");
        for (std::size_t i = 0; i < d; ++i) q(i, r) = w[i] / res;
        ++r;
    }

    ProjectionBasis basis;
    basis.q_span = std::move(q);
    basis.rest_cols = n - 1;
    basis.pivot_index = pivot;
    return basis;
}

ProjectionSet build_projections(const Matrix& x, int pivot, double rel_tol) {
    ProjectionBasis basis = build_projection_basis(x, pivot, rel_tol);
    const std::size_t d = basis.dim();
    const std::size_t r = basis.rank();

    Matrix p(d, d), p_rest(d, d), p_pivot(d, d);
    for (std::size_t k = 0; k < r; ++k) {
        const double* qk = basis.q_span.col(k);
        Matrix& target = (k < basis.rest_cols) ? p_rest : p_pivot;
        for (std::size_t j = 0; j < d; ++j) {
            const double qkj = qk[j];
            for (std::size_t i = 0; i < d; ++i) {
                const double v = qk[i] * qkj;
                p(i, j) += v;
                target(i, j) += v;
            }
        }
    }
    Matrix p_perp(d, d);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < d; ++i) p_perp(i, j) = (i == j ? 1.0 : 0.0) - p(i, j);

    return ProjectionSet{SymMatrix(std::move(p), 1e-10), SymMatrix(std::move(p_perp), 1e-10),
                         SymMatrix(std::move(p_pivot), 1e-10), SymMatrix(std::move(p_rest), 1e-10),
                         pivot};
}

double rayleigh(const SymMatrix& h, const Vector& v) {
    if (v.size() != h.dim()) throw ContractError("rayleigh: dimension mismatch");
    const double vnorm2 = dot(v, v);
    const double scale = 1.0 + frobenius_norm(h.matrix());
    if (std::sqrt(vnorm2) <= 1e-12 * scale)
        throw ContractError("rayleigh: vector too small, quotient undefined");
    return dot(v, matvec(h.matrix(), v)) / vnorm2;
}

bool GershgorinResult::contains(double x) const {
    for (const auto& d : discs)
        if (std::abs(x - d.center) <= d.radius) return true;
    return false;
}

GershgorinResult gershgorin_discs(const SymMatrix& a) {
    const std::size_t n = a.dim();
    GershgorinResult out;
    out.discs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) radius += std::abs(a(i, j));
        out.discs.push_back({a(i, i), radius});
    }

    // Connected components of overlapping intervals on the real line.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&out](int i, int j) {
        return out.discs[i].center - out.discs[i].radius < out.discs[j].center - out.discs[j].radius;
    });
    std::vector<int> group;
    double group_right = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& d = out.discs[order[k]];
        const double left = d.center - d.radius;
        const double right = d.center + d.radius;
        if (group.empty()) {
            group.push_back(order[k]);
            group_right = right;
        } else if (left <= group_right) {
            group.push_back(order[k]);
            group_right = std::max(group_right, right);
        } else {
            out.groups.push_back(group);
            group = {order[k]};
            group_right = right;
        }
    }
    if (!group.empty()) out.groups.push_back(group);
    for (const auto& g : out.groups) out.group_eigenvalue_counts.push_back(static_cast<int>(g.size()));
    return out;
}

HoffmanWielandtGap hoffman_wielandt_gap(const SymMatrix& a, const SymMatrix& e) {
    if (a.dim() != e.dim()) throw ContractError("hoffman_wielandt_gap: dimension mismatch");
    Matrix perturbed = a.matrix();
    for (std::size_t j = 0; j < perturbed.cols(); ++j)
        for (std::size_t i = 0; i < perturbed.rows(); ++i) perturbed(i, j) += e(i, j);

    const Spectrum sa = sym_eig(a);
    const Spectrum sae = sym_eig(SymMatrix(std::move(perturbed), 1e-10));

    double lhs = 0.0;
    for (std::size_t i = 0; i < sa.eigenvalues.size(); ++i) {
        const double gap = sae.eigenvalues[i] - sa.eigenvalues[i];
        lhs += gap * gap;
    }
    const double fro = frobenius_norm(e.matrix());
    const double rhs = fro * fro;
    return HoffmanWielandtGap{lhs, rhs, lhs <= rhs + 1e-10};
}

}  // namespace dblab
