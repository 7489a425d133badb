#pragma once

#include <span>
#include <string>
#include <vector>

#include "dblab/datagen.hpp"
#include "dblab/linalg.hpp"
#include "dblab/mat.hpp"
#include "dblab/optim.hpp"

namespace dblab {

struct Components {
    double rest;  // ||P_rest v||
    double pivot; // ||P_pivot v||
    double perp;  // ||P_perp v||
};

Components components(const Vector& v, const ProjectionBasis& basis);
Components components(const Vector& v, const ProjectionSet& proj);

// Estimation error mu * ||P v||^2.
double estimation_error(const Vector& v, const ProjectionBasis& basis, double mu);
double estimation_error(const Vector& v, const ProjectionSet& proj, double mu);

// Infimum of the estimation error on the alpha-level set: mu * n * alpha / gamma_1.
double delta_star(double alpha, std::size_t n, double mu, double gamma1);

enum class QRegime { moderate_pivot_1, small_pivot_n };

// Contraction/coupling coefficients of the per-epoch recursion on
// (||P_rest v||, ||P_pivot v||).
struct QFactors {
    double q_pivot;
    double q_rest;
    double xi;
    double eta;  // the rate the factors were built for (recursion audits check it)
    QRegime regime;
};

// pivot_proj_sq is ||P_pivot x_bar_pivot||^2. The moderate regime pivots on the
// largest-norm sample, the small regime on the smallest.
QFactors q_factors(double eta, std::size_t b, std::size_t n, double lambda1, double lambda2,
                   double lambda_n, double lambda_n_minus_1, double iota, double pivot_proj_sq,
                   QRegime regime);

// Convenience: factors for a dataset + basis (pivot_proj_sq measured from the basis).
QFactors q_factors_for(const Dataset& ds, const ProjectionBasis& basis, double eta, std::size_t b,
                       double iota, QRegime regime);

// Eigen-rotation view of the 2x2 coefficient matrix [[q_rest, xi], [xi, q_pivot]];
// reported by the verification harness, never asserted.
struct AbCoeffDecomposition {
    double rho_pivot;  // eigenvalue attached to the pivot component
    double rho_rest;
    double theta;      // rotation angle
};

AbCoeffDecomposition ab_coeff_decomposition(const QFactors& qf);

struct AbPoint {
    double rest;
    double pivot;
    double eta;  // rate that produced the step into the NEXT point
};

struct RecursionViolation {
    int k;             // step k -> k+1 that violated
    std::string kind;  // "rest_upper", "pivot_upper", "pivot_lower"
    double value;
    double bound;
};

// Audits A_{k+1} <= q_rest A_k + xi B_k and |B_{k+1} - q_pivot B_k| <= xi A_k
// with slack 1e-12 (A_k + B_k). The series must come from a constant-eta phase
// matching the factors; a mixed series is a contract error.
std::vector<RecursionViolation> check_epoch_recursion(std::span<const AbPoint> series,
                                                      const QFactors& qf);

// Max over recorded epochs of ||P_perp (v_k - v_0)||. Uses snapshots when the
// trajectory has them, otherwise the stored per-epoch perp_residual column.
double minimum_norm_residual(const Trajectory& traj, const ProjectionBasis& basis);

enum class OptClass { eps_optimal, m_suboptimal, neither };

struct OptimalityVerdict {
    double delta;
    double delta_star;
    double ratio;
    double eps;
    double m;
    OptClass classification;
};

// Strict thresholds: eps-optimal iff delta < (1+eps) delta_star; M-suboptimal
// iff delta > M delta_star.
OptimalityVerdict classify_optimality(double delta, double delta_star, double eps, double m);

const char* to_string(OptClass c);

// Per-epoch diagnostics observer: fills rayleigh (on the projected iterate),
// component norms, estimation error, and the perp residual against v0.
// Rayleigh is computed on the normalized iterate so geometric growth or decay
// of ||v|| cannot overflow the quotient.
class EpochProbe {
public:
    EpochProbe(const Dataset& ds, const ProjectionBasis& basis, Vector v0);

    void operator()(EpochRow& row, const Vector& v) const;
    EpochObserver observer() const;

private:
    const Matrix& x_;
    const ProjectionBasis& basis_;
    Vector v0_;
    double mu_;
};

}  // namespace dblab
