#include "dblab/diag.hpp"

#include <algorithm>
#include <cmath>

#include "dblab/errors.hpp"

namespace dblab {

namespace {

Components components_from_coords(const Vector& coords, std::size_t rest_cols, const Vector& v) {
    double rest_sq = 0.0, pivot_sq = 0.0;
    for (std::size_t j = 0; j < coords.size(); ++j) {
        if (j < rest_cols)
            rest_sq += coords[j] * coords[j];
        else
            pivot_sq += coords[j] * coords[j];
    }
    const double total_sq = dot(v, v);
    const double perp_sq = std::max(0.0, total_sq - rest_sq - pivot_sq);
    return Components{std::sqrt(rest_sq), std::sqrt(pivot_sq), std::sqrt(perp_sq)};
}

}  // namespace

Components components(const Vector& v, const ProjectionBasis& basis) {
    if (v.size() != basis.dim()) throw ContractError("components: dimension mismatch");
    return components_from_coords(basis.span_coords(v), basis.rest_cols, v);
}

Components components(const Vector& v, const ProjectionSet& proj) {
    if (v.size() != proj.p.dim()) throw ContractError("components: dimension mismatch");
    return Components{norm2(matvec(proj.p_rest.matrix(), v)),
                      norm2(matvec(proj.p_pivot.matrix(), v)),
                      norm2(matvec(proj.p_perp.matrix(), v))};
}

double estimation_error(const Vector& v, const ProjectionBasis& basis, double mu) {
    if (!(mu > 0.0)) throw ContractError("estimation_error: mu must be positive");
    const Vector c = basis.span_coords(v);
    return mu * dot(c, c);
}

double estimation_error(const Vector& v, const ProjectionSet& proj, double mu) {
    if (!(mu > 0.0)) throw ContractError("estimation_error: mu must be positive");
    const Vector pv = matvec(proj.p.matrix(), v);
    return mu * dot(pv, pv);
}

double delta_star(double alpha, std::size_t n, double mu, double gamma1) {
    if (alpha < 0.0) throw ContractError("delta_star: alpha must be >= 0");
    if (!(gamma1 > 0.0)) throw ContractError("delta_star: gamma1 must be positive");
    return mu * static_cast<double>(n) * alpha / gamma1;
}

QFactors q_factors(double eta, std::size_t b, std::size_t n, double lambda1, double lambda2,
                   double lambda_n, double lambda_n_minus_1, double iota, double pivot_proj_sq,
                   QRegime regime) {
    if (!(eta >= 0.0)) throw ContractError("q_factors: eta must be >= 0");
    const double bb = static_cast<double>(b);
    const double nn = static_cast<double>(n);
    const double xi = 4.0 * eta * std::sqrt(nn) * iota / bb;
    const double noise = 3.0 * nn * eta * iota / bb;

    QFactors qf;
    qf.xi = xi;
    qf.eta = eta;
    qf.regime = regime;
    if (regime == QRegime::moderate_pivot_1) {
        qf.q_pivot = std::abs(1.0 - 2.0 * eta * lambda1 / bb * pivot_proj_sq);
        qf.q_rest = std::max(std::abs(1.0 - 2.0 * eta / bb * (lambda2 + nn * iota)) + noise,
                             std::abs(1.0 - 2.0 * eta / bb * (lambda_n - nn * iota)) + noise);
    } else {
        qf.q_pivot = std::abs(1.0 - 2.0 * eta * lambda_n / bb * pivot_proj_sq);
        qf.q_rest = std::max(std::abs(1.0 - 2.0 * eta / bb * (lambda1 + nn * iota)) + noise,
                             std::abs(1.0 - 2.0 * eta / bb * (lambda_n_minus_1 - nn * iota)) + noise);
    }
    return qf;
}

QFactors q_factors_for(const Dataset& ds, const ProjectionBasis& basis, double eta, std::size_t b,
                       double iota, QRegime regime) {
    const std::size_t n = ds.count();
    if (n < 2) throw ContractError("q_factors_for: needs at least two samples");
    const int pivot = basis.pivot_index;
    const Vector xp(ds.x.col(static_cast<std::size_t>(pivot - 1)),
                    ds.x.col(static_cast<std::size_t>(pivot - 1)) + ds.dim());
    const double lp = ds.lambdas[static_cast<std::size_t>(pivot - 1)];
    Vector xbar = xp;
    scale(1.0 / std::sqrt(lp), xbar);
    const Components c = components(xbar, basis);
    return q_factors(eta, b, n, ds.lambdas[0], ds.lambdas[1], ds.lambdas[n - 1], ds.lambdas[n - 2],
                     iota, c.pivot * c.pivot, regime);
}

AbCoeffDecomposition ab_coeff_decomposition(const QFactors& qf) {
    const double diff = qf.q_pivot - qf.q_rest;
    const double disc = std::sqrt(diff * diff + 4.0 * qf.xi * qf.xi);
    const double mean = 0.5 * (qf.q_pivot + qf.q_rest);
    AbCoeffDecomposition d;
    d.rho_pivot = mean + 0.5 * disc;
    d.rho_rest = mean - 0.5 * disc;
    d.theta = 0.5 * std::atan2(2.0 * qf.xi, diff);
    return d;
}

std::vector<RecursionViolation> check_epoch_recursion(std::span<const AbPoint> series,
                                                      const QFactors& qf) {
    std::vector<RecursionViolation> out;
    if (series.size() < 2) return out;
    for (std::size_t k = 0; k + 1 < series.size(); ++k) {
        if (std::abs(series[k].eta - qf.eta) > 1e-12 * std::max(1.0, qf.eta))
            throw ContractError("check_epoch_recursion: series eta does not match the q-factors");
        const double a = series[k].rest, b = series[k].pivot;
        const double a1 = series[k + 1].rest, b1 = series[k + 1].pivot;
        const double tol = 1e-12 * (a + b);
        const double rest_ub = qf.q_rest * a + qf.xi * b + tol;
        if (a1 > rest_ub)
            out.push_back({static_cast<int>(k), "rest_upper", a1, rest_ub});
        const double pivot_ub = qf.q_pivot * b + qf.xi * a + tol;
        const double pivot_lb = qf.q_pivot * b - qf.xi * a - tol;
        if (b1 > pivot_ub)
            out.push_back({static_cast<int>(k), "pivot_upper", b1, pivot_ub});
        if (b1 < pivot_lb)
            out.push_back({static_cast<int>(k), "pivot_lower", b1, pivot_lb});
    }
    return out;
}

double minimum_norm_residual(const Trajectory& traj, const ProjectionBasis& basis) {
    double worst = 0.0;
    // Snapshots may be sparse (phase boundaries only); combine both sources.
    if (!traj.snapshots.empty() && traj.snapshot_epochs.front() == 0) {
        const Vector& v0 = traj.snapshots.front();
        for (const Vector& v : traj.snapshots)
            worst = std::max(worst, norm2(basis.apply_p_perp(sub(v, v0))));
    }
    for (const auto& row : traj.rows)
        if (std::isfinite(row.perp_residual)) worst = std::max(worst, row.perp_residual);
    return worst;
}

OptimalityVerdict classify_optimality(double delta, double delta_star, double eps, double m) {
    if (!(eps > 0.0)) throw ContractError("classify_optimality: eps must be positive");
    if (!(m > 1.0)) throw ContractError("classify_optimality: M must exceed 1");
    if (!(delta_star > 0.0)) {
        if (delta > 0.0)
            throw ContractError("classify_optimality: degenerate level set (delta_star == 0)");
        throw ContractError("classify_optimality: delta_star must be positive");
    }
    OptimalityVerdict v;
    v.delta = delta;
    v.delta_star = delta_star;
    v.ratio = delta / delta_star;
    v.eps = eps;
    v.m = m;
    if (delta < (1.0 + eps) * delta_star)
        v.classification = OptClass::eps_optimal;
    else if (delta > m * delta_star)
        v.classification = OptClass::m_suboptimal;
    else
        v.classification = OptClass::neither;
    return v;
}

const char* to_string(OptClass c) {
    switch (c) {
        case OptClass::eps_optimal: return "eps_optimal";
        case OptClass::m_suboptimal: return "m_suboptimal";
        case OptClass::neither: return "neither";
    }
    return "?";
}

EpochProbe::EpochProbe(const Dataset& ds, const ProjectionBasis& basis, Vector v0)
    : x_(ds.x), basis_(basis), v0_(std::move(v0)), mu_(ds.mu) {
    if (v0_.size() != basis.dim()) throw ContractError("EpochProbe: v0 dimension mismatch");
}

void EpochProbe::operator()(EpochRow& row, const Vector& v) const {
    const double vnorm = norm2(v);

    if (vnorm > 0.0 && std::isfinite(vnorm)) {
        // Scale-invariant quantities from the normalized iterate.
        Vector vh = v;
        scale(1.0 / vnorm, vh);
        const Components ch = components(vh, basis_);
        row.comp_rest = ch.rest * vnorm;
        row.comp_pivot = ch.pivot * vnorm;
        const double span_sq = ch.rest * ch.rest + ch.pivot * ch.pivot;
        row.est_error = mu_ * span_sq * vnorm * vnorm;
        if (span_sq >= 1e-24) {
            const Vector s = tmatvec(x_, vh);
            row.rayleigh = dot(s, s) / span_sq;
            row.rayleigh_defined = true;
        }
    } else {
        row.comp_rest = 0.0;
        row.comp_pivot = 0.0;
        row.est_error = 0.0;
    }

    const Vector w = sub(v, v0_);
    row.perp_residual = norm2(basis_.apply_p_perp(w));
}

EpochObserver EpochProbe::observer() const {
    return [this](EpochRow& row, const Vector& v) { (*this)(row, v); };
}

}  // namespace dblab
