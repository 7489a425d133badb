#include "dblab/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "dblab/errors.hpp"

namespace dblab {

LrSchedule LrSchedule::single(int epochs, double eta) {
    LrSchedule s;
    s.phases.push_back({epochs, eta});
    return s;
}

LrSchedule LrSchedule::two_phase(int k1, double eta, int k2_minus_k1, double eta_prime) {
    LrSchedule s;
    s.phases.push_back({k1, eta});
    s.phases.push_back({k2_minus_k1, eta_prime});
    return s;
}

int LrSchedule::total_epochs() const {
    int total = 0;
    for (const auto& p : phases) total += p.epochs;
    return total;
}

double LrSchedule::eta_at(int k) const {
    int acc = 0;
    for (const auto& p : phases) {
        acc += p.epochs;
        if (k < acc) return p.eta;
    }
    throw ContractError("LrSchedule: epoch index past end of schedule");
}

void LrSchedule::validate() const {
    if (total_epochs() < 1) throw ConfigError("LrSchedule: needs at least one epoch");
    for (const auto& p : phases) {
        if (p.epochs < 0) throw ConfigError("LrSchedule: negative phase length");
        if (!(p.eta > 0.0)) throw ConfigError("LrSchedule: learning rates must be positive");
    }
}

void Partition::validate(std::size_t n) const {
    if (batches.empty()) throw ConfigError("Partition: empty");
    const std::size_t b = batches.front().size();
    std::vector<char> seen(n, 0);
    for (const auto& batch : batches) {
        if (batch.size() != b) throw ConfigError("Partition: unequal batch sizes");
        for (int i : batch) {
            if (i < 0 || static_cast<std::size_t>(i) >= n || seen[i])
                throw ConfigError("Partition: indices must uniquely cover 0..n-1");
            seen[i] = 1;
        }
    }
    if (batches.size() * b != n) throw ConfigError("Partition: does not cover the training set");
}

Partition make_partition(std::size_t n, std::size_t b, Rng& rng) {
    if (b == 0 || n % b != 0) throw ConfigError("make_partition: b must divide n");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    Partition p;
    p.batches.resize(n / b);
    for (std::size_t j = 0; j < n / b; ++j) {
        p.batches[j].assign(idx.begin() + static_cast<std::ptrdiff_t>(j * b),
                            idx.begin() + static_cast<std::ptrdiff_t>((j + 1) * b));
        // Sorted batches make the batch operator independent of shuffle order
        // and make the b == n case bitwise identical to gd_epoch.
        std::sort(p.batches[j].begin(), p.batches[j].end());
    }
    return p;
}

namespace {

// v <- v - coeff * sum_{i in batch} x_i (x_i^T v), all dots taken at the incoming v.
void apply_batch(Vector& v, const Matrix& x, double coeff, const std::vector<int>& batch) {
    const std::size_t d = x.rows();
    thread_local Vector dots;
    dots.resize(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const double* c = x.col(static_cast<std::size_t>(batch[k]));
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += c[i] * v[i];
        dots[k] = s;
    }
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const double* c = x.col(static_cast<std::size_t>(batch[k]));
        const double a = -coeff * dots[k];
        for (std::size_t i = 0; i < d; ++i) v[i] += a * c[i];
    }
}

}  // namespace

Vector gd_epoch(const Vector& v, const Matrix& x, double eta) {
    if (v.size() != x.rows()) throw ContractError("gd_epoch: dimension mismatch");
    Vector out = v;
    std::vector<int> all(x.cols());
    std::iota(all.begin(), all.end(), 0);
    apply_batch(out, x, 2.0 * eta / static_cast<double>(x.cols()), all);
    if (!all_finite(out)) throw DivergenceError("gd_epoch: non-finite iterate", norm2(v), -1);
    return out;
}

Vector sgd_epoch(const Vector& v, const Matrix& x, double eta, const Partition& partition) {
    if (v.size() != x.rows()) throw ContractError("sgd_epoch: dimension mismatch");
    partition.validate(x.cols());
    const double coeff = 2.0 * eta / static_cast<double>(partition.batch_size());
    Vector out = v;
    for (const auto& batch : partition.batches) apply_batch(out, x, coeff, batch);
    if (!all_finite(out)) throw DivergenceError("sgd_epoch: non-finite iterate", norm2(v), -1);
    return out;
}

Matrix epoch_matrix(const Matrix& x, double eta, const Partition& partition) {
    partition.validate(x.cols());
    const std::size_t d = x.rows();
    Matrix m(d, d);
    Vector e(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        e[j] = 1.0;
        Vector col = sgd_epoch(e, x, eta, partition);
        for (std::size_t i = 0; i < d; ++i) m(i, j) = col[i];
        e[j] = 0.0;
    }
    return m;
}

double training_loss(const Matrix& x, const Vector& v) {
    const Vector s = tmatvec(x, v);
    return dot(s, s) / static_cast<double>(x.cols());
}

double Trajectory::final_rayleigh() const {
    for (auto it = rows.rbegin(); it != rows.rend(); ++it)
        if (it->rayleigh_defined) return it->rayleigh;
    return std::numeric_limits<double>::quiet_NaN();
}

Trajectory run(const Dataset& ds, const RunConfig& cfg, const Vector& v0, Rng& rng,
               const EpochObserver& observer) {
    cfg.schedule.validate();
    if (v0.size() != ds.dim()) throw ContractError("run: v0 dimension mismatch");
    if (cfg.algo == Algo::sgd && (cfg.b == 0 || ds.count() % cfg.b != 0))
        throw ConfigError("run: batch size must divide n");

    const int total = cfg.schedule.total_epochs();
    const bool snapshots =
        cfg.store_snapshots &&
        ds.dim() * (static_cast<std::size_t>(total) + 1) <= cfg.snapshot_budget;
    // Over budget: keep only the phase-boundary iterates (plus k = 0).
    std::vector<char> boundary(static_cast<std::size_t>(total) + 1, 0);
    if (cfg.store_snapshots && !snapshots) {
        boundary[0] = 1;
        int acc = 0;
        for (const auto& ph : cfg.schedule.phases) {
            acc += ph.epochs;
            boundary[static_cast<std::size_t>(acc)] = 1;
        }
    }
    const double cap = cfg.divergence_factor * (1.0 + norm2(v0));

    Trajectory traj;
    traj.algo = cfg.algo;
    traj.b = cfg.algo == Algo::sgd ? cfg.b : ds.count();
    traj.seed = cfg.seed;

    Vector v = v0;
    auto record = [&](int k, double eta) {
        EpochRow row;
        row.epoch = k;
        row.eta = eta;
        row.loss = training_loss(ds.x, v);
        if (observer) observer(row, v);
        traj.rows.push_back(row);
        if (snapshots || boundary[static_cast<std::size_t>(k)]) {
            traj.snapshots.push_back(v);
            traj.snapshot_epochs.push_back(k);
        }
        return row.loss;
    };

    double loss = record(0, 0.0);
    if (cfg.level_alpha && loss <= *cfg.level_alpha) {
        traj.stop_reason = StopReason::level_set;
        traj.realized_alpha = loss;
        traj.v_final = std::move(v);
        return traj;
    }

    for (int k = 0; k < total; ++k) {
        const double eta = cfg.schedule.eta_at(k);
        try {
            if (cfg.algo == Algo::gd) {
                v = gd_epoch(v, ds.x, eta);
            } else {
                const Partition part = make_partition(ds.count(), cfg.b, rng);
                v = sgd_epoch(v, ds.x, eta, part);
            }
        } catch (const DivergenceError&) {
            traj.stop_reason = StopReason::diverged;
            traj.diverged_at = k + 1;
            traj.v_final = std::move(v);  // last finite iterate
            return traj;
        }

        loss = record(k + 1, eta);
        if (!std::isfinite(loss) || norm2(v) > cap) {
            traj.stop_reason = StopReason::diverged;
            traj.diverged_at = k + 1;
            break;
        }
        if (cfg.level_alpha && loss <= *cfg.level_alpha) {
            traj.stop_reason = StopReason::level_set;
            traj.realized_alpha = loss;
            break;
        }
    }
    traj.v_final = std::move(v);
    return traj;
}

std::array<double, 2> closed_form_2d(double kappa, const std::array<double, 2>& w0, double eta,
                                     int k, Algo algo) {
    if (k < 0) throw ContractError("closed_form_2d: k must be >= 0");
    const double f1 = algo == Algo::gd ? 1.0 - eta * kappa : 1.0 - 2.0 * eta * kappa;
    const double f2 = algo == Algo::gd ? 1.0 - eta : 1.0 - 2.0 * eta;
    double p1 = 1.0, p2 = 1.0;
    for (int i = 0; i < k; ++i) {
        p1 *= f1;
        p2 *= f2;
    }
    return {p1 * w0[0], p2 * w0[1]};
}

Vector gd_closed_form_spectral(const Vector& u0, const std::vector<double>& gammas,
                               const LrSchedule& schedule, int k, std::size_t n) {
    if (k > schedule.total_epochs())
        throw ContractError("gd_closed_form_spectral: k exceeds schedule length");
    if (n > u0.size() || gammas.size() < n)
        throw ContractError("gd_closed_form_spectral: inconsistent sizes");
    Vector u = u0;
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int t = 0; t < k; ++t) prod *= 1.0 - 2.0 * schedule.eta_at(t) * gammas[i] / nn;
        u[i] = prod * u0[i];
    }
    return u;
}

const char* kTrajectoryCsvHeader =
    "epoch,eta,loss,rayleigh,comp_rest,comp_pivot,est_error,perp_residual";

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("write_trajectory_csv: cannot open " + path);
    f << kTrajectoryCsvHeader << "\n";
    char buf[32];
    auto field = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : traj.rows) {
        f << r.epoch << ',' << field(r.eta) << ',' << field(r.loss) << ',' << field(r.rayleigh)
          << ',' << field(r.comp_rest) << ',' << field(r.comp_pivot) << ',' << field(r.est_error)
          << ',' << field(r.perp_residual) << "\n";
    }
    if (!f) throw ConfigError("write_trajectory_csv: write failed for " + path);
}

}  // namespace dblab
