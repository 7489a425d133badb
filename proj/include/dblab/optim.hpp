#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dblab/datagen.hpp"
#include "dblab/mat.hpp"
#include "dblab/rng.hpp"

namespace dblab {

enum class Algo { gd, sgd };

// Piecewise-constant per-epoch learning rates.
struct LrSchedule {
    struct Phase {
        int epochs;
        double eta;
    };
    std::vector<Phase> phases;

    static LrSchedule single(int epochs, double eta);
    static LrSchedule two_phase(int k1, double eta, int k2_minus_k1, double eta_prime);

    int total_epochs() const;
    // Rate applied during the transition from epoch k to k+1 (k is 0-based).
    double eta_at(int k) const;
    void validate() const;
};

struct Partition {
    std::vector<std::vector<int>> batches;  // each sorted ascending; disjoint cover of 0..n-1

    std::size_t batch_size() const { return batches.empty() ? 0 : batches.front().size(); }
    void validate(std::size_t n) const;
};

// Uniform partition: shuffle then chunk into n/b batches of size b.
Partition make_partition(std::size_t n, std::size_t b, Rng& rng);

// One gradient-descent epoch on the translated variable: v' = (I - (2 eta / n) X X^T) v.
Vector gd_epoch(const Vector& v, const Matrix& x, double eta);

// One without-replacement SGD epoch: batches applied first to last, each step
// v <- (I - (2 eta / b) * sum_{i in batch} x_i x_i^T) v.
Vector sgd_epoch(const Vector& v, const Matrix& x, double eta, const Partition& partition);

// The epoch transition operator as an explicit d x d matrix (desk scale only).
Matrix epoch_matrix(const Matrix& x, double eta, const Partition& partition);

enum class StopReason { completed, level_set, diverged };

struct EpochRow {
    int epoch = 0;
    double eta = 0.0;   // rate used to arrive at this iterate (0 for the k=0 row)
    double loss = 0.0;  // L_S(v_k)
    // Filled by the diagnostics observer; NaN when not computed.
    double rayleigh = std::numeric_limits<double>::quiet_NaN();
    double comp_rest = std::numeric_limits<double>::quiet_NaN();
    double comp_pivot = std::numeric_limits<double>::quiet_NaN();
    double est_error = std::numeric_limits<double>::quiet_NaN();
    double perp_residual = std::numeric_limits<double>::quiet_NaN();
    bool rayleigh_defined = false;
};

struct Trajectory {
    Algo algo = Algo::gd;
    std::size_t b = 0;
    std::uint64_t seed = 0;
    StopReason stop_reason = StopReason::completed;
    std::vector<EpochRow> rows;       // epoch 0 .. last recorded
    std::vector<Vector> snapshots;    // per-epoch v when the policy allows, else empty
    std::vector<int> snapshot_epochs; // epochs the snapshots belong to
    Vector v_final;
    double realized_alpha = std::numeric_limits<double>::quiet_NaN();  // loss at level-set stop
    int diverged_at = -1;

    int last_epoch() const { return rows.empty() ? -1 : rows.back().epoch; }
    // Rayleigh at the last epoch where it was defined; NaN if never.
    double final_rayleigh() const;
};

struct RunConfig {
    Algo algo = Algo::sgd;
    std::size_t b = 1;
    LrSchedule schedule;
    std::optional<double> level_alpha;  // stop at first epoch with loss <= alpha
    double divergence_factor = 1e12;    // halt when ||v|| > factor * (1 + ||v0||)
    bool store_snapshots = false;       // honored only if d*(epochs+1) <= snapshot_budget
    std::size_t snapshot_budget = 100'000'000;
    std::uint64_t seed = 0;             // recorded in the trajectory metadata
};

// Called after each recorded epoch (including k = 0) to fill diagnostics.
using EpochObserver = std::function<void(EpochRow& row, const Vector& v)>;

// Runs the selected dynamics over the schedule. rng drives the per-epoch
// partitions only (GD ignores it). Divergence truncates, level-set stops at
// the first epoch at or below alpha; the realized loss at the stop epoch is
// recorded (not the requested threshold).
Trajectory run(const Dataset& ds, const RunConfig& cfg, const Vector& v0, Rng& rng,
               const EpochObserver& observer = nullptr);

// Closed form of the 2-D orthogonal example: per-epoch factors
// GD (1 - eta k, 1 - eta), SGD (1 - 2 eta k, 1 - 2 eta), applied k times.
std::array<double, 2> closed_form_2d(double kappa, const std::array<double, 2>& w0, double eta,
                                     int k, Algo algo);

// Spectral GD solution: coordinate i < n scaled by prod_t (1 - 2 eta_t gamma_i / n),
// coordinates n..d-1 untouched.
Vector gd_closed_form_spectral(const Vector& u0, const std::vector<double>& gammas,
                               const LrSchedule& schedule, int k, std::size_t n);

// L_S(v) = ||X^T v||^2 / n.
double training_loss(const Matrix& x, const Vector& v);

// CSV with header epoch,eta,loss,rayleigh,comp_rest,comp_pivot,est_error,perp_residual,
// float64 columns printed with 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
extern const char* kTrajectoryCsvHeader;

}  // namespace dblab
