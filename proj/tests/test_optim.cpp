#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dblab/datagen.hpp"
#include "dblab/diag.hpp"
#include "dblab/errors.hpp"
#include "dblab/linalg.hpp"
#include "dblab/optim.hpp"

using namespace dblab;

namespace {

// kappa = 4 instance from the 2-D case study: x1 = 2 e1, x2 = e2, w_* = 0.
Dataset example_2d() {
    Matrix x(2, 2);
    x(0, 0) = 2.0;
    x(1, 1) = 1.0;
    return make_dataset(x, {});
}

Dataset random_dataset(std::size_t d, std::size_t n, std::uint64_t seed) {
    PopulationSpec spec;
    spec.d = d;
    spec.magnitude = MagnitudeLaw::uniform(0.5, 1.0);
    Rng root(seed);
    Rng rdata = root.split(0);
    return sample_dataset(spec, n, rdata, seed);
}

}  // namespace

TEST_CASE("gd_epoch on the 2-D example") {
    const Dataset ds = example_2d();
    const Vector zero = gd_epoch({0.0, 0.0}, ds.x, 0.275);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);

    const Vector v1 = gd_epoch({0.6, 0.6}, ds.x, 0.275);
    CHECK(v1[0] == doctest::Approx(-0.06).epsilon(1e-12));
    CHECK(v1[1] == doctest::Approx(0.435).epsilon(1e-12));
}

TEST_CASE("gd_epoch scales eigenvectors by 1 - 2 eta gamma / n") {
    const Dataset ds = random_dataset(12, 4, 3);
    const Spectrum s = sym_eig(SymMatrix(matmul(ds.x, transpose(ds.x)), 1e-9));
    const double eta = 0.3;
    for (std::size_t k = 0; k < 4; ++k) {  // the nonzero part of the spectrum
        Vector g(12);
        for (std::size_t i = 0; i < 12; ++i) g[i] = s.eigenvectors(i, k);
        const Vector out = gd_epoch(g, ds.x, eta);
        const double factor = 1.0 - 2.0 * eta * s.eigenvalues[k] / 4.0;
        for (std::size_t i = 0; i < 12; ++i)
            CHECK(out[i] == doctest::Approx(factor * g[i]).epsilon(1e-10));
    }
}

TEST_CASE("make_partition shapes and errors") {
    Rng rng(5);
    const Partition p = make_partition(4, 2, rng);
    REQUIRE(p.batches.size() == 2);
    std::vector<int> seen;
    for (const auto& b : p.batches) {
        CHECK(b.size() == 2);
        CHECK(std::is_sorted(b.begin(), b.end()));
        seen.insert(seen.end(), b.begin(), b.end());
    }
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{0, 1, 2, 3});

    const Partition full = make_partition(6, 6, rng);
    CHECK(full.batches.size() == 1);

    CHECK_THROWS_AS(make_partition(6, 4, rng), ConfigError);
}

TEST_CASE("sgd_epoch on the 2-D example, both batch orders") {
    const Dataset ds = example_2d();
    Partition order12, order21;
    order12.batches = {{0}, {1}};
    order21.batches = {{1}, {0}};
    for (const Partition* p : {&order12, &order21}) {
        const Vector v1 = sgd_epoch({0.6, 0.6}, ds.x, 0.275, *p);
        CHECK(v1[0] == doctest::Approx(-0.72).epsilon(1e-12));
        CHECK(v1[1] == doctest::Approx(0.27).epsilon(1e-12));
    }
    const Vector zero = sgd_epoch({0.0, 0.0}, ds.x, 0.275, order12);
    CHECK(norm2(zero) == 0.0);
}

TEST_CASE("full-batch sgd_epoch reduces to gd_epoch bitwise") {
    const Dataset ds = random_dataset(20, 6, 7);
    Rng rng(1);
    const Partition full = make_partition(6, 6, rng);
    Vector v(20);
    for (auto& c : v) c = rng.normal();
    const Vector a = sgd_epoch(v, ds.x, 0.4, full);
    const Vector b = gd_epoch(v, ds.x, 0.4);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("order invariance on orthogonal data") {
    Matrix x(6, 3);
    x(0, 0) = 0.9;
    x(1, 1) = 0.7;
    x(2, 2) = 0.5;
    const Dataset ds = make_dataset(x, {});
    Partition p1, p2;
    p1.batches = {{0}, {1}, {2}};
    p2.batches = {{2}, {0}, {1}};
    Rng rng(2);
    Vector v(6);
    for (auto& c : v) c = rng.normal();
    const Vector a = sgd_epoch(v, ds.x, 0.8, p1);
    const Vector b = sgd_epoch(v, ds.x, 0.8, p2);
    for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("epoch_matrix special cases and matvec consistency") {
    const Dataset ds = example_2d();
    Partition order12;
    order12.batches = {{0}, {1}};
    const Matrix m = epoch_matrix(ds.x, 0.275, order12);
    CHECK(m(0, 0) == doctest::Approx(-1.2).epsilon(1e-12));
    CHECK(m(1, 1) == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(std::abs(m(0, 1)) <= 1e-15);
    CHECK(std::abs(m(1, 0)) <= 1e-15);

    const Matrix eye = epoch_matrix(ds.x, 0.0, order12);
    CHECK(frobenius_norm(matmul(eye, Matrix::identity(2))) == doctest::Approx(std::sqrt(2.0)));
    CHECK(eye(0, 0) == 1.0);
    CHECK(eye(1, 1) == 1.0);

    const Dataset rnd = random_dataset(6, 4, 11);
    Rng rng(4);
    const Partition part = make_partition(4, 2, rng);
    const Matrix me = epoch_matrix(rnd.x, 0.5, part);
    for (int t = 0; t < 10; ++t) {
        Vector v(6);
        for (auto& c : v) c = rng.normal();
        const Vector via_matrix = matvec(me, v);
        const Vector via_epoch = sgd_epoch(v, rnd.x, 0.5, part);
        const double err = norm2(sub(via_matrix, via_epoch));
        CHECK(err <= 1e-10 * norm2(v));
    }
}

TEST_CASE("run matches the closed form on the 2-D example") {
    const Dataset ds = example_2d();
    RunConfig cfg;
    cfg.algo = Algo::gd;
    cfg.schedule = LrSchedule::single(50, 0.275);
    cfg.store_snapshots = true;
    Rng rng(1);
    const Trajectory t = run(ds, cfg, {0.6, 0.6}, rng);
    REQUIRE(t.snapshots.size() == 51);
    for (int k = 0; k <= 50; ++k) {
        const auto w = closed_form_2d(4.0, {0.6, 0.6}, 0.275, k, Algo::gd);
        CHECK(std::abs(t.snapshots[static_cast<std::size_t>(k)][0] - w[0]) <= 1e-10);
        CHECK(std::abs(t.snapshots[static_cast<std::size_t>(k)][1] - w[1]) <= 1e-10);
    }

    cfg.algo = Algo::sgd;
    cfg.b = 1;
    Rng rng2(2);
    const Trajectory ts = run(ds, cfg, {0.6, 0.6}, rng2);
    for (int k = 0; k <= 50; ++k) {
        const auto w = closed_form_2d(4.0, {0.6, 0.6}, 0.275, k, Algo::sgd);
        CHECK(std::abs(ts.snapshots[static_cast<std::size_t>(k)][0] - w[0]) <=
              1e-10 * std::max(1.0, std::abs(w[0])));
        CHECK(std::abs(ts.snapshots[static_cast<std::size_t>(k)][1] - w[1]) <= 1e-10);
    }
}

TEST_CASE("run rejects empty schedules and records divergence") {
    const Dataset ds = example_2d();
    RunConfig cfg;
    cfg.algo = Algo::gd;
    cfg.schedule.phases = {};
    Rng rng(1);
    CHECK_THROWS_AS(run(ds, cfg, {0.6, 0.6}, rng), ConfigError);

    cfg.schedule = LrSchedule::single(2000, 0.9);  // |1 - eta kappa| = 2.6 per epoch
    cfg.divergence_factor = 1e12;
    const Trajectory t = run(ds, cfg, {0.6, 0.6}, rng);
    CHECK(t.stop_reason == StopReason::diverged);
    CHECK(t.diverged_at > 0);
    CHECK(t.rows.size() <= 2001);
    for (const auto& row : t.rows) CHECK(std::isfinite(row.loss));
}

TEST_CASE("level-set stop records the realized loss") {
    const Dataset ds = example_2d();
    RunConfig cfg;
    cfg.algo = Algo::gd;
    cfg.schedule = LrSchedule::single(400, 0.1);
    cfg.level_alpha = 1e-3;
    Rng rng(1);
    const Trajectory t = run(ds, cfg, {0.6, 0.6}, rng);
    CHECK(t.stop_reason == StopReason::level_set);
    CHECK(t.realized_alpha <= 1e-3);
    CHECK(t.realized_alpha == t.rows.back().loss);
    // First crossing: the previous epoch was still above the level.
    CHECK(t.rows[t.rows.size() - 2].loss > 1e-3);
}

TEST_CASE("closed_form_2d frozen values") {
    const auto w0 = closed_form_2d(4.0, {0.6, 0.6}, 0.275, 0, Algo::gd);
    CHECK(w0[0] == 0.6);
    CHECK(w0[1] == 0.6);

    const auto gd1 = closed_form_2d(4.0, {0.6, 0.6}, 0.275, 1, Algo::gd);
    CHECK(gd1[0] == doctest::Approx(-0.06).epsilon(1e-12));
    CHECK(gd1[1] == doctest::Approx(0.435).epsilon(1e-12));

    const auto sgd2 = closed_form_2d(4.0, {0.6, 0.6}, 0.275, 2, Algo::sgd);
    CHECK(sgd2[0] == doctest::Approx(0.864).epsilon(1e-12));
    CHECK(sgd2[1] == doctest::Approx(0.1215).epsilon(1e-12));
}

TEST_CASE("gd spectral closed form") {
    const Vector u0 = {0.3, -0.2, 0.5, 0.1, -0.4};
    const std::vector<double> gammas = {1.2, 0.8, 0.3};
    const LrSchedule sched = LrSchedule::two_phase(3, 0.5, 4, 0.1);

    const Vector k0 = gd_closed_form_spectral(u0, gammas, sched, 0, 3);
    for (std::size_t i = 0; i < u0.size(); ++i) CHECK(k0[i] == u0[i]);

    const Vector k5 = gd_closed_form_spectral(u0, gammas, sched, 5, 3);
    CHECK(k5[3] == u0[3]);  // coordinates past n never move
    CHECK(k5[4] == u0[4]);

    CHECK_THROWS_AS(gd_closed_form_spectral(u0, gammas, sched, 8, 3), ContractError);
}

TEST_CASE("gd iterates rotated into the eigenbasis match the spectral closed form") {
    const Dataset ds = random_dataset(8, 3, 21);
    const Spectrum s = sym_eig(SymMatrix(matmul(ds.x, transpose(ds.x)), 1e-9));
    const LrSchedule sched = LrSchedule::two_phase(5, 0.8, 5, 0.2);

    Rng rng(3);
    Vector v0(8);
    for (auto& c : v0) c = rng.normal();
    Vector u0 = tmatvec(s.eigenvectors, v0);

    Vector v = v0;
    for (int k = 0; k <= 10; ++k) {
        const Vector u_iter = tmatvec(s.eigenvectors, v);
        const Vector u_closed = gd_closed_form_spectral(u0, s.eigenvalues, sched, k, 3);
        for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(u_iter[i] - u_closed[i]) <= 1e-10);
        if (k < 10) v = gd_epoch(v, ds.x, sched.eta_at(k));
    }
}

TEST_CASE("hypothesis-class confinement and perp preservation") {
    const Dataset ds = random_dataset(15, 4, 31);
    const ProjectionBasis basis = build_projection_basis(ds.x, 1);
    Rng rng(9);
    Vector v0(15);
    for (auto& c : v0) c = rng.normal();  // generic start, nonzero perp part

    RunConfig cfg;
    cfg.algo = Algo::sgd;
    cfg.b = 2;
    cfg.schedule = LrSchedule::two_phase(40, 1.1, 60, 0.2);
    cfg.store_snapshots = true;
    Rng rrun(4);
    const Trajectory t = run(ds, cfg, v0, rrun);

    const double budget = 1e-8 * (1.0 + norm2(v0));
    for (const auto& snap : t.snapshots) {
        const Vector drift = basis.apply_p_perp(sub(snap, v0));
        CHECK(norm2(drift) <= budget);
    }
}

TEST_CASE("gd loss is monotone under in-range rates") {
    const Dataset ds = random_dataset(25, 6, 41);
    const double cap = static_cast<double>(ds.count()) / (2.0 * ds.lambdas[0]);
    RunConfig cfg;
    cfg.algo = Algo::gd;
    cfg.schedule = LrSchedule::single(120, 0.8 * cap);
    Rng rng(1);
    Vector v0(25, 0.0);
    Rng rv(6);
    for (auto& c : v0) c = rv.normal();
    const Trajectory t = run(ds, cfg, v0, rng);
    for (std::size_t k = 0; k + 1 < t.rows.size(); ++k)
        CHECK(t.rows[k + 1].loss <= t.rows[k].loss + 1e-15);
}

TEST_CASE("trajectory csv schema and float round-trip") {
    const Dataset ds = example_2d();
    RunConfig cfg;
    cfg.algo = Algo::gd;
    cfg.schedule = LrSchedule::single(5, 0.1);
    Rng rng(1);
    const Trajectory t = run(ds, cfg, {0.6, 0.6}, rng);

    const auto path = std::filesystem::temp_directory_path() / "dblab_traj.csv";
    write_trajectory_csv(t, path.string());
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == std::string(kTrajectoryCsvHeader));
    std::string line;
    int count = 0;
    while (std::getline(f, line)) {
        ++count;
        // loss field (third column) parses back exactly
        std::size_t p1 = line.find(','), p2 = line.find(',', p1 + 1);
        std::size_t p3 = line.find(',', p2 + 1);
        const double loss = std::stod(line.substr(p2 + 1, p3 - p2 - 1));
        CHECK(loss == t.rows[static_cast<std::size_t>(count - 1)].loss);
    }
    CHECK(count == 6);
}
