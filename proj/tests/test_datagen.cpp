#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dblab/datagen.hpp"
#include "dblab/errors.hpp"
#include "dblab/parallel.hpp"

using namespace dblab;

TEST_CASE("sample_unit_sphere basics") {
    Rng rng(3);
    for (std::size_t d : {1, 2, 7, 100}) {
        const Vector v = sample_unit_sphere(d, rng);
        CHECK(norm2(v) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const Vector one = sample_unit_sphere(1, rng);
    CHECK((one[0] == doctest::Approx(1.0) || one[0] == doctest::Approx(-1.0)));
    CHECK_THROWS_AS(sample_unit_sphere(0, rng), ContractError);
}

TEST_CASE("sphere sample mean shrinks like the Monte-Carlo bound") {
    Rng rng(5);
    const std::size_t d = 10;
    Vector mean(d, 0.0);
    const int samples = 10000;
    for (int s = 0; s < samples; ++s) axpy(1.0 / samples, sample_unit_sphere(d, rng), mean);
    CHECK(norm2(mean) <= 0.05);
}

TEST_CASE("sample_dataset magnitudes, labels, sorting") {
    Rng rng(7);
    PopulationSpec spec;
    spec.d = 60;

    spec.magnitude = MagnitudeLaw::constant(1.0);
    Rng r1 = rng.split(1);
    const Dataset ds1 = sample_dataset(spec, 10, r1);
    for (double l : ds1.lambdas) CHECK(l == doctest::Approx(1.0).epsilon(1e-12));

    spec.magnitude = MagnitudeLaw::uniform(0.5, 1.0);
    Rng r2 = rng.split(2);
    const Dataset ds2 = sample_dataset(spec, 12, r2);
    for (double l : ds2.lambdas) {
        CHECK(l > 0.25);
        CHECK(l <= 1.0 + 1e-12);
    }
    for (std::size_t i = 0; i + 1 < ds2.lambdas.size(); ++i)
        CHECK(ds2.lambdas[i] >= ds2.lambdas[i + 1]);

    // Zero parameter means zero labels; otherwise labels are exactly X^T w_star.
    for (double y : ds2.y) CHECK(y == 0.0);

    spec.w_star.assign(spec.d, 0.0);
    Rng r3 = rng.split(3);
    for (auto& c : spec.w_star) c = r3.normal();
    Rng r4 = rng.split(4);
    const Dataset ds3 = sample_dataset(spec, 8, r4);
    const Vector expected = tmatvec(ds3.x, ds3.w_star);
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(ds3.y[i] == expected[i]);
}

TEST_CASE("column sorting is permutation-invariant") {
    Rng rng(9);
    Matrix x(6, 4);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 6; ++i) x(i, j) = rng.normal();
    // Scale columns so the norms are distinct.
    for (std::size_t j = 0; j < 4; ++j) {
        double n = 0.0;
        for (std::size_t i = 0; i < 6; ++i) n += x(i, j) * x(i, j);
        for (std::size_t i = 0; i < 6; ++i) x(i, j) *= (0.3 + 0.15 * static_cast<double>(j)) / std::sqrt(n);
    }
    const Dataset a = make_dataset(x, {});

    Matrix permuted(6, 4);
    const int perm[4] = {2, 0, 3, 1};
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 6; ++i) permuted(i, j) = x(i, static_cast<std::size_t>(perm[j]));
    const Dataset b = make_dataset(permuted, {});

    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 6; ++i) CHECK(a.x(i, j) == b.x(i, j));
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(b.sort_permutation[j] == a.sort_permutation[static_cast<std::size_t>(perm[j])]);
}

TEST_CASE("coherence extremes") {
    Matrix ortho(4, 2);
    ortho(0, 0) = 1.0;
    ortho(1, 1) = 0.5;
    const Coherence c0 = coherence(ortho);
    CHECK(c0.defined);
    CHECK(c0.value == doctest::Approx(0.0));

    Matrix same(4, 2);
    same(0, 0) = 1.0;
    same(0, 1) = 0.7;  // same direction, different length
    const Coherence c1 = coherence(same);
    CHECK(c1.value == doctest::Approx(1.0).epsilon(1e-12));

    Matrix single(4, 1);
    single(0, 0) = 1.0;
    const Coherence cs = coherence(single);
    CHECK_FALSE(cs.defined);
    CHECK(cs.value == 0.0);
}

TEST_CASE("empirical coherence stays below the analytic bound (frequency claim)") {
    // At n=100, d=1e4, delta=0.01 the bound is 2 sqrt(log(2e6)/1e4) ~ 0.0762.
    const std::size_t n = 100, d = 10000;
    const double bound = analytic_iota(n, d, 0.01);
    CHECK(bound == doctest::Approx(0.0762).epsilon(0.01));

    const int trials = 100;
    std::vector<int> ok(trials, 0);
    parallel_for(trials, [&](int t) {
        PopulationSpec spec;
        spec.d = d;
        spec.magnitude = MagnitudeLaw::uniform(0.5, 1.0);
        Rng root(1000 + static_cast<std::uint64_t>(t));
        Rng rdata = root.split(0);
        const Dataset ds = sample_dataset(spec, n, rdata);
        ok[static_cast<std::size_t>(t)] = ds.iota <= bound ? 1 : 0;
    });
    int hits = 0;
    for (int v : ok) hits += v;
    CHECK(hits >= 99);  // >= 1 - 2*delta of trials, and empirically far stronger
}

TEST_CASE("median coherence decreases with dimension") {
    auto median_iota = [](std::size_t d) {
        std::vector<double> iotas;
        for (int s = 0; s < 20; ++s) {
            PopulationSpec spec;
            spec.d = d;
            spec.magnitude = MagnitudeLaw::uniform(0.5, 1.0);
            Rng root(500 + static_cast<std::uint64_t>(s));
            Rng rdata = root.split(0);
            iotas.push_back(sample_dataset(spec, 100, rdata).iota);
        }
        std::sort(iotas.begin(), iotas.end());
        return 0.5 * (iotas[9] + iotas[10]);
    };
    CHECK(median_iota(10000) < median_iota(1000));
}

TEST_CASE("check_assumptions on the normalized 2-D example") {
    Matrix x(2, 2);
    x(0, 0) = 1.0;
    x(1, 1) = 0.5;  // lambdas (1, 0.25)
    const Dataset ds = make_dataset(x, {});
    const AssumptionReport rep = check_assumptions(ds, 0.01);
    CHECK(rep.iota_empirical == doctest::Approx(0.0));

    REQUIRE(rep.empirical.size() == 4);
    CHECK(rep.empirical[0].holds);  // 3 n iota < lambda_n
    CHECK(rep.empirical[0].margin == doctest::Approx(0.25));
    CHECK(rep.empirical[1].holds);  // gap condition
    CHECK(rep.empirical[1].margin == doctest::Approx(0.75));
    CHECK(rep.empirical[2].holds);
    for (const auto& c : rep.empirical) CHECK(((c.margin > 0) == c.holds || c.margin == 0));
}

TEST_CASE("check_assumptions flags equal top magnitudes") {
    Matrix x(3, 2);
    x(0, 0) = 1.0;
    x(1, 1) = 1.0;  // lambda_1 == lambda_2
    const Dataset ds = make_dataset(x, {});
    const AssumptionReport rep = check_assumptions(ds, 0.01);
    CHECK_FALSE(rep.empirical[1].holds);  // strict inequality fails at zero margin
}

TEST_CASE("check_assumptions fails in the sampled high-coherence regime") {
    PopulationSpec spec;
    spec.d = 10000;
    spec.magnitude = MagnitudeLaw::uniform(0.5, 1.0);
    Rng root(77);
    Rng rdata = root.split(0);
    const Dataset ds = sample_dataset(spec, 100, rdata);
    const AssumptionReport rep = check_assumptions(ds, 0.01);
    CHECK_FALSE(rep.empirical[0].holds);  // 3 n iota >> lambda_n here
    CHECK_FALSE(rep.all_hold_empirical());
    CHECK(rep.empirical[3].holds);  // dimension condition is comfortable
}

TEST_CASE("moderate window endpoints and linear scaling in b") {
    Matrix x(4, 4);
    x(0, 0) = 1.0;
    x(1, 1) = std::sqrt(0.5);
    x(2, 2) = std::sqrt(0.4);
    x(3, 3) = std::sqrt(0.3);
    const Dataset ds = make_dataset(x, {});

    const LrWindow w = moderate_lr_window(ds, 1, 0.0);
    CHECK(w.lo == doctest::Approx(1.0));
    CHECK(w.hi == doctest::Approx(2.0));
    CHECK(w.small_lr_cap == doctest::Approx(0.5));
    CHECK_FALSE(w.empty);

    const LrWindow w2 = moderate_lr_window(ds, 2, 0.0);
    CHECK(w2.lo == 2.0 * w.lo);  // exact
    CHECK(w2.hi == 2.0 * w.hi);
    CHECK(w2.small_lr_cap == 2.0 * w.small_lr_cap);

    CHECK_THROWS_AS(moderate_lr_window(ds, 3, 0.0), ConfigError);

    Matrix eq(3, 2);
    eq(0, 0) = 1.0;
    eq(1, 1) = 1.0;
    const Dataset dse = make_dataset(eq, {});
    const LrWindow we = moderate_lr_window(dse, 1, 0.0);
    CHECK(we.empty);  // lo == hi when lambda_1 == lambda_2
}

TEST_CASE("dataset serialization round-trips bit-exactly") {
    PopulationSpec spec;
    spec.d = 30;
    spec.magnitude = MagnitudeLaw::uniform(0.5, 1.0);
    spec.w_star.assign(30, 0.25);
    Rng root(11);
    Rng rdata = root.split(0);
    const Dataset ds = sample_dataset(spec, 6, rdata, 11);

    const auto dir = std::filesystem::temp_directory_path() / "dblab_io_test";
    std::filesystem::create_directories(dir);
    const std::string bin = (dir / "ds.bin").string();
    const std::string json = (dir / "ds.json").string();
    save_dataset(ds, bin, json);
    const Dataset back = load_dataset(bin);

    REQUIRE(back.dim() == ds.dim());
    REQUIRE(back.count() == ds.count());
    CHECK(back.seed == ds.seed);
    for (std::size_t i = 0; i < ds.x.data().size(); ++i)
        CHECK(back.x.data()[i] == ds.x.data()[i]);
    for (std::size_t i = 0; i < ds.y.size(); ++i) CHECK(back.y[i] == ds.y[i]);
    for (std::size_t i = 0; i < ds.w_star.size(); ++i) CHECK(back.w_star[i] == ds.w_star[i]);
    for (std::size_t i = 0; i < ds.lambdas.size(); ++i) CHECK(back.lambdas[i] == ds.lambdas[i]);
    CHECK(back.iota == ds.iota);
    CHECK(back.mu == ds.mu);
    CHECK(back.sort_permutation == ds.sort_permutation);

    // Saving the loaded dataset reproduces the file byte for byte.
    const std::string bin2 = (dir / "ds2.bin").string();
    save_dataset(back, bin2, (dir / "ds2.json").string());
    std::ifstream f1(bin, std::ios::binary), f2(bin2, std::ios::binary);
    const std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(c1 == c2);
}

TEST_CASE("population spec validation") {
    PopulationSpec bad;
    bad.d = 10;
    bad.magnitude = MagnitudeLaw::uniform(0.0, 1.0);  // lower bound must be positive
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.magnitude = MagnitudeLaw::uniform(0.5, 1.2);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.magnitude = MagnitudeLaw::constant(0.0);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.magnitude = MagnitudeLaw::constant(0.7);
    CHECK_NOTHROW(bad.validate());
    CHECK(bad.mu() == doctest::Approx(0.07));
}

TEST_CASE("degenerate sample raises after one resample") {
    // d < n forces linear dependence on every draw.
    PopulationSpec spec;
    spec.d = 3;
    spec.magnitude = MagnitudeLaw::constant(1.0);
    Rng root(13);
    Rng rdata = root.split(0);
    CHECK_THROWS_AS(sample_dataset(spec, 5, rdata), DegenerateDataError);
}
