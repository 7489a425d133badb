#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dblab/mat.hpp"
#include "dblab/rng.hpp"

namespace dblab {

// Magnitude law for the feature norm: either uniform on (a, b] or a constant,
// with support inside (0, 1].
struct MagnitudeLaw {
    enum class Kind { uniform, constant } kind = Kind::uniform;
    double a = 0.5;  // lower (uniform) -- exclusive
    double b = 1.0;  // upper (uniform) -- inclusive
    double c = 1.0;  // value (constant)

    static MagnitudeLaw uniform(double a, double b);
    static MagnitudeLaw constant(double c);
    double sample(Rng& rng) const;
    double mean() const;
    std::string describe() const;
};

struct PopulationSpec {
    std::size_t d = 0;
    MagnitudeLaw magnitude;
    Vector w_star;  // empty means zero

    void validate() const;
    // E[magnitude] / d; the population-loss curvature constant.
    double mu() const;
};

struct Dataset {
    Matrix x;                           // d x n, columns sorted by descending squared norm
    Vector y;                           // labels, y = X^T w_star exactly
    Vector w_star;                      // generating parameter
    std::vector<double> lambdas;        // squared column norms, descending
    double iota = 0.0;                  // empirical coherence, 0 if undefined
    bool iota_defined = false;          // false when n < 2
    std::vector<int> sort_permutation;  // sort_permutation[original] = sorted position
    std::uint64_t seed = 0;             // 0 for explicitly constructed data
    double mu = 0.0;                    // population curvature (E[zeta]/d); 1/d fallback

    std::size_t dim() const { return x.rows(); }
    std::size_t count() const { return x.cols(); }
};

Vector sample_unit_sphere(std::size_t d, Rng& rng);

// Draws n i.i.d. columns (magnitude law times sphere direction), sorts by
// descending squared norm, and builds exact labels. A rank-deficient draw is
// resampled once, then rejected.
Dataset sample_dataset(const PopulationSpec& spec, std::size_t n, Rng& rng,
                       std::uint64_t seed_tag = 0);

// Wraps explicitly given columns in a Dataset (sorting, coherence, labels).
Dataset make_dataset(Matrix x, Vector w_star, double mu = 0.0);

struct Coherence {
    double value = 0.0;
    bool defined = false;  // false when fewer than two columns
};

Coherence coherence(const Matrix& x);

// The concentration-type bound 2*sqrt(log(2 n^2 / delta) / d).
double analytic_iota(std::size_t n, std::size_t d, double delta);

struct AssumptionCondition {
    std::string name;
    double lhs;
    double rhs;
    bool holds;    // lhs < rhs (strict), except the dimension bound which is >=
    double margin;  // rhs - lhs
};

struct AssumptionReport {
    double delta;
    double iota_empirical;
    double iota_analytic;
    std::vector<AssumptionCondition> empirical;  // conditions under empirical iota
    std::vector<AssumptionCondition> analytic;   // conditions under analytic iota

    bool all_hold_empirical() const;
    bool all_hold_analytic() const;
};

// Evaluates the hypothesis set {3 n iota < lambda_n, lambda_2 + 4 n iota < lambda_1,
// lambda_n + 4 n iota < lambda_{n-1}, d >= 4 log(2 n^2 / delta)} under both the
// empirical and the analytic coherence. Failures are warnings, not errors.
AssumptionReport check_assumptions(const Dataset& ds, double delta = 0.01);

struct LrWindow {
    double lo;            // b / (lambda_1 - 3 sqrt(n) iota); +inf if denominator <= 0
    double hi;            // b / (lambda_2 + 3 n iota)
    bool empty;           // lo >= hi
    double small_lr_cap;  // b / (2 lambda_1)
    double iota_used;
};

// Moderate learning-rate window for batch size b. iota_override substitutes the
// dataset's empirical coherence (pass 0.0 for the idealized window).
LrWindow moderate_lr_window(const Dataset& ds, std::size_t b,
                            std::optional<double> iota_override = std::nullopt);

// Binary container (column-major float64) plus JSON sidecar {d, n, lambdas, iota, seed}.
void save_dataset(const Dataset& ds, const std::string& path_bin, const std::string& path_json);
Dataset load_dataset(const std::string& path_bin);

}  // namespace dblab
