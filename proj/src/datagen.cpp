#include "dblab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "dblab/errors.hpp"
#include "dblab/linalg.hpp"

namespace dblab {

MagnitudeLaw MagnitudeLaw::uniform(double a, double b) {
    MagnitudeLaw law;
    law.kind = Kind::uniform;
    law.a = a;
    law.b = b;
    return law;
}

MagnitudeLaw MagnitudeLaw::constant(double c) {
    MagnitudeLaw law;
    law.kind = Kind::constant;
    law.c = c;
    return law;
}

double MagnitudeLaw::sample(Rng& rng) const {
    return kind == Kind::uniform ? rng.uniform_open_closed(a, b) : c;
}

double MagnitudeLaw::mean() const { return kind == Kind::uniform ? 0.5 * (a + b) : c; }

std::string MagnitudeLaw::describe() const {
    if (kind == Kind::uniform)
        return "uniform(" + std::to_string(a) + "," + std::to_string(b) + "]";
    return "constant(" + std::to_string(c) + ")";
}

void PopulationSpec::validate() const {
    if (d == 0) throw ConfigError("PopulationSpec: d must be positive");
    if (magnitude.kind == MagnitudeLaw::Kind::uniform) {
        if (!(magnitude.a > 0.0 && magnitude.a <= magnitude.b && magnitude.b <= 1.0))
            throw ConfigError("PopulationSpec: uniform magnitude support must be inside (0,1]");
    } else {
        if (!(magnitude.c > 0.0 && magnitude.c <= 1.0))
            throw ConfigError("PopulationSpec: constant magnitude must be inside (0,1]");
    }
    if (!w_star.empty() && w_star.size() != d)
        throw ConfigError("PopulationSpec: w_star dimension mismatch");
}

double PopulationSpec::mu() const { return magnitude.mean() / static_cast<double>(d); }

Vector sample_unit_sphere(std::size_t d, Rng& rng) {
    if (d == 0) throw ContractError("sample_unit_sphere: d must be >= 1");
    Vector v(d);
    double s = 0.0;
    do {
        for (std::size_t i = 0; i < d; ++i) v[i] = rng.normal();
        s = norm2(v);
    } while (s == 0.0);  // measure-zero guard
    scale(1.0 / s, v);
    return v;
}

namespace {

// Columns sorted by descending squared norm (stable on original index).
void sort_columns(Matrix& x, std::vector<double>& lambdas, std::vector<int>& perm) {
    const std::size_t n = x.cols();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&lambdas](std::size_t i, std::size_t j) { return lambdas[i] > lambdas[j]; });

    Matrix sorted(x.rows(), n);
    std::vector<double> sl(n);
    perm.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        std::memcpy(sorted.col(k), x.col(order[k]), x.rows() * sizeof(double));
        sl[k] = lambdas[order[k]];
        perm[order[k]] = static_cast<int>(k);
    }
    x = std::move(sorted);
    lambdas = std::move(sl);
}

bool full_column_rank(const Matrix& x) {
    if (x.cols() > x.rows()) return false;
    try {
        build_projection_basis(x, 1);
    } catch (const DegenerateDataError&) {
        return false;
    }
    return true;
}

Dataset finish_dataset(Matrix x, Vector w_star, double mu, std::uint64_t seed) {
    Dataset ds;
    const std::size_t n = x.cols();
    ds.lambdas.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double* c = x.col(j);
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) s += c[i] * c[i];
        ds.lambdas[j] = s;
    }
    sort_columns(x, ds.lambdas, ds.sort_permutation);

    if (w_star.empty()) w_star.assign(x.rows(), 0.0);
    ds.y = tmatvec(x, w_star);  // labels constructed after sorting: exact by definition
    ds.w_star = std::move(w_star);

    Coherence coh = coherence(x);
    ds.iota = coh.value;
    ds.iota_defined = coh.defined;
    ds.x = std::move(x);
    ds.seed = seed;
    ds.mu = mu > 0.0 ? mu : 1.0 / static_cast<double>(ds.x.rows());
    return ds;
}

}  // namespace

Dataset sample_dataset(const PopulationSpec& spec, std::size_t n, Rng& rng,
                       std::uint64_t seed_tag) {
    spec.validate();
    if (n < 1) throw ConfigError("sample_dataset: n must be >= 1");

    for (int attempt = 0; attempt < 2; ++attempt) {
        Matrix x(spec.d, n);
        for (std::size_t j = 0; j < n; ++j) {
            const double zeta = spec.magnitude.sample(rng);
            Vector dir = sample_unit_sphere(spec.d, rng);
            double* c = x.col(j);
            for (std::size_t i = 0; i < spec.d; ++i) c[i] = zeta * dir[i];
        }
        if (full_column_rank(x)) return finish_dataset(std::move(x), spec.w_star, spec.mu(), seed_tag);
    }
    throw DegenerateDataError("sample_dataset: linearly dependent sample twice in a row");
}

Dataset make_dataset(Matrix x, Vector w_star, double mu) {
    if (!full_column_rank(x)) throw DegenerateDataError("make_dataset: columns linearly dependent");
    return finish_dataset(std::move(x), std::move(w_star), mu, 0);
}

Coherence coherence(const Matrix& x) {
    const std::size_t n = x.cols();
    if (n < 2) return Coherence{0.0, false};
    std::vector<double> inv_norm(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double* c = x.col(j);
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) s += c[i] * c[i];
        inv_norm[j] = 1.0 / std::sqrt(s);
    }
    double worst = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        const double* cj = x.col(j);
        for (std::size_t k = 0; k < j; ++k) {
            const double* ck = x.col(k);
            double s = 0.0;
            for (std::size_t i = 0; i < x.rows(); ++i) s += cj[i] * ck[i];
            worst = std::max(worst, std::abs(s) * inv_norm[j] * inv_norm[k]);
        }
    }
    return Coherence{worst, true};
}

double analytic_iota(std::size_t n, std::size_t d, double delta) {
    return 2.0 * std::sqrt(std::log(2.0 * static_cast<double>(n) * static_cast<double>(n) / delta) /
                           static_cast<double>(d));
}

namespace {

std::vector<AssumptionCondition> conditions_for(const Dataset& ds, double iota, double delta) {
    const double n = static_cast<double>(ds.count());
    const double d = static_cast<double>(ds.dim());
    const double l1 = ds.lambdas.front();
    const double ln = ds.lambdas.back();
    const double l2 = ds.count() >= 2 ? ds.lambdas[1] : ds.lambdas[0];
    const double ln1 = ds.count() >= 2 ? ds.lambdas[ds.count() - 2] : ds.lambdas[0];

    std::vector<AssumptionCondition> out;
    auto add = [&out](std::string name, double lhs, double rhs, bool geq = false) {
        const bool holds = geq ? (rhs >= lhs) : (lhs < rhs);
        out.push_back({std::move(name), lhs, rhs, holds, rhs - lhs});
    };
    add("3*n*iota < lambda_n", 3.0 * n * iota, ln);
    add("lambda_2 + 4*n*iota < lambda_1 (sgd moderate regime)", l2 + 4.0 * n * iota, l1);
    add("lambda_n + 4*n*iota < lambda_{n-1} (gd / small-lr regime)", ln + 4.0 * n * iota, ln1);
    add("d >= 4*log(2*n^2/delta)", 4.0 * std::log(2.0 * n * n / delta), d, true);
    return out;
}

}  // namespace

bool AssumptionReport::all_hold_empirical() const {
    for (const auto& c : empirical)
        if (!c.holds) return false;
    return true;
}

bool AssumptionReport::all_hold_analytic() const {
    for (const auto& c : analytic)
        if (!c.holds) return false;
    return true;
}

AssumptionReport check_assumptions(const Dataset& ds, double delta) {
    if (ds.count() < 2) throw ContractError("check_assumptions: needs at least two samples");
    AssumptionReport report;
    report.delta = delta;
    report.iota_empirical = ds.iota;
    report.iota_analytic = analytic_iota(ds.count(), ds.dim(), delta);
    report.empirical = conditions_for(ds, report.iota_empirical, delta);
    report.analytic = conditions_for(ds, report.iota_analytic, delta);
    return report;
}

LrWindow moderate_lr_window(const Dataset& ds, std::size_t b, std::optional<double> iota_override) {
    const std::size_t n = ds.count();
    if (b == 0 || n % b != 0) throw ConfigError("moderate_lr_window: b must divide n");
    if (n < 2) throw ContractError("moderate_lr_window: needs at least two samples");

    const double iota = iota_override.value_or(ds.iota);
    const double l1 = ds.lambdas[0];
    const double l2 = ds.lambdas[1];
    const double bb = static_cast<double>(b);
    const double nn = static_cast<double>(n);

    const double denom_lo = l1 - 3.0 * std::sqrt(nn) * iota;
    const double lo = denom_lo > 0.0 ? bb / denom_lo : std::numeric_limits<double>::infinity();
    const double hi = bb / (l2 + 3.0 * nn * iota);
    return LrWindow{lo, hi, !(lo < hi), bb / (2.0 * l1), iota};
}

namespace {

constexpr char kMagic[8] = {'D', 'B', 'L', 'A', 'B', 'D', 'S', '1'};

void write_u64(std::ofstream& f, std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_doubles(std::ofstream& f, const double* p, std::size_t count) {
    f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

std::uint64_t read_u64(std::ifstream& f) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void read_doubles(std::ifstream& f, double* p, std::size_t count) {
    f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path_bin, const std::string& path_json) {
    std::ofstream f(path_bin, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("save_dataset: cannot open " + path_bin);
    f.write(kMagic, sizeof(kMagic));
    write_u64(f, ds.dim());
    write_u64(f, ds.count());
    write_u64(f, ds.seed);
    write_doubles(f, ds.x.data().data(), ds.x.data().size());
    write_doubles(f, ds.y.data(), ds.y.size());
    write_doubles(f, ds.w_star.data(), ds.w_star.size());
    write_doubles(f, ds.lambdas.data(), ds.lambdas.size());
    for (int p : ds.sort_permutation) write_u64(f, static_cast<std::uint64_t>(p));
    write_doubles(f, &ds.iota, 1);
    write_doubles(f, &ds.mu, 1);
    write_u64(f, ds.iota_defined ? 1 : 0);
    if (!f) throw ConfigError("save_dataset: write failed for " + path_bin);

    nlohmann::json side;
    side["schema_version"] = 1;
    side["d"] = ds.dim();
    side["n"] = ds.count();
    side["lambdas"] = ds.lambdas;
    side["iota"] = ds.iota;
    side["seed"] = ds.seed;
    std::ofstream js(path_json, std::ios::trunc);
    if (!js) throw ConfigError("save_dataset: cannot open " + path_json);
    js << side.dump(2) << "\n";
}

Dataset load_dataset(const std::string& path_bin) {
    std::ifstream f(path_bin, std::ios::binary);
    if (!f) throw ConfigError("load_dataset: cannot open " + path_bin);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ConfigError("load_dataset: bad magic in " + path_bin);

    Dataset ds;
    const std::uint64_t d = read_u64(f);
    const std::uint64_t n = read_u64(f);
    ds.seed = read_u64(f);
    ds.x = Matrix(d, n);
    read_doubles(f, ds.x.data().data(), ds.x.data().size());
    ds.y.resize(n);
    read_doubles(f, ds.y.data(), n);
    ds.w_star.resize(d);
    read_doubles(f, ds.w_star.data(), d);
    ds.lambdas.resize(n);
    read_doubles(f, ds.lambdas.data(), n);
    ds.sort_permutation.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) ds.sort_permutation[i] = static_cast<int>(read_u64(f));
    read_doubles(f, &ds.iota, 1);
    read_doubles(f, &ds.mu, 1);
    ds.iota_defined = read_u64(f) != 0;
    if (!f) throw ConfigError("load_dataset: truncated file " + path_bin);
    return ds;
}

}  // namespace dblab
