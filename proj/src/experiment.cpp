#include "dblab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dblab/diag.hpp"
#include "dblab/errors.hpp"
#include "dblab/optim.hpp"
#include "dblab/parallel.hpp"
#include "dblab/svg.hpp"

namespace dblab {

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

nlohmann::json assumption_report_json(const AssumptionReport& rep) {
    nlohmann::json j;
    j["delta"] = rep.delta;
    j["iota_empirical"] = rep.iota_empirical;
    j["iota_analytic"] = rep.iota_analytic;
    for (auto [mode, conds] : {std::pair{"empirical", &rep.empirical},
                               std::pair{"analytic", &rep.analytic}}) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& c : *conds)
            arr.push_back({{"condition", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs},
                           {"holds", c.holds}, {"margin", c.margin}, {"iota_mode", mode}});
        j[mode] = arr;
    }
    j["all_hold_empirical"] = rep.all_hold_empirical();
    j["all_hold_analytic"] = rep.all_hold_analytic();
    return j;
}

std::filesystem::path out_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return std::filesystem::path(cfg.out_dir) / name;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + path.string());
    f << j.dump(2) << "\n";
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["experiment"] = experiment;
    j["n"] = n;
    j["d"] = d;
    j["magnitude"] = {{"law", magnitude.kind == MagnitudeLaw::Kind::uniform ? "uniform" : "constant"},
                      {"a", magnitude.a},
                      {"b", magnitude.b},
                      {"c", magnitude.c}};
    j["b"] = b;
    j["eta"] = eta;
    j["eta_prime"] = eta_prime;
    j["k1"] = k1;
    j["k2"] = k2;
    j["scale"] = scale;
    j["seeds"] = seeds;
    j["out_dir"] = out_dir;
    j["only"] = only;
    j["eps"] = eps;
    j["delta"] = delta;
    j["alpha"] = alpha;
    j["partitions"] = partitions;
    j["iota_mode"] = iota_mode;
    j["divergence_factor"] = divergence_factor;
    j["b_list"] = b_list;
    j["eta_grid"] = eta_grid;
    j["beta_drop"] = beta_drop;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    static const std::vector<std::string> known = {
        "schema_version", "experiment", "n", "d", "magnitude", "b", "eta", "eta_prime", "k1",
        "k2", "scale", "seeds", "out_dir", "only", "eps", "delta", "alpha", "partitions",
        "iota_mode", "divergence_factor", "b_list", "eta_grid", "beta_drop"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config field: " + key);

    if (j.contains("schema_version")) c.schema_version = j["schema_version"];
    if (c.schema_version != 1) throw ConfigError("unsupported config schema_version");
    if (j.contains("experiment")) c.experiment = j["experiment"];
    if (j.contains("n")) c.n = j["n"];
    if (j.contains("d")) c.d = j["d"];
    if (j.contains("magnitude")) {
        const auto& m = j["magnitude"];
        const std::string law = m.value("law", "uniform");
        if (law == "uniform")
            c.magnitude = MagnitudeLaw::uniform(m.value("a", 0.5), m.value("b", 1.0));
        else if (law == "constant")
            c.magnitude = MagnitudeLaw::constant(m.value("c", 1.0));
        else
            throw ConfigError("unknown magnitude law: " + law);
    }
    if (j.contains("b")) c.b = j["b"];
    if (j.contains("eta")) c.eta = j["eta"];
    if (j.contains("eta_prime")) c.eta_prime = j["eta_prime"];
    if (j.contains("k1")) c.k1 = j["k1"];
    if (j.contains("k2")) c.k2 = j["k2"];
    if (j.contains("scale")) c.scale = j["scale"];
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"];
    if (j.contains("only")) c.only = j["only"].get<std::vector<std::string>>();
    if (j.contains("eps")) c.eps = j["eps"];
    if (j.contains("delta")) c.delta = j["delta"];
    if (j.contains("alpha")) c.alpha = j["alpha"];
    if (j.contains("partitions")) c.partitions = j["partitions"];
    if (j.contains("iota_mode")) c.iota_mode = j["iota_mode"];
    if (j.contains("divergence_factor")) c.divergence_factor = j["divergence_factor"];
    if (j.contains("b_list")) c.b_list = j["b_list"].get<std::vector<std::size_t>>();
    if (j.contains("eta_grid")) c.eta_grid = j["eta_grid"].get<std::vector<double>>();
    if (j.contains("beta_drop")) c.beta_drop = j["beta_drop"];
    return c;
}

void ExperimentConfig::validate() const {
    if (experiment != "fig1" && experiment != "fig2a" && experiment != "verify" &&
        experiment != "sweep")
        throw ConfigError("unknown experiment: " + experiment);
    if (experiment != "fig1" && seeds.empty())
        throw ConfigError(experiment + " requires at least one seed (--seed)");
    if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("scale must be in (0, 1]");
    if (iota_mode != "analytic" && iota_mode != "empirical")
        throw ConfigError("iota_mode must be analytic or empirical");
    if (experiment == "fig2a" || experiment == "sweep" || experiment == "verify") {
        PopulationSpec spec;
        spec.d = d;
        spec.magnitude = magnitude;
        spec.validate();
    }
}

// ---------------------------------------------------------------------------
// fig1: the 2-D orthogonal example in both rate regimes.
// ---------------------------------------------------------------------------

const char* kFig1CsvHeader = "epoch,gd_w1,gd_w2,sgd_w1,sgd_w2";

namespace {

struct Fig1Series {
    std::vector<std::array<double, 2>> gd;
    std::vector<std::array<double, 2>> sgd;  // averaged over the two batch orders
};

Fig1Series fig1_run(const Dataset& ds, const LrSchedule& schedule, const Vector& w0) {
    const int total = schedule.total_epochs();
    Fig1Series out;
    out.gd.reserve(static_cast<std::size_t>(total) + 1);
    out.sgd.reserve(static_cast<std::size_t>(total) + 1);

    Vector v_gd = w0;
    Partition order12, order21;
    order12.batches = {{0}, {1}};
    order21.batches = {{1}, {0}};
    Vector v_a = w0, v_b = w0;  // the two batch orders

    out.gd.push_back({v_gd[0], v_gd[1]});
    out.sgd.push_back({w0[0], w0[1]});
    for (int k = 0; k < total; ++k) {
        const double eta = schedule.eta_at(k);
        v_gd = gd_epoch(v_gd, ds.x, eta);
        v_a = sgd_epoch(v_a, ds.x, eta, order12);
        v_b = sgd_epoch(v_b, ds.x, eta, order21);
        out.gd.push_back({v_gd[0], v_gd[1]});
        out.sgd.push_back({0.5 * (v_a[0] + v_b[0]), 0.5 * (v_a[1] + v_b[1])});
    }
    return out;
}

void write_fig1_csv(const std::filesystem::path& path, const Fig1Series& s) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + path.string());
    f << kFig1CsvHeader << "\n";
    for (std::size_t k = 0; k < s.gd.size(); ++k)
        f << k << ',' << fmt17(s.gd[k][0]) << ',' << fmt17(s.gd[k][1]) << ','
          << fmt17(s.sgd[k][0]) << ',' << fmt17(s.sgd[k][1]) << "\n";
}

}  // namespace

int cmd_fig1(const ExperimentConfig& cfg) {
    // kappa = 4 example: x1 = 2 e1, x2 = e2; the lambda <= 1 normalization is
    // deliberately bypassed here (the assumption checker is not consulted).
    const double kappa = 4.0;
    Matrix x(2, 2);
    x(0, 0) = std::sqrt(kappa);
    x(1, 1) = 1.0;
    const Dataset ds = make_dataset(x, Vector{0.0, 0.0});
    const Vector w0 = {0.6, 0.6};

    const int k1 = cfg.k1 > 0 ? cfg.k1 : 20;
    const int total = cfg.k2 > 0 ? cfg.k2 : 200;
    const double eta_moderate = cfg.eta > 0.0 ? cfg.eta : 1.1 / kappa;
    const double eta_small = cfg.eta_prime > 0.0 ? cfg.eta_prime : 0.1 / kappa;

    const LrSchedule small = LrSchedule::single(total, eta_small);
    const LrSchedule moderate = LrSchedule::two_phase(k1, eta_moderate, total - k1, eta_small);

    const Fig1Series s_small = fig1_run(ds, small, w0);
    const Fig1Series s_mod = fig1_run(ds, moderate, w0);
    write_fig1_csv(out_path(cfg, "fig1_small.csv"), s_small);
    write_fig1_csv(out_path(cfg, "fig1_moderate.csv"), s_mod);

    auto to_points = [](const std::vector<std::array<double, 2>>& traj) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(traj.size());
        for (const auto& w : traj) pts.emplace_back(w[0], w[1]);
        return pts;
    };
    std::vector<SvgSeries> series;
    series.push_back({to_points(s_small.gd), "#1f77b4", "gd small", true, false});
    series.push_back({to_points(s_small.sgd), "#17becf", "sgd small", true, false});
    series.push_back({to_points(s_mod.gd), "#2ca02c", "gd moderate", true, false});
    series.push_back({to_points(s_mod.sgd), "#d62728", "sgd moderate", true, false});
    SvgOptions opts;
    opts.title = "2-D trajectories (kappa=4, w0=(0.6,0.6))";
    opts.x_label = "w1";
    opts.y_label = "w2";
    write_svg(out_path(cfg, "fig1.svg").string(), series, opts);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fig2a: Rayleigh-quotient traces for the three rate regimes.
// ---------------------------------------------------------------------------

Fig2aDims fig2a_dims(double scale) {
    Fig2aDims dims;
    dims.d = static_cast<std::size_t>(std::lround(10000.0 * scale));
    const double n_raw = 100.0 * std::sqrt(scale);
    dims.n = static_cast<std::size_t>(std::lround(std::ceil(n_raw / 10.0) * 10.0));
    dims.k1 = static_cast<int>(std::lround(2000.0 * scale));
    dims.k2 = static_cast<int>(std::lround(3000.0 * scale));
    dims.k2_small = static_cast<int>(std::lround(10000.0 * scale));
    return dims;
}

int cmd_fig2a(const ExperimentConfig& cfg) {
    Fig2aDims dims = fig2a_dims(cfg.scale);
    if (cfg.scale == 1.0) {
        dims.n = cfg.n;
        dims.d = cfg.d;
    }
    if (cfg.k1 > 0) dims.k1 = cfg.k1;
    if (cfg.k2 > 0) {
        dims.k2 = cfg.k2;
        dims.k2_small = cfg.k2;
    }
    const double eta = cfg.eta > 0.0 ? cfg.eta : 1.05;
    const double eta_anneal = cfg.eta_prime > 0.0 ? cfg.eta_prime : 0.1;
    const double eta_small = 0.2;

    // Memory check before any compute.
    const double bytes = static_cast<double>(dims.n) * static_cast<double>(dims.d) * 8.0 * 4.0;
    if (bytes > 6e9) throw ConfigError("fig2a: dataset + bases would exceed the memory budget");

    const std::uint64_t seed = cfg.seeds.front();
    Rng root(seed);
    PopulationSpec spec;
    spec.d = dims.d;
    spec.magnitude = cfg.magnitude;
    Rng rdata = root.split(0);
    const Dataset ds = sample_dataset(spec, dims.n, rdata, seed);
    const RestrictedSpectrum rs = restricted_spectrum(ds);

    const ProjectionBasis basis1 = build_projection_basis(ds.x, 1);
    const ProjectionBasis basisn = build_projection_basis(ds.x, static_cast<int>(dims.n));
    Rng rv = root.split(1);
    const Vector v0 = v0_in_span(basis1, rv);

    struct RunSpec {
        const char* name;
        Algo algo;
        LrSchedule schedule;
        const ProjectionBasis* basis;
        std::uint64_t stream;
    };
    const std::vector<RunSpec> runs = {
        {"sgd_moderate", Algo::sgd,
         LrSchedule::two_phase(dims.k1, eta, dims.k2 - dims.k1, eta_anneal), &basis1, 2},
        {"sgd_small", Algo::sgd, LrSchedule::single(dims.k2_small, eta_small), &basisn, 3},
        {"gd", Algo::gd, LrSchedule::single(dims.k2_small, eta_small), &basisn, 4},
    };

    std::vector<Trajectory> trajs(runs.size());
    parallel_for(static_cast<int>(runs.size()), [&](int i) {
        const RunSpec& r = runs[static_cast<std::size_t>(i)];
        RunConfig rc;
        rc.algo = r.algo;
        rc.b = cfg.b;
        rc.schedule = r.schedule;
        rc.divergence_factor = cfg.divergence_factor;
        rc.seed = seed;
        EpochProbe probe(ds, *r.basis, v0);
        Rng rrun = root.split(r.stream);
        trajs[static_cast<std::size_t>(i)] = run(ds, rc, v0, rrun, probe.observer());
    });

    nlohmann::json side;
    side["schema_version"] = 1;
    side["gamma1"] = rs.gamma1();
    side["gamma_n"] = rs.gamma_n();
    side["seed"] = seed;
    side["n"] = dims.n;
    side["d"] = dims.d;
    side["iota"] = ds.iota;
    side["iota_analytic"] = analytic_iota(dims.n, dims.d, cfg.delta);
    side["assumptions"] = assumption_report_json(check_assumptions(ds, cfg.delta));
    side["config"] = cfg.to_json();
    {
        // The caption rate is checked against the window, never asserted.
        nlohmann::json wj;
        for (auto [mode, iota] :
             {std::pair{"zero", 0.0}, std::pair{"empirical", ds.iota},
              std::pair{"analytic", analytic_iota(dims.n, dims.d, cfg.delta)}}) {
            const LrWindow w = moderate_lr_window(ds, cfg.b, iota);
            wj[mode] = {{"lo", w.lo}, {"hi", w.hi}, {"empty", w.empty},
                        {"eta_in_window", !w.empty && eta > w.lo && eta < w.hi}};
        }
        side["moderate_window"] = wj;
    }

    bool diverged = false;
    std::vector<SvgSeries> series;
    const char* colors[3] = {"#d62728", "#1f77b4", "#2ca02c"};
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Trajectory& t = trajs[i];
        write_trajectory_csv(t, out_path(cfg, std::string("fig2a_") + runs[i].name + ".csv").string());
        side["runs"][runs[i].name] = {
            {"final_rayleigh", t.final_rayleigh()},
            {"stop_reason", t.stop_reason == StopReason::completed
                                ? "completed"
                                : (t.stop_reason == StopReason::diverged ? "diverged" : "level_set")},
            {"epochs", t.last_epoch()}};
        if (t.stop_reason == StopReason::diverged) diverged = true;

        SvgSeries s;
        s.color = colors[i];
        s.label = runs[i].name;
        for (const auto& row : t.rows)
            if (row.rayleigh_defined)
                s.points.emplace_back(static_cast<double>(row.epoch), row.rayleigh);
        series.push_back(std::move(s));
    }
    for (auto [label, value] : {std::pair{"gamma1", rs.gamma1()}, std::pair{"gamma_n", rs.gamma_n()}}) {
        SvgSeries ref;
        ref.color = "#777777";
        ref.dashed = true;
        ref.label = label;
        ref.points = {{0.0, value}, {static_cast<double>(dims.k2_small), value}};
        series.push_back(std::move(ref));
    }
    SvgOptions opts;
    opts.title = "Rayleigh quotient per epoch";
    opts.x_label = "epoch";
    opts.y_label = "rayleigh";
    write_svg(out_path(cfg, "fig2a.svg").string(), series, opts);
    write_json(out_path(cfg, "fig2a.json"), side);
    return diverged ? kExitDiverged : kExitOk;
}

// ---------------------------------------------------------------------------
// verify: drive the theorem harness.
// ---------------------------------------------------------------------------

namespace {

TheoremConfig theorem_config_from(const ExperimentConfig& cfg) {
    TheoremConfig tc;
    tc.n = cfg.n;
    tc.d = cfg.d;
    tc.magnitude = cfg.magnitude;
    tc.b = cfg.b;
    tc.eps = cfg.eps;
    tc.seeds = cfg.seeds;
    tc.delta = cfg.delta;
    tc.alpha = cfg.alpha;
    tc.partitions = cfg.partitions;
    tc.iota_mode = cfg.iota_mode;
    tc.divergence_factor = cfg.divergence_factor;
    tc.pass_min = std::max(1, static_cast<int>(cfg.seeds.size()) - 1);
    tc.eta = cfg.eta;
    tc.eta_prime = cfg.eta_prime;
    tc.k1 = cfg.k1;
    tc.k2 = cfg.k2;
    return tc;
}

// Dataset-derived defaults so the CLI is usable without hand-tuned rates: the
// moderate rate sits at the geometric mean of the iota=0 window, the small
// rate at half the stability cap.
void resolve_auto_rates(TheoremConfig& tc, const std::string& check) {
    if (tc.k1 <= 0) tc.k1 = 60;
    if (tc.k2 <= tc.k1) tc.k2 = check == "sgd_moderate" ? tc.k1 + 40 : 400;
    if (tc.eta > 0.0 && tc.eta_prime > 0.0) return;

    PopulationSpec spec;
    spec.d = tc.d;
    spec.magnitude = tc.magnitude;
    Rng root(tc.seeds.empty() ? 1 : tc.seeds.front());
    Rng rdata = root.split(0);
    const Dataset probe = sample_dataset(spec, tc.n, rdata);
    if (tc.eta_prime <= 0.0)
        tc.eta_prime = static_cast<double>(tc.b) / (4.0 * probe.lambdas[0]);
    if (tc.eta <= 0.0) {
        if (check == "epoch_spectrum") {
            const double iota = tc.iota_mode == "analytic"
                                    ? analytic_iota(tc.n, tc.d, tc.delta)
                                    : probe.iota;
            tc.eta = 0.9 * static_cast<double>(tc.b) /
                     (probe.lambdas[1] + 3.0 * static_cast<double>(tc.n) * iota);
        } else {
            const LrWindow w = moderate_lr_window(probe, tc.b, 0.0);
            tc.eta = w.empty ? 1.0 / probe.lambdas[0] : std::sqrt(w.lo * w.hi);
        }
    }
}

}  // namespace

int cmd_verify(const ExperimentConfig& cfg) {
    static const std::vector<std::string> all_checks = {
        "sgd_moderate", "gd_direction", "sgd_small", "optimality_gap", "epoch_spectrum",
        "projection_lemmas"};
    if (cfg.only.empty()) {
        std::cerr << "verify: no checks selected (--only "
                  << "sgd_moderate,gd_direction,sgd_small,optimality_gap,epoch_spectrum,"
                  << "projection_lemmas)\n";
        return kExitUsage;
    }
    for (const auto& c : cfg.only)
        if (std::find(all_checks.begin(), all_checks.end(), c) == all_checks.end()) {
            std::cerr << "verify: unknown check id: " << c << "\n";
            return kExitUsage;
        }

    nlohmann::json out;
    out["schema_version"] = 1;
    out["config"] = cfg.to_json();
    bool all_pass = true;
    for (const auto& check : cfg.only) {
        TheoremConfig tc = theorem_config_from(cfg);
        resolve_auto_rates(tc, check);
        VerificationReport report;
        if (check == "sgd_moderate")
            report = verify_sgd_moderate_direction(tc);
        else if (check == "gd_direction")
            report = verify_gd_direction(tc);
        else if (check == "sgd_small")
            report = verify_sgd_small_direction(tc);
        else if (check == "optimality_gap")
            report = verify_optimality_gap(tc);
        else if (check == "epoch_spectrum")
            report = verify_epoch_matrix_spectrum(tc);
        else
            report = verify_projection_lemmas(tc);
        out["reports"][check] = report_to_json(report);
        if (!report.passed()) all_pass = false;
        std::cout << (report.skipped_all ? "SKIP" : (report.passed() ? "PASS" : "FAIL")) << "  "
                  << check << "  (" << report.passes << "/" << report.trials - report.skips
                  << " non-skipped trials)\n";
    }
    write_json(out_path(cfg, "verify_report.json"), out);
    return all_pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// sweep: batch-size x learning-rate grid with regime tags.
// ---------------------------------------------------------------------------

int cmd_sweep(const ExperimentConfig& cfg) {
    const std::uint64_t seed = cfg.seeds.front();
    Rng root(seed);
    PopulationSpec spec;
    spec.d = cfg.d > 0 ? cfg.d : 2000;
    spec.magnitude = cfg.magnitude;
    Rng rdata = root.split(0);
    const Dataset ds = sample_dataset(spec, cfg.n, rdata, seed);
    const RestrictedSpectrum rs = restricted_spectrum(ds);
    const ProjectionBasis basis = build_projection_basis(ds.x, 1);
    Rng rv = root.split(1);
    const Vector v0 = v0_in_span(basis, rv);
    const double pivot0 = components(v0, basis).pivot;

    const int k1 = cfg.k1 > 0 ? cfg.k1 : 80;
    const int k2 = cfg.k2 > k1 ? cfg.k2 : k1 + 20;

    std::vector<double> grid = cfg.eta_grid;
    if (grid.empty()) {
        // Default grid: log-spaced across and beyond the b=1 window.
        const LrWindow w1 = moderate_lr_window(ds, 1, 0.0);
        const double lo = 0.2 * w1.lo, hi = 3.0 * w1.hi;
        for (int i = 0; i < 12; ++i)
            grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / 11.0));
    }

    struct Cell {
        std::size_t b;
        double eta;
        bool skipped;
        std::string regime;
        double final_rayleigh;
        int first_drop;
        LrWindow window;
    };
    std::vector<Cell> cells;
    for (std::size_t b : cfg.b_list)
        for (double eta : grid) cells.push_back({b, eta, false, "", 0.0, -1, {}});

    parallel_for(static_cast<int>(cells.size()), [&](int i) {
        Cell& cell = cells[static_cast<std::size_t>(i)];
        if (ds.count() % cell.b != 0) {
            cell.skipped = true;
            cell.regime = "skipped_b_not_divisor";
            return;
        }
        cell.window = moderate_lr_window(ds, cell.b, 0.0);
        RunConfig rc;
        rc.algo = Algo::sgd;
        rc.b = cell.b;
        const double eta_prime = static_cast<double>(cell.b) / (4.0 * ds.lambdas[0]);
        rc.schedule = LrSchedule::two_phase(k1, cell.eta, k2 - k1, eta_prime);
        rc.divergence_factor = 1e12;  // sweep keeps the conservative default cap
        rc.seed = seed;
        EpochProbe probe(ds, basis, v0);
        Rng rrun = root.split(1000 + static_cast<std::uint64_t>(i));
        const Trajectory t = run(ds, rc, v0, rrun, probe.observer());

        const double beta = cfg.beta_drop * pivot0;
        for (const auto& row : t.rows)
            if (row.comp_pivot < beta) {
                cell.first_drop = row.epoch;
                break;
            }
        cell.final_rayleigh = t.final_rayleigh();
        if (t.stop_reason == StopReason::diverged)
            cell.regime = "diverged";
        else if (cell.final_rayleigh >= 0.9 * rs.gamma1())
            cell.regime = "near_gamma1";
        else if (cell.final_rayleigh <= 1.25 * rs.gamma_n())
            cell.regime = "near_gamma_n";
        else
            cell.regime = "mixed";
    });

    const auto csv_path = out_path(cfg, "sweep.csv");
    std::ofstream f(csv_path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + csv_path.string());
    f << "b,eta,window_lo,window_hi,in_window,final_rayleigh,regime,first_epoch_pivot_below_beta\n";
    for (const auto& c : cells) {
        if (c.skipped) {
            f << c.b << ',' << fmt17(c.eta) << ",,,,," << c.regime << ",\n";
            continue;
        }
        const bool in_window = !c.window.empty && c.eta > c.window.lo && c.eta < c.window.hi;
        f << c.b << ',' << fmt17(c.eta) << ',' << fmt17(c.window.lo) << ',' << fmt17(c.window.hi)
          << ',' << (in_window ? 1 : 0) << ',' << fmt17(c.final_rayleigh) << ',' << c.regime << ','
          << c.first_drop << "\n";
    }
    f.close();

    // Exact linear scaling of the window endpoints in b.
    nlohmann::json side;
    side["schema_version"] = 1;
    side["gamma1"] = rs.gamma1();
    side["gamma_n"] = rs.gamma_n();
    side["config"] = cfg.to_json();
    {
        // Doubling the batch size doubles the window endpoints bit-exactly.
        nlohmann::json lin = nlohmann::json::array();
        bool exact = true;
        for (std::size_t b : cfg.b_list) {
            if (ds.count() % b != 0) continue;
            const LrWindow wb = moderate_lr_window(ds, b, 0.0);
            nlohmann::json entry = {{"b", b}, {"lo", wb.lo}, {"hi", wb.hi}};
            if (ds.count() % (2 * b) == 0) {
                const LrWindow w2b = moderate_lr_window(ds, 2 * b, 0.0);
                const bool ok = w2b.lo == 2.0 * wb.lo && w2b.hi == 2.0 * wb.hi;
                exact = exact && ok;
                entry["doubling_exact"] = ok;
            }
            lin.push_back(entry);
        }
        side["window_linear_in_b"] = lin;
        side["window_scaling_exact"] = exact;
    }
    write_json(out_path(cfg, "sweep.json"), side);
    return kExitOk;
}

}  // namespace dblab
