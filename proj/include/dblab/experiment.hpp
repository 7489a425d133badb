#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dblab/datagen.hpp"
#include "dblab/verify.hpp"

namespace dblab {

// Exit codes shared by the CLI and the library entry points.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDiverged = 3;

// One serializable configuration for every experiment; unknown fields are
// rejected so configs stay honest. CLI flags override file values.
struct ExperimentConfig {
    int schema_version = 1;
    std::string experiment;  // fig1 | fig2a | verify | sweep

    // dataset
    std::size_t n = 100;
    std::size_t d = 10000;
    MagnitudeLaw magnitude = MagnitudeLaw::uniform(0.5, 1.0);

    // algorithm
    std::size_t b = 1;
    double eta = 0.0;        // 0 means auto (dataset-derived; recorded in outputs)
    double eta_prime = 0.0;  // 0 means auto
    int k1 = 0;              // 0 means experiment default
    int k2 = 0;

    // harness
    double scale = 1.0;  // fig2a size knob
    std::vector<std::uint64_t> seeds;
    std::string out_dir = ".";
    std::vector<std::string> only;  // verify: which checks to run
    double eps = 0.05;
    double delta = 0.01;
    double alpha = 1e-4;
    int partitions = 20;
    std::string iota_mode = "analytic";
    double divergence_factor = 1e250;

    // sweep
    std::vector<std::size_t> b_list = {1, 2, 4};
    std::vector<double> eta_grid;
    double beta_drop = 0.1;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    void validate() const;
};

// Library entry points behind the CLI subcommands; each returns an exit code.
int cmd_fig1(const ExperimentConfig& cfg);
int cmd_fig2a(const ExperimentConfig& cfg);
int cmd_verify(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg);

// fig2a dimensions under the scale knob: d and the epoch counts scale
// linearly, n scales with sqrt(scale) rounded up to the nearest ten (keeps the
// n^2/d profile roughly constant). scale=0.2 gives (n, d) = (50, 2000).
struct Fig2aDims {
    std::size_t n;
    std::size_t d;
    int k1;
    int k2;
    int k2_small;
};
Fig2aDims fig2a_dims(double scale);

extern const char* kFig1CsvHeader;

}  // namespace dblab
