#pragma once

#include "drfl/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace drfl {

// Test-noise sweep description: which moment is swept, which is held fixed,
// and where the noise lands.
struct NoiseSchedule {
    enum class Mode { fixed_sd_vary_mean, fixed_mean_vary_sd, ratio };
    Mode mode = Mode::fixed_sd_vary_mean;
    double fixed = 0.0;             // held-fixed sd (or mean), depending on mode
    std::vector<double> grid;       // swept values (means, sds, or sds for ratio mode)
    double ratio = 1.0;             // ratio mode: mean = ratio * sd
    std::string target = "test";    // "test" or "train_client"
    int target_client = 1;          // 1-based, for target == "train_client"
    std::uint64_t seed = 1;
};

struct DataConfig {
    std::string path;
    std::string format = "csv";  // csv | libsvm
    int label_column = -1;       // csv only; -1 means last column
    std::string scale = "none";  // none | box_symmetric | box_unit
    double train_frac = 0.6;
    int clients = 3;
    std::string partition = "balanced";   // balanced | imbalanced
    std::vector<double> minority_ratios;  // per client, imbalanced mode
    std::uint64_t seed = 1;
    double train_noise_mean = 0.0;  // injected into one client's train split
    double train_noise_sd = 0.0;
    int train_noise_client = 1;
};

struct GridConfig {
    std::vector<double> rho;
    std::vector<double> kappa;
    std::vector<double> theta;
};

// The stock tuning grids: 15 radii, 10 label-cost weights, 6 mixture radii.
GridConfig default_grid();

struct ExperimentConfig {
    GridConfig grid = default_grid();
    int folds = 5;
    NoiseSchedule noise;
    std::vector<std::string> methods = {"drfl", "erm", "afl", "drfa"};
    std::string out_dir = "out";
};

struct FullConfig {
    ProblemSpec problem;
    SolverConfig solver;
    DataConfig data;
    ExperimentConfig experiment;
};

// JSON round trip. Serialization of a parsed config reproduces an equivalent
// document; parse(serialize(x)) == x field-for-field.
FullConfig parse_config(const std::string& json_text);
FullConfig load_config(const std::string& path);
std::string serialize_config(const FullConfig& cfg);
void save_config(const FullConfig& cfg, const std::string& path);

}  // namespace drfl
