#pragma once

#include "drfl/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace drfl {

// Dense numeric table: one row per sample, one label per row.
struct Table {
    Mat X;
    Vec y;

    int rows() const { return static_cast<int>(X.rows()); }
    int cols() const { return static_cast<int>(X.cols()); }
};

enum class TableFormat { csv, libsvm };

// Reads a dense table. CSV files carry a header row; `label_column` picks the
// label by zero-based position (-1 means the last column). The sparse format
// stores "label index:value" tokens with one-based indices; absent entries
// are zero and `label_column` is ignored. Labels drawn from {0, 1} are
// remapped to {-1, +1}; any other label set is kept verbatim. Row order
// follows the file. Failures name the offending line.
Table load_table(const std::string& path, TableFormat format, int label_column = -1);

// Per-column affine map fitted on one table and reusable on another.
struct ScaleTransform {
    SupportKind target = SupportKind::box_symmetric;  // box_symmetric or box_unit
    Vec col_min;
    Vec col_max;

    // Maps columns into the target box. Values outside the fitted ranges
    // extrapolate beyond the box and set `out_of_box`.
    Mat apply(const Mat& X, bool* out_of_box = nullptr) const;
};

// Min-max scaling of every column into [-1,1] (box_symmetric) or [0,1]
// (box_unit). A constant column carries no range and is pinned to the box
// center: 0 or 0.5 respectively.
std::pair<Mat, ScaleTransform> scale_features(const Mat& X, SupportKind target);

// Seed-deterministic row split; the train side gets floor(frac * rows).
std::pair<Table, Table> split_train_test(const Table& data, double train_frac,
                                         std::uint64_t seed);

// Random near-equal partition into S clients (ids 1..S): the first
// rows % S clients receive one extra sample. rows < S is an error.
std::vector<ClientDataset> partition_clients(const Table& train, int S, std::uint64_t seed);

// Partition into S clients, then tilt each client's class balance: within a
// client the less frequent of the two labels is subsampled to
// floor(ratio * count) rows (ties treat +1 as the majority). Requires labels
// in {-1,+1}, a ratio in (0,1] per client, and both classes present in every
// client slice. ratio = 1 reproduces partition_clients exactly.
std::vector<ClientDataset> partition_imbalanced(const Table& train, int S,
                                                const std::vector<double>& minority_ratios,
                                                std::uint64_t seed);

// Adds i.i.d. Gaussian(mean, sd^2) draws to every feature entry; labels and
// row count are untouched. sd = 0 degenerates to a constant shift.
Table inject_noise(const Table& data, double mean, double sd, std::uint64_t seed);
ClientDataset inject_noise(const ClientDataset& data, double mean, double sd,
                           std::uint64_t seed);

// Test-noise sweep description: how (mean, sd) pairs evolve over the sweep.
enum class NoiseMode { fixed_sd_vary_mean, fixed_mean_vary_sd, ratio };
enum class NoiseTarget { train_client_k, test };

struct NoiseSchedule {
    NoiseMode mode = NoiseMode::fixed_sd_vary_mean;
    double fixed = 0.0;        // the held-fixed sd (or mean), by mode
    Vec sweep;                 // swept means, sds, or sds (ratio mode)
    double ratio = 1.0;        // mean = ratio * sd in ratio mode
    NoiseTarget target = NoiseTarget::test;
    int client_k = 1;          // targeted client when target is train_client_k
    std::uint64_t seed = 1;
};

// Expands the schedule to concrete per-level (mean, sd) pairs.
// Throws on an empty sweep or a negative standard deviation.
std::vector<std::pair<double, double>> noise_levels(const NoiseSchedule& schedule);

}  // namespace drfl
