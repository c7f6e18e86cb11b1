#include "drfl/data.hpp"

#include "drfl/rng.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace drfl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_num(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    out = std::strtod(begin, &end);
    return end != begin && *end == '\0' && errno != ERANGE;
}

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& msg) {
    std::ostringstream os;
    os << path << ":" << line << ": " << msg;
    throw std::runtime_error(os.str());
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

Table load_csv(const std::string& path, std::ifstream& in, int label_column) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const int cols = static_cast<int>(split_csv(trim(line)).size());
    if (cols < 2) fail_at(path, 1, "need a label column and at least one feature column");
    const int label = label_column < 0 ? cols - 1 : label_column;
    if (label >= cols) fail_at(path, 1, "label column out of range");

    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv(line);
        if (static_cast<int>(cells.size()) != cols) {
            std::ostringstream os;
            os << "expected " << cols << " columns, got " << cells.size();
            fail_at(path, lineno, os.str());
        }
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(cols) - 1);
        for (int j = 0; j < cols; ++j) {
            double v;
            if (!parse_num(cells[static_cast<std::size_t>(j)], v)) {
                if (j == label && cells[static_cast<std::size_t>(j)].empty())
                    fail_at(path, lineno, "missing label");
                fail_at(path, lineno,
                        "non-numeric cell '" + cells[static_cast<std::size_t>(j)] + "'");
            }
            if (j == label)
                labels.push_back(v);
            else
                row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    Table t;
    t.X.resize(static_cast<Eigen::Index>(rows.size()), cols - 1);
    t.y.resize(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j + 1 < cols; ++j) t.X(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
        t.y[static_cast<Eigen::Index>(i)] = labels[i];
    }
    return t;
}

Table load_libsvm(const std::string& path, std::ifstream& in) {
    std::vector<double> labels;
    std::vector<std::vector<std::pair<int, double>>> rows;
    int max_index = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tok;
        if (!(ss >> tok)) continue;  // blank line
        double label;
        if (!parse_num(tok, label)) fail_at(path, lineno, "non-numeric label '" + tok + "'");
        std::vector<std::pair<int, double>> entries;
        while (ss >> tok) {
            const auto colon = tok.find(':');
            double idx_d, val;
            if (colon == std::string::npos || !parse_num(tok.substr(0, colon), idx_d) ||
                !parse_num(tok.substr(colon + 1), val) || idx_d != std::floor(idx_d) ||
                idx_d < 1.0)
                fail_at(path, lineno, "malformed entry '" + tok + "'");
            const int idx = static_cast<int>(idx_d);
            for (const auto& [seen, unused] : entries)
                if (seen == idx) fail_at(path, lineno, "duplicate feature index " + tok);
            entries.emplace_back(idx, val);
            max_index = std::max(max_index, idx);
        }
        labels.push_back(label);
        rows.push_back(std::move(entries));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");
    if (max_index == 0) throw std::runtime_error(path + ": no feature entries");

    Table t;
    t.X = Mat::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
    t.y.resize(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        t.y[static_cast<Eigen::Index>(i)] = labels[i];
        for (const auto& [idx, val] : rows[i]) t.X(static_cast<Eigen::Index>(i), idx - 1) = val;
    }
    return t;
}

// Binary {0,1} labels are re-encoded on the +/-1 convention the margin
// losses expect; every other label set passes through untouched.
void remap_binary_labels(Vec& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0) return;
    if (y.size() == 0) return;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = y[i] == 0.0 ? -1.0 : 1.0;
}

double box_center(SupportKind target) { return target == SupportKind::box_unit ? 0.5 : 0.0; }

void check_box_target(SupportKind target) {
    if (target != SupportKind::box_symmetric && target != SupportKind::box_unit)
        throw std::invalid_argument("scaling targets a box support");
}

// Seed-deterministic near-equal index chunks, each sorted ascending.
std::vector<std::vector<int>> index_chunks(int rows, int S, std::uint64_t seed) {
    if (S < 1) throw std::invalid_argument("partition: need at least one client");
    if (S > rows) throw std::invalid_argument("partition: more clients than samples");
    Rng rng(seed);
    const std::vector<int> perm = rng.permutation(rows);
    std::vector<std::vector<int>> chunks(static_cast<std::size_t>(S));
    int next = 0;
    for (int s = 0; s < S; ++s) {
        const int size = rows / S + (s < rows % S ? 1 : 0);
        auto& chunk = chunks[static_cast<std::size_t>(s)];
        chunk.assign(perm.begin() + next, perm.begin() + next + size);
        std::sort(chunk.begin(), chunk.end());
        next += size;
    }
    return chunks;
}

ClientDataset rows_to_client(const Table& t, const std::vector<int>& idx, int client_id) {
    ClientDataset c;
    c.client_id = client_id;
    c.samples.reserve(idx.size());
    for (int i : idx)
        c.samples.push_back(Sample{t.X.row(i).transpose(), t.y[i]});
    return c;
}

}  // namespace

Table load_table(const std::string& path, TableFormat format, int label_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    Table t = format == TableFormat::csv ? load_csv(path, in, label_column) : load_libsvm(path, in);
    remap_binary_labels(t.y);
    return t;
}

Mat ScaleTransform::apply(const Mat& X, bool* out_of_box) const {
    if (X.cols() != col_min.size())
        throw std::invalid_argument("scale transform: column count mismatch");
    check_box_target(target);
    if (out_of_box) *out_of_box = false;
    Mat out(X.rows(), X.cols());
    const double center = box_center(target);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double mn = col_min[j], mx = col_max[j];
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const double v = X(i, j);
            if (out_of_box && (v < mn || v > mx)) *out_of_box = true;
            if (mx > mn) {
                const double unit = (v - mn) / (mx - mn);
                out(i, j) = target == SupportKind::box_unit ? unit : 2.0 * unit - 1.0;
            } else {
                out(i, j) = center;
            }
        }
    }
    return out;
}

std::pair<Mat, ScaleTransform> scale_features(const Mat& X, SupportKind target) {
    check_box_target(target);
    if (X.rows() == 0) throw std::invalid_argument("scaling: empty matrix");
    ScaleTransform tr;
    tr.target = target;
    tr.col_min = X.colwise().minCoeff().transpose();
    tr.col_max = X.colwise().maxCoeff().transpose();
    return {tr.apply(X), tr};
}

std::pair<Table, Table> split_train_test(const Table& data, double train_frac,
                                         std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw std::invalid_argument("split: train fraction must lie in (0, 1)");
    const int rows = data.rows();
    if (rows < 1) throw std::invalid_argument("split: empty table");
    const int n_train = static_cast<int>(std::floor(train_frac * rows));

    Rng rng(seed);
    std::vector<int> perm = rng.permutation(rows);
    std::vector<int> train_idx(perm.begin(), perm.begin() + n_train);
    std::vector<int> test_idx(perm.begin() + n_train, perm.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    auto take = [&](const std::vector<int>& idx) {
        Table t;
        t.X.resize(static_cast<Eigen::Index>(idx.size()), data.X.cols());
        t.y.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            t.X.row(static_cast<Eigen::Index>(i)) = data.X.row(idx[i]);
            t.y[static_cast<Eigen::Index>(i)] = data.y[idx[i]];
        }
        return t;
    };
    return {take(train_idx), take(test_idx)};
}

std::vector<ClientDataset> partition_clients(const Table& train, int S, std::uint64_t seed) {
    const std::vector<std::vector<int>> chunks = index_chunks(train.rows(), S, seed);
    std::vector<ClientDataset> clients;
    clients.reserve(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s)
        clients.push_back(rows_to_client(train, chunks[static_cast<std::size_t>(s)], s + 1));
    return clients;
}

std::vector<ClientDataset> partition_imbalanced(const Table& train, int S,
                                                const std::vector<double>& minority_ratios,
                                                std::uint64_t seed) {
    if (static_cast<int>(minority_ratios.size()) != S)
        throw std::invalid_argument("imbalance: need one minority ratio per client");
    for (double r : minority_ratios)
        if (!(r > 0.0 && r <= 1.0))
            throw std::invalid_argument("imbalance: minority ratios must lie in (0, 1]");
    for (Eigen::Index i = 0; i < train.y.size(); ++i)
        if (train.y[i] != -1.0 && train.y[i] != 1.0)
            throw std::invalid_argument("imbalance: labels must be in {-1,+1}");

    const std::vector<std::vector<int>> chunks = index_chunks(train.rows(), S, seed);
    Rng rng(seed + 1);  // subsampling draws, separate from the partition
    std::vector<ClientDataset> clients;
    clients.reserve(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
        const std::vector<int>& chunk = chunks[static_cast<std::size_t>(s)];
        std::vector<int> pos, neg;
        for (int i : chunk) (train.y[i] > 0.0 ? pos : neg).push_back(i);
        if (pos.empty() || neg.empty()) {
            std::ostringstream os;
            os << "imbalance: client " << s + 1 << " slice has a single class";
            throw std::invalid_argument(os.str());
        }
        // Ties keep +1 as the majority.
        std::vector<int>& minority = pos.size() >= neg.size() ? neg : pos;
        const std::vector<int>& majority = pos.size() >= neg.size() ? pos : neg;
        const int keep = static_cast<int>(std::floor(minority_ratios[static_cast<std::size_t>(s)] *
                                                     static_cast<double>(minority.size())));
        if (keep == 0) {
            std::ostringstream os;
            os << "imbalance: ratio leaves client " << s + 1 << " without its minority class";
            throw std::invalid_argument(os.str());
        }
        rng.shuffle(minority);
        minority.resize(static_cast<std::size_t>(keep));
        std::vector<int> kept(majority);
        kept.insert(kept.end(), minority.begin(), minority.end());
        std::sort(kept.begin(), kept.end());
        clients.push_back(rows_to_client(train, kept, s + 1));
    }
    return clients;
}

Table inject_noise(const Table& data, double mean, double sd, std::uint64_t seed) {
    if (sd < 0.0) throw std::invalid_argument("noise: standard deviation must be nonnegative");
    Rng rng(seed);
    Table out = data;
    for (Eigen::Index i = 0; i < out.X.rows(); ++i)
        for (Eigen::Index j = 0; j < out.X.cols(); ++j) out.X(i, j) += rng.gaussian(mean, sd);
    return out;
}

ClientDataset inject_noise(const ClientDataset& data, double mean, double sd,
                           std::uint64_t seed) {
    if (sd < 0.0) throw std::invalid_argument("noise: standard deviation must be nonnegative");
    Rng rng(seed);
    ClientDataset out = data;
    for (Sample& s : out.samples)
        for (Eigen::Index j = 0; j < s.x.size(); ++j) s.x[j] += rng.gaussian(mean, sd);
    return out;
}

std::vector<std::pair<double, double>> noise_levels(const NoiseSchedule& schedule) {
    if (schedule.sweep.size() == 0) throw std::invalid_argument("noise schedule: empty sweep");
    std::vector<std::pair<double, double>> levels;
    levels.reserve(static_cast<std::size_t>(schedule.sweep.size()));
    switch (schedule.mode) {
        case NoiseMode::fixed_sd_vary_mean:
            if (schedule.fixed < 0.0)
                throw std::invalid_argument("noise schedule: negative standard deviation");
            for (Eigen::Index i = 0; i < schedule.sweep.size(); ++i)
                levels.emplace_back(schedule.sweep[i], schedule.fixed);
            break;
        case NoiseMode::fixed_mean_vary_sd:
        case NoiseMode::ratio:
            if (schedule.sweep.minCoeff() < 0.0)
                throw std::invalid_argument("noise schedule: negative standard deviation");
            for (Eigen::Index i = 0; i < schedule.sweep.size(); ++i) {
                const double sd = schedule.sweep[i];
                const double mean =
                    schedule.mode == NoiseMode::ratio ? schedule.ratio * sd : schedule.fixed;
                levels.emplace_back(mean, sd);
            }
            break;
    }
    return levels;
}

}  // namespace drfl
