#include "drfl/transport.hpp"

#include "drfl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

namespace drfl {

namespace {

constexpr double kWeightSumTol = 1e-12;

// Sample size of the one-off empirical estimate used for volume comparisons.
constexpr int kFixedSampleCount = 1000;

void check_truth(const TruthModel& truth) {
    if (truth.clients.empty()) throw std::invalid_argument("truth model: no clients");
    for (const DiscreteDist& d : truth.clients) validate(d);
    if (truth.q.size() != static_cast<Eigen::Index>(truth.clients.size()))
        throw std::invalid_argument("truth model: weight count does not match client count");
    if (truth.q.minCoeff() < 0.0)
        throw std::invalid_argument("truth model: negative client weight");
    if (std::abs(truth.q.sum() - 1.0) > kWeightSumTol)
        throw std::invalid_argument("truth model: client weights must sum to one");
}

// Draws one index from the categorical distribution given by `weights`.
int draw_index(Rng& rng, const Vec& weights) {
    const double r = rng.uniform();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size() - 1);
}

struct TrialDraw {
    Vec q_hat;                 // per-client sample fractions
    std::vector<Vec> p_hat;    // per-client atom fractions on the true atoms
};

// One sampling round: n points, each assigned to a client by q and to one of
// that client's atoms by its weights. Fails (returns false) when some client
// receives no points, since its weight estimate is then undefined.
bool draw_trial(Rng& rng, const TruthModel& truth, int n, TrialDraw& out) {
    const int S = static_cast<int>(truth.clients.size());
    std::vector<int> client_count(static_cast<std::size_t>(S), 0);
    std::vector<std::vector<int>> atom_count(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s)
        atom_count[static_cast<std::size_t>(s)]
            .assign(static_cast<std::size_t>(truth.clients[static_cast<std::size_t>(s)].atoms.size()), 0);
    for (int k = 0; k < n; ++k) {
        const int s = draw_index(rng, truth.q);
        const int i = draw_index(rng, truth.clients[static_cast<std::size_t>(s)].weights);
        ++client_count[static_cast<std::size_t>(s)];
        ++atom_count[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)];
    }
    for (int s = 0; s < S; ++s)
        if (client_count[static_cast<std::size_t>(s)] == 0) return false;
    out.q_hat.resize(S);
    out.p_hat.assign(static_cast<std::size_t>(S), Vec());
    for (int s = 0; s < S; ++s) {
        out.q_hat[s] = static_cast<double>(client_count[static_cast<std::size_t>(s)]) / n;
        const auto& counts = atom_count[static_cast<std::size_t>(s)];
        Vec p(static_cast<Eigen::Index>(counts.size()));
        for (std::size_t i = 0; i < counts.size(); ++i)
            p[static_cast<Eigen::Index>(i)] =
                static_cast<double>(counts[i]) / client_count[static_cast<std::size_t>(s)];
        out.p_hat[static_cast<std::size_t>(s)] = std::move(p);
    }
    return true;
}

// Retries empty-client draws, counting them, with a hard cap so a model that
// can never cover every client fails loudly instead of spinning.
TrialDraw draw_trial_resampled(Rng& rng, const TruthModel& truth, int n, int& resampled) {
    TrialDraw d;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        if (draw_trial(rng, truth, n, d)) return d;
        ++resampled;
    }
    throw std::runtime_error("containment trial: a client drew no samples in 1000 redraws");
}

std::vector<DiscreteDist> estimates_on_true_atoms(const TruthModel& truth, const TrialDraw& d) {
    std::vector<DiscreteDist> est(truth.clients.size());
    for (std::size_t s = 0; s < truth.clients.size(); ++s)
        est[s] = DiscreteDist{truth.clients[s].atoms, d.p_hat[s]};
    return est;
}

}  // namespace

void validate(const DiscreteDist& d) {
    if (d.atoms.size() == 0) throw std::invalid_argument("distribution: no atoms");
    if (d.weights.size() != d.atoms.size())
        throw std::invalid_argument("distribution: weight count does not match atom count");
    for (Eigen::Index i = 0; i < d.atoms.size(); ++i)
        if (!std::isfinite(d.atoms[i]) || !std::isfinite(d.weights[i]))
            throw std::invalid_argument("distribution: non-finite entry");
    for (Eigen::Index i = 1; i < d.atoms.size(); ++i)
        if (!(d.atoms[i] > d.atoms[i - 1]))
            throw std::invalid_argument("distribution: atoms must be strictly increasing");
    if (d.weights.minCoeff() < 0.0)
        throw std::invalid_argument("distribution: negative weight");
    if (std::abs(d.weights.sum() - 1.0) > kWeightSumTol)
        throw std::invalid_argument("distribution: weights must sum to one");
}

DiscreteDist mix(const std::vector<DiscreteDist>& parts, const Vec& q) {
    if (parts.empty()) throw std::invalid_argument("mix: no distributions");
    if (q.size() != static_cast<Eigen::Index>(parts.size()))
        throw std::invalid_argument("mix: weight count does not match distribution count");
    std::vector<std::pair<double, double>> mass;  // (atom, accumulated weight)
    for (std::size_t s = 0; s < parts.size(); ++s)
        for (Eigen::Index i = 0; i < parts[s].atoms.size(); ++i)
            mass.emplace_back(parts[s].atoms[i], q[static_cast<Eigen::Index>(s)] * parts[s].weights[i]);
    std::sort(mass.begin(), mass.end());
    DiscreteDist out;
    std::vector<double> atoms, weights;
    for (const auto& [x, w] : mass) {
        if (!atoms.empty() && atoms.back() == x) {
            weights.back() += w;
        } else {
            atoms.push_back(x);
            weights.push_back(w);
        }
    }
    out.atoms = Eigen::Map<const Vec>(atoms.data(), static_cast<Eigen::Index>(atoms.size()));
    out.weights = Eigen::Map<const Vec>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    return out;
}

double wasserstein_1d(const DiscreteDist& a, const DiscreteDist& b) {
    validate(a);
    validate(b);
    // Area between the two distribution functions, accumulated over the merged
    // support: both functions are constant between consecutive atoms.
    double dist = 0.0;
    double fa = 0.0, fb = 0.0;  // running distribution functions
    Eigen::Index ia = 0, ib = 0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    while (ia < a.atoms.size() || ib < b.atoms.size()) {
        double x;
        if (ib >= b.atoms.size() || (ia < a.atoms.size() && a.atoms[ia] <= b.atoms[ib]))
            x = a.atoms[ia];
        else
            x = b.atoms[ib];
        if (!std::isnan(prev)) dist += std::abs(fa - fb) * (x - prev);
        while (ia < a.atoms.size() && a.atoms[ia] == x) fa += a.weights[ia++];
        while (ib < b.atoms.size() && b.atoms[ib] == x) fb += b.weights[ib++];
        prev = x;
    }
    return dist;
}

TruthModel default_truth_model() {
    // The clients sit well apart on the line: the aggregate estimate then
    // carries a visible client-share error on top of the per-client sampling
    // noise, which is what the containment comparison is meant to expose.
    // With overlapping supports that share error is masked by mixing and the
    // pooled estimate would concentrate faster than the per-client ones.
    TruthModel t;
    t.clients.resize(2);
    t.clients[0].atoms = Vec{{0.0, 1.0, 2.0}};
    t.clients[0].weights = Vec{{0.6, 0.3, 0.1}};
    t.clients[1].atoms = Vec{{4.0, 5.0, 6.0}};
    t.clients[1].weights = Vec{{0.2, 0.5, 0.3}};
    t.q = Vec{{0.4, 0.6}};
    return t;
}

Vec default_rho_grid() {
    const int n = 200;
    const double lo = std::log10(1e-5), hi = std::log10(0.5);
    Vec grid(n);
    for (int k = 0; k < n; ++k)
        grid[k] = std::pow(10.0, lo + (hi - lo) * k / (n - 1));
    return grid;
}

ContainmentCurve containment_curve(const TruthModel& truth, int n_samples, int n_trials,
                                   const Vec& rho_grid, unsigned seed) {
    check_truth(truth);
    if (n_samples < 1) throw std::invalid_argument("containment: sample count must be positive");
    if (n_trials < 1) throw std::invalid_argument("containment: trial count must be positive");
    if (rho_grid.size() == 0) throw std::invalid_argument("containment: empty radius grid");
    if (rho_grid.minCoeff() < 0.0) throw std::invalid_argument("containment: negative radius");

    const DiscreteDist truth_mix = mix(truth.clients, truth.q);
    Rng rng(seed);
    ContainmentCurve out;
    out.rho_grid = rho_grid;
    out.p_per_client = Vec::Zero(rho_grid.size());
    out.p_aggregate = Vec::Zero(rho_grid.size());

    // Each trial is summarized by the smallest radius that contains it; the
    // whole curve is then read off the same draws, which keeps the reported
    // frequencies nondecreasing in the radius by construction.
    for (int t = 0; t < n_trials; ++t) {
        const TrialDraw d = draw_trial_resampled(rng, truth, n_samples, out.resampled);
        const std::vector<DiscreteDist> est = estimates_on_true_atoms(truth, d);
        double d_per_client = 0.0;
        for (std::size_t s = 0; s < est.size(); ++s)
            d_per_client = std::max(d_per_client, wasserstein_1d(truth.clients[s], est[s]));
        const double d_aggregate = wasserstein_1d(truth_mix, mix(est, d.q_hat));
        for (Eigen::Index k = 0; k < rho_grid.size(); ++k) {
            if (d_per_client <= rho_grid[k]) out.p_per_client[k] += 1.0;
            if (d_aggregate <= rho_grid[k]) out.p_aggregate[k] += 1.0;
        }
    }
    out.p_per_client /= n_trials;
    out.p_aggregate /= n_trials;
    return out;
}

double smallest_rho(const Vec& rho_grid, const Vec& probability, double level) {
    if (probability.size() != rho_grid.size())
        throw std::invalid_argument("smallest_rho: grid and probability sizes differ");
    double best = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index k = 0; k < rho_grid.size(); ++k)
        if (probability[k] >= level && !(rho_grid[k] >= best))  // NaN compares false
            best = rho_grid[k];
    return best;
}

VolumeCurve volume_ratio(const TruthModel& truth, const ContainmentCurve& curve,
                         const Vec& levels, int n_random, unsigned seed) {
    check_truth(truth);
    if (n_random < 1) throw std::invalid_argument("volume: candidate count must be positive");
    if (levels.size() == 0) throw std::invalid_argument("volume: no guarantee levels");
    for (Eigen::Index i = 0; i < levels.size(); ++i)
        if (!(levels[i] > 0.0 && levels[i] <= 1.0))
            throw std::invalid_argument("volume: levels must lie in (0, 1]");

    const int S = static_cast<int>(truth.clients.size());
    Rng rng(seed);

    // Fixed empirical reference, drawn once.
    int discarded = 0;
    const TrialDraw fixed = draw_trial_resampled(rng, truth, kFixedSampleCount, discarded);
    const std::vector<DiscreteDist> ref = estimates_on_true_atoms(truth, fixed);
    const DiscreteDist ref_mix = mix(ref, fixed.q_hat);

    // Candidate models keep the true atoms; their client and atom weights are
    // independent uniforms scaled to sum to one.
    std::vector<double> d_per_client(static_cast<std::size_t>(n_random));
    std::vector<double> d_aggregate(static_cast<std::size_t>(n_random));
    std::vector<DiscreteDist> cand(static_cast<std::size_t>(S));
    for (int r = 0; r < n_random; ++r) {
        Vec qc(S);
        for (int s = 0; s < S; ++s) qc[s] = rng.uniform();
        while (qc.sum() == 0.0)
            for (int s = 0; s < S; ++s) qc[s] = rng.uniform();
        qc /= qc.sum();
        double dmax = 0.0;
        for (int s = 0; s < S; ++s) {
            const DiscreteDist& base = truth.clients[static_cast<std::size_t>(s)];
            Vec pc(base.atoms.size());
            for (Eigen::Index i = 0; i < pc.size(); ++i) pc[i] = rng.uniform();
            while (pc.sum() == 0.0)
                for (Eigen::Index i = 0; i < pc.size(); ++i) pc[i] = rng.uniform();
            pc /= pc.sum();
            cand[static_cast<std::size_t>(s)] = DiscreteDist{base.atoms, pc};
            dmax = std::max(dmax,
                            wasserstein_1d(cand[static_cast<std::size_t>(s)],
                                           ref[static_cast<std::size_t>(s)]));
        }
        d_per_client[static_cast<std::size_t>(r)] = dmax;
        d_aggregate[static_cast<std::size_t>(r)] = wasserstein_1d(mix(cand, qc), ref_mix);
    }

    VolumeCurve out;
    out.levels = levels;
    out.rho_per_client = Vec::Constant(levels.size(), std::numeric_limits<double>::quiet_NaN());
    out.rho_aggregate = out.rho_per_client;
    out.vol_per_client = out.rho_per_client;
    out.vol_aggregate = out.rho_per_client;
    for (Eigen::Index l = 0; l < levels.size(); ++l) {
        const double rp = smallest_rho(curve.rho_grid, curve.p_per_client, levels[l]);
        const double ra = smallest_rho(curve.rho_grid, curve.p_aggregate, levels[l]);
        out.rho_per_client[l] = rp;
        out.rho_aggregate[l] = ra;
        if (!std::isnan(rp)) {
            int n = 0;
            for (double d : d_per_client) n += d <= rp;
            out.vol_per_client[l] = static_cast<double>(n) / n_random;
        }
        if (!std::isnan(ra)) {
            int n = 0;
            for (double d : d_aggregate) n += d <= ra;
            out.vol_aggregate[l] = static_cast<double>(n) / n_random;
        }
    }
    return out;
}

namespace {

void write_csv(const std::string& path, const char* header, const Vec& a, const Vec& b,
               const Vec& c) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << header << '\n';
    char line[128];
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g", a[i], b[i], c[i]);
        f << line << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_containment_csv(const ContainmentCurve& curve, const std::string& path) {
    write_csv(path, "rho,p_drfl,p_wafl", curve.rho_grid, curve.p_per_client, curve.p_aggregate);
}

void write_volume_csv(const VolumeCurve& curve, const std::string& path) {
    write_csv(path, "level,vol_drfl,vol_wafl", curve.levels, curve.vol_per_client,
              curve.vol_aggregate);
}

}  // namespace drfl
