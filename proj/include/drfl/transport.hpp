#pragma once

#include "drfl/types.hpp"

#include <string>
#include <vector>

namespace drfl {

// Discrete distribution on the real line.
struct DiscreteDist {
    Vec atoms;    // strictly increasing
    Vec weights;  // nonnegative, sums to one (tolerance 1e-12)
};

// Throws std::invalid_argument when a field invariant is broken.
void validate(const DiscreteDist& d);

// Mixture sum_s q[s] * parts[s] on the union of the supports.
DiscreteDist mix(const std::vector<DiscreteDist>& parts, const Vec& q);

// First Wasserstein distance between two distributions on the line, computed
// as the area between the two distribution functions (the quantile coupling).
double wasserstein_1d(const DiscreteDist& a, const DiscreteDist& b);

// Ground-truth sampling model: per-client distributions and client weights.
struct TruthModel {
    std::vector<DiscreteDist> clients;
    Vec q;  // true client weights, in the simplex
};

// Fixed documented example: client 1 on {0,1,2} with weights (0.6,0.3,0.1),
// client 2 on {4,5,6} with weights (0.2,0.5,0.3), q = (0.4,0.6). The two
// supports are deliberately disjoint so that estimating the client shares is
// the dominant error of the aggregate mixture.
TruthModel default_truth_model();

// 200 log-spaced radii over [1e-5, 0.5].
Vec default_rho_grid();

// Frequency, over sampling trials, that the per-client empirical estimates
// sit within radius rho of the truth. Each trial draws n_samples points
// (client by q, then a value by that client's weights), estimates q_hat and
// per-client weights on the known atoms, and records two distances: the
// largest per-client distance (every client must be inside its own ball) and
// the distance between the two mixtures (a single aggregate ball). The curve
// reports, for every grid radius, the fraction of trials whose distance fits.
struct ContainmentCurve {
    Vec rho_grid;
    Vec p_per_client;  // all of W(client_s truth, client_s estimate) <= rho
    Vec p_aggregate;   // W(truth mixture, estimated mixture) <= rho
    int resampled = 0;  // trials redrawn because some client drew no samples
};
ContainmentCurve containment_curve(const TruthModel& truth, int n_samples, int n_trials,
                                   const Vec& rho_grid, unsigned seed);

// Smallest grid radius whose containment frequency reaches `level`; quiet NaN
// when the curve never reaches it.
double smallest_rho(const Vec& rho_grid, const Vec& probability, double level);

// Normalized volume comparison at matched guarantee levels. For each level
// the smallest adequate radius is read off `curve` separately for the
// per-client and the aggregate ball; n_random candidate models (client
// weights and atom weights drawn uniform and normalized, atoms kept) are then
// tested against a fixed empirical estimate drawn once from `truth`, and the
// accepted fraction is the volume. Levels the curve never reaches get NaN.
struct VolumeCurve {
    Vec levels;
    Vec rho_per_client;
    Vec rho_aggregate;
    Vec vol_per_client;
    Vec vol_aggregate;
};
VolumeCurve volume_ratio(const TruthModel& truth, const ContainmentCurve& curve,
                         const Vec& levels, int n_random, unsigned seed);

// CSV emitters: header line plus one row per grid point / level.
void write_containment_csv(const ContainmentCurve& curve, const std::string& path);
void write_volume_csv(const VolumeCurve& curve, const std::string& path);

}  // namespace drfl
