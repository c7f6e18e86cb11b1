#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drfl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class LossFamily { huber, svr, quantile, hinge, smooth_hinge, logistic };
enum class SupportKind { unbounded, box_symmetric, box_unit, polyhedral };
enum class NormKind { l1, l2, linf };
enum class Task { regression, classification };

const char* to_string(LossFamily f);
const char* to_string(SupportKind k);
const char* to_string(NormKind p);

// Linear models only: predictions are <w, x>, so the task is fixed by the
// loss family (residual losses vs margin losses).
inline Task task_of(LossFamily f) {
    switch (f) {
        case LossFamily::huber:
        case LossFamily::svr:
        case LossFamily::quantile:
            return Task::regression;
        default:
            return Task::classification;
    }
}

struct Sample {
    Vec x;
    double y = 0.0;
};

struct ClientDataset {
    int client_id = 0;  // 1-based
    std::vector<Sample> samples;

    int size() const { return static_cast<int>(samples.size()); }
    int dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].x.size()); }
};

struct LossSpec {
    LossFamily family = LossFamily::hinge;
    // Huber threshold, SVR tolerance, or quantile level. Must be absent for
    // hinge / smooth_hinge / logistic.
    std::optional<double> epsilon;
};

struct SupportSpec {
    SupportKind kind = SupportKind::unbounded;
    // Polyhedral data. Classification: C x <= d on features. Regression:
    // C x + c2 y <= d jointly on (features, label); c2 empty means c2 = 0.
    Mat C;
    Vec c2;
    Vec d;
};

struct RobustnessSpec {
    Vec rho;                             // per-client radii, length S
    double kappa = 1.0;                  // label transport cost, > 0
    NormKind metric_norm = NormKind::l1; // feature part of the transport metric
};

enum class QHatMode { uniform, proportional, explicit_vector };

struct WeightSetSpec {
    QHatMode q_hat_mode = QHatMode::uniform;
    Vec q_hat;                 // used when q_hat_mode == explicit_vector
    double theta = 0.1;        // > 0 (a degenerate theta = 0 run is allowed by the solver)
    NormKind p = NormKind::l1;
};

struct ProblemSpec {
    LossSpec loss;
    SupportSpec support;
    RobustnessSpec robustness;
    WeightSetSpec weights;

    Task task() const { return task_of(loss.family); }
};

struct SolverConfig {
    double stepsize = 1.0;   // ADMM stepsize c; the proximal constants are 2Sc
    int max_iters = 10000;
    double tol_primal = 1e-5;
    double tol_dual = 1e-5;
    std::optional<int> minibatch_size;  // per-client; unset = full batch
    std::uint64_t seed = 1;
    int threads = 1;
    bool keep_message_log = false;
    std::string trace_path;  // per-iteration CSV trace when nonempty
};

// Server-side iterate blocks.
struct SolverState {
    Vec w;      // length n
    Vec t;      // length S
    Vec z;      // length S
    Vec eta;    // length S, nonnegative
    double gamma = 0.0;
    Vec sigma;  // dual for t = z + gamma e + eta, length S
    int iteration = 0;
};

// Per-client iterate. `x` is the client subproblem primal in its variable
// layout order (lambda, alpha, w_hat, auxiliaries); `y` is the inner solver
// dual kept for warm starts and never leaves the client.
struct ClientState {
    Vec x;
    Vec y;
    Vec psi;        // dual for w = w_hat, length n
    double zeta = 0.0;  // dual for pi_s = z_s
    double pi = 0.0;    // last reported rho_s lambda_s + e'alpha_s / N_s
    Vec w_hat;          // last reported local model copy
};

}  // namespace drfl
