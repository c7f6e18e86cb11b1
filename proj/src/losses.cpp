#include "drfl/losses.hpp"

#include "drfl/constraint_system.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace drfl {

namespace {

double require_epsilon(const LossSpec& loss) {
    if (!loss.epsilon) {
        throw std::invalid_argument(std::string("loss_eval: ") + to_string(loss.family) +
                                    " requires epsilon");
    }
    return *loss.epsilon;
}

}  // namespace

double loss_eval(const LossSpec& loss, const Vec& w, const Sample& sample) {
    if (w.size() != sample.x.size()) {
        throw std::invalid_argument("loss_eval: dimension mismatch between w and sample");
    }
    const double score = w.dot(sample.x);
    switch (loss.family) {
        case LossFamily::huber: {
            const double eps = require_epsilon(loss);
            const double z = std::abs(score - sample.y);
            return z <= eps ? 0.5 * z * z : eps * z - 0.5 * eps * eps;
        }
        case LossFamily::svr: {
            const double eps = require_epsilon(loss);
            return std::max(0.0, std::abs(score - sample.y) - eps);
        }
        case LossFamily::quantile: {
            const double eps = require_epsilon(loss);
            return std::max(eps * (sample.y - score), (1.0 - eps) * (score - sample.y));
        }
        case LossFamily::hinge:
            return std::max(0.0, 1.0 - sample.y * score);
        case LossFamily::smooth_hinge: {
            // Piecewise-quadratic hinge: quadratic near the margin, linear
            // beyond it, flat zero once the margin is met.
            const double m = sample.y * score;
            if (m >= 1.0) return 0.0;
            if (m >= 0.0) return 0.5 * (1.0 - m) * (1.0 - m);
            return 0.5 - m;
        }
        case LossFamily::logistic:
            return log1p_exp(-sample.y * score);
    }
    throw std::logic_error("loss_eval: unknown loss family");
}

double empirical_loss(const LossSpec& loss, const Vec& w, const ClientDataset& client) {
    if (client.samples.empty()) {
        throw std::invalid_argument("empirical_loss: client has no samples");
    }
    double total = 0.0;
    for (const Sample& s : client.samples) total += loss_eval(loss, w, s);
    return total / static_cast<double>(client.samples.size());
}

}  // namespace drfl
