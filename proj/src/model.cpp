#include "drfl/model.hpp"

#include "drfl/inner_solver.hpp"

#include <cmath>
#include <sstream>

namespace drfl {

const char* to_string(LossFamily f) {
    switch (f) {
        case LossFamily::huber: return "huber";
        case LossFamily::svr: return "svr";
        case LossFamily::quantile: return "quantile";
        case LossFamily::hinge: return "hinge";
        case LossFamily::smooth_hinge: return "smooth_hinge";
        case LossFamily::logistic: return "logistic";
    }
    return "?";
}

const char* to_string(SupportKind k) {
    switch (k) {
        case SupportKind::unbounded: return "unbounded";
        case SupportKind::box_symmetric: return "box_symmetric";
        case SupportKind::box_unit: return "box_unit";
        case SupportKind::polyhedral: return "polyhedral";
    }
    return "?";
}

const char* to_string(NormKind k) {
    switch (k) {
        case NormKind::l1: return "l1";
        case NormKind::l2: return "l2";
        case NormKind::linf: return "linf";
    }
    return "?";
}

const char* to_string(Task t) { return t == Task::regression ? "regression" : "classification"; }

const char* to_string(QHatMode m) {
    switch (m) {
        case QHatMode::uniform: return "uniform";
        case QHatMode::proportional: return "proportional";
        case QHatMode::explicit_vector: return "explicit";
    }
    return "?";
}

LossFamily loss_family_from_string(const std::string& s) {
    if (s == "huber") return LossFamily::huber;
    if (s == "svr") return LossFamily::svr;
    if (s == "quantile") return LossFamily::quantile;
    if (s == "hinge") return LossFamily::hinge;
    if (s == "smooth_hinge") return LossFamily::smooth_hinge;
    if (s == "logistic") return LossFamily::logistic;
    throw std::invalid_argument("unknown loss family: " + s);
}

SupportKind support_kind_from_string(const std::string& s) {
    if (s == "unbounded") return SupportKind::unbounded;
    if (s == "box_symmetric") return SupportKind::box_symmetric;
    if (s == "box_unit") return SupportKind::box_unit;
    if (s == "polyhedral") return SupportKind::polyhedral;
    throw std::invalid_argument("unknown support kind: " + s);
}

NormKind norm_kind_from_string(const std::string& s) {
    if (s == "l1" || s == "1") return NormKind::l1;
    if (s == "l2" || s == "2") return NormKind::l2;
    if (s == "linf" || s == "inf") return NormKind::linf;
    throw std::invalid_argument("unknown norm: " + s);
}

QHatMode q_hat_mode_from_string(const std::string& s) {
    if (s == "uniform") return QHatMode::uniform;
    if (s == "proportional") return QHatMode::proportional;
    if (s == "explicit") return QHatMode::explicit_vector;
    throw std::invalid_argument("unknown q_hat mode: " + s);
}

bool has_strict_interior(const SupportSpec& support, Task task, std::string* detail) {
    if (support.kind != SupportKind::polyhedral) return true;
    const int m = static_cast<int>(support.C.rows());
    if (m == 0) return true;
    const int n = static_cast<int>(support.C.cols());
    const bool joint = task == Task::regression;

    // Maximize the slack s subject to Cx (+ c2 y) + s e <= d, s <= 1.
    ConstraintSystem cs;
    const int xoff = cs.add_var("x", n, -1e6, 1e6);
    int yoff = -1;
    if (joint) yoff = cs.add_var("y", 1, -1e6, 1e6);
    const int soff = cs.add_var("s", 1, -kInf, 1.0);
    for (int i = 0; i < m; ++i) {
        LinExpr a;
        for (int j = 0; j < n; ++j)
            if (support.C(i, j) != 0.0) a.push_back({xoff + j, support.C(i, j)});
        if (joint && support.c2.size() == m && support.c2[i] != 0.0) a.push_back({yoff, support.c2[i]});
        a.push_back({soff, 1.0});
        cs.add_le(std::move(a), support.d[i]);
    }
    ConvexProgram prog;
    prog.cs = std::move(cs);
    prog.q = Vec::Zero(prog.cs.num_vars());
    prog.q[soff] = -1.0;  // maximize s
    SolveResult r = solve_qp(prog, 1e-8);
    const double slack = r.x.size() ? r.x[soff] : -kInf;
    if (detail) {
        std::ostringstream os;
        os << "max slack " << slack;
        *detail = os.str();
    }
    return r.status != SolveStatus::infeasible && slack > 1e-7;
}

namespace {

void check_epsilon(const LossSpec& loss, std::vector<std::string>& errs) {
    switch (loss.family) {
        case LossFamily::huber:
            if (!loss.epsilon || *loss.epsilon <= 0.0) errs.push_back("huber requires epsilon > 0");
            break;
        case LossFamily::svr:
            if (!loss.epsilon || *loss.epsilon < 0.0) errs.push_back("svr requires epsilon >= 0");
            break;
        case LossFamily::quantile:
            if (!loss.epsilon || *loss.epsilon < 0.0 || *loss.epsilon > 1.0)
                errs.push_back("quantile requires epsilon in [0,1]");
            break;
        case LossFamily::hinge:
        case LossFamily::smooth_hinge:
        case LossFamily::logistic:
            if (loss.epsilon) errs.push_back(std::string("epsilon not applicable to ") + to_string(loss.family));
            break;
    }
}

}  // namespace

std::vector<std::string> validate(const ProblemSpec& spec) {
    std::vector<std::string> errs;
    check_epsilon(spec.loss, errs);

    const Task task = spec.task();
    if (spec.support.kind == SupportKind::polyhedral) {
        const auto m = spec.support.C.rows();
        if (spec.support.d.size() != m)
            errs.push_back("polyhedral support: d length must match C row count");
        if (task == Task::regression) {
            if (spec.support.c2.size() != 0 && spec.support.c2.size() != m)
                errs.push_back("polyhedral support: c2 length must match C row count");
        } else if (spec.support.c2.size() != 0) {
            errs.push_back("polyhedral support: c2 only applies to regression");
        }
        if (errs.empty() && !has_strict_interior(spec.support, task)) errs.push_back("no Slater point");
    } else {
        if (spec.support.C.size() != 0 || spec.support.d.size() != 0 || spec.support.c2.size() != 0)
            errs.push_back(std::string(to_string(spec.support.kind)) + " support must not carry C/c2/d");
        if (task == Task::regression && spec.support.kind != SupportKind::unbounded)
            errs.push_back("box supports apply to classification features only");
    }

    if (spec.robustness.rho.size() == 0) errs.push_back("rho must list one radius per client");
    for (int s = 0; s < spec.robustness.rho.size(); ++s)
        if (!(spec.robustness.rho[s] >= 0.0))
            errs.push_back("rho[" + std::to_string(s + 1) + "] must be nonnegative");
    if (!(spec.robustness.kappa > 0.0)) errs.push_back("kappa must be positive");

    if (!(spec.weights.theta > 0.0)) errs.push_back("theta must be positive");
    if (spec.weights.q_hat_mode == QHatMode::explicit_vector) {
        const Vec& qh = spec.weights.q_hat;
        if (qh.size() == 0) {
            errs.push_back("explicit q_hat mode requires a vector");
        } else {
            if (qh.minCoeff() < 0.0) errs.push_back("q_hat must be nonnegative");
            if (std::abs(qh.sum() - 1.0) > 1e-9) errs.push_back("q_hat must sum to 1");
            if (spec.robustness.rho.size() != 0 && qh.size() != spec.robustness.rho.size())
                errs.push_back("q_hat length must match rho length");
        }
    }
    return errs;
}

std::vector<std::string> validate(const ProblemSpec& spec, const std::vector<ClientDataset>& clients) {
    std::vector<std::string> errs = validate(spec);
    const int S = static_cast<int>(clients.size());
    if (S == 0) {
        errs.push_back("no clients");
        return errs;
    }
    if (spec.robustness.rho.size() != S)
        errs.push_back("rho length " + std::to_string(spec.robustness.rho.size()) +
                       " does not match client count " + std::to_string(S));

    int n = -1;
    for (const ClientDataset& c : clients) {
        if (c.samples.empty()) {
            errs.push_back("client " + std::to_string(c.client_id) + " is empty");
            continue;
        }
        for (const Sample& smp : c.samples) {
            if (n < 0) n = static_cast<int>(smp.x.size());
            if (smp.x.size() != n) {
                errs.push_back("dimension mismatch in client " + std::to_string(c.client_id));
                break;
            }
        }
        if (spec.task() == Task::classification) {
            for (const Sample& smp : c.samples)
                if (smp.y != 1.0 && smp.y != -1.0) {
                    errs.push_back("client " + std::to_string(c.client_id) +
                                   ": classification labels must be -1 or +1");
                    break;
                }
        }
    }
    if (spec.support.kind == SupportKind::polyhedral && n >= 0 && spec.support.C.cols() != n)
        errs.push_back("support C column count does not match feature dimension");
    return errs;
}

std::vector<std::string> validate(const SolverConfig& cfg, const std::vector<ClientDataset>& clients) {
    std::vector<std::string> errs;
    if (!(cfg.stepsize > 0.0)) errs.push_back("stepsize must be positive");
    if (!(cfg.tol_primal > 0.0) || !(cfg.tol_dual > 0.0)) errs.push_back("tolerances must be positive");
    if (cfg.max_iters <= 0) errs.push_back("max_iters must be positive");
    if (cfg.minibatch_size) {
        if (*cfg.minibatch_size <= 0) errs.push_back("minibatch_size must be positive");
        for (const ClientDataset& c : clients)
            if (*cfg.minibatch_size > c.size())
                errs.push_back("minibatch_size exceeds client " + std::to_string(c.client_id) +
                               " sample count");
    }
    return errs;
}

Vec resolve_q_hat(const WeightSetSpec& weights, const std::vector<int>& client_sizes) {
    const int S = static_cast<int>(client_sizes.size());
    if (S == 0) throw std::invalid_argument("resolve_q_hat: no clients");
    switch (weights.q_hat_mode) {
        case QHatMode::uniform: return Vec::Constant(S, 1.0 / S);
        case QHatMode::proportional: {
            double total = 0.0;
            for (int nsz : client_sizes) total += nsz;
            Vec q(S);
            for (int s = 0; s < S; ++s) q[s] = client_sizes[s] / total;
            return q;
        }
        case QHatMode::explicit_vector:
            if (weights.q_hat.size() != S)
                throw std::invalid_argument("resolve_q_hat: q_hat length mismatch");
            return weights.q_hat;
    }
    throw std::logic_error("resolve_q_hat: unreachable");
}

}  // namespace drfl
