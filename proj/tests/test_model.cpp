#include <doctest.h>

#include "drfl/config.hpp"
#include "drfl/model.hpp"

#include <algorithm>

using namespace drfl;

namespace {

bool mentions(const std::vector<std::string>& errs, const std::string& needle) {
    return std::any_of(errs.begin(), errs.end(),
                       [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

ProblemSpec minimal_hinge_spec(int S = 2) {
    ProblemSpec spec;
    spec.loss.family = LossFamily::hinge;
    spec.support.kind = SupportKind::box_symmetric;
    spec.robustness.rho = Vec::Constant(S, 0.1);
    spec.robustness.kappa = 0.5;
    spec.weights.q_hat_mode = QHatMode::uniform;
    spec.weights.theta = 0.1;
    spec.weights.p = NormKind::l1;
    return spec;
}

ClientDataset tiny_client(int id, double label) {
    ClientDataset c;
    c.client_id = id;
    Sample s;
    s.x = Vec::Constant(2, 0.5);
    s.y = label;
    c.samples.push_back(s);
    return c;
}

}  // namespace

TEST_CASE("epsilon applicability is enforced per family") {
    ProblemSpec spec = minimal_hinge_spec();
    CHECK(validate(spec).empty());

    spec.loss.epsilon = 0.5;
    CHECK(mentions(validate(spec), "epsilon not applicable"));

    spec.loss.family = LossFamily::huber;
    spec.support.kind = SupportKind::unbounded;
    spec.loss.epsilon = 0.0;
    CHECK(mentions(validate(spec), "huber requires epsilon > 0"));
    spec.loss.epsilon = 1.35;
    CHECK(validate(spec).empty());

    spec.loss.family = LossFamily::quantile;
    spec.loss.epsilon = 1.5;
    CHECK(mentions(validate(spec), "quantile"));
    spec.loss.epsilon = 0.25;
    CHECK(validate(spec).empty());
}

TEST_CASE("uniform mixture weights with small radius validate cleanly") {
    ProblemSpec spec = minimal_hinge_spec();
    spec.weights.q_hat_mode = QHatMode::explicit_vector;
    spec.weights.q_hat = Vec::Constant(2, 0.5);
    spec.weights.theta = 0.1;
    spec.weights.p = NormKind::l1;
    CHECK(validate(spec).empty());

    spec.weights.q_hat[0] = 0.7;  // no longer sums to one
    CHECK(mentions(validate(spec), "sum to 1"));
    spec.weights.q_hat[0] = 0.5;
    spec.weights.theta = 0.0;
    CHECK(mentions(validate(spec), "theta"));
}

TEST_CASE("negative radii and nonpositive kappa are rejected") {
    ProblemSpec spec = minimal_hinge_spec();
    spec.robustness.rho[1] = -0.01;
    CHECK(mentions(validate(spec), "rho[2]"));
    spec.robustness.rho[1] = 0.0;
    spec.robustness.kappa = 0.0;
    CHECK(mentions(validate(spec), "kappa"));
}

TEST_CASE("polyhedral support without interior reports no Slater point") {
    ProblemSpec spec = minimal_hinge_spec();
    spec.support.kind = SupportKind::polyhedral;
    spec.support.C = Mat(2, 1);
    spec.support.C << 1.0, -1.0;
    spec.support.d = Vec(2);
    spec.support.d << -1.0, -1.0;  // x <= -1 and x >= 1
    CHECK(mentions(validate(spec), "no Slater point"));

    spec.support.d << 1.0, 1.0;  // ordinary interval [-1, 1]
    CHECK(validate(spec).empty());
}

TEST_CASE("joint regression support passes the interior check") {
    SupportSpec sup;
    sup.kind = SupportKind::polyhedral;
    sup.C = Mat(2, 2);
    sup.C << 1.0, 0.0, 0.0, 1.0;
    sup.c2 = Vec(2);
    sup.c2 << 0.5, -0.5;
    sup.d = Vec(2);
    sup.d << 1.0, 1.0;
    CHECK(has_strict_interior(sup, Task::regression));
}

TEST_CASE("data-level validation catches labels, emptiness, and shape mismatches") {
    ProblemSpec spec = minimal_hinge_spec();
    std::vector<ClientDataset> clients = {tiny_client(1, 1.0), tiny_client(2, -1.0)};
    CHECK(validate(spec, clients).empty());

    clients[1].samples[0].y = 0.0;
    CHECK(mentions(validate(spec, clients), "labels must be -1 or +1"));
    clients[1].samples[0].y = -1.0;

    clients[0].samples.clear();
    CHECK(mentions(validate(spec, clients), "client 1 is empty"));
    clients[0] = tiny_client(1, 1.0);

    clients[0].samples[0].x = Vec::Zero(3);
    CHECK(mentions(validate(spec, clients), "dimension mismatch"));
    clients[0] = tiny_client(1, 1.0);

    spec.robustness.rho = Vec::Constant(3, 0.1);
    CHECK(mentions(validate(spec, clients), "does not match client count"));
}

TEST_CASE("validation is idempotent and side-effect free") {
    ProblemSpec spec = minimal_hinge_spec();
    spec.loss.epsilon = 0.5;
    const auto first = validate(spec);
    const auto second = validate(spec);
    CHECK(first == second);
}

TEST_CASE("mixture center resolution covers all three modes") {
    WeightSetSpec w;
    w.q_hat_mode = QHatMode::uniform;
    Vec q = resolve_q_hat(w, {10, 30});
    CHECK(q[0] == doctest::Approx(0.5));

    w.q_hat_mode = QHatMode::proportional;
    q = resolve_q_hat(w, {10, 30});
    CHECK(q[0] == doctest::Approx(0.25));
    CHECK(q[1] == doctest::Approx(0.75));

    w.q_hat_mode = QHatMode::explicit_vector;
    w.q_hat = Vec(2);
    w.q_hat << 0.9, 0.1;
    q = resolve_q_hat(w, {10, 30});
    CHECK(q[0] == doctest::Approx(0.9));
    CHECK_THROWS_AS(resolve_q_hat(w, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("config serializer round-trips every section") {
    const std::string text = R"json({
      "problem": {
        "loss": "huber", "epsilon": 1.35,
        "support": {"kind": "unbounded"},
        "robustness": {"rho": [0.1, 0.2, 0.3], "kappa": 0.7, "metric_norm": "l1"},
        "weights": {"q_hat": "explicit", "q_hat_values": [0.2, 0.3, 0.5], "theta": 0.05, "p": "l2"}
      },
      "solver": {"stepsize": 2.0, "max_iters": 500, "tol_primal": 1e-6, "tol_dual": 1e-6,
                 "minibatch_size": 4, "seed": 77, "threads": 2},
      "data": {"path": "d.csv", "format": "csv", "label_column": 0, "scale": "box_symmetric",
               "train_frac": 0.6, "clients": 3, "partition": "imbalanced",
               "minority_ratios": [0.5, 0.5, 1.0], "seed": 9,
               "train_noise_mean": 0.0, "train_noise_sd": 0.5, "train_noise_client": 1},
      "experiment": {"grid": {"rho": [0.1], "kappa": [0.5], "theta": [0.01]}, "folds": 5,
                     "noise": {"mode": "ratio", "fixed": 0.0, "grid": [0.1, 0.2], "ratio": 2.0,
                               "target": "test", "target_client": 1, "seed": 3},
                     "methods": ["drfl", "erm"], "out_dir": "runs"}
    })json";
    const FullConfig a = parse_config(text);
    const FullConfig b = parse_config(serialize_config(a));
    CHECK(b.problem.loss.family == LossFamily::huber);
    CHECK(*b.problem.loss.epsilon == 1.35);
    CHECK(b.problem.robustness.rho.size() == 3);
    CHECK(b.problem.robustness.kappa == 0.7);
    CHECK(b.problem.weights.q_hat_mode == QHatMode::explicit_vector);
    CHECK((b.problem.weights.q_hat - a.problem.weights.q_hat).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.problem.weights.p == NormKind::l2);
    CHECK(b.solver.stepsize == 2.0);
    CHECK(b.solver.max_iters == 500);
    CHECK(*b.solver.minibatch_size == 4);
    CHECK(b.solver.seed == 77);
    CHECK(b.data.partition == "imbalanced");
    CHECK(b.data.minority_ratios == std::vector<double>{0.5, 0.5, 1.0});
    CHECK(b.experiment.noise.ratio == 2.0);
    CHECK(b.experiment.methods == std::vector<std::string>{"drfl", "erm"});
    CHECK(b.experiment.grid.rho == std::vector<double>{0.1});
}

TEST_CASE("default tuning grid has the stock sizes and endpoints") {
    const GridConfig g = default_grid();
    CHECK(g.rho.size() == 15);
    CHECK(g.kappa.size() == 10);
    CHECK(g.theta.size() == 6);
    CHECK(g.rho.front() == 1e-6);
    CHECK(g.rho.back() == 1.0);
    CHECK(g.kappa.front() == doctest::Approx(0.1));
    CHECK(g.kappa.back() == 1.0);
    CHECK(g.theta.front() == 1e-5);
    CHECK(g.theta.back() == 1.0);
}

TEST_CASE("malformed config text raises a parse error") {
    CHECK_THROWS_AS(parse_config("{not json"), std::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/path.json"), std::invalid_argument);
}
