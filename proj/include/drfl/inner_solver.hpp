#pragma once

#include "drfl/constraint_system.hpp"
#include "drfl/types.hpp"

#include <memory>
#include <string>

namespace drfl {

// Convex subproblem: minimize 0.5 x'Px + q'x + r0 over the rows and bounds
// of a ConstraintSystem. P must be positive semidefinite.
struct ConvexProgram {
    ConstraintSystem cs;
    SpMat P;  // n x n symmetric; empty() means zero
    Vec q;
    double r0 = 0.0;
    Vec warm_x;  // optional warm start (primal)
    Vec warm_y;  // optional warm start (row multipliers from a prior solve)
};

enum class SolveStatus { optimal, max_iters, infeasible };

struct SolveResult {
    Vec x;
    Vec y;  // row multipliers, reusable as warm_y for the same program shape
    double objective = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::max_iters;
};

class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, const SolveResult& r) : std::runtime_error(what), result(r) {}
    SolveResult result;
};

// Throws SolveError unless status == optimal.
const SolveResult& ensure_solved(const SolveResult& r, const std::string& context);

// Operator-splitting solver for programs whose rows are all linear.
// KKT residuals are driven below tol (both absolute and relative).
SolveResult solve_qp(const ConvexProgram& prog, double tol = 1e-7);

// Augmented-Lagrangian first-order solver accepting the tagged nonlinear
// row families (quadratic, log-sum-exp, second-order-cone) alongside linear
// rows. Programs without nonlinear rows are delegated to solve_qp.
SolveResult solve_convex(const ConvexProgram& prog, double tol = 1e-7);

// Persistent engine for a fixed constraint structure solved repeatedly with
// changing linear cost, as in the per-client subproblem: the KKT
// factorization, scaling, and polish factorization are cached across calls.
// Not thread-safe; use one instance per thread.
class QpEngine {
public:
    QpEngine();
    ~QpEngine();
    QpEngine(QpEngine&&) noexcept;
    QpEngine& operator=(QpEngine&&) noexcept;

    void setup(const ConvexProgram& prog, double tol);
    void update_cost(const Vec& q, double r0);
    void warm_start(const Vec& x, const Vec& y);
    SolveResult solve();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Persistent augmented-Lagrangian engine with multiplier memory across calls.
class AlmEngine {
public:
    AlmEngine();
    ~AlmEngine();
    AlmEngine(AlmEngine&&) noexcept;
    AlmEngine& operator=(AlmEngine&&) noexcept;

    void setup(const ConvexProgram& prog, double tol);
    void update_cost(const Vec& q, double r0);
    void warm_start(const Vec& x);
    SolveResult solve();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace drfl
