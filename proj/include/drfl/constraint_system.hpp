#pragma once

#include "drfl/types.hpp"

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace drfl {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sparse linear expression: sum of coef * v[idx].
struct LinTerm {
    int idx;
    double coef;
};
using LinExpr = std::vector<LinTerm>;

double eval_expr(const LinExpr& a, const Vec& v);

// lo <= a'v <= hi. Inequalities use lo = -inf; equalities set lo == hi.
struct LinRow {
    LinExpr a;
    double lo = -kInf;
    double hi = kInf;
};

// 0.5 * (a'v + a0)^2 + c'v + c0 <= 0
struct QuadRow {
    LinExpr a;
    double a0 = 0.0;
    LinExpr c;
    double c0 = 0.0;
};

// log(1 + exp(a'v + a0)) + c'v + c0 <= 0
struct LseRow {
    LinExpr a;
    double a0 = 0.0;
    LinExpr c;
    double c0 = 0.0;
};

// || u(v) ||_2 <= c'v + c0 with affine components u_j(v) = a_j'v + a0_j.
struct SocRow {
    std::vector<std::pair<LinExpr, double>> u;
    LinExpr c;
    double c0 = 0.0;
};

// Named contiguous variable blocks.
class VariableLayout {
public:
    struct Block {
        std::string name;
        int offset = 0;
        int size = 0;
    };

    // Returns the block offset.
    int add(const std::string& name, int size);
    bool has(const std::string& name) const;
    const Block& block(const std::string& name) const;
    int index(const std::string& name, int i = 0) const;
    int size() const { return total_; }
    const std::vector<Block>& blocks() const { return blocks_; }

private:
    std::vector<Block> blocks_;
    int total_ = 0;
};

// Canonical convex constraint container: variable bounds, linear rows, and
// tagged convex nonlinear rows. Every Omega_s instantiation and every inner
// solver program is expressed in this form.
struct ConstraintSystem {
    VariableLayout layout;
    Vec lb;
    Vec ub;
    std::vector<LinRow> lin;
    std::vector<QuadRow> quad;
    std::vector<LseRow> lse;
    std::vector<SocRow> soc;

    // Metadata for reporting and tests: counts of per-sample loss epigraph
    // rows and of dual-norm constraints (each dual-norm constraint may expand
    // to several linear rows).
    int n_epigraph_rows = 0;
    int n_dual_norm_rows = 0;

    int add_var(const std::string& name, int size, double lo = -kInf, double hi = kInf);
    void set_bounds(int idx, double lo, double hi);
    void add_le(LinExpr a, double hi);           // a'v <= hi
    void add_eq(LinExpr a, double rhs);          // a'v == rhs
    void add_range(LinExpr a, double lo, double hi);

    int num_vars() const { return layout.size(); }
    bool has_nonlinear() const { return !quad.empty() || !lse.empty() || !soc.empty(); }

    // Largest constraint violation at v, over bounds and all row families.
    double max_violation(const Vec& v) const;
};

double eval_quad_row(const QuadRow& r, const Vec& v);
double eval_lse_row(const LseRow& r, const Vec& v);
double eval_soc_row(const SocRow& r, const Vec& v);

// Numerically stable log(1 + exp(s)).
double log1p_exp(double s);

struct FeasibilityReport {
    bool feasible = false;
    double max_violation = 0.0;
};

FeasibilityReport omega_feasible(const ConstraintSystem& cs, const Vec& point, double tol = 1e-8);

}  // namespace drfl
