#include "drfl/constraint_system.hpp"

#include <cmath>
#include <stdexcept>

namespace drfl {

double eval_expr(const LinExpr& a, const Vec& v) {
    double s = 0.0;
    for (const auto& t : a) s += t.coef * v[t.idx];
    return s;
}

int VariableLayout::add(const std::string& name, int size) {
    if (size <= 0) throw std::invalid_argument("layout: block size must be positive: " + name);
    if (has(name)) throw std::invalid_argument("layout: duplicate block: " + name);
    blocks_.push_back({name, total_, size});
    total_ += size;
    return blocks_.back().offset;
}

bool VariableLayout::has(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return true;
    return false;
}

const VariableLayout::Block& VariableLayout::block(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return b;
    throw std::out_of_range("layout: no block named " + name);
}

int VariableLayout::index(const std::string& name, int i) const {
    const Block& b = block(name);
    if (i < 0 || i >= b.size) throw std::out_of_range("layout: index out of block " + name);
    return b.offset + i;
}

int ConstraintSystem::add_var(const std::string& name, int size, double lo, double hi) {
    const int off = layout.add(name, size);
    lb.conservativeResize(layout.size());
    ub.conservativeResize(layout.size());
    for (int i = 0; i < size; ++i) {
        lb[off + i] = lo;
        ub[off + i] = hi;
    }
    return off;
}

void ConstraintSystem::set_bounds(int idx, double lo, double hi) {
    lb[idx] = lo;
    ub[idx] = hi;
}

void ConstraintSystem::add_le(LinExpr a, double hi) { lin.push_back({std::move(a), -kInf, hi}); }

void ConstraintSystem::add_eq(LinExpr a, double rhs) { lin.push_back({std::move(a), rhs, rhs}); }

void ConstraintSystem::add_range(LinExpr a, double lo, double hi) {
    lin.push_back({std::move(a), lo, hi});
}

double log1p_exp(double s) {
    if (s > 0.0) return s + std::log1p(std::exp(-s));
    return std::log1p(std::exp(s));
}

double eval_quad_row(const QuadRow& r, const Vec& v) {
    const double inner = eval_expr(r.a, v) + r.a0;
    return 0.5 * inner * inner + eval_expr(r.c, v) + r.c0;
}

double eval_lse_row(const LseRow& r, const Vec& v) {
    return log1p_exp(eval_expr(r.a, v) + r.a0) + eval_expr(r.c, v) + r.c0;
}

double eval_soc_row(const SocRow& r, const Vec& v) {
    double sq = 0.0;
    for (const auto& [a, a0] : r.u) {
        const double u = eval_expr(a, v) + a0;
        sq += u * u;
    }
    return std::sqrt(sq) - (eval_expr(r.c, v) + r.c0);
}

double ConstraintSystem::max_violation(const Vec& v) const {
    if (v.size() != layout.size())
        throw std::invalid_argument("max_violation: point does not match variable layout");
    double worst = 0.0;
    for (int i = 0; i < layout.size(); ++i) {
        if (std::isfinite(lb[i])) worst = std::max(worst, lb[i] - v[i]);
        if (std::isfinite(ub[i])) worst = std::max(worst, v[i] - ub[i]);
    }
    for (const auto& r : lin) {
        const double val = eval_expr(r.a, v);
        if (std::isfinite(r.lo)) worst = std::max(worst, r.lo - val);
        if (std::isfinite(r.hi)) worst = std::max(worst, val - r.hi);
    }
    for (const auto& r : quad) worst = std::max(worst, eval_quad_row(r, v));
    for (const auto& r : lse) worst = std::max(worst, eval_lse_row(r, v));
    for (const auto& r : soc) worst = std::max(worst, eval_soc_row(r, v));
    return worst;
}

FeasibilityReport omega_feasible(const ConstraintSystem& cs, const Vec& point, double tol) {
    const double worst = cs.max_violation(point);
    return {worst <= tol, worst};
}

}  // namespace drfl
