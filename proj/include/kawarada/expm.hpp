#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kawarada/errors.hpp"
#include "kawarada/operators.hpp"

namespace kawarada {

namespace detail {

/// Factorization of one batch of tridiagonal systems (I - c*A) laid out as
/// contiguous lines. Built once per (c, operator) pair, applied many times.
struct LineFactorization {
    std::vector<double> sub;    // -c * A_sub, kept for the forward sweep
    std::vector<double> inv_d;  // inverse pivots
    std::vector<double> cp;     // eliminated super entries
    int line_len = 0;
    int lines = 0;

    void build(double c, std::span<const double> a_sub, std::span<const double> a_diag,
               std::span<const double> a_sup, int line_len_, int lines_) {
        line_len = line_len_;
        lines = lines_;
        const std::size_t n = static_cast<std::size_t>(line_len) * lines;
        sub.resize(n);
        inv_d.resize(n);
        cp.resize(n);
        for (int l = 0; l < lines; ++l) {
            const std::size_t base = static_cast<std::size_t>(l) * line_len;
            double prev_cp = 0.0;
            for (int r = 0; r < line_len; ++r) {
                const std::size_t k = base + static_cast<std::size_t>(r);
                const double s = (r > 0) ? -c * a_sub[k] : 0.0;
                const double d = 1.0 - c * a_diag[k];
                const double p = (r < line_len - 1) ? -c * a_sup[k] : 0.0;
                const double w = d - s * prev_cp;
                if (std::abs(w) < 1e-300)
                    throw AssemblyError("singular tridiagonal line system in line " + std::to_string(l));
                sub[k] = s;
                inv_d[k] = 1.0 / w;
                cp[k] = p / w;
                prev_cp = cp[k];
            }
        }
    }

    /// In-place solve of every line.
    void solve(std::span<double> rhs) const {
        for (int l = 0; l < lines; ++l) {
            const std::size_t base = static_cast<std::size_t>(l) * line_len;
            rhs[base] *= inv_d[base];
            for (int r = 1; r < line_len; ++r) {
                const std::size_t k = base + static_cast<std::size_t>(r);
                rhs[k] = (rhs[k] - sub[k] * rhs[k - 1]) * inv_d[k];
            }
            for (int r = line_len - 2; r >= 0; --r) {
                const std::size_t k = base + static_cast<std::size_t>(r);
                rhs[k] -= cp[k] * rhs[k + 1];
            }
        }
    }
};

inline void transpose(std::span<const double> in, std::span<double> out, int nx, int ny) {
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out[static_cast<std::size_t>(i) * ny + j] = in[static_cast<std::size_t>(j) * nx + i];
}

/// out = (I + c*A) in for a batch of contiguous lines.
inline void apply_numerator(double c, std::span<const double> a_sub, std::span<const double> a_diag,
                            std::span<const double> a_sup, int line_len, int lines,
                            std::span<const double> in, std::span<double> out) {
    for (int l = 0; l < lines; ++l) {
        const std::size_t base = static_cast<std::size_t>(l) * line_len;
        for (int r = 0; r < line_len; ++r) {
            const std::size_t k = base + static_cast<std::size_t>(r);
            double v = in[k] + c * a_diag[k] * in[k];
            if (r > 0) v += c * a_sub[k] * in[k - 1];
            if (r < line_len - 1) v += c * a_sup[k] * in[k + 1];
            out[k] = v;
        }
    }
}

} // namespace detail

/// One split propagator: the diagonal-resolvent realization of the matrix
/// exponential of tau * A (half tau for the x factor of the symmetric product).
/// Caches the line factorizations of the active tau; any tau change rebuilds.
class Propagator {
public:
    Propagator(const SplitOperator& ops, Axis axis)
        : ops_(&ops),
          axis_(axis),
          step_fraction_(axis == Axis::X ? 0.5 : 1.0) {
        const std::size_t n = static_cast<std::size_t>(ops.size());
        scratch_.resize(n);
        scratch2_.resize(n);
    }

    Axis axis() const { return axis_; }
    double tau() const { return tau_; }

    void set_tau(double tau) {
        if (tau < 0.0)
            throw ContractViolation("propagator tau must be nonnegative");
        if (tau == tau_)
            return;
        tau_ = tau;
        const double c = 0.5 * step_fraction_ * tau;
        const int nx = ops_->mesh().nx();
        const int ny = ops_->mesh().ny();
        if (axis_ == Axis::X)
            fact_.build(c, ops_->mx_sub(), ops_->mx_diag(), ops_->mx_sup(), nx, ny);
        else
            fact_.build(c, ops_->myt_sub(), ops_->myt_diag(), ops_->myt_sup(), ny, nx);
        c_ = c;
    }

    /// out = (I - c A)^{-1} (I + c A) in with the cached factorization.
    void apply(std::span<const double> in, std::span<double> out) const {
        if (!(tau_ >= 0.0))
            throw ContractViolation("propagator applied before set_tau");
        const int nx = ops_->mesh().nx();
        const int ny = ops_->mesh().ny();
        if (axis_ == Axis::X) {
            detail::apply_numerator(c_, ops_->mx_sub(), ops_->mx_diag(), ops_->mx_sup(), nx, ny, in, out);
            fact_.solve(out);
        } else {
            detail::transpose(in, scratch_, nx, ny);
            detail::apply_numerator(c_, ops_->myt_sub(), ops_->myt_diag(), ops_->myt_sup(), ny, nx,
                                    scratch_, scratch2_);
            fact_.solve(scratch2_);
            detail::transpose(scratch2_, out, ny, nx);
        }
    }

    std::vector<double> apply(std::span<const double> in) const {
        std::vector<double> out(in.size());
        apply(in, out);
        return out;
    }

private:
    const SplitOperator* ops_;
    Axis axis_;
    double step_fraction_;
    double tau_ = -1.0;
    double c_ = 0.0;
    detail::LineFactorization fact_;
    mutable std::vector<double> scratch_, scratch2_;
};

/// One-shot diagonal-Pade action for the given axis operator (no half-step
/// convention here: the result approximates the exponential of tau * A).
inline std::vector<double> pade11_apply(const SplitOperator& ops, Axis axis, double tau,
                                        std::span<const double> v) {
    if (tau < 0.0)
        throw ContractViolation("pade11_apply: tau must be nonnegative");
    Propagator p(ops, axis);
    // a propagator of axis X applies the exponential of tau/2 * A; compensate
    const double t = (axis == Axis::X) ? 2.0 * tau : tau;
    p.set_tau(t);
    return p.apply(v);
}

/// Symmetric split product: half x-step, full y-step, half x-step.
inline void strang_apply(const Propagator& px, const Propagator& py, std::span<const double> in,
                         std::span<double> out, std::span<double> work) {
    if (px.axis() != Axis::X || py.axis() != Axis::Y)
        throw ContractViolation("strang_apply: propagators must be (x, y)");
    if (px.tau() != py.tau())
        throw ContractViolation("strang_apply: propagators have mismatched tau");
    px.apply(in, out);
    py.apply(out, work);
    px.apply(work, out);
}

inline std::vector<double> strang_apply(const Propagator& px, const Propagator& py,
                                        std::span<const double> in) {
    std::vector<double> out(in.size()), work(in.size());
    strang_apply(px, py, in, out, work);
    return out;
}

/// Quadrature weight applied to the reaction: the inverse of the assembled
/// operator acting on (product-propagator - identity) times F.
inline std::vector<double> phi_minus_identity_weighted(const SplitOperator& ops, const Propagator& px,
                                                       const Propagator& py, std::span<const double> f) {
    std::vector<double> s = strang_apply(px, py, f);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] -= f[i];
    return ops.solve_with_m(s);
}

} // namespace kawarada
