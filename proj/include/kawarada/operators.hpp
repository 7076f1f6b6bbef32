#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "kawarada/errors.hpp"
#include "kawarada/mesh.hpp"

namespace kawarada {

/// One-axis second-difference block. Entries are stored premultiplied by the
/// mesh scale h_min; the assembled operator divides by h_min exactly once.
struct TridiagBlock {
    std::vector<double> sub;   // row i couples node i-1, stored for rows 1..n-1
    std::vector<double> diag;  // rows 0..n-1
    std::vector<double> super; // row i couples node i+1, stored for rows 0..n-2
    double scale = 1.0;        // h_min

    int n() const { return static_cast<int>(diag.size()); }
};

/// Assemble the h_min-scaled nonuniform second-difference block for one axis.
/// Row r (interior node r+1) realizes the three-point formula with steps
/// h_left = h_r, h_right = h_{r+1}; homogeneous Dirichlet ends drop the
/// first sub and last super entry.
inline TridiagBlock build_tridiag(const Mesh1D& m, double h_min) {
    const int n = m.n_interior();
    TridiagBlock t;
    t.scale = h_min;
    t.diag.resize(static_cast<std::size_t>(n));
    if (n > 1) {
        t.sub.resize(static_cast<std::size_t>(n) - 1);
        t.super.resize(static_cast<std::size_t>(n) - 1);
    }
    for (int r = 0; r < n; ++r) {
        const double hl = m.step(r);
        const double hr = m.step(r + 1);
        t.diag[static_cast<std::size_t>(r)] = -2.0 * h_min / (hl * hr);
        if (r > 0)
            t.sub[static_cast<std::size_t>(r) - 1] = 2.0 * h_min / (hl * (hl + hr));
        if (r < n - 1)
            t.super[static_cast<std::size_t>(r)] = 2.0 * h_min / (hr * (hl + hr));
    }
    return t;
}

/// Degeneracy coefficient sampled at the interior nodes, lexicographic order.
struct DegeneracyMatrix {
    std::vector<double> sigma;
    std::vector<double> inv_sigma;
    double sigma_max = 0.0;
    double sigma_min = 0.0;

    double kappa() const { return sigma_max / sigma_min; }
};

template <class SigmaFn>
DegeneracyMatrix sample_sigma(const Mesh2D& mesh, SigmaFn&& fn) {
    DegeneracyMatrix d;
    const int nx = mesh.nx(), ny = mesh.ny();
    d.sigma.resize(static_cast<std::size_t>(nx) * ny);
    d.inv_sigma.resize(d.sigma.size());
    d.sigma_max = -std::numeric_limits<double>::infinity();
    d.sigma_min = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= ny; ++j) {
        for (int i = 1; i <= nx; ++i) {
            const double s = fn(mesh.x(i), mesh.y(j));
            if (!(s > 0.0))
                throw AssemblyError("sigma not positive at interior node (i=" + std::to_string(i) +
                                    ", j=" + std::to_string(j) + "): " + std::to_string(s));
            const std::size_t idx = static_cast<std::size_t>(mesh.flat(i, j));
            d.sigma[idx] = s;
            d.inv_sigma[idx] = 1.0 / s;
            d.sigma_max = std::max(d.sigma_max, s);
            d.sigma_min = std::min(d.sigma_min, s);
        }
    }
    return d;
}

enum class Axis { X, Y };

/// The split operators of the semi-discrete system on the lexicographic
/// ordering: the x-part acts tridiagonally along rows, the y-part along
/// columns, and their sum is the full spatial operator. A sparse direct
/// factorization of the sum is built once and reused for every solve.
class SplitOperator {
public:
    static SplitOperator assemble(const Mesh2D& mesh, DegeneracyMatrix sigma) {
        SplitOperator op;
        op.mesh_ = mesh;
        op.sigma_ = std::move(sigma);
        op.tx_ = build_tridiag(mesh.mx, mesh.h_min);
        op.ty_ = build_tridiag(mesh.my, mesh.h_min);

        const int nx = mesh.nx(), ny = mesh.ny();
        const std::size_t n = static_cast<std::size_t>(nx) * ny;
        op.mx_sub_.assign(n, 0.0);
        op.mx_diag_.assign(n, 0.0);
        op.mx_sup_.assign(n, 0.0);
        op.my_sub_.assign(n, 0.0);
        op.my_diag_.assign(n, 0.0);
        op.my_sup_.assign(n, 0.0);
        op.myt_sub_.assign(n, 0.0);
        op.myt_diag_.assign(n, 0.0);
        op.myt_sup_.assign(n, 0.0);

        const double ax = 1.0 / (mesh.a * mesh.a * mesh.h_min);
        const double ay = 1.0 / (mesh.b * mesh.b * mesh.h_min);
        for (int j = 1; j <= ny; ++j) {
            for (int i = 1; i <= nx; ++i) {
                const std::size_t idx = static_cast<std::size_t>(mesh.flat(i, j));
                const double cx = op.sigma_.inv_sigma[idx] * ax;
                const double cy = op.sigma_.inv_sigma[idx] * ay;
                op.mx_diag_[idx] = cx * op.tx_.diag[static_cast<std::size_t>(i) - 1];
                if (i > 1)
                    op.mx_sub_[idx] = cx * op.tx_.sub[static_cast<std::size_t>(i) - 2];
                if (i < nx)
                    op.mx_sup_[idx] = cx * op.tx_.super[static_cast<std::size_t>(i) - 1];
                op.my_diag_[idx] = cy * op.ty_.diag[static_cast<std::size_t>(j) - 1];
                if (j > 1)
                    op.my_sub_[idx] = cy * op.ty_.sub[static_cast<std::size_t>(j) - 2];
                if (j < ny)
                    op.my_sup_[idx] = cy * op.ty_.super[static_cast<std::size_t>(j) - 1];
                // y-part copied in transposed (column-major) order so its line
                // solves sweep contiguous memory
                const std::size_t tidx = static_cast<std::size_t>((i - 1) * ny + (j - 1));
                op.myt_sub_[tidx] = op.my_sub_[idx];
                op.myt_diag_[tidx] = op.my_diag_[idx];
                op.myt_sup_[tidx] = op.my_sup_[idx];
            }
        }
        op.factorize();
        return op;
    }

    const Mesh2D& mesh() const { return mesh_; }
    const DegeneracyMatrix& sigma() const { return sigma_; }
    const TridiagBlock& tx() const { return tx_; }
    const TridiagBlock& ty() const { return ty_; }
    int size() const { return mesh_.size(); }

    void apply_mx(std::span<const double> in, std::span<double> out) const {
        const int nx = mesh_.nx(), ny = mesh_.ny();
        for (int j = 0; j < ny; ++j) {
            const std::size_t base = static_cast<std::size_t>(j) * nx;
            for (int i = 0; i < nx; ++i) {
                const std::size_t idx = base + static_cast<std::size_t>(i);
                double v = mx_diag_[idx] * in[idx];
                if (i > 0) v += mx_sub_[idx] * in[idx - 1];
                if (i < nx - 1) v += mx_sup_[idx] * in[idx + 1];
                out[idx] = v;
            }
        }
    }

    void apply_my(std::span<const double> in, std::span<double> out) const {
        const int nx = mesh_.nx(), ny = mesh_.ny();
        const std::size_t stride = static_cast<std::size_t>(nx);
        for (std::size_t idx = 0; idx < static_cast<std::size_t>(nx) * ny; ++idx) {
            const int j = static_cast<int>(idx / stride);
            double v = my_diag_[idx] * in[idx];
            if (j > 0) v += my_sub_[idx] * in[idx - stride];
            if (j < ny - 1) v += my_sup_[idx] * in[idx + stride];
            out[idx] = v;
        }
    }

    void apply_m(std::span<const double> in, std::span<double> out) const {
        const int nx = mesh_.nx(), ny = mesh_.ny();
        const std::size_t stride = static_cast<std::size_t>(nx);
        for (std::size_t idx = 0; idx < static_cast<std::size_t>(nx) * ny; ++idx) {
            const int i = static_cast<int>(idx % stride);
            const int j = static_cast<int>(idx / stride);
            double v = (mx_diag_[idx] + my_diag_[idx]) * in[idx];
            if (i > 0) v += mx_sub_[idx] * in[idx - 1];
            if (i < nx - 1) v += mx_sup_[idx] * in[idx + 1];
            if (j > 0) v += my_sub_[idx] * in[idx - stride];
            if (j < ny - 1) v += my_sup_[idx] * in[idx + stride];
            out[idx] = v;
        }
    }

    std::vector<double> apply_m(std::span<const double> in) const {
        std::vector<double> out(in.size());
        apply_m(in, out);
        return out;
    }

    /// Solve M z = rhs with the cached factorization.
    std::vector<double> solve_with_m(std::span<const double> rhs) const {
        Eigen::Map<const Eigen::VectorXd> r(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        Eigen::VectorXd z = lu_->solve(r);
        return std::vector<double>(z.data(), z.data() + z.size());
    }

    /// Exact max-norm of the inverse via solves against unit vectors.
    /// Diagnostic only; refuses grids above the probing guard.
    double inf_norm_of_m_inverse() const {
        guard_size("inf_norm_of_m_inverse");
        const int n = size();
        std::vector<double> rowsum(static_cast<std::size_t>(n), 0.0);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < n; ++j) {
            e[j] = 1.0;
            Eigen::VectorXd z = lu_->solve(e);
            for (int i = 0; i < n; ++i)
                rowsum[static_cast<std::size_t>(i)] += std::abs(z[i]);
            e[j] = 0.0;
        }
        double best = 0.0;
        for (double v : rowsum) best = std::max(best, v);
        return best;
    }

    /// Max-norm of the commutator of the two split parts, by structured
    /// matvecs against unit vectors. Same probing guard.
    double commutator_inf_norm() const {
        guard_size("commutator_inf_norm");
        const std::size_t n = static_cast<std::size_t>(size());
        std::vector<double> e(n, 0.0), t1(n), t2(n), col(n);
        std::vector<double> rowsum(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            e[j] = 1.0;
            apply_my(e, t1);
            apply_mx(t1, col);
            apply_mx(e, t1);
            apply_my(t1, t2);
            e[j] = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                rowsum[i] += std::abs(col[i] - t2[i]);
        }
        double best = 0.0;
        for (double v : rowsum) best = std::max(best, v);
        return best;
    }

    double log_norm_inf_mx() const {
        return stencil_log_norm(mx_diag_, mx_sub_, mx_sup_, nullptr, nullptr, nullptr);
    }
    double log_norm_inf_my() const {
        return stencil_log_norm(my_diag_, my_sub_, my_sup_, nullptr, nullptr, nullptr);
    }
    double log_norm_inf_m() const {
        return stencil_log_norm(mx_diag_, mx_sub_, mx_sup_, &my_diag_, &my_sub_, &my_sup_);
    }

    // Per-node stencil coefficients (final values, h_min scale applied).
    // The transposed y arrays are in column-major node order.
    std::span<const double> mx_sub() const { return mx_sub_; }
    std::span<const double> mx_diag() const { return mx_diag_; }
    std::span<const double> mx_sup() const { return mx_sup_; }
    std::span<const double> my_sub() const { return my_sub_; }
    std::span<const double> my_diag() const { return my_diag_; }
    std::span<const double> my_sup() const { return my_sup_; }
    std::span<const double> myt_sub() const { return myt_sub_; }
    std::span<const double> myt_diag() const { return myt_diag_; }
    std::span<const double> myt_sup() const { return myt_sup_; }

    static constexpr int probe_guard = 4096;

private:
    void guard_size(const char* what) const {
        if (size() > probe_guard)
            throw SizeGuardExceeded(std::string(what) + ": grid size " + std::to_string(size()) +
                                    " exceeds probing guard " + std::to_string(probe_guard));
    }

    double stencil_log_norm(const std::vector<double>& d1, const std::vector<double>& s1,
                            const std::vector<double>& p1, const std::vector<double>* d2,
                            const std::vector<double>* s2, const std::vector<double>* p2) const {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d1.size(); ++i) {
            double diag = d1[i];
            double off = std::abs(s1[i]) + std::abs(p1[i]);
            if (d2) {
                diag += (*d2)[i];
                off += std::abs((*s2)[i]) + std::abs((*p2)[i]);
            }
            best = std::max(best, diag + off);
        }
        return best;
    }

    void factorize() {
        const int nx = mesh_.nx(), ny = mesh_.ny();
        const int n = nx * ny;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(5) * n);
        for (int idx = 0; idx < n; ++idx) {
            const int i = idx % nx;
            const int j = idx / nx;
            const std::size_t u = static_cast<std::size_t>(idx);
            trip.emplace_back(idx, idx, mx_diag_[u] + my_diag_[u]);
            if (i > 0) trip.emplace_back(idx, idx - 1, mx_sub_[u]);
            if (i < nx - 1) trip.emplace_back(idx, idx + 1, mx_sup_[u]);
            if (j > 0) trip.emplace_back(idx, idx - nx, my_sub_[u]);
            if (j < ny - 1) trip.emplace_back(idx, idx + nx, my_sup_[u]);
        }
        Eigen::SparseMatrix<double> m(n, n);
        m.setFromTriplets(trip.begin(), trip.end());
        m.makeCompressed();
        lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
        lu_->compute(m);
        if (lu_->info() != Eigen::Success)
            throw AssemblyError("factorization of the assembled operator failed");
    }

    Mesh2D mesh_;
    DegeneracyMatrix sigma_;
    TridiagBlock tx_, ty_;
    std::vector<double> mx_sub_, mx_diag_, mx_sup_;
    std::vector<double> my_sub_, my_diag_, my_sup_;
    std::vector<double> myt_sub_, myt_diag_, myt_sup_;
    std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

inline SplitOperator assemble(const Mesh2D& mesh, DegeneracyMatrix sigma) {
    return SplitOperator::assemble(mesh, std::move(sigma));
}

/// Row-sum logarithmic norm of a generic operator: the caller supplies a
/// visitor enumerating each row's entries.
template <class RowVisit>
double log_norm_inf(int n, RowVisit&& row) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double diag = 0.0, off = 0.0;
        row(i, [&](int j, double a) {
            if (j == i)
                diag += a;
            else
                off += std::abs(a);
        });
        best = std::max(best, diag + off);
    }
    return best;
}

/// Logarithmic norm of the unscaled one-axis block (entries divided by h_min).
inline double log_norm_inf(const TridiagBlock& t) {
    return log_norm_inf(t.n(), [&](int i, auto&& emit) {
        const std::size_t r = static_cast<std::size_t>(i);
        emit(i, t.diag[r] / t.scale);
        if (i > 0) emit(i - 1, t.sub[r - 1] / t.scale);
        if (i < t.n() - 1) emit(i + 1, t.super[r] / t.scale);
    });
}

} // namespace kawarada
