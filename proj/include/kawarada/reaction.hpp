#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kawarada/errors.hpp"
#include "kawarada/mesh.hpp"
#include "kawarada/operators.hpp"

namespace kawarada {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline double to_unit(std::uint64_t z) {
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

} // namespace detail

/// Draw n i.i.d. uniform samples from [lo, hi]; the same seed always yields
/// the same sequence on every platform.
inline std::vector<double> sample_eps(std::uint64_t seed, double lo, double hi, std::size_t n) {
    if (lo > hi)
        throw ConfigError("sample_eps: lo > hi");
    std::vector<double> out(n);
    std::uint64_t state = seed;
    for (std::size_t i = 0; i < n; ++i) {
        state += 0x9E3779B97F4A7C15ull;
        out[i] = lo + (hi - lo) * detail::to_unit(detail::mix64(state));
    }
    return out;
}

/// Uniform sample keyed by position: the same (seed, x, y) always maps to the
/// same value, so a node keeps its sample when the mesh around it is refined.
inline double eps_at(std::uint64_t seed, double lo, double hi, double x, double y) {
    if (lo > hi)
        throw ConfigError("eps_at: lo > hi");
    std::uint64_t s = detail::mix64(seed ^ std::bit_cast<std::uint64_t>(x));
    s = detail::mix64(s ^ std::bit_cast<std::uint64_t>(y));
    return lo + (hi - lo) * detail::to_unit(s);
}

enum class PhiKind { One, Eps };

/// Frozen stochastic reaction data: per-node noise, its multiplicative factor,
/// and the shared degeneracy samples. Sampled once per run.
struct ReactionField {
    std::vector<double> eps;
    std::vector<double> phi;
    std::vector<double> inv_sigma;
    std::uint64_t seed = 0;
    PhiKind kind = PhiKind::One;

    static ReactionField make(const Mesh2D& mesh, const DegeneracyMatrix& sigma, PhiKind kind,
                              double lo, double hi, std::uint64_t seed) {
        if (lo > hi)
            throw ConfigError("reaction: eps_lo > eps_hi");
        ReactionField f;
        f.seed = seed;
        f.kind = kind;
        f.inv_sigma = sigma.inv_sigma;
        const int nx = mesh.nx(), ny = mesh.ny();
        f.eps.resize(static_cast<std::size_t>(nx) * ny);
        f.phi.resize(f.eps.size());
        for (int j = 1; j <= ny; ++j) {
            for (int i = 1; i <= nx; ++i) {
                const std::size_t idx = static_cast<std::size_t>(mesh.flat(i, j));
                f.eps[idx] = eps_at(seed, lo, hi, mesh.x(i), mesh.y(j));
                f.phi[idx] = (kind == PhiKind::Eps) ? f.eps[idx] : 1.0;
            }
        }
        return f;
    }

    std::size_t size() const { return phi.size(); }
};

/// g_i = phi_i / (sigma_i * (1 - v_i)); positive on [0, 1).
inline void eval_g(const ReactionField& field, std::span<const double> v, std::span<double> out) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] >= 1.0)
            throw QuenchSignal("reaction evaluated at or past the quench threshold", static_cast<int>(i));
        if (v[i] < 0.0)
            throw DomainViolation("reaction evaluated at negative component " + std::to_string(i));
        out[i] = field.phi[i] * field.inv_sigma[i] / (1.0 - v[i]);
    }
}

inline std::vector<double> eval_g(const ReactionField& field, std::span<const double> v) {
    std::vector<double> out(v.size());
    eval_g(field, v, out);
    return out;
}

/// Diagonal of the Jacobian: phi_i / (sigma_i * (1 - v_i)^2).
inline void eval_g_jacobian_diag(const ReactionField& field, std::span<const double> v,
                                 std::span<double> out) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] >= 1.0)
            throw QuenchSignal("jacobian evaluated at or past the quench threshold", static_cast<int>(i));
        if (v[i] < 0.0)
            throw DomainViolation("jacobian evaluated at negative component " + std::to_string(i));
        const double r = 1.0 - v[i];
        out[i] = field.phi[i] * field.inv_sigma[i] / (r * r);
    }
}

inline std::vector<double> eval_g_jacobian_diag(const ReactionField& field, std::span<const double> v) {
    std::vector<double> out(v.size());
    eval_g_jacobian_diag(field, v, out);
    return out;
}

/// Stepper-facing reaction hook. The default binds the Kawarada form above;
/// tests substitute time-dependent forcings through the same interface.
struct ReactionTerm {
    std::size_t n = 0;
    std::function<void(std::span<const double> v, double t, std::span<double> out)> g;
};

inline ReactionTerm kawarada_reaction(std::shared_ptr<const ReactionField> field) {
    ReactionTerm term;
    term.n = field->size();
    term.g = [field](std::span<const double> v, double, std::span<double> out) {
        eval_g(*field, v, out);
    };
    return term;
}

inline ReactionTerm zero_reaction(std::size_t n) {
    ReactionTerm term;
    term.n = n;
    term.g = [](std::span<const double>, double, std::span<double> out) {
        for (double& x : out) x = 0.0;
    };
    return term;
}

} // namespace kawarada
