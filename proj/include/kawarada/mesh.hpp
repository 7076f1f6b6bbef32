#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kawarada/errors.hpp"

namespace kawarada {

/// Node-placement map for one axis: a strictly increasing function on [-1, 1]
/// with fixed endpoints. Mesh nodes are images of a uniform reference grid.
struct MeshMapping {
    enum class Kind { Uniform, Sine, Clustered };

    Kind kind = Kind::Uniform;
    double s = 0.0;      // clustering strength, |s| < 1 keeps the map monotone
    double center = 0.0; // where the clustered map concentrates nodes, |center| < 1

    double operator()(double w) const {
        switch (kind) {
        case Kind::Uniform:
            return w;
        case Kind::Sine:
            return std::sin(0.5 * M_PI * w);
        case Kind::Clustered: {
            // Symmetric density modulation recentered by a Moebius map of [-1,1].
            const double base = w + s * std::sin(M_PI * w) / M_PI;
            return (base + center) / (1.0 + center * base);
        }
        }
        return w;
    }

    static MeshMapping uniform() { return {}; }
    static MeshMapping sine() { return {Kind::Sine, 0.0, 0.0}; }
    static MeshMapping clustered(double s, double center = 0.0) {
        return {Kind::Clustered, s, center};
    }
};

/// One axis of a tensor-product grid on [-1, 1]: nodes x_0 = -1 < x_1 < ... < x_{N+1} = 1
/// and steps h_i = x_{i+1} - x_i. Immutable after construction.
class Mesh1D {
public:
    static Mesh1D from_nodes(std::vector<double> nodes) {
        if (nodes.size() < 3)
            throw AssemblyError("mesh needs at least one interior node");
        if (nodes.front() != -1.0 || nodes.back() != 1.0)
            throw AssemblyError("mesh endpoints must be -1 and 1");
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            if (!(nodes[i] < nodes[i + 1]))
                throw AssemblyError("mesh nodes not strictly increasing: first inversion at segment " +
                                    std::to_string(i) + " (x=" + std::to_string(nodes[i]) + ")");
        }
        Mesh1D m;
        m.nodes_ = std::move(nodes);
        m.steps_.resize(m.nodes_.size() - 1);
        for (std::size_t i = 0; i + 1 < m.nodes_.size(); ++i)
            m.steps_[i] = m.nodes_[i + 1] - m.nodes_[i];
        return m;
    }

    int n_interior() const { return static_cast<int>(nodes_.size()) - 2; }

    /// Node x_i, i in [0, n_interior()+1].
    double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    /// Step h_i = x_{i+1} - x_i, i in [0, n_interior()].
    double step(int i) const { return steps_[static_cast<std::size_t>(i)]; }

    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> steps() const { return steps_; }

private:
    std::vector<double> nodes_;
    std::vector<double> steps_;
};

/// Build a mesh with n interior nodes as the image of the uniform reference grid
/// under the given mapping. Endpoints are pinned to -1 and 1 exactly.
inline Mesh1D build_mesh(int n, const MeshMapping& mapping) {
    if (n < 1)
        throw AssemblyError("build_mesh: need n >= 1 interior nodes");
    std::vector<double> nodes(static_cast<std::size_t>(n) + 2);
    const double denom = n + 1;
    for (int i = 0; i <= n + 1; ++i) {
        const double w = (2.0 * i - denom) / denom; // exact -1 and 1 at the ends
        nodes[static_cast<std::size_t>(i)] = mapping(w);
    }
    nodes.front() = -1.0;
    nodes.back() = 1.0;
    return Mesh1D::from_nodes(std::move(nodes));
}

/// Split every segment at its midpoint. Parent nodes are copied bit-exactly,
/// so fields on the refined mesh restrict to the parent without interpolation.
inline Mesh1D refine_halve(const Mesh1D& m) {
    const auto parent = m.nodes();
    std::vector<double> nodes;
    nodes.reserve(2 * parent.size() - 1);
    for (std::size_t i = 0; i + 1 < parent.size(); ++i) {
        nodes.push_back(parent[i]);
        nodes.push_back(0.5 * (parent[i] + parent[i + 1]));
    }
    nodes.push_back(parent.back());
    return Mesh1D::from_nodes(std::move(nodes));
}

/// Tensor-product mesh on (-1,1)^2 together with the chamber half-widths a, b
/// of the physical domain and the scaling functional h_min.
struct Mesh2D {
    Mesh1D mx;
    Mesh1D my;
    double a = 1.0;
    double b = 1.0;
    double h_min = 0.0;

    static Mesh2D make(Mesh1D mx, Mesh1D my, double a, double b) {
        if (a <= 0.0 || b <= 0.0)
            throw AssemblyError("domain half-widths must be positive");
        Mesh2D m{std::move(mx), std::move(my), a, b, 0.0};
        double hmin = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= m.mx.n_interior(); ++i)
            hmin = std::min(hmin, m.mx.step(i - 1) * m.mx.step(i));
        for (int j = 1; j <= m.my.n_interior(); ++j)
            hmin = std::min(hmin, m.my.step(j - 1) * m.my.step(j));
        m.h_min = hmin;
        return m;
    }

    int nx() const { return mx.n_interior(); }
    int ny() const { return my.n_interior(); }
    int size() const { return nx() * ny(); }

    /// Lexicographic index of interior node (i, j), both 1-based.
    int flat(int i, int j) const { return (j - 1) * nx() + (i - 1); }

    double x(int i) const { return mx.node(i); }
    double y(int j) const { return my.node(j); }
};

/// Minimum over interior nodes of the discrete action on the quadratic barrier
/// along one axis; the overhanging step at the right end is extended by its
/// nearest neighbor.
inline double barrier_min(const Mesh1D& m) {
    const int n = m.n_interior();
    double best = std::numeric_limits<double>::infinity();
    double prefix = 0.0; // sum of h_1..h_i
    for (int i = 1; i <= n; ++i) {
        const double hm = m.step(i - 1);
        const double hc = m.step(i);
        const double hp = (i + 1 <= n) ? m.step(i + 1) : m.step(n);
        prefix += hc;
        const double t1 = hc * (2.0 + hc) / (hm * (hm + hc));
        const double t2 = hp * (hp - 2.0) / (hc * (hm + hc));
        const double t3 = 2.0 * (hp - hc) * prefix;
        best = std::min(best, t1 + t2 + t3);
    }
    return best;
}

/// Mesh functional k(h) gating the maximum-principle bound on the inverse of
/// the assembled operator; reported as a diagnostic, never enforced.
inline double compute_kh(const Mesh2D& m) {
    if (m.nx() < 2 || m.ny() < 2)
        throw ContractViolation("compute_kh: both axes need at least 2 interior nodes");
    const double cx = barrier_min(m.mx);
    const double cy = barrier_min(m.my);
    return 0.25 * (cx / (m.a * m.a) + cy / (m.b * m.b));
}

} // namespace kawarada
