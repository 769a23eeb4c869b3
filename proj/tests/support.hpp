#pragma once

// Shared fixtures for the unit tests: seeded generators, small networks and
// finite-difference oracles.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hamroc/autoencoder.hpp"
#include "hamroc/msd_system.hpp"

namespace testsupport {

using hamroc::Mat;
using hamroc::Vec;

inline constexpr double kPi = 3.14159265358979323846;

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
    Vec vec(Eigen::Index n, double lo = -1.0, double hi = 1.0) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }
    Mat mat(Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
        Mat m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
        return m;
    }
    Mat spd(Eigen::Index n) {
        const Mat b = mat(n, n);
        return b * b.transpose() + Mat::Identity(n, n);
    }
};

/// Two free nodes at (0,0) and (1,0) joined by one spring.
inline hamroc::MassSpringNetwork two_mass(double k = 2.0, double l0 = 1.0, double c = 0.0,
                                          double m0 = 1.0, double m1 = 1.0) {
    return hamroc::MassSpringNetwork({{m0, 0.0, 0.0, false}, {m1, 1.0, 0.0, false}}, {{0, 1, k, c, l0}});
}

/// One free node hanging from a pinned node, and a second pinned anchor to
/// the side so the free node sees two non-collinear springs.
inline hamroc::MassSpringNetwork single_free_node(double c = 0.5) {
    return hamroc::MassSpringNetwork({{1.0, 0.0, 0.5, true}, {1.0, 0.0, -0.5, true}, {0.2, 1.0, 0.0, false}},
                                     {{0, 1, 80.0, c, 1.0},
                                      {0, 2, 60.0, c, std::sqrt(1.25)},
                                      {1, 2, 90.0, c, std::sqrt(1.25)}});
}

/// Random connected network: a spanning chain over jittered grid points
/// plus random extra edges, a random subset of pinned nodes (at least one
/// node free), random physical parameters.
inline hamroc::MassSpringNetwork random_network(Rng& rng, int nodes_min = 3, int nodes_max = 7,
                                                bool zero_damping = false) {
    const int n = rng.integer(nodes_min, nodes_max);
    std::vector<hamroc::Node> nodes;
    for (int i = 0; i < n; ++i) {
        nodes.push_back({rng.uniform(0.05, 0.3), i + rng.uniform(-0.2, 0.2), rng.uniform(-0.8, 0.8),
                         i == 0 && rng.uniform(0, 1) < 0.7});
    }
    std::vector<hamroc::Edge> edges;
    auto length = [&](int i, int j) {
        return std::hypot(nodes[i].x0 - nodes[j].x0, nodes[i].y0 - nodes[j].y0);
    };
    auto add = [&](int i, int j) {
        for (const auto& e : edges)
            if ((int(e.i) == i && int(e.j) == j) || (int(e.i) == j && int(e.j) == i)) return;
        edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), rng.uniform(20, 150),
                         zero_damping ? 0.0 : rng.uniform(0.1, 2.0), length(i, j) * rng.uniform(0.8, 1.2)});
    };
    for (int i = 0; i + 1 < n; ++i) add(i, i + 1);
    const int extra = rng.integer(0, n);
    for (int k = 0; k < extra; ++k) {
        const int i = rng.integer(0, n - 1);
        const int j = rng.integer(0, n - 1);
        if (i != j) add(i, j);
    }
    return hamroc::MassSpringNetwork(std::move(nodes), std::move(edges));
}

/// Central difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

/// Central difference Jacobian of a vector function (rows: outputs).
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    const Vec f0 = f(x);
    Mat j(f0.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        j.col(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return j;
}

/// Central difference of a matrix-valued function along direction v.
inline Mat fd_directional(const std::function<Mat(const Vec&)>& f, const Vec& x, const Vec& v, double h = 1e-5) {
    return (f(x + h * v) - f(x - h * v)) / (2.0 * h);
}

/// |a - b| / max(|b|, floor), in the max norm.
template <typename A, typename B>
double rel_error(const A& a, const B& b, double floor = 1e-8) {
    const double scale = std::max(b.cwiseAbs().maxCoeff(), floor);
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double rel_error(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max(std::abs(b), floor);
}

/// Random ELU autoencoder with small hidden layers.
inline hamroc::MlpAutoencoder random_autoencoder(Rng& rng, std::size_t n, std::size_t m,
                                                 std::vector<std::size_t> hidden = {}) {
    if (hidden.empty()) hidden = {static_cast<std::size_t>(rng.integer(3, 6))};
    hamroc::MlpAutoencoder ae =
        hamroc::MlpAutoencoder::initialize({n, hidden, m}, static_cast<std::uint64_t>(rng.integer(0, 1 << 30)));
    // Nonzero biases so both ELU branches are exercised.
    for (auto* chain : {&ae.encoder(), &ae.decoder()})
        for (auto& layer : *chain) layer.biases = rng.vec(layer.biases.size(), -0.5, 0.5);
    return ae;
}

/// Parameters in a fixed order: encoder then decoder, weights then biases.
inline Vec flatten(const hamroc::MlpAutoencoder& ae) {
    std::vector<double> out;
    for (const hamroc::LayerChain* chain : {&ae.encoder(), &ae.decoder()})
        for (const hamroc::DenseLayer& l : *chain) {
            for (Eigen::Index k = 0; k < l.weights.size(); ++k) out.push_back(l.weights.data()[k]);
            for (Eigen::Index k = 0; k < l.biases.size(); ++k) out.push_back(l.biases[k]);
        }
    return Eigen::Map<Vec>(out.data(), static_cast<Eigen::Index>(out.size()));
}

inline Vec flatten(const hamroc::AutoencoderGrads& g) {
    std::vector<double> out;
    for (const std::vector<hamroc::LayerGrad>* chain : {&g.encoder, &g.decoder})
        for (const hamroc::LayerGrad& l : *chain) {
            for (Eigen::Index k = 0; k < l.weights.size(); ++k) out.push_back(l.weights.data()[k]);
            for (Eigen::Index k = 0; k < l.biases.size(); ++k) out.push_back(l.biases[k]);
        }
    return Eigen::Map<Vec>(out.data(), static_cast<Eigen::Index>(out.size()));
}

inline void unflatten(hamroc::MlpAutoencoder& ae, const Vec& theta) {
    Eigen::Index at = 0;
    for (hamroc::LayerChain* chain : {&ae.encoder(), &ae.decoder()})
        for (hamroc::DenseLayer& l : *chain) {
            for (Eigen::Index k = 0; k < l.weights.size(); ++k) l.weights.data()[k] = theta[at++];
            for (Eigen::Index k = 0; k < l.biases.size(); ++k) l.biases[k] = theta[at++];
        }
}

inline double sum_sq_weights(const hamroc::MlpAutoencoder& ae) {
    double s = 0.0;
    for (const hamroc::LayerChain* chain : {&ae.encoder(), &ae.decoder()})
        for (const hamroc::DenseLayer& l : *chain) s += l.weights.squaredNorm();
    return s;
}

}  // namespace testsupport
