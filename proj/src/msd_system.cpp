#include "hamroc/msd_system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>

namespace hamroc {

namespace {

constexpr double kDegenerateLength = 1e-9;

bool is_finite(double v) { return std::isfinite(v); }

void check_config_vector(const MassSpringNetwork& net, const Vec& q, const char* what) {
    if (static_cast<std::size_t>(q.size()) != net.dof_count()) {
        fail(ErrorCode::DimensionMismatch,
             std::string(what) + ": expected dimension " + std::to_string(net.dof_count()) +
                 ", got " + std::to_string(q.size()));
    }
}

struct SpringGeometry {
    Eigen::Vector2d unit;  // from node i towards node j
    double length;
};

SpringGeometry spring_geometry(const MassSpringNetwork& net, const Vec& q, const Edge& e,
                               bool require_nondegenerate) {
    const Eigen::Vector2d d = net.position(q, e.j) - net.position(q, e.i);
    const double len = d.norm();
    if (require_nondegenerate && len <= kDegenerateLength) {
        fail(ErrorCode::DegenerateSpring, "spring " + std::to_string(e.i) + "-" +
                                              std::to_string(e.j) + " has collapsed to zero length");
    }
    return {len > 0.0 ? Eigen::Vector2d(d / len) : Eigen::Vector2d::Zero(), len};
}

}  // namespace

GravityField GravityField::make(double g, double theta) {
    require(is_finite(g) && g >= 0.0, ErrorCode::InvalidConfig, "gravity intensity must be >= 0");
    require(is_finite(theta), ErrorCode::InvalidConfig, "gravity angle must be finite");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) {
        t += two_pi;
    }
    if (t >= two_pi) {
        t = 0.0;
    }
    return {g, t};
}

MassSpringNetwork::MassSpringNetwork(std::vector<Node> nodes, std::vector<Edge> edges,
                                     NetworkMeta meta)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), meta_(std::move(meta)) {
    require(!nodes_.empty(), ErrorCode::InvalidConfig, "network has no nodes");
    for (const Node& n : nodes_) {
        require(is_finite(n.mass) && n.mass > 0.0, ErrorCode::InvalidConfig, "node mass must be > 0");
        require(is_finite(n.x0) && is_finite(n.y0), ErrorCode::InvalidConfig,
                "node rest position must be finite");
    }
    std::set<std::pair<NodeIndex, NodeIndex>> seen;
    for (const Edge& e : edges_) {
        require(e.i < nodes_.size() && e.j < nodes_.size(), ErrorCode::InvalidConfig,
                "edge references a missing node");
        require(e.i != e.j, ErrorCode::InvalidConfig, "edge connects a node to itself");
        require(is_finite(e.stiffness) && e.stiffness > 0.0, ErrorCode::InvalidConfig,
                "spring stiffness must be > 0");
        require(is_finite(e.damping) && e.damping >= 0.0, ErrorCode::InvalidConfig,
                "damping must be >= 0");
        require(is_finite(e.rest_length) && e.rest_length > 0.0, ErrorCode::InvalidConfig,
                "rest length must be > 0");
        const auto key = std::minmax(e.i, e.j);
        require(seen.insert({key.first, key.second}).second, ErrorCode::InvalidConfig,
                "duplicate edge");
    }

    // Connectivity via union-find.
    std::vector<NodeIndex> parent(nodes_.size());
    for (NodeIndex i = 0; i < parent.size(); ++i) {
        parent[i] = i;
    }
    auto find = [&](NodeIndex x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t components = nodes_.size();
    for (const Edge& e : edges_) {
        const NodeIndex a = find(e.i);
        const NodeIndex b = find(e.j);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    require(components == 1, ErrorCode::InvalidConfig, "network graph is not connected");

    dof_.assign(nodes_.size(), -1);
    for (NodeIndex i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].pinned) {
            dof_[i] = static_cast<std::ptrdiff_t>(2 * free_nodes_.size());
            free_nodes_.push_back(i);
        }
    }
    dof_count_ = 2 * free_nodes_.size();
}

std::optional<std::size_t> MassSpringNetwork::dof_of(NodeIndex node) const {
    if (node >= nodes_.size()) {
        fail(ErrorCode::IndexOutOfRange, "node index " + std::to_string(node) + " out of range");
    }
    if (dof_[node] < 0) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(dof_[node]);
}

Eigen::Vector2d MassSpringNetwork::position(const Vec& q, NodeIndex node) const {
    const std::ptrdiff_t k = dof_[node];
    if (k < 0) {
        return {nodes_[node].x0, nodes_[node].y0};
    }
    return {q[k], q[k + 1]};
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

namespace {

struct Site {
    NodeIndex a;
    NodeIndex b;
    Eigen::Vector2d outward;
};

class Builder {
public:
    Builder(const GeneratorConfig& cfg, std::mt19937_64& rng) : cfg_(cfg), rng_(rng) {}

    NodeIndex add_node(const Eigen::Vector2d& p, bool pinned) {
        positions_.push_back(p);
        pinned_.push_back(pinned);
        return positions_.size() - 1;
    }

    void add_edge(NodeIndex a, NodeIndex b) { edges_.emplace_back(a, b); }

    bool clear_of_existing(const Eigen::Vector2d& p) const {
        const double min_dist = 0.5 * cfg_.cell_size;
        return std::all_of(positions_.begin(), positions_.end(),
                           [&](const Eigen::Vector2d& o) { return (o - p).norm() >= min_dist; });
    }

    /// Outward unit normal of edge (a, b), pointing away from `inside`.
    Eigen::Vector2d outward_normal(NodeIndex a, NodeIndex b, const Eigen::Vector2d& inside) const {
        const Eigen::Vector2d d = positions_[b] - positions_[a];
        Eigen::Vector2d n(-d.y(), d.x());
        n.normalize();
        const Eigen::Vector2d mid = 0.5 * (positions_[a] + positions_[b]);
        if (n.dot(mid - inside) < 0.0) {
            n = -n;
        }
        return n;
    }

    /// Extrudes a cell from `front`. Returns the new front, or nullopt if the
    /// cell would crowd existing nodes (only when `check_clearance`).
    std::optional<Site> extrude(CellShape shape, const Site& front, bool check_clearance,
                                std::vector<Site>& side_sites, std::vector<NodeIndex>& added) {
        const Eigen::Vector2d pa = positions_[front.a];
        const Eigen::Vector2d pb = positions_[front.b];
        const double s = (pb - pa).norm();
        if (shape == CellShape::Square) {
            const Eigen::Vector2d pa2 = pa + s * front.outward;
            const Eigen::Vector2d pb2 = pb + s * front.outward;
            if (check_clearance && !(clear_of_existing(pa2) && clear_of_existing(pb2))) {
                return std::nullopt;
            }
            const NodeIndex a2 = add_node(pa2, false);
            const NodeIndex b2 = add_node(pb2, false);
            added.push_back(a2);
            added.push_back(b2);
            add_edge(front.a, a2);
            add_edge(front.b, b2);
            add_edge(a2, b2);
            if (diagonal_flip_) {
                add_edge(front.b, a2);
            } else {
                add_edge(front.a, b2);
            }
            diagonal_flip_ = !diagonal_flip_;
            const Eigen::Vector2d centre = 0.25 * (pa + pb + pa2 + pb2);
            side_sites.push_back({front.a, a2, outward_normal(front.a, a2, centre)});
            side_sites.push_back({front.b, b2, outward_normal(front.b, b2, centre)});
            return Site{a2, b2, front.outward};
        }

        const Eigen::Vector2d apex = 0.5 * (pa + pb) + (std::sqrt(3.0) / 2.0) * s * front.outward;
        if (check_clearance && !clear_of_existing(apex)) {
            return std::nullopt;
        }
        const NodeIndex c = add_node(apex, false);
        added.push_back(c);
        add_edge(front.a, c);
        add_edge(front.b, c);
        const Eigen::Vector2d centre = (pa + pb + apex) / 3.0;
        Site left{front.a, c, outward_normal(front.a, c, centre)};
        Site right{front.b, c, outward_normal(front.b, c, centre)};
        // Continue along whichever slanted edge heads closer to the chain axis
        // (+x); alternate on ties so the chain zigzags around the axis.
        const double dl = left.outward.x();
        const double dr = right.outward.x();
        bool take_left;
        if (std::abs(dl - dr) < 1e-9) {
            take_left = zigzag_left_;
            zigzag_left_ = !zigzag_left_;
        } else {
            take_left = dl > dr;
        }
        side_sites.push_back(take_left ? right : left);
        return take_left ? left : right;
    }

    double uniform(const Interval& r) {
        if (r.hi == r.lo) {
            return r.lo;
        }
        std::uniform_real_distribution<double> dist(r.lo, r.hi);
        return dist(rng_);
    }

    bool bernoulli(double p) {
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        return dist(rng_) < p;
    }

    std::vector<Eigen::Vector2d> positions_;
    std::vector<bool> pinned_;
    std::vector<std::pair<NodeIndex, NodeIndex>> edges_;

private:
    const GeneratorConfig& cfg_;
    std::mt19937_64& rng_;
    bool diagonal_flip_ = false;
    bool zigzag_left_ = true;
};

void check_interval(const Interval& r, bool allow_zero_lower, const char* what) {
    const bool lower_ok = allow_zero_lower ? r.lo >= 0.0 : r.lo > 0.0;
    if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && lower_ok && r.hi >= r.lo)) {
        fail(ErrorCode::InvalidConfig, std::string("invalid ") + what + " range");
    }
}

}  // namespace

MassSpringNetwork generate_network(const GeneratorConfig& cfg) {
    require(cfg.n_base_cells >= 1, ErrorCode::InvalidConfig, "n_base_cells must be >= 1");
    require(cfg.lateral_attach_probability >= 0.0 && cfg.lateral_attach_probability <= 1.0,
            ErrorCode::InvalidConfig, "lateral_attach_probability must lie in [0, 1]");
    require(std::isfinite(cfg.cell_size) && cfg.cell_size > 0.0, ErrorCode::InvalidConfig,
            "cell_size must be > 0");
    require(cfg.lateral_cells >= 1, ErrorCode::InvalidConfig, "lateral_cells must be >= 1");
    check_interval(cfg.mass_range, false, "mass");
    check_interval(cfg.stiffness_range, false, "stiffness");
    check_interval(cfg.damping_range, true, "damping");

    std::mt19937_64 rng(cfg.seed);
    Builder b(cfg, rng);
    const double s = cfg.cell_size;

    // Pinned top edge; the chain grows along +x.
    const NodeIndex top_a = b.add_node({0.0, 0.5 * s}, true);
    const NodeIndex top_b = b.add_node({0.0, -0.5 * s}, true);
    b.add_edge(top_a, top_b);
    Site front{top_a, top_b, {1.0, 0.0}};

    std::vector<Site> sites;
    std::vector<NodeIndex> scratch;
    CellShape shape = cfg.first_cell;
    for (int k = 0; k < cfg.n_base_cells; ++k) {
        front = *b.extrude(shape, front, false, sites, scratch);
        shape = shape == CellShape::Square ? CellShape::Triangle : CellShape::Square;
    }

    std::vector<NodeIndex> lateral_nodes;
    for (const Site& site : sites) {
        if (!b.bernoulli(cfg.lateral_attach_probability)) {
            continue;
        }
        Site lateral_front = site;
        std::vector<Site> discarded;
        for (int c = 0; c < cfg.lateral_cells; ++c) {
            const CellShape lateral_shape = b.bernoulli(0.5) ? CellShape::Square : CellShape::Triangle;
            auto next = b.extrude(lateral_shape, lateral_front, true, discarded, lateral_nodes);
            if (!next) {
                break;
            }
            lateral_front = *next;
        }
    }

    std::vector<Node> nodes;
    nodes.reserve(b.positions_.size());
    for (NodeIndex i = 0; i < b.positions_.size(); ++i) {
        nodes.push_back({b.uniform(cfg.mass_range), b.positions_[i].x(), b.positions_[i].y(),
                         b.pinned_[i]});
    }
    std::vector<Edge> edges;
    edges.reserve(b.edges_.size());
    for (const auto& [i, j] : b.edges_) {
        const double k = b.uniform(cfg.stiffness_range);
        const double c = b.uniform(cfg.damping_range);
        const double l0 = (b.positions_[j] - b.positions_[i]).norm();
        edges.push_back({i, j, k, c, l0});
    }
    std::sort(lateral_nodes.begin(), lateral_nodes.end());
    return MassSpringNetwork(std::move(nodes), std::move(edges),
                             NetworkMeta{cfg, std::move(lateral_nodes)});
}

// ---------------------------------------------------------------------------
// Physical quantities
// ---------------------------------------------------------------------------

Vec rest_configuration(const MassSpringNetwork& net) {
    Vec q(net.dof_count());
    for (std::size_t k = 0; k < net.dof_count() / 2; ++k) {
        const Node& n = net.nodes()[net.node_of_free(k)];
        q[2 * k] = n.x0;
        q[2 * k + 1] = n.y0;
    }
    return q;
}

Vec spring_lengths(const MassSpringNetwork& net, const Vec& q) {
    check_config_vector(net, q, "spring_lengths");
    Vec out(net.edge_count());
    for (std::size_t j = 0; j < net.edge_count(); ++j) {
        const Edge& e = net.edges()[j];
        out[j] = (net.position(q, e.j) - net.position(q, e.i)).norm();
    }
    return out;
}

double potential_energy(const MassSpringNetwork& net, const GravityField& grav, const Vec& q) {
    check_config_vector(net, q, "potential_energy");
    const double st = std::sin(grav.theta);
    const double ct = std::cos(grav.theta);
    double gravity = 0.0;
    for (NodeIndex i = 0; i < net.node_count(); ++i) {
        const Eigen::Vector2d p = net.position(q, i);
        gravity += net.nodes()[i].mass * grav.g * (p.x() * st + p.y() * ct);
    }
    double elastic = 0.0;
    for (const Edge& e : net.edges()) {
        const double stretch = (net.position(q, e.j) - net.position(q, e.i)).norm() - e.rest_length;
        elastic += e.stiffness * stretch * stretch;
    }
    return gravity + 0.5 * elastic;
}

Vec potential_gradient(const MassSpringNetwork& net, const GravityField& grav, const Vec& q) {
    check_config_vector(net, q, "potential_gradient");
    Vec grad = Vec::Zero(net.dof_count());
    const double st = std::sin(grav.theta);
    const double ct = std::cos(grav.theta);
    for (std::size_t k = 0; k < net.dof_count() / 2; ++k) {
        const double m = net.nodes()[net.node_of_free(k)].mass;
        grad[2 * k] = m * grav.g * st;
        grad[2 * k + 1] = m * grav.g * ct;
    }
    for (const Edge& e : net.edges()) {
        const SpringGeometry sg = spring_geometry(net, q, e, true);
        const Eigen::Vector2d f = e.stiffness * (sg.length - e.rest_length) * sg.unit;
        if (auto di = net.dof_of(e.i)) {
            grad.segment<2>(*di) -= f;
        }
        if (auto dj = net.dof_of(e.j)) {
            grad.segment<2>(*dj) += f;
        }
    }
    return grad;
}

Vec mass_diagonal(const MassSpringNetwork& net) {
    Vec d(net.dof_count());
    for (std::size_t k = 0; k < net.dof_count() / 2; ++k) {
        d[2 * k] = d[2 * k + 1] = net.nodes()[net.node_of_free(k)].mass;
    }
    return d;
}

Mat mass_matrix(const MassSpringNetwork& net) {
    return Mat(mass_diagonal(net).asDiagonal());
}

Mat damping_matrix(const MassSpringNetwork& net, const Vec& q) {
    check_config_vector(net, q, "damping_matrix");
    const std::size_t n = net.dof_count();
    Mat d = Mat::Zero(n, n);
    for (const Edge& e : net.edges()) {
        const SpringGeometry sg = spring_geometry(net, q, e, true);
        if (e.damping == 0.0) {
            continue;
        }
        // grad l = (-u at i, +u at j)
        const std::optional<std::size_t> idx[2] = {net.dof_of(e.i), net.dof_of(e.j)};
        const double sign[2] = {-1.0, 1.0};
        for (int a = 0; a < 2; ++a) {
            if (!idx[a]) continue;
            for (int b = 0; b < 2; ++b) {
                if (!idx[b]) continue;
                d.block<2, 2>(*idx[a], *idx[b]) +=
                    e.damping * sign[a] * sign[b] * (sg.unit * sg.unit.transpose());
            }
        }
    }
    return d;
}

Vec damping_force(const MassSpringNetwork& net, const Vec& q, const Vec& v) {
    check_config_vector(net, q, "damping_force");
    check_config_vector(net, v, "damping_force");
    Vec out = Vec::Zero(net.dof_count());
    for (const Edge& e : net.edges()) {
        const SpringGeometry sg = spring_geometry(net, q, e, true);
        if (e.damping == 0.0) {
            continue;
        }
        const auto di = net.dof_of(e.i);
        const auto dj = net.dof_of(e.j);
        double rate = 0.0;  // d l / dt
        if (di) rate -= sg.unit.dot(v.segment<2>(*di));
        if (dj) rate += sg.unit.dot(v.segment<2>(*dj));
        const Eigen::Vector2d f = e.damping * rate * sg.unit;
        if (di) out.segment<2>(*di) -= f;
        if (dj) out.segment<2>(*dj) += f;
    }
    return out;
}

Mat actuation_matrix(const MassSpringNetwork& net, NodeIndex actuated) {
    if (actuated >= net.node_count()) {
        fail(ErrorCode::IndexOutOfRange, "actuated node " + std::to_string(actuated) +
                                             " out of range (" + std::to_string(net.node_count()) +
                                             " nodes)");
    }
    const auto dof = net.dof_of(actuated);
    if (!dof) {
        fail(ErrorCode::PinnedNode, "actuated node " + std::to_string(actuated) + " is pinned");
    }
    Mat g = Mat::Zero(net.dof_count(), 2);
    g(*dof, 0) = 1.0;
    g(*dof + 1, 1) = 1.0;
    return g;
}

double kinetic_energy(const MassSpringNetwork& net, const Vec& p) {
    check_config_vector(net, p, "kinetic_energy");
    return 0.5 * (p.array().square() / mass_diagonal(net).array()).sum();
}

double hamiltonian(const MassSpringNetwork& net, const GravityField& grav, const Vec& q,
                   const Vec& p) {
    return kinetic_energy(net, p) + potential_energy(net, grav, q);
}

}  // namespace hamroc
