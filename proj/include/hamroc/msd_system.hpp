#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hamroc/numerics.hpp"

namespace hamroc {

using NodeIndex = std::size_t;

struct Node {
    double mass = 1.0;  // kg
    double x0 = 0.0;    // rest position, m
    double y0 = 0.0;
    bool pinned = false;
};

struct Edge {
    NodeIndex i = 0;
    NodeIndex j = 0;
    double stiffness = 1.0;    // N/m
    double damping = 0.0;      // N s/m
    double rest_length = 1.0;  // m
};

/// Uniform gravity. The potential of node i is m_i g (x sin(theta) + y cos(theta)),
/// so theta = -pi/2 pulls towards +x and theta = 0 pulls towards -y.
struct GravityField {
    double g = 0.0;
    double theta = 0.0;  // normalized to [0, 2 pi)

    static GravityField make(double g, double theta);
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

enum class CellShape { Square, Triangle };

struct GeneratorConfig {
    std::uint64_t seed = 0;
    int n_base_cells = 8;
    double lateral_attach_probability = 0.35;
    double cell_size = 1.0;  // m
    Interval mass_range{0.05, 0.2};
    Interval stiffness_range{50.0, 150.0};
    Interval damping_range{0.5, 2.0};
    /// Cells per lateral structure.
    int lateral_cells = 1;
    CellShape first_cell = CellShape::Square;
};

struct NetworkMeta {
    std::optional<GeneratorConfig> generator;
    /// Nodes that belong to lateral structures (generated networks only).
    std::vector<NodeIndex> lateral_nodes;
};

/// Planar mass-spring-damper network. Pinned nodes stay at their rest
/// position and carry no degrees of freedom; every free node owns two
/// consecutive entries (x, y) of the configuration vector, in node order.
class MassSpringNetwork {
public:
    MassSpringNetwork(std::vector<Node> nodes, std::vector<Edge> edges, NetworkMeta meta = {});

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const NetworkMeta& meta() const { return meta_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    /// Configuration dimension n (two per free node).
    std::size_t dof_count() const { return dof_count_; }
    /// Offset of the node's x coordinate in q, or nullopt for pinned nodes.
    std::optional<std::size_t> dof_of(NodeIndex node) const;
    /// Node owning configuration entries 2k and 2k+1.
    NodeIndex node_of_free(std::size_t k) const { return free_nodes_[k]; }

    /// Position of a node under configuration q (rest position when pinned).
    Eigen::Vector2d position(const Vec& q, NodeIndex node) const;

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    NetworkMeta meta_;
    std::vector<std::ptrdiff_t> dof_;
    std::vector<NodeIndex> free_nodes_;
    std::size_t dof_count_ = 0;
};

MassSpringNetwork generate_network(const GeneratorConfig& cfg);

/// Rest configuration of the free nodes.
Vec rest_configuration(const MassSpringNetwork& net);

/// Current spring lengths l_j(q).
Vec spring_lengths(const MassSpringNetwork& net, const Vec& q);

double potential_energy(const MassSpringNetwork& net, const GravityField& grav, const Vec& q);
Vec potential_gradient(const MassSpringNetwork& net, const GravityField& grav, const Vec& q);

Vec mass_diagonal(const MassSpringNetwork& net);
Mat mass_matrix(const MassSpringNetwork& net);

/// D(q) = sum_j c_j grad(l_j) grad(l_j)^T.
Mat damping_matrix(const MassSpringNetwork& net, const Vec& q);
/// D(q) v without forming D.
Vec damping_force(const MassSpringNetwork& net, const Vec& q, const Vec& v);

/// Selection matrix G (n x 2) for a force applied to node `actuated`.
Mat actuation_matrix(const MassSpringNetwork& net, NodeIndex actuated);

double kinetic_energy(const MassSpringNetwork& net, const Vec& p);
double hamiltonian(const MassSpringNetwork& net, const GravityField& grav, const Vec& q, const Vec& p);

}  // namespace hamroc
