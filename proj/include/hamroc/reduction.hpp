#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hamroc/autoencoder.hpp"
#include "hamroc/full_sim.hpp"

namespace hamroc {

struct LatentState {
    Vec xi;
    Vec pi;
    double t = 0.0;
};

struct LatentTrajectory {
    std::vector<LatentState> states;
    std::vector<double> energy;  // eta at each sample
    double dt = 0.0;
    double sample_dt = 0.0;
    GravityField gravity;
    std::vector<Vec> input_log;
};

/// Compressed Hamiltonian system induced by a decoder on a full-order
/// mass-spring network:
///   eta(xi, pi) = 1/2 pi^T M_eta(xi)^{-1} pi + V(D(xi)),
///   M_eta = J^T M J,  Gamma = J^T G,  Delta = J^T D(D(xi)) J,  J = dD/dxi.
class ReducedSystem {
public:
    ReducedSystem(MassSpringNetwork net, GravityField gravity, MlpAutoencoder ae,
                  std::optional<NodeIndex> actuated = std::nullopt);

    const MassSpringNetwork& network() const { return net_; }
    const GravityField& gravity() const { return gravity_; }
    const MlpAutoencoder& autoencoder() const { return ae_; }
    std::optional<NodeIndex> actuated() const { return actuated_; }
    std::size_t latent_dim() const { return ae_.latent_dim(); }

    ReducedSystem with_gravity(const GravityField& g) const;

private:
    MassSpringNetwork net_;
    GravityField gravity_;
    MlpAutoencoder ae_;
    std::optional<NodeIndex> actuated_;
    Vec mass_diag_;

    friend struct LatentTerms;
};

/// V_eta(xi) = V(D(xi)).
double latent_potential(const ReducedSystem& rs, const Vec& xi);
/// Gradient of V_eta: J^T grad V(D(xi)).
Vec latent_potential_gradient(const ReducedSystem& rs, const Vec& xi);
Mat latent_mass_matrix(const ReducedSystem& rs, const Vec& xi);
double latent_energy(const ReducedSystem& rs, const Vec& xi, const Vec& pi);
Vec latent_energy_gradient_xi(const ReducedSystem& rs, const Vec& xi, const Vec& pi);
Mat latent_dissipation(const ReducedSystem& rs, const Vec& xi);
Mat latent_input_field(const ReducedSystem& rs, const Vec& xi);

struct LatentDerivative {
    Vec xi_dot;
    Vec pi_dot;
};

/// xi_dot = M_eta^{-1} pi,  pi_dot = -grad_xi eta + Gamma u - Delta xi_dot.
LatentDerivative reduced_rhs(const ReducedSystem& rs, const LatentState& state,
                             const std::optional<Vec>& u = std::nullopt);

using LatentLaw = std::function<Vec(const LatentState&)>;

LatentTrajectory simulate_reduced(const ReducedSystem& rs, const Vec& xi0, const Vec& pi0,
                                  const SimOptions& opts,
                                  const std::optional<LatentLaw>& controller = std::nullopt);

/// (xi, pi) matching a full state: xi = E(q), pi = M_eta(xi) dE/dq q_dot.
LatentState lift_state(const ReducedSystem& rs, const Vec& q, const Vec& q_dot);

struct PointwiseReconstruction {
    Vec xi;
    Vec xi_dot;
    Vec q;
    Vec q_dot;
    double energy = 0.0;
};

PointwiseReconstruction pointwise_compress(const ReducedSystem& rs, const Vec& q, const Vec& q_dot);

struct ReconstructedTrajectory {
    Trajectory full;          // configurations D(xi) and momenta M J xi_dot
    std::vector<Vec> q_dot;   // reconstructed velocities
    std::vector<double> eta;  // latent energy
};

ReconstructedTrajectory reconstruct(const ReducedSystem& rs, const LatentTrajectory& latent);

}  // namespace hamroc
