#include "hamroc/reduction.hpp"

#include <cmath>

namespace hamroc {

/// Decoder quantities shared by every latent operation at one xi.
struct LatentTerms {
    Vec q;
    Mat jac;    // n x m
    Mat inertia;  // M_eta

    LatentTerms(const ReducedSystem& rs, const Vec& xi) {
        if (static_cast<std::size_t>(xi.size()) != rs.latent_dim()) {
            fail(ErrorCode::DimensionMismatch, "latent configuration has dimension " +
                                                   std::to_string(xi.size()) + ", expected " +
                                                   std::to_string(rs.latent_dim()));
        }
        q = decode(rs.ae_, xi);
        jac = decoder_jacobian(rs.ae_, xi);
        const Mat raw = jac.transpose() * rs.mass_diag_.asDiagonal() * jac;
        inertia = 0.5 * (raw + raw.transpose());
    }

    SpdFactor factor() const {
        try {
            SpdFactor f(inertia);
            if (f.jitter() > 0.0) {
                Mat shifted = inertia;
                shifted.diagonal().array() += f.jitter();
                if (eigenvalue_ratio(shifted) < 1e-12) {
                    fail(ErrorCode::NotSPD, "latent inertia is ill-conditioned");
                }
            }
            return f;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NotSPD) {
                fail(ErrorCode::RankDeficientJacobian,
                     "latent inertia is singular: decoder Jacobian lost column rank");
            }
            throw;
        }
    }
};

ReducedSystem::ReducedSystem(MassSpringNetwork net, GravityField gravity, MlpAutoencoder ae,
                             std::optional<NodeIndex> actuated)
    : net_(std::move(net)), gravity_(gravity), ae_(std::move(ae)), actuated_(actuated) {
    require(ae_.input_dim() == net_.dof_count(), ErrorCode::DimensionMismatch,
            "decoder output dimension " + std::to_string(ae_.input_dim()) +
                " differs from the network dimension " + std::to_string(net_.dof_count()));
    if (actuated_) {
        actuation_matrix(net_, *actuated_);
    }
    mass_diag_ = mass_diagonal(net_);
}

ReducedSystem ReducedSystem::with_gravity(const GravityField& g) const {
    ReducedSystem copy = *this;
    copy.gravity_ = g;
    return copy;
}

double latent_potential(const ReducedSystem& rs, const Vec& xi) {
    return potential_energy(rs.network(), rs.gravity(), decode(rs.autoencoder(), xi));
}

Vec latent_potential_gradient(const ReducedSystem& rs, const Vec& xi) {
    const LatentTerms terms(rs, xi);
    return terms.jac.transpose() * potential_gradient(rs.network(), rs.gravity(), terms.q);
}

Mat latent_mass_matrix(const ReducedSystem& rs, const Vec& xi) {
    const LatentTerms terms(rs, xi);
    terms.factor();
    return terms.inertia;
}

double latent_energy(const ReducedSystem& rs, const Vec& xi, const Vec& pi) {
    const LatentTerms terms(rs, xi);
    require(pi.size() == xi.size(), ErrorCode::DimensionMismatch,
            "latent momentum has wrong dimension");
    const Vec w = terms.factor().solve(pi);
    return 0.5 * pi.dot(w) + potential_energy(rs.network(), rs.gravity(), terms.q);
}

namespace {

/// grad_xi eta given precomputed terms and w = M_eta^{-1} pi.
Vec energy_gradient(const ReducedSystem& rs, const LatentTerms& terms, const Vec& xi, const Vec& w) {
    Vec grad = terms.jac.transpose() * potential_gradient(rs.network(), rs.gravity(), terms.q);
    if (w.squaredNorm() > 0.0) {
        // d/dxi_k of 1/2 pi^T M_eta^{-1} pi = -(dJ/dxi_k w)^T M J w, and by symmetry of the
        // decoder Hessian dJ/dxi_k w is column k of the directional derivative along w.
        const Mat h = decoder_jacobian_directional_derivative(rs.autoencoder(), xi, w);
        const Vec mjw = mass_diagonal(rs.network()).cwiseProduct(terms.jac * w);
        grad -= h.transpose() * mjw;
    }
    return grad;
}

}  // namespace

Vec latent_energy_gradient_xi(const ReducedSystem& rs, const Vec& xi, const Vec& pi) {
    const LatentTerms terms(rs, xi);
    require(pi.size() == xi.size(), ErrorCode::DimensionMismatch,
            "latent momentum has wrong dimension");
    const Vec w = terms.factor().solve(pi);
    return energy_gradient(rs, terms, xi, w);
}

Mat latent_dissipation(const ReducedSystem& rs, const Vec& xi) {
    const LatentTerms terms(rs, xi);
    const std::size_t m = rs.latent_dim();
    Mat delta = Mat::Zero(m, m);
    for (const Edge& e : rs.network().edges()) {
        const Eigen::Vector2d d = rs.network().position(terms.q, e.j) -
                                  rs.network().position(terms.q, e.i);
        const double len = d.norm();
        if (len <= 1e-9) {
            fail(ErrorCode::DegenerateSpring, "decoded configuration collapses a spring");
        }
        if (e.damping == 0.0) continue;
        const Eigen::Vector2d u = d / len;
        Vec g = Vec::Zero(m);  // J^T grad l_j
        if (auto di = rs.network().dof_of(e.i)) {
            g -= terms.jac.block(*di, 0, 2, m).transpose() * u;
        }
        if (auto dj = rs.network().dof_of(e.j)) {
            g += terms.jac.block(*dj, 0, 2, m).transpose() * u;
        }
        delta += e.damping * g * g.transpose();
    }
    return 0.5 * (delta + delta.transpose());
}

Mat latent_input_field(const ReducedSystem& rs, const Vec& xi) {
    if (!rs.actuated()) {
        fail(ErrorCode::InvalidConfig, "latent_input_field: reduced system has no actuated node");
    }
    const Mat jac = decoder_jacobian(rs.autoencoder(), xi);
    return jac.transpose() * actuation_matrix(rs.network(), *rs.actuated());
}

LatentDerivative reduced_rhs(const ReducedSystem& rs, const LatentState& state,
                             const std::optional<Vec>& u) {
    const LatentTerms terms(rs, state.xi);
    require(state.pi.size() == state.xi.size(), ErrorCode::DimensionMismatch,
            "latent momentum has wrong dimension");
    const Vec w = terms.factor().solve(state.pi);
    Vec pi_dot = -energy_gradient(rs, terms, state.xi, w);
    pi_dot -= terms.jac.transpose() * damping_force(rs.network(), terms.q, terms.jac * w);
    if (u) {
        if (!rs.actuated()) {
            fail(ErrorCode::InvalidConfig, "reduced_rhs: input given but no actuated node");
        }
        if (u->size() != 2) {
            fail(ErrorCode::DimensionMismatch, "reduced_rhs: input must be two-dimensional");
        }
        const std::size_t dof = *rs.network().dof_of(*rs.actuated());
        pi_dot += terms.jac.block(dof, 0, 2, terms.jac.cols()).transpose() * *u;
    }
    return {w, std::move(pi_dot)};
}

LatentTrajectory simulate_reduced(const ReducedSystem& rs, const Vec& xi0, const Vec& pi0,
                                  const SimOptions& opts,
                                  const std::optional<LatentLaw>& controller) {
    const std::size_t m = rs.latent_dim();
    if (static_cast<std::size_t>(xi0.size()) != m || static_cast<std::size_t>(pi0.size()) != m) {
        fail(ErrorCode::DimensionMismatch, "simulate_reduced: initial state has wrong dimension");
    }
    require_finite(xi0, "xi0");
    require_finite(pi0, "pi0");
    if (controller && !rs.actuated()) {
        fail(ErrorCode::InvalidConfig, "simulate_reduced: controller needs an actuated node");
    }
    const StepPlan plan = plan_steps(opts);

    LatentTrajectory traj;
    traj.dt = opts.dt;
    traj.sample_dt = opts.sample_dt;
    traj.gravity = rs.gravity();

    Vec y(2 * m);
    y << xi0, pi0;
    std::optional<Vec> held;
    const auto rhs = [&](double t, const Vec& state) {
        const LatentDerivative d = reduced_rhs(rs, {state.head(m), state.tail(m), t}, held);
        Vec out(2 * m);
        out << d.xi_dot, d.pi_dot;
        return out;
    };
    for (long step = 0;; ++step) {
        const double t = static_cast<double>(step) * opts.dt;
        LatentState current{y.head(m), y.tail(m), t};
        if (controller) {
            held = (*controller)(current);
            if (held->size() != 2 || !held->allFinite()) {
                fail(ErrorCode::NumericalBlowup, "latent controller produced an invalid input");
            }
        }
        if (step % plan.stride == 0) {
            traj.energy.push_back(latent_energy(rs, current.xi, current.pi));
            traj.states.push_back(std::move(current));
            if (controller) {
                traj.input_log.push_back(*held);
            }
        }
        if (step == plan.steps) {
            break;
        }
        y = rk4_step(rhs, y, t, opts.dt);
        if (!y.allFinite() || y.norm() > kBlowupThreshold) {
            fail(ErrorCode::NumericalBlowup,
                 "latent state diverged at t=" + std::to_string(t + opts.dt) +
                     "; try a smaller dt");
        }
    }
    return traj;
}

LatentState lift_state(const ReducedSystem& rs, const Vec& q, const Vec& q_dot) {
    const Vec xi = encode(rs.autoencoder(), q);
    const Vec xi_dot = encoder_jacobian(rs.autoencoder(), q) * q_dot;
    const LatentTerms terms(rs, xi);
    return {xi, terms.inertia * xi_dot, 0.0};
}

PointwiseReconstruction pointwise_compress(const ReducedSystem& rs, const Vec& q, const Vec& q_dot) {
    if (static_cast<std::size_t>(q.size()) != rs.network().dof_count() || q_dot.size() != q.size()) {
        fail(ErrorCode::DimensionMismatch, "pointwise_compress: state has wrong dimension");
    }
    PointwiseReconstruction r;
    r.xi = encode(rs.autoencoder(), q);
    r.xi_dot = encoder_jacobian(rs.autoencoder(), q) * q_dot;
    const LatentTerms terms(rs, r.xi);
    r.q = terms.q;
    r.q_dot = terms.jac * r.xi_dot;
    const Vec pi = terms.inertia * r.xi_dot;
    const Vec w = terms.factor().solve(pi);
    r.energy = 0.5 * pi.dot(w) + potential_energy(rs.network(), rs.gravity(), terms.q);
    return r;
}

ReconstructedTrajectory reconstruct(const ReducedSystem& rs, const LatentTrajectory& latent) {
    ReconstructedTrajectory out;
    out.full.dt = latent.dt;
    out.full.sample_dt = latent.sample_dt;
    out.full.gravity = latent.gravity;
    out.full.input_log = latent.input_log;
    out.full.actuated = rs.actuated();
    const Vec mass = mass_diagonal(rs.network());
    for (const LatentState& s : latent.states) {
        const LatentTerms terms(rs, s.xi);
        const Vec w = terms.factor().solve(s.pi);
        Vec q_dot = terms.jac * w;
        out.full.states.push_back({terms.q, mass.cwiseProduct(q_dot), s.t});
        out.q_dot.push_back(std::move(q_dot));
        out.eta.push_back(0.5 * s.pi.dot(w) +
                          potential_energy(rs.network(), rs.gravity(), terms.q));
    }
    return out;
}

}  // namespace hamroc
