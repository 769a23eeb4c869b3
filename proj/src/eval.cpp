#include "hamroc/eval.hpp"

#include <cmath>
#include <random>

#include "hamroc/stats.hpp"

namespace hamroc {

namespace {

void fill_bands(EvalReport& report) {
    if (report.trajectories.empty()) return;
    std::size_t steps = report.trajectories.front().q.size();
    for (const TrajectoryErrors& e : report.trajectories) steps = std::min(steps, e.q.size());
    auto band_at = [&](Band& band, auto member) {
        band = {};
        for (std::size_t k = 0; k < steps; ++k) {
            std::vector<double> v;
            for (const TrajectoryErrors& e : report.trajectories) v.push_back((e.*member)[k]);
            band.p20.push_back(percentile(v, 20.0));
            band.median.push_back(percentile(v, 50.0));
            band.p80.push_back(percentile(v, 80.0));
        }
    };
    band_at(report.q, &TrajectoryErrors::q);
    band_at(report.q_dot, &TrajectoryErrors::q_dot);
    band_at(report.energy, &TrajectoryErrors::energy);
    report.t.resize(steps);
}

void check_trajectories(const ReducedSystem& rs, const std::vector<Trajectory>& trajectories) {
    require(!trajectories.empty(), ErrorCode::InvalidConfig, "no trajectories to evaluate");
    for (const Trajectory& tr : trajectories) {
        require(!tr.states.empty(), ErrorCode::InvalidConfig, "empty trajectory");
        require(static_cast<std::size_t>(tr.states.front().q.size()) == rs.network().dof_count(),
                ErrorCode::DimensionMismatch, "trajectory dimension differs from the network");
    }
}

}  // namespace

double EvalReport::mean_q() const {
    std::vector<double> all;
    for (const auto& e : trajectories) all.insert(all.end(), e.q.begin(), e.q.end());
    return all.empty() ? 0.0 : mean(all);
}

double EvalReport::mean_energy() const {
    std::vector<double> all;
    for (const auto& e : trajectories) all.insert(all.end(), e.energy.begin(), e.energy.end());
    return all.empty() ? 0.0 : mean(all);
}

double EvalReport::median_relative_error() const {
    std::vector<double> v;
    for (const auto& e : trajectories) v.push_back(e.relative_error);
    return v.empty() ? 0.0 : median(v);
}

EvalReport evaluate_pointwise(const ReducedSystem& rs, const std::vector<Trajectory>& trajectories) {
    check_trajectories(rs, trajectories);
    const MassSpringNetwork& net = rs.network();
    const double n = static_cast<double>(net.dof_count());
    const Vec rest = rest_configuration(net);
    EvalReport report;
    report.mode = "pointwise";
    report.dof = net.dof_count();
    for (const Trajectory& tr : trajectories) {
        const ReducedSystem model = rs.with_gravity(tr.gravity);
        TrajectoryErrors err;
        double rel = 0.0;
        for (const FullState& s : tr.states) {
            const Vec q_dot = velocity(net, s.p);
            const PointwiseReconstruction r = pointwise_compress(model, s.q, q_dot);
            const double h = hamiltonian(net, tr.gravity, s.q, s.p);
            err.q.push_back((s.q - r.q).squaredNorm() / n);
            err.q_dot.push_back((q_dot - r.q_dot).squaredNorm() / n);
            err.energy.push_back((h - r.energy) * (h - r.energy));
            const double scale = (s.q - rest).norm();
            rel += scale > 0.0 ? (r.q - s.q).norm() / scale : 0.0;
        }
        err.relative_error = rel / static_cast<double>(tr.states.size());
        report.trajectories.push_back(std::move(err));
    }
    fill_bands(report);
    for (std::size_t k = 0; k < report.t.size(); ++k) report.t[k] = trajectories.front().states[k].t;
    return report;
}

EvalReport evaluate_compressed(const ReducedSystem& rs, const std::vector<Trajectory>& trajectories) {
    check_trajectories(rs, trajectories);
    const MassSpringNetwork& net = rs.network();
    const double n = static_cast<double>(net.dof_count());
    const Vec rest = rest_configuration(net);
    EvalReport report;
    report.mode = "compressed";
    report.dof = net.dof_count();
    for (const Trajectory& tr : trajectories) {
        const ReducedSystem model = rs.with_gravity(tr.gravity);
        const FullState& first = tr.states.front();
        const LatentState start = lift_state(model, first.q, velocity(net, first.p));
        const double duration = tr.states.back().t - first.t;
        const LatentTrajectory latent =
            simulate_reduced(model, start.xi, start.pi, {duration, tr.dt, tr.sample_dt});
        const ReconstructedTrajectory rec = reconstruct(model, latent);
        TrajectoryErrors err;
        double rel = 0.0;
        const std::size_t steps = std::min(rec.full.states.size(), tr.states.size());
        for (std::size_t k = 0; k < steps; ++k) {
            const FullState& s = tr.states[k];
            const Vec q_dot = velocity(net, s.p);
            const double h = hamiltonian(net, tr.gravity, s.q, s.p);
            err.q.push_back((s.q - rec.full.states[k].q).squaredNorm() / n);
            err.q_dot.push_back((q_dot - rec.q_dot[k]).squaredNorm() / n);
            err.energy.push_back((h - rec.eta[k]) * (h - rec.eta[k]));
            const double scale = (s.q - rest).norm();
            rel += scale > 0.0 ? (rec.full.states[k].q - s.q).norm() / scale : 0.0;
        }
        err.relative_error = rel / static_cast<double>(steps);
        report.trajectories.push_back(std::move(err));
    }
    fill_bands(report);
    for (std::size_t k = 0; k < report.t.size(); ++k) report.t[k] = trajectories.front().states[k].t;
    return report;
}

SweepResult compression_sweep(const ConfigurationDataset& train_set,
                              const ConfigurationDataset& valid_set,
                              const ConfigurationDataset& test_set,
                              const std::vector<std::size_t>& latent_sizes,
                              const TrainConfig& cfg, std::uint64_t init_seed) {
    require(!train_set.empty(), ErrorCode::InvalidConfig, "training set is empty");
    const std::size_t n = static_cast<std::size_t>(train_set.configurations.front().size());
    SweepResult out;
    for (std::size_t m : latent_sizes) {
        require(m >= 1, ErrorCode::InvalidConfig, "latent sizes must be >= 1");
        const MlpAutoencoder init = MlpAutoencoder::initialize(ArchitectureSpec::scaled(n, m), init_seed);
        TrainResult r = train(init, train_set, &valid_set, cfg);
        SweepRow row;
        row.latent_dim = m;
        row.train_mse = mean_reconstruction_loss(r.model, train_set.configurations);
        row.valid_mse = mean_reconstruction_loss(r.model, valid_set.configurations);
        row.test_mse = mean_reconstruction_loss(r.model, test_set.configurations);
        row.test_mse_per_dof = row.test_mse / static_cast<double>(n);
        out.rows.push_back(row);
        out.models.push_back(std::move(r.model));
    }
    return out;
}

std::vector<NoiseRow> noise_robustness(const MlpAutoencoder& ae, const std::vector<Vec>& configs,
                                       const std::vector<double>& sigmas, std::uint64_t seed,
                                       int repeats) {
    require(!configs.empty(), ErrorCode::InvalidConfig, "no configurations for the noise study");
    require(repeats >= 1, ErrorCode::InvalidConfig, "repeats must be >= 1");
    const double n = static_cast<double>(ae.input_dim());
    std::vector<NoiseRow> rows;
    for (std::size_t si = 0; si < sigmas.size(); ++si) {
        const double sigma = sigmas[si];
        require(sigma >= 0.0, ErrorCode::InvalidConfig, "noise level must be >= 0");
        double total = 0.0;
        for (int r = 0; r < repeats; ++r) {
            std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
            std::normal_distribution<double> noise(0.0, 1.0);
            for (const Vec& q : configs) {
                Vec noisy = q;
                for (Eigen::Index k = 0; k < noisy.size(); ++k) noisy[k] += sigma * noise(rng);
                total += (q - decode(ae, encode(ae, noisy))).squaredNorm();
            }
        }
        const double mse = total / static_cast<double>(configs.size() * static_cast<std::size_t>(repeats));
        rows.push_back({sigma, mse, mse / n});
    }
    return rows;
}

Vec latent_ranges(const MlpAutoencoder& ae, const std::vector<Vec>& range_configs) {
    require(!range_configs.empty(), ErrorCode::InvalidConfig, "no configurations for latent ranges");
    Vec lo = Vec::Constant(ae.latent_dim(), std::numeric_limits<double>::infinity());
    Vec hi = -lo;
    for (const Vec& q : range_configs) {
        const Vec xi = encode(ae, q);
        lo = lo.cwiseMin(xi);
        hi = hi.cwiseMax(xi);
    }
    return hi - lo;
}

std::vector<LatentSweepEntry> latent_sweep(const MlpAutoencoder& ae, const std::vector<Vec>& base_configs,
                                           const std::vector<Vec>& range_configs,
                                           const std::vector<double>& fractions) {
    const Vec range = latent_ranges(ae, range_configs);
    std::vector<LatentSweepEntry> out;
    for (std::size_t b = 0; b < base_configs.size(); ++b) {
        const Vec xi0 = encode(ae, base_configs[b]);
        for (std::size_t i = 0; i < ae.latent_dim(); ++i) {
            for (double f : fractions) {
                Vec xi = xi0;
                xi[static_cast<Eigen::Index>(i)] += f * range[static_cast<Eigen::Index>(i)];
                out.push_back({b, i, f, xi, decode(ae, xi)});
            }
        }
    }
    return out;
}

}  // namespace hamroc
