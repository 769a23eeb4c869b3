#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "hamroc/io.hpp"
#include "hamroc/msd_system.hpp"
#include "support.hpp"

using namespace hamroc;
using namespace testsupport;

namespace {

GeneratorConfig single_cell(CellShape shape) {
    GeneratorConfig cfg;
    cfg.seed = 3;
    cfg.n_base_cells = 1;
    cfg.lateral_attach_probability = 0.0;
    cfg.first_cell = shape;
    return cfg;
}

GeneratorConfig paper_scale() {
    GeneratorConfig cfg;
    cfg.seed = 1;
    cfg.n_base_cells = 60;
    cfg.lateral_cells = 2;
    cfg.lateral_attach_probability = 0.5;
    return cfg;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoFailure;
}

}  // namespace

TEST_CASE("single square cell template") {
    const MassSpringNetwork net = generate_network(single_cell(CellShape::Square));
    CHECK(net.node_count() == 4);
    CHECK(net.edge_count() == 5);
    CHECK(net.dof_count() == 4);
}

TEST_CASE("single triangle cell template") {
    const MassSpringNetwork net = generate_network(single_cell(CellShape::Triangle));
    CHECK(net.node_count() == 3);
    CHECK(net.edge_count() == 3);
}

TEST_CASE("generator is deterministic and seed dependent") {
    GeneratorConfig cfg;
    cfg.seed = 42;
    const std::string a = dump_json(to_json(generate_network(cfg)));
    const std::string b = dump_json(to_json(generate_network(cfg)));
    CHECK(a == b);
    cfg.seed = 43;
    CHECK(dump_json(to_json(generate_network(cfg))) != a);
}

TEST_CASE("generated networks satisfy the invariants") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GeneratorConfig cfg;
        cfg.seed = seed;
        cfg.n_base_cells = 2 + static_cast<int>(seed % 7);
        cfg.lateral_cells = 1 + static_cast<int>(seed % 2);
        const MassSpringNetwork net = generate_network(cfg);
        std::size_t pinned = 0;
        for (const Node& n : net.nodes()) {
            CHECK(n.mass >= cfg.mass_range.lo);
            CHECK(n.mass <= cfg.mass_range.hi);
            if (n.pinned) {
                ++pinned;
                CHECK(n.x0 == 0.0);  // the pinned top edge
            }
        }
        CHECK(pinned == 2);
        CHECK(net.dof_count() == 2 * (net.node_count() - pinned));
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const Edge& e : net.edges()) {
            CHECK(e.stiffness >= cfg.stiffness_range.lo);
            CHECK(e.stiffness <= cfg.stiffness_range.hi);
            CHECK(e.damping >= cfg.damping_range.lo);
            CHECK(e.damping <= cfg.damping_range.hi);
            const Node& a = net.nodes()[e.i];
            const Node& b = net.nodes()[e.j];
            CHECK(e.rest_length == doctest::Approx(std::hypot(a.x0 - b.x0, a.y0 - b.y0)).epsilon(1e-12));
            CHECK(seen.insert({std::min(e.i, e.j), std::max(e.i, e.j)}).second);
        }
        // Rest geometry is an equilibrium without gravity.
        CHECK(potential_gradient(net, {0.0, 0.0}, rest_configuration(net)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("paper-scale generator config") {
    const MassSpringNetwork net = generate_network(paper_scale());
    CHECK(net.node_count() >= 200);
    CHECK(net.node_count() <= 205);
    const Mat m = mass_matrix(net);
    CHECK(m.rows() == static_cast<Eigen::Index>(net.dof_count()));
    CHECK(std::abs(static_cast<int>(net.dof_count()) - 400) <= 10);
}

TEST_CASE("generator rejects bad configs") {
    GeneratorConfig cfg;
    cfg.mass_range = {0.3, 0.1};
    CHECK(code_of([&] { generate_network(cfg); }) == ErrorCode::InvalidConfig);
    cfg = {};
    cfg.stiffness_range = {0.0, 1.0};
    CHECK(code_of([&] { generate_network(cfg); }) == ErrorCode::InvalidConfig);
    cfg = {};
    cfg.damping_range = {0.0, 0.0};
    CHECK_NOTHROW(generate_network(cfg));
    cfg = {};
    cfg.n_base_cells = 0;
    CHECK(code_of([&] { generate_network(cfg); }) == ErrorCode::InvalidConfig);
    cfg = {};
    cfg.lateral_attach_probability = 1.5;
    CHECK(code_of([&] { generate_network(cfg); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("network constructor validates invariants") {
    auto make = [](std::vector<Node> nodes, std::vector<Edge> edges) {
        return [=] { MassSpringNetwork(nodes, edges); };
    };
    const Node a{1, 0, 0, false}, b{1, 1, 0, false}, c{1, 2, 0, false};
    CHECK(code_of(make({a, b}, {{0, 0, 1, 0, 1}})) == ErrorCode::InvalidConfig);               // self loop
    CHECK(code_of(make({a, b}, {{0, 1, 1, 0, 1}, {1, 0, 1, 0, 1}})) == ErrorCode::InvalidConfig);  // duplicate
    CHECK(code_of(make({a, b, c}, {{0, 1, 1, 0, 1}})) == ErrorCode::InvalidConfig);            // disconnected
    CHECK(code_of(make({{0, 0, 0, false}, b}, {{0, 1, 1, 0, 1}})) == ErrorCode::InvalidConfig);  // mass
    CHECK(code_of(make({a, b}, {{0, 1, 0, 0, 1}})) == ErrorCode::InvalidConfig);               // stiffness
    CHECK(code_of(make({a, b}, {{0, 1, 1, -1, 1}})) == ErrorCode::InvalidConfig);              // damping
    CHECK(code_of(make({a, b}, {{0, 1, 1, 0, 0}})) == ErrorCode::InvalidConfig);               // rest length
}

TEST_CASE("gravity field normalization") {
    const GravityField g = GravityField::make(9.81, -kPi / 2);
    CHECK(g.theta == doctest::Approx(1.5 * kPi));
    CHECK(GravityField::make(1, 2 * kPi).theta == doctest::Approx(0.0));
    CHECK(GravityField::make(1, 5 * kPi).theta == doctest::Approx(kPi));
    CHECK(code_of([] { GravityField::make(-1, 0); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("potential_energy hand cases") {
    const MassSpringNetwork rest = two_mass(2.0, 1.0);
    const Vec q = rest_configuration(rest);
    CHECK(potential_energy(rest, {0, 0}, q) == doctest::Approx(0.0));

    const MassSpringNetwork stretched = two_mass(2.0, 0.5);
    CHECK(potential_energy(stretched, {0, 0}, q) == doctest::Approx(0.25));

    const MassSpringNetwork single({{1.0, 0.0, 1.0, false}}, {});
    CHECK(potential_energy(single, GravityField::make(9.81, 0.0), rest_configuration(single)) ==
          doctest::Approx(9.81));

    CHECK(code_of([&] { potential_energy(rest, {0, 0}, Vec::Zero(3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("potential_gradient hand cases") {
    const MassSpringNetwork stretched = two_mass(2.0, 0.5);
    const Vec g = potential_gradient(stretched, {0, 0}, rest_configuration(stretched));
    // k (l - l0) = 1 N along x, pulling the nodes together.
    CHECK(g[0] == doctest::Approx(-1.0));
    CHECK(g[2] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(0.0));
    CHECK(g[3] == doctest::Approx(0.0));

    Vec collapsed = Vec::Zero(4);
    CHECK(code_of([&] { potential_gradient(stretched, {0, 0}, collapsed); }) == ErrorCode::DegenerateSpring);
    CHECK(code_of([&] { damping_matrix(stretched, collapsed); }) == ErrorCode::DegenerateSpring);
}

TEST_CASE("potential_gradient matches finite differences") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const MassSpringNetwork net = random_network(rng);
        const GravityField grav = GravityField::make(rng.uniform(0, 15), rng.uniform(0, 2 * kPi));
        const Vec q = rest_configuration(net) + rng.vec(static_cast<Eigen::Index>(net.dof_count()), -0.2, 0.2);
        const Vec analytic = potential_gradient(net, grav, q);
        const Vec fd = fd_gradient([&](const Vec& x) { return potential_energy(net, grav, x); }, q);
        REQUIRE(rel_error(analytic, fd, 1.0) <= 1e-6);
    }
}

TEST_CASE("potential_energy is invariant under node relabeling") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const MassSpringNetwork net = random_network(rng);
        const GravityField grav = GravityField::make(9.81, rng.uniform(0, 2 * kPi));
        const Vec q = rest_configuration(net) + rng.vec(static_cast<Eigen::Index>(net.dof_count()), -0.2, 0.2);

        std::vector<std::size_t> perm(net.node_count());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng.engine);  // perm[new] = old
        std::vector<std::size_t> inverse(perm.size());
        for (std::size_t k = 0; k < perm.size(); ++k) inverse[perm[k]] = k;

        std::vector<Node> nodes;
        for (std::size_t k : perm) nodes.push_back(net.nodes()[k]);
        std::vector<Edge> edges;
        for (Edge e : net.edges()) {
            e.i = inverse[e.i];
            e.j = inverse[e.j];
            edges.push_back(e);
        }
        const MassSpringNetwork relabeled(nodes, edges);
        Vec q2(q.size());
        for (std::size_t k = 0; k < perm.size(); ++k) {
            const auto dst = relabeled.dof_of(k);
            if (!dst) continue;
            const auto src = *net.dof_of(perm[k]);
            q2.segment(static_cast<Eigen::Index>(*dst), 2) = q.segment(static_cast<Eigen::Index>(src), 2);
        }
        CHECK(potential_energy(relabeled, grav, q2) == doctest::Approx(potential_energy(net, grav, q)).epsilon(1e-12));
    }
}

TEST_CASE("mass_matrix") {
    const MassSpringNetwork net = two_mass(1.0, 1.0, 0.0, 1.0, 3.0);
    Mat expected = Mat::Zero(4, 4);
    expected.diagonal() << 1, 1, 3, 3;
    CHECK((mass_matrix(net) - expected).norm() == 0.0);
    CHECK((mass_matrix(two_mass()) - Mat::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("damping_matrix hand case and PSD property") {
    const MassSpringNetwork net = two_mass(1.0, 1.0, 1.0);
    const Mat d = damping_matrix(net, rest_configuration(net));
    Mat expected = Mat::Zero(4, 4);
    expected(0, 0) = expected(2, 2) = 1.0;
    expected(0, 2) = expected(2, 0) = -1.0;
    CHECK((d - expected).cwiseAbs().maxCoeff() < 1e-15);

    const MassSpringNetwork undamped = two_mass(1.0, 1.0, 0.0);
    CHECK(damping_matrix(undamped, rest_configuration(undamped)).norm() == 0.0);

    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const MassSpringNetwork r = random_network(rng);
        const Vec q = rest_configuration(r) + rng.vec(static_cast<Eigen::Index>(r.dof_count()), -0.2, 0.2);
        const Mat dr = damping_matrix(r, q);
        CHECK((dr - dr.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        for (int k = 0; k < 100; ++k) {
            const Vec x = rng.vec(dr.rows());
            REQUIRE(x.dot(dr * x) >= -1e-12);
            REQUIRE((damping_force(r, q, x) - dr * x).norm() <= 1e-10 * (1.0 + (dr * x).norm()));
        }
    }
}

TEST_CASE("actuation_matrix") {
    const MassSpringNetwork net({{1, 0, 0, false}, {1, 1, 0, false}, {1, 2, 0, false}},
                                {{0, 1, 1, 0, 1}, {1, 2, 1, 0, 1}});
    const Mat g = actuation_matrix(net, 1);
    CHECK(g.rows() == 6);
    CHECK(g.cols() == 2);
    CHECK(g(2, 0) == 1.0);
    CHECK(g(3, 1) == 1.0);
    CHECK(g.cwiseAbs().sum() == 2.0);
    CHECK((g.transpose() * g - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK(code_of([&] { actuation_matrix(net, 3); }) == ErrorCode::IndexOutOfRange);
    const MassSpringNetwork pinned = single_free_node();
    CHECK(code_of([&] { actuation_matrix(pinned, 0); }) == ErrorCode::PinnedNode);
    CHECK((actuation_matrix(pinned, 2) - Mat::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("hamiltonian") {
    const MassSpringNetwork net = two_mass(2.0, 0.5);
    const GravityField grav = GravityField::make(9.81, 0.3);
    const Vec q = rest_configuration(net);
    CHECK(hamiltonian(net, grav, q, Vec::Zero(4)) == doctest::Approx(potential_energy(net, grav, q)));
    Vec p = Vec::Zero(4);
    p[0] = 1.0;
    CHECK(kinetic_energy(net, p) == doctest::Approx(0.5));
    Rng rng(14);
    for (int k = 0; k < 50; ++k) {
        const Vec pr = rng.vec(4, -3, 3);
        CHECK(hamiltonian(net, grav, q, pr) >= potential_energy(net, grav, q));
    }
    CHECK(code_of([&] { hamiltonian(net, grav, q, Vec::Zero(3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("pinned nodes hold their rest position") {
    const MassSpringNetwork net = single_free_node();
    CHECK(net.dof_count() == 2);
    CHECK_FALSE(net.dof_of(0).has_value());
    CHECK(*net.dof_of(2) == 0);
    Vec q(2);
    q << 3.0, 4.0;
    CHECK(net.position(q, 0) == Eigen::Vector2d(0.0, 0.5));
    CHECK(net.position(q, 2) == Eigen::Vector2d(3.0, 4.0));
    CHECK(code_of([&] { net.dof_of(7); }) == ErrorCode::IndexOutOfRange);
}
