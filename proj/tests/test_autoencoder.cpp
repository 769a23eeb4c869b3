#include "doctest.h"

#include "hamroc/autoencoder.hpp"
#include "support.hpp"

using namespace hamroc;
using namespace testsupport;

namespace {

DenseLayer layer(const Mat& w, const Vec& b, Activation a) {
    return {{static_cast<std::size_t>(w.cols()), static_cast<std::size_t>(w.rows()), a}, w, b};
}

// Straight loops, no Eigen products: an independent forward pass.
std::vector<double> hand_forward(const LayerChain& chain, std::vector<double> x) {
    for (const DenseLayer& l : chain) {
        std::vector<double> y(l.spec.out_dim);
        for (std::size_t i = 0; i < l.spec.out_dim; ++i) {
            double z = l.biases[static_cast<Eigen::Index>(i)];
            for (std::size_t j = 0; j < l.spec.in_dim; ++j)
                z += l.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x[j];
            y[i] = l.spec.activation == Activation::Elu ? (z > 0 ? z : std::exp(z) - 1.0) : z;
        }
        x = std::move(y);
    }
    return x;
}

ConfigurationDataset dataset_of(std::vector<Vec> configs) {
    ConfigurationDataset ds;
    ds.configurations = std::move(configs);
    ds.sources.resize(ds.configurations.size());
    return ds;
}

}  // namespace

TEST_CASE("elu values and derivatives") {
    CHECK(elu(0.0) == 0.0);
    CHECK(elu(1.0) == 1.0);
    CHECK(elu(-1.0) == doctest::Approx(-0.6321206).epsilon(1e-7));
    CHECK(elu_derivative(1.0) == 1.0);
    CHECK(elu_derivative(-1.0) == doctest::Approx(std::exp(-1.0)));
    // C1 at zero.
    CHECK(elu_derivative(0.0) == 1.0);
    CHECK(elu_derivative(-1e-12) == doctest::Approx(1.0));
    Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-4, 4);
        if (std::abs(x) < 1e-3) continue;
        const double h = 1e-6;
        CHECK(elu_derivative(x) == doctest::Approx((elu(x + h) - elu(x - h)) / (2 * h)).epsilon(1e-7));
        CHECK(elu_second_derivative(x) ==
              doctest::Approx((elu_derivative(x + h) - elu_derivative(x - h)) / (2 * h)).epsilon(1e-6).scale(1));
    }
    CHECK(activation_from_string("elu") == Activation::Elu);
    CHECK(activation_from_string(to_string(Activation::Linear)) == Activation::Linear);
    CHECK_THROWS_AS(activation_from_string("relu"), Error);
}

TEST_CASE("architecture and construction") {
    const ArchitectureSpec ref = ArchitectureSpec::scaled(400, 5);
    CHECK(ref.hidden == std::vector<std::size_t>{300, 200, 100});
    const ArchitectureSpec desk = ArchitectureSpec::scaled(36, 3);
    CHECK(desk.hidden == std::vector<std::size_t>{27, 18, 9});
    CHECK(desk.latent_dim == 3);

    const MlpAutoencoder ae = MlpAutoencoder::initialize(desk, 1);
    CHECK(ae.input_dim() == 36);
    CHECK(ae.latent_dim() == 3);
    REQUIRE(ae.encoder().size() == 4);
    REQUIRE(ae.decoder().size() == 4);
    CHECK(ae.encoder().back().spec.activation == Activation::Linear);
    CHECK(ae.decoder().back().spec.activation == Activation::Linear);
    CHECK(ae.encoder().front().spec.activation == Activation::Elu);
    CHECK(ae.decoder()[1].spec.out_dim == 18);
    for (const DenseLayer& l : ae.encoder()) {
        const double bound = std::sqrt(6.0 / static_cast<double>(l.spec.in_dim + l.spec.out_dim));
        CHECK(l.weights.cwiseAbs().maxCoeff() <= bound);
        CHECK(l.biases.isZero());
    }
    CHECK(flatten(MlpAutoencoder::initialize(desk, 1)) == flatten(ae));
    CHECK(flatten(MlpAutoencoder::initialize(desk, 2)) != flatten(ae));
    CHECK(ae.parameter_count() == static_cast<std::size_t>(flatten(ae).size()));

    CHECK_THROWS_AS(MlpAutoencoder({layer(Mat::Zero(2, 3), Vec::Zero(2), Activation::Linear)},
                                   {layer(Mat::Zero(4, 2), Vec::Zero(4), Activation::Linear)}),
                    Error);
    CHECK_THROWS_AS(MlpAutoencoder({layer(Mat::Zero(2, 3), Vec::Zero(2), Activation::Linear)},
                                   {layer(Mat::Zero(3, 1), Vec::Zero(3), Activation::Linear)}),
                    Error);
    CHECK_THROWS_AS(ArchitectureSpec::scaled(0, 2), Error);
}

TEST_CASE("encode and decode") {
    const MlpAutoencoder id = MlpAutoencoder::identity(4);
    const Vec q = Vec::LinSpaced(4, -1, 2);
    CHECK(encode(id, q) == q);
    CHECK(decode(id, q) == q);
    CHECK(reconstruction_loss(id, q) == 0.0);

    const Vec b = Vec::LinSpaced(4, 3, 6);
    const MlpAutoencoder constant({layer(Mat::Zero(2, 4), Vec::Zero(2), Activation::Linear)},
                                  {layer(Mat::Zero(4, 2), b, Activation::Linear)});
    CHECK(decode(constant, Vec::Random(2)) == b);
    const MlpAutoencoder zero({layer(Mat::Zero(2, 4), Vec::Zero(2), Activation::Linear)},
                              {layer(Mat::Zero(4, 2), Vec::Zero(4), Activation::Linear)});
    CHECK(reconstruction_loss(zero, q) == doctest::Approx(q.squaredNorm()));

    CHECK_THROWS_AS(encode(id, Vec::Zero(3)), Error);
    CHECK_THROWS_AS(decode(id, Vec::Zero(5)), Error);

    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::size_t>(rng.integer(2, 8));
        const auto m = static_cast<std::size_t>(rng.integer(1, 3));
        const MlpAutoencoder ae = random_autoencoder(rng, n, m, {static_cast<std::size_t>(rng.integer(2, 6))});
        const Vec x = rng.vec(static_cast<Eigen::Index>(n), -2, 2);
        const std::vector<double> xs(x.data(), x.data() + x.size());
        const std::vector<double> z = hand_forward(ae.encoder(), xs);
        const Vec xi = encode(ae, x);
        for (std::size_t i = 0; i < m; ++i) CHECK(xi[static_cast<Eigen::Index>(i)] == doctest::Approx(z[i]).epsilon(1e-12));
        const std::vector<double> r = hand_forward(ae.decoder(), z);
        const Vec rec = decode(ae, xi);
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(rec[static_cast<Eigen::Index>(i)] == doctest::Approx(r[i]).epsilon(1e-12));
            loss += (xs[i] - r[i]) * (xs[i] - r[i]);
        }
        CHECK(reconstruction_loss(ae, x) == doctest::Approx(loss).epsilon(1e-12));
    }
}

TEST_CASE("mean reconstruction loss averages per-sample sums") {
    const MlpAutoencoder zero({layer(Mat::Zero(1, 2), Vec::Zero(1), Activation::Linear)},
                              {layer(Mat::Zero(2, 1), Vec::Zero(2), Activation::Linear)});
    const std::vector<Vec> samples = {Vec::Constant(2, 1.0), Vec::Constant(2, 3.0)};
    CHECK(mean_reconstruction_loss(zero, samples) == doctest::Approx((2.0 + 18.0) / 2.0));
}

TEST_CASE("loss gradient closed form for a linear encoder") {
    Rng rng(43);
    const Mat w = rng.mat(3, 3);
    const Vec b = rng.vec(3);
    const Vec q = rng.vec(3);
    const double lambda = 0.01;
    const MlpAutoencoder ae({layer(w, b, Activation::Linear)},
                            {layer(Mat::Identity(3, 3), Vec::Zero(3), Activation::Linear)});
    const LossAndGrad lg = loss_gradient(ae, std::vector<Vec>{q}, lambda);
    const Vec z = w * q + b;
    const Vec r = z - q;
    CHECK(lg.loss == doctest::Approx(r.squaredNorm() + lambda * (w.squaredNorm() + 3.0)));
    CHECK(rel_error(lg.grads.encoder[0].weights, Mat(2.0 * r * q.transpose() + 2.0 * lambda * w)) < 1e-12);
    CHECK(rel_error(lg.grads.encoder[0].biases, Vec(2.0 * r)) < 1e-12);
    CHECK(rel_error(lg.grads.decoder[0].weights, Mat(2.0 * r * z.transpose() + 2.0 * lambda * Mat::Identity(3, 3))) <
          1e-12);

    const LossAndGrad at_min = loss_gradient(MlpAutoencoder::identity(3), std::vector<Vec>{q}, 0.0);
    CHECK(at_min.loss == 0.0);
    CHECK(flatten(at_min.grads).isZero());
    CHECK_THROWS_AS(loss_gradient(ae, std::vector<Vec>{}, 0.0), Error);
}

TEST_CASE("loss gradient matches finite differences") {
    Rng rng(44);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::size_t>(rng.integer(2, 6));
        const auto m = static_cast<std::size_t>(rng.integer(1, 3));
        MlpAutoencoder ae = random_autoencoder(rng, n, m);
        std::vector<Vec> batch;
        const int count = rng.integer(1, 5);
        for (int i = 0; i < count; ++i) batch.push_back(rng.vec(static_cast<Eigen::Index>(n), -2, 2));
        const double lambda = trial % 2 == 0 ? 0.0 : 1e-3;
        const Vec theta = flatten(ae);
        auto objective = [&](const Vec& t) {
            MlpAutoencoder copy = ae;
            unflatten(copy, t);
            return mean_reconstruction_loss(copy, batch) + lambda * sum_sq_weights(copy);
        };
        const LossAndGrad lg = loss_gradient(ae, batch, lambda);
        CHECK(lg.loss == doctest::Approx(objective(theta)).epsilon(1e-12));
        const Vec fd = fd_gradient(objective, theta, 1e-6);
        CHECK(rel_error(flatten(lg.grads), fd) <= 1e-5);

        // The row-matrix overload agrees with the vector overload.
        Eigen::MatrixXd rows(count, static_cast<Eigen::Index>(n));
        for (int i = 0; i < count; ++i) rows.row(i) = batch[static_cast<std::size_t>(i)].transpose();
        CHECK(rel_error(flatten(loss_gradient(ae, rows, lambda).grads), flatten(lg.grads)) < 1e-12);
    }
}

TEST_CASE("jacobians match finite differences") {
    Rng rng(45);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::size_t>(rng.integer(2, 7));
        const auto m = static_cast<std::size_t>(rng.integer(1, 3));
        const MlpAutoencoder ae =
            random_autoencoder(rng, n, m, {static_cast<std::size_t>(rng.integer(3, 6)), static_cast<std::size_t>(rng.integer(2, 5))});
        const Vec q = rng.vec(static_cast<Eigen::Index>(n), -1.5, 1.5);
        const Vec xi = rng.vec(static_cast<Eigen::Index>(m), -1.5, 1.5);
        const Vec v = rng.vec(static_cast<Eigen::Index>(m));

        const Mat je = encoder_jacobian(ae, q);
        CHECK(je.rows() == static_cast<Eigen::Index>(m));
        CHECK(rel_error(je, fd_jacobian([&](const Vec& x) { return encode(ae, x); }, q)) <= 1e-5);
        const Mat jd = decoder_jacobian(ae, xi);
        CHECK(jd.rows() == static_cast<Eigen::Index>(n));
        CHECK(rel_error(jd, fd_jacobian([&](const Vec& x) { return decode(ae, x); }, xi)) <= 1e-5);

        const Mat dd = decoder_jacobian_directional_derivative(ae, xi, v);
        const Mat fd = fd_directional([&](const Vec& x) { return decoder_jacobian(ae, x); }, xi, v);
        CHECK(rel_error(dd, fd) <= 1e-4);
        CHECK(rel_error(chain_jacobian_directional_derivative(ae.decoder(), xi, v), dd) == 0.0);
    }
}

TEST_CASE("jacobian special cases") {
    Rng rng(46);
    const Mat w = rng.mat(5, 2);
    const MlpAutoencoder lin = MlpAutoencoder::linear(w);
    for (int i = 0; i < 5; ++i) {
        const Vec xi = rng.vec(2, -3, 3);
        CHECK(decoder_jacobian(lin, xi) == w);
        CHECK(encoder_jacobian(lin, rng.vec(5)) == Mat(w.transpose()));
        CHECK(decoder_jacobian_directional_derivative(lin, xi, rng.vec(2)).isZero());
    }
    CHECK(decoder_jacobian(MlpAutoencoder::identity(4), Vec::Zero(4)) == Mat::Identity(4, 4));

    // D(xi) = elu(w xi + b): second derivative w^2 v e^z on the negative branch.
    const double wv = 1.7, bv = -0.4;
    const MlpAutoencoder one({layer(Mat::Identity(1, 1), Vec::Zero(1), Activation::Linear)},
                             {layer(Mat::Constant(1, 1, wv), Vec::Constant(1, bv), Activation::Elu)});
    const Vec v = Vec::Constant(1, 0.6);
    const Vec neg = Vec::Constant(1, -0.5);
    const double z = wv * -0.5 + bv;
    CHECK(decoder_jacobian_directional_derivative(one, neg, v)(0, 0) == doctest::Approx(wv * 0.6 * wv * std::exp(z)));
    CHECK(decoder_jacobian_directional_derivative(one, Vec::Constant(1, 2.0), v)(0, 0) == 0.0);
}

TEST_CASE("adam") {
    std::vector<double> p{1.0}, g{1.0}, m{0.0}, v{0.0};
    adam_update(p, g, m, v, 1, 0.1, {});
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-9));
    // The first step has magnitude lr g / (|g| + eps), close to lr whatever
    // the gradient scale.
    std::vector<double> p2{1.0}, g2{1e-4}, m2{0.0}, v2{0.0};
    adam_update(p2, g2, m2, v2, 1, 0.1, {});
    CHECK(p2[0] == doctest::Approx(1.0 - 0.1 * 1e-4 / (1e-4 + 1e-8)).epsilon(1e-14));
    CHECK(std::abs(p2[0] - 0.9) < 1e-4);

    // Zero gradient from fresh moments leaves the parameters alone.
    std::vector<double> p3{0.3, -2.0}, g3{0.0, 0.0}, m3{0.0, 0.0}, v3{0.0, 0.0};
    adam_update(p3, g3, m3, v3, 1, 0.1, {});
    CHECK(p3 == std::vector<double>{0.3, -2.0});

    // Hand-rolled two-step reference.
    std::vector<double> q{0.5}, mq{0.0}, vq{0.0};
    double mh = 0.0, vh = 0.0, ph = 0.5;
    const double grads[2] = {0.3, -0.8};
    for (long t = 1; t <= 2; ++t) {
        std::vector<double> gq{grads[t - 1]};
        adam_update(q, gq, mq, vq, t, 0.01, {});
        mh = 0.9 * mh + 0.1 * grads[t - 1];
        vh = 0.999 * vh + 0.001 * grads[t - 1] * grads[t - 1];
        const double mhat = mh / (1 - std::pow(0.9, t));
        const double vhat = vh / (1 - std::pow(0.999, t));
        ph -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
        CHECK(q[0] == doctest::Approx(ph).epsilon(1e-14));
    }
    CHECK_THROWS_AS(adam_update(q, std::vector<double>{0.0}, mq, vq, 0, 0.1, {}), Error);

    const AdamConfig d;
    CHECK(d.beta1 == 0.9);
    CHECK(d.beta2 == 0.999);
    CHECK(d.epsilon == 1e-8);
}

TEST_CASE("learning-rate schedule") {
    TrainConfig c;
    c.lr = 1e-3;
    c.lr_gamma = 0.5;
    c.lr_step = 100;
    CHECK(lr_at_epoch(c, 1) == 1e-3);
    CHECK(lr_at_epoch(c, 100) == 1e-3);
    CHECK(lr_at_epoch(c, 101) == doctest::Approx(5e-4));
    c.lr_gamma = 1.0;
    CHECK(lr_at_epoch(c, 450) == 1e-3);
    c.lr = 1e-2;
    c.lr_gamma = 0.7;
    c.lr_step = 30;
    CHECK(lr_at_epoch(c, 91) == doctest::Approx(3.43e-3));
    CHECK(lr_at_epoch(c, 90) == doctest::Approx(4.9e-3));
    CHECK_THROWS_AS(lr_at_epoch(c, 0), Error);
}

TEST_CASE("train config validation and grid") {
    CHECK_NOTHROW(validate(TrainConfig{}));
    for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
             [](TrainConfig& c) { c.lr = 0; }, [](TrainConfig& c) { c.lr_gamma = 0; },
             [](TrainConfig& c) { c.lr_gamma = 1.5; }, [](TrainConfig& c) { c.lr_step = 0; },
             [](TrainConfig& c) { c.epochs = 0; }, [](TrainConfig& c) { c.batch_size = 0; }}) {
        TrainConfig c;
        mutate(c);
        CHECK_THROWS_AS(validate(c), Error);
    }
    const GridSpec g = GridSpec::reference();
    CHECK(g.lr == std::vector<double>{1e-3, 5e-4, 1e-4});
    CHECK(g.weight_decay == std::vector<double>{1e-5, 1e-6, 1e-7});
    CHECK(g.lr_gamma == std::vector<double>{0.3, 0.5});
    CHECK(g.lr_step == std::vector<int>{100, 200});
    TrainConfig base;
    base.epochs = 17;
    const auto configs = g.expand(base);
    CHECK(configs.size() == 36);
    for (const TrainConfig& c : configs) CHECK(c.epochs == 17);
}

TEST_CASE("training") {
    Rng rng(47);
    std::vector<Vec> data;
    for (int i = 0; i < 40; ++i) data.push_back(rng.vec(3, -1, 1));
    const ConfigurationDataset ds = dataset_of(data);

    SUBCASE("a linear full-width autoencoder learns the identity") {
        const MlpAutoencoder start({layer(rng.mat(3, 3, -0.5, 0.5), Vec::Zero(3), Activation::Linear)},
                                   {layer(rng.mat(3, 3, -0.5, 0.5), Vec::Zero(3), Activation::Linear)});
        TrainConfig c;
        c.lr = 1e-2;
        c.weight_decay = 0.0;
        c.epochs = 200;
        c.batch_size = 8;
        c.lr_step = 1000;
        const TrainResult r = train(start, ds, nullptr, c);
        REQUIRE(r.history.train.size() == 200);
        CHECK(r.history.valid.empty());
        CHECK(r.history.train.back() < 1e-4 * r.history.train.front());
    }

    SUBCASE("deterministic for a fixed seed") {
        const MlpAutoencoder start = MlpAutoencoder::initialize({3, {4}, 2}, 5);
        TrainConfig c;
        c.epochs = 20;
        c.batch_size = 7;
        const TrainResult a = train(start, ds, &ds, c);
        const TrainResult b = train(start, ds, &ds, c);
        CHECK(flatten(a.model) == flatten(b.model));
        CHECK(a.history.train == b.history.train);
        CHECK(a.history.valid.size() == 20);
        c.seed = 1;
        CHECK(flatten(train(start, ds, &ds, c).model) != flatten(a.model));
    }

    SUBCASE("divergent learning rate is reported") {
        std::vector<Vec> big;
        for (int i = 0; i < 20; ++i) big.push_back(rng.vec(3, -1e3, 1e3));
        const MlpAutoencoder start({layer(rng.mat(3, 3), Vec::Zero(3), Activation::Linear)},
                                   {layer(rng.mat(3, 3), Vec::Zero(3), Activation::Linear)});
        TrainConfig c;
        c.lr = 1e150;
        c.epochs = 50;
        try {
            train(start, dataset_of(big), nullptr, c);
            FAIL("expected divergence");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NonFiniteLoss);
        }
    }

    SUBCASE("input errors") {
        const MlpAutoencoder start = MlpAutoencoder::initialize({4, {3}, 2}, 5);
        CHECK_THROWS_AS(train(start, ds, nullptr, TrainConfig{}), Error);
        CHECK_THROWS_AS(train(start, ConfigurationDataset{}, nullptr, TrainConfig{}), Error);
    }
}

TEST_CASE("grid search keeps the lowest validation loss") {
    Rng rng(48);
    std::vector<Vec> train_data, valid_data;
    for (int i = 0; i < 30; ++i) train_data.push_back(rng.vec(4));
    for (int i = 0; i < 10; ++i) valid_data.push_back(rng.vec(4));
    GridSpec g{{1e-2, 1e-3}, {0.0}, {0.5}, {10, 1000}};
    TrainConfig base;
    base.epochs = 15;
    base.batch_size = 8;
    const GridResult r = grid_search({4, {3}, 2}, 9, dataset_of(train_data), dataset_of(valid_data), base, g);
    REQUIRE(r.entries.size() == 4);
    for (const GridEntry& e : r.entries) CHECK(r.entries[r.best_index].valid_loss <= e.valid_loss);
    CHECK(r.best.history.valid.back() == r.entries[r.best_index].valid_loss);
    const TrainResult again =
        train(MlpAutoencoder::initialize({4, {3}, 2}, 9), dataset_of(train_data), nullptr, r.entries[r.best_index].config);
    CHECK(flatten(again.model) == flatten(r.best.model));
}
