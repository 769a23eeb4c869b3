#include "hamroc/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace hamroc {

std::string to_string(Activation a) {
    return a == Activation::Elu ? "elu" : "linear";
}

Activation activation_from_string(const std::string& name) {
    if (name == "elu") return Activation::Elu;
    if (name == "linear") return Activation::Linear;
    fail(ErrorCode::SchemaViolation, "unknown activation '" + name + "'");
}

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }
double elu_second_derivative(double x) { return x > 0.0 ? 0.0 : std::exp(x); }

namespace {

template <typename Derived>
void apply_activation(Activation a, Eigen::MatrixBase<Derived>& z) {
    if (a == Activation::Elu) {
        z.derived() = z.unaryExpr([](double x) { return elu(x); });
    }
}

Vec activation_slope(Activation a, const Vec& z) {
    if (a == Activation::Linear) return Vec::Ones(z.size());
    return z.unaryExpr([](double x) { return elu_derivative(x); });
}

Vec activation_curvature(Activation a, const Vec& z) {
    if (a == Activation::Linear) return Vec::Zero(z.size());
    return z.unaryExpr([](double x) { return elu_second_derivative(x); });
}

void check_chain(const LayerChain& chain, const char* what) {
    require(!chain.empty(), ErrorCode::InvalidConfig, std::string(what) + " has no layers");
    for (std::size_t l = 0; l < chain.size(); ++l) {
        const DenseLayer& layer = chain[l];
        require(layer.spec.in_dim > 0 && layer.spec.out_dim > 0, ErrorCode::InvalidConfig,
                std::string(what) + ": layer dimensions must be positive");
        require(static_cast<std::size_t>(layer.weights.rows()) == layer.spec.out_dim &&
                    static_cast<std::size_t>(layer.weights.cols()) == layer.spec.in_dim &&
                    static_cast<std::size_t>(layer.biases.size()) == layer.spec.out_dim,
                ErrorCode::DimensionMismatch,
                std::string(what) + ": layer parameters disagree with the layer spec");
        if (l > 0) {
            require(chain[l - 1].spec.out_dim == layer.spec.in_dim, ErrorCode::DimensionMismatch,
                    std::string(what) + ": consecutive layer widths do not chain");
        }
        require_finite(layer.weights, "layer weights");
        require_finite(layer.biases, "layer biases");
    }
}

DenseLayer glorot_layer(std::size_t in, std::size_t out, Activation act, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{{in, out, act}, Mat(out, in), Vec::Zero(out)};
    for (std::size_t r = 0; r < out; ++r) {
        for (std::size_t c = 0; c < in; ++c) {
            layer.weights(r, c) = dist(rng);
        }
    }
    return layer;
}

DenseLayer linear_layer(const Mat& w) {
    return {{static_cast<std::size_t>(w.cols()), static_cast<std::size_t>(w.rows()),
             Activation::Linear},
            w,
            Vec::Zero(w.rows())};
}

}  // namespace

ArchitectureSpec ArchitectureSpec::scaled(std::size_t input_dim, std::size_t latent_dim) {
    require(input_dim > 0 && latent_dim > 0, ErrorCode::InvalidConfig,
            "architecture dimensions must be positive");
    ArchitectureSpec a;
    a.input_dim = input_dim;
    a.latent_dim = latent_dim;
    for (double frac : {0.75, 0.5, 0.25}) {
        const auto w = static_cast<std::size_t>(std::lround(frac * static_cast<double>(input_dim)));
        a.hidden.push_back(std::max<std::size_t>({w, latent_dim, 1}));
    }
    return a;
}

MlpAutoencoder::MlpAutoencoder(LayerChain encoder, LayerChain decoder)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
    check_chain(encoder_, "encoder");
    check_chain(decoder_, "decoder");
    require(encoder_.back().spec.out_dim == decoder_.front().spec.in_dim,
            ErrorCode::DimensionMismatch, "encoder output and decoder input widths differ");
    require(encoder_.front().spec.in_dim == decoder_.back().spec.out_dim,
            ErrorCode::DimensionMismatch, "encoder input and decoder output widths differ");
}

MlpAutoencoder MlpAutoencoder::initialize(const ArchitectureSpec& arch, std::uint64_t seed) {
    require(arch.input_dim > 0 && arch.latent_dim > 0, ErrorCode::InvalidConfig,
            "architecture dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> widths{arch.input_dim};
    widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
    widths.push_back(arch.latent_dim);

    LayerChain enc;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const bool last = l + 2 == widths.size();
        enc.push_back(glorot_layer(widths[l], widths[l + 1],
                                   last ? Activation::Linear : Activation::Elu, rng));
    }
    LayerChain dec;
    for (std::size_t l = widths.size() - 1; l > 0; --l) {
        const bool last = l == 1;
        dec.push_back(glorot_layer(widths[l], widths[l - 1],
                                   last ? Activation::Linear : Activation::Elu, rng));
    }
    return MlpAutoencoder(std::move(enc), std::move(dec));
}

MlpAutoencoder MlpAutoencoder::identity(std::size_t n) {
    const Mat eye = Mat::Identity(n, n);
    return MlpAutoencoder({linear_layer(eye)}, {linear_layer(eye)});
}

MlpAutoencoder MlpAutoencoder::linear(const Mat& decoder_weights) {
    return MlpAutoencoder({linear_layer(decoder_weights.transpose())},
                          {linear_layer(decoder_weights)});
}

std::size_t MlpAutoencoder::parameter_count() const {
    std::size_t total = 0;
    for (const LayerChain* chain : {&encoder_, &decoder_}) {
        for (const DenseLayer& l : *chain) {
            total += l.weights.size() + l.biases.size();
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Inference and derivatives
// ---------------------------------------------------------------------------

Vec forward(const LayerChain& chain, const Vec& x) {
    if (static_cast<std::size_t>(x.size()) != chain.front().spec.in_dim) {
        fail(ErrorCode::DimensionMismatch, "forward: input has dimension " +
                                               std::to_string(x.size()) + ", expected " +
                                               std::to_string(chain.front().spec.in_dim));
    }
    Vec a = x;
    for (const DenseLayer& layer : chain) {
        Vec z = layer.weights * a + layer.biases;
        apply_activation(layer.spec.activation, z);
        a = std::move(z);
    }
    return a;
}

Vec encode(const MlpAutoencoder& ae, const Vec& q) { return forward(ae.encoder(), q); }
Vec decode(const MlpAutoencoder& ae, const Vec& xi) { return forward(ae.decoder(), xi); }

double reconstruction_loss(const MlpAutoencoder& ae, const Vec& q) {
    return (q - decode(ae, encode(ae, q))).squaredNorm();
}

double mean_reconstruction_loss(const MlpAutoencoder& ae, const std::vector<Vec>& samples) {
    if (samples.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const Vec& q : samples) {
        total += reconstruction_loss(ae, q);
    }
    return total / static_cast<double>(samples.size());
}

Mat chain_jacobian(const LayerChain& chain, const Vec& x) {
    if (static_cast<std::size_t>(x.size()) != chain.front().spec.in_dim) {
        fail(ErrorCode::DimensionMismatch, "chain_jacobian: input has wrong dimension");
    }
    Vec a = x;
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(x.size(), x.size());
    for (const DenseLayer& layer : chain) {
        Vec z = layer.weights * a + layer.biases;
        const Vec slope = activation_slope(layer.spec.activation, z);
        t = slope.asDiagonal() * (layer.weights * t);
        apply_activation(layer.spec.activation, z);
        a = std::move(z);
    }
    return t;
}

Mat chain_jacobian_directional_derivative(const LayerChain& chain, const Vec& x, const Vec& v) {
    if (static_cast<std::size_t>(x.size()) != chain.front().spec.in_dim || v.size() != x.size()) {
        fail(ErrorCode::DimensionMismatch,
             "chain_jacobian_directional_derivative: input or direction has wrong dimension");
    }
    Vec a = x;
    Vec a_dot = v;
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(x.size(), x.size());
    Eigen::MatrixXd t_dot = Eigen::MatrixXd::Zero(x.size(), x.size());
    for (const DenseLayer& layer : chain) {
        Vec z = layer.weights * a + layer.biases;
        const Vec z_dot = layer.weights * a_dot;
        const Vec slope = activation_slope(layer.spec.activation, z);
        const Vec curvature = activation_curvature(layer.spec.activation, z);
        const Eigen::MatrixXd p = layer.weights * t;
        const Eigen::MatrixXd p_dot = layer.weights * t_dot;
        t_dot = curvature.cwiseProduct(z_dot).asDiagonal() * p + slope.asDiagonal() * p_dot;
        t = slope.asDiagonal() * p;
        a_dot = slope.cwiseProduct(z_dot);
        apply_activation(layer.spec.activation, z);
        a = std::move(z);
    }
    return t_dot;
}

Mat encoder_jacobian(const MlpAutoencoder& ae, const Vec& q) {
    return chain_jacobian(ae.encoder(), q);
}

Mat decoder_jacobian(const MlpAutoencoder& ae, const Vec& xi) {
    return chain_jacobian(ae.decoder(), xi);
}

Mat decoder_jacobian_directional_derivative(const MlpAutoencoder& ae, const Vec& xi, const Vec& v) {
    return chain_jacobian_directional_derivative(ae.decoder(), xi, v);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

AutoencoderGrads AutoencoderGrads::zeros_like(const MlpAutoencoder& ae) {
    AutoencoderGrads g;
    for (const DenseLayer& l : ae.encoder()) {
        g.encoder.push_back({Mat::Zero(l.weights.rows(), l.weights.cols()), Vec::Zero(l.biases.size())});
    }
    for (const DenseLayer& l : ae.decoder()) {
        g.decoder.push_back({Mat::Zero(l.weights.rows(), l.weights.cols()), Vec::Zero(l.biases.size())});
    }
    return g;
}

LossAndGrad loss_gradient(const MlpAutoencoder& ae, const Eigen::MatrixXd& batch,
                          double weight_decay) {
    require(batch.rows() > 0, ErrorCode::InvalidConfig, "loss_gradient: empty batch");
    require(static_cast<std::size_t>(batch.cols()) == ae.input_dim(), ErrorCode::DimensionMismatch,
            "loss_gradient: sample dimension differs from the autoencoder input");

    std::vector<const DenseLayer*> layers;
    for (const DenseLayer& l : ae.encoder()) layers.push_back(&l);
    for (const DenseLayer& l : ae.decoder()) layers.push_back(&l);

    // Forward pass; samples are rows.
    std::vector<Eigen::MatrixXd> pre(layers.size());
    std::vector<Eigen::MatrixXd> act(layers.size() + 1);
    act[0] = batch;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        pre[l] = act[l] * layers[l]->weights.transpose();
        pre[l].rowwise() += layers[l]->biases.transpose();
        act[l + 1] = pre[l];
        apply_activation(layers[l]->spec.activation, act[l + 1]);
    }

    const double inv_b = 1.0 / static_cast<double>(batch.rows());
    const Eigen::MatrixXd residual = act.back() - batch;
    LossAndGrad out;
    out.loss = residual.squaredNorm() * inv_b;
    for (const DenseLayer* l : layers) {
        out.loss += weight_decay * l->weights.squaredNorm();
    }

    std::vector<LayerGrad> grads(layers.size());
    Eigen::MatrixXd upstream = 2.0 * inv_b * residual;
    for (std::size_t l = layers.size(); l-- > 0;) {
        Eigen::MatrixXd delta = upstream;
        if (layers[l]->spec.activation == Activation::Elu) {
            delta.array() *= pre[l].unaryExpr([](double x) { return elu_derivative(x); }).array();
        }
        grads[l].weights = delta.transpose() * act[l] + 2.0 * weight_decay * layers[l]->weights;
        grads[l].biases = delta.colwise().sum().transpose();
        if (l > 0) {
            upstream = delta * layers[l]->weights;
        }
    }
    const std::size_t n_enc = ae.encoder().size();
    out.grads.encoder.assign(grads.begin(), grads.begin() + static_cast<std::ptrdiff_t>(n_enc));
    out.grads.decoder.assign(grads.begin() + static_cast<std::ptrdiff_t>(n_enc), grads.end());
    return out;
}

LossAndGrad loss_gradient(const MlpAutoencoder& ae, const std::vector<Vec>& batch,
                          double weight_decay) {
    require(!batch.empty(), ErrorCode::InvalidConfig, "loss_gradient: empty batch");
    Eigen::MatrixXd x(batch.size(), ae.input_dim());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        require(static_cast<std::size_t>(batch[i].size()) == ae.input_dim(),
                ErrorCode::DimensionMismatch, "loss_gradient: sample has wrong dimension");
        x.row(static_cast<Eigen::Index>(i)) = batch[i].transpose();
    }
    return loss_gradient(ae, x, weight_decay);
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, long t, double lr, const AdamConfig& cfg) {
    require(t >= 1, ErrorCode::InvalidConfig, "adam_update: step index must be >= 1");
    require(grads.size() == params.size() && m.size() == params.size() && v.size() == params.size(),
            ErrorCode::DimensionMismatch, "adam_update: buffer sizes differ");
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

AdamState AdamState::zeros_like(const MlpAutoencoder& ae) {
    return {AutoencoderGrads::zeros_like(ae), AutoencoderGrads::zeros_like(ae), 0};
}

namespace {

template <typename M>
std::span<double> span_of(M& x) {
    return {x.data(), static_cast<std::size_t>(x.size())};
}

template <typename M>
std::span<const double> cspan_of(const M& x) {
    return {x.data(), static_cast<std::size_t>(x.size())};
}

void adam_chain(LayerChain& chain, const std::vector<LayerGrad>& g, std::vector<LayerGrad>& m,
                std::vector<LayerGrad>& v, long t, double lr, const AdamConfig& cfg) {
    require(g.size() == chain.size(), ErrorCode::DimensionMismatch,
            "adam_step: gradient layer count differs from the model");
    for (std::size_t l = 0; l < chain.size(); ++l) {
        adam_update(span_of(chain[l].weights), cspan_of(g[l].weights), span_of(m[l].weights),
                    span_of(v[l].weights), t, lr, cfg);
        adam_update(span_of(chain[l].biases), cspan_of(g[l].biases), span_of(m[l].biases),
                    span_of(v[l].biases), t, lr, cfg);
    }
}

}  // namespace

void adam_step(MlpAutoencoder& ae, const AutoencoderGrads& grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
    ++state.t;
    adam_chain(ae.encoder(), grads.encoder, state.m.encoder, state.v.encoder, state.t, lr, cfg);
    adam_chain(ae.decoder(), grads.decoder, state.m.decoder, state.v.decoder, state.t, lr, cfg);
}

void validate(const TrainConfig& cfg) {
    require(cfg.lr > 0.0, ErrorCode::InvalidConfig, "lr must be > 0");
    require(cfg.weight_decay >= 0.0, ErrorCode::InvalidConfig, "weight_decay must be >= 0");
    require(cfg.lr_gamma > 0.0 && cfg.lr_gamma <= 1.0, ErrorCode::InvalidConfig,
            "lr_gamma must lie in (0, 1]");
    require(cfg.lr_step >= 1, ErrorCode::InvalidConfig, "lr_step must be >= 1");
    require(cfg.epochs >= 1, ErrorCode::InvalidConfig, "epochs must be >= 1");
    require(cfg.batch_size >= 1, ErrorCode::InvalidConfig, "batch_size must be >= 1");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    require(epoch >= 1, ErrorCode::InvalidConfig, "epoch index must be >= 1");
    double lr = cfg.lr;
    for (int e = 1; e < epoch; ++e) {
        if (e % cfg.lr_step == 0) {
            lr *= cfg.lr_gamma;
        }
    }
    return lr;
}

TrainResult train(MlpAutoencoder ae, const ConfigurationDataset& train_set,
                  const ConfigurationDataset* valid_set, const TrainConfig& cfg) {
    validate(cfg);
    require(!train_set.empty(), ErrorCode::InvalidConfig, "training set is empty");
    const std::size_t n = ae.input_dim();
    Eigen::MatrixXd data(train_set.size(), n);
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        require(static_cast<std::size_t>(train_set.configurations[i].size()) == n,
                ErrorCode::DimensionMismatch, "training configuration has wrong dimension");
        data.row(static_cast<Eigen::Index>(i)) = train_set.configurations[i].transpose();
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    AdamState adam = AdamState::zeros_like(ae);
    LossHistory history;
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    Eigen::MatrixXd x;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t count = std::min(batch, order.size() - start);
            x.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
            for (std::size_t r = 0; r < count; ++r) {
                x.row(static_cast<Eigen::Index>(r)) = data.row(static_cast<Eigen::Index>(order[start + r]));
            }
            const LossAndGrad lg = loss_gradient(ae, x, cfg.weight_decay);
            if (!std::isfinite(lg.loss)) {
                fail(ErrorCode::NonFiniteLoss,
                     "training loss became non-finite at epoch " + std::to_string(epoch));
            }
            adam_step(ae, lg.grads, adam, lr, cfg.adam);
        }
        const double train_loss = mean_reconstruction_loss(ae, train_set.configurations);
        if (!std::isfinite(train_loss)) {
            fail(ErrorCode::NonFiniteLoss,
                 "training loss became non-finite at epoch " + std::to_string(epoch));
        }
        history.train.push_back(train_loss);
        if (valid_set != nullptr && !valid_set->empty()) {
            history.valid.push_back(mean_reconstruction_loss(ae, valid_set->configurations));
        }
    }
    return {std::move(ae), std::move(history)};
}

GridSpec GridSpec::reference() {
    return {{1e-3, 5e-4, 1e-4}, {1e-5, 1e-6, 1e-7}, {0.3, 0.5}, {100, 200}};
}

std::vector<TrainConfig> GridSpec::expand(const TrainConfig& base) const {
    std::vector<TrainConfig> out;
    for (double a : lr) {
        for (double wd : weight_decay) {
            for (double g : lr_gamma) {
                for (int s : lr_step) {
                    TrainConfig c = base;
                    c.lr = a;
                    c.weight_decay = wd;
                    c.lr_gamma = g;
                    c.lr_step = s;
                    out.push_back(c);
                }
            }
        }
    }
    return out;
}

GridResult grid_search(const ArchitectureSpec& arch, std::uint64_t init_seed,
                       const ConfigurationDataset& train_set,
                       const ConfigurationDataset& valid_set, const TrainConfig& base,
                       const GridSpec& grid) {
    const std::vector<TrainConfig> configs = grid.expand(base);
    require(!configs.empty(), ErrorCode::InvalidConfig, "grid is empty");
    const MlpAutoencoder init = MlpAutoencoder::initialize(arch, init_seed);
    GridResult result{0, {}, {init, {}}};
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < configs.size(); ++i) {
        TrainResult r = train(init, train_set, &valid_set, configs[i]);
        const double tl = r.history.train.back();
        const double vl = r.history.valid.empty() ? tl : r.history.valid.back();
        result.entries.push_back({configs[i], tl, vl});
        if (vl < best) {
            best = vl;
            result.best_index = i;
            result.best = std::move(r);
        }
    }
    return result;
}

}  // namespace hamroc
