#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hamroc/dataset.hpp"
#include "hamroc/numerics.hpp"

namespace hamroc {

enum class Activation { Elu, Linear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

double elu(double x);
double elu_derivative(double x);
double elu_second_derivative(double x);

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::Linear;
};

struct DenseLayer {
    LayerSpec spec;
    Mat weights;  // out_dim x in_dim
    Vec biases;   // out_dim
};

using LayerChain = std::vector<DenseLayer>;

/// Widths of a dense encoder/decoder pair. Hidden widths are listed from the
/// input side; the decoder mirrors them.
struct ArchitectureSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t latent_dim = 0;

    /// Hidden widths at 3/4, 1/2 and 1/4 of the input dimension, the
    /// proportions of the 400-300-200-100 reference encoder.
    static ArchitectureSpec scaled(std::size_t input_dim, std::size_t latent_dim);
};

class MlpAutoencoder {
public:
    MlpAutoencoder(LayerChain encoder, LayerChain decoder);

    /// ELU on every hidden layer, linear output layers, Glorot-uniform weights
    /// in +-sqrt(6/(in+out)) and zero biases.
    static MlpAutoencoder initialize(const ArchitectureSpec& arch, std::uint64_t seed);
    /// Encoder and decoder are single identity layers (m = n).
    static MlpAutoencoder identity(std::size_t n);
    /// Linear decoder xi -> W xi, linear encoder q -> W^T q.
    static MlpAutoencoder linear(const Mat& decoder_weights);

    std::size_t input_dim() const { return encoder_.front().spec.in_dim; }
    std::size_t latent_dim() const { return encoder_.back().spec.out_dim; }

    const LayerChain& encoder() const { return encoder_; }
    const LayerChain& decoder() const { return decoder_; }
    LayerChain& encoder() { return encoder_; }
    LayerChain& decoder() { return decoder_; }

    std::size_t parameter_count() const;

private:
    LayerChain encoder_;
    LayerChain decoder_;
};

Vec forward(const LayerChain& chain, const Vec& x);
Vec encode(const MlpAutoencoder& ae, const Vec& q);
Vec decode(const MlpAutoencoder& ae, const Vec& xi);

/// ||q - D(E(q))||^2 for one configuration.
double reconstruction_loss(const MlpAutoencoder& ae, const Vec& q);
/// Mean over samples of the per-sample reconstruction loss.
double mean_reconstruction_loss(const MlpAutoencoder& ae, const std::vector<Vec>& samples);

/// Jacobian of a layer chain at x (out x in).
Mat chain_jacobian(const LayerChain& chain, const Vec& x);
/// d/de J(x + e v) at e = 0.
Mat chain_jacobian_directional_derivative(const LayerChain& chain, const Vec& x, const Vec& v);

Mat encoder_jacobian(const MlpAutoencoder& ae, const Vec& q);
Mat decoder_jacobian(const MlpAutoencoder& ae, const Vec& xi);
Mat decoder_jacobian_directional_derivative(const MlpAutoencoder& ae, const Vec& xi, const Vec& v);

struct LayerGrad {
    Mat weights;
    Vec biases;
};

struct AutoencoderGrads {
    std::vector<LayerGrad> encoder;
    std::vector<LayerGrad> decoder;

    static AutoencoderGrads zeros_like(const MlpAutoencoder& ae);
};

struct LossAndGrad {
    double loss = 0.0;  // mean reconstruction loss + weight_decay * sum of squared weights
    AutoencoderGrads grads;
};

/// Reverse-mode gradient of the regularized mean batch loss.
LossAndGrad loss_gradient(const MlpAutoencoder& ae, const std::vector<Vec>& batch,
                          double weight_decay);
/// Same, with one sample per row of `batch`.
LossAndGrad loss_gradient(const MlpAutoencoder& ae, const Eigen::MatrixXd& batch,
                          double weight_decay);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam update of one parameter buffer at step t >= 1.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, long t, double lr, const AdamConfig& cfg);

struct AdamState {
    AutoencoderGrads m;
    AutoencoderGrads v;
    long t = 0;

    static AdamState zeros_like(const MlpAutoencoder& ae);
};

/// Advances `state.t` and applies one Adam update to every weight and bias.
void adam_step(MlpAutoencoder& ae, const AutoencoderGrads& grads, AdamState& state, double lr,
               const AdamConfig& cfg);

struct TrainConfig {
    double lr = 1e-3;
    double weight_decay = 1e-6;
    double lr_gamma = 0.5;
    int lr_step = 100;
    int epochs = 500;
    int batch_size = 64;
    std::uint64_t seed = 0;
    AdamConfig adam;
};

void validate(const TrainConfig& cfg);

/// Step schedule: lr_{e+1} = lr_e * gamma whenever e is a multiple of lr_step,
/// starting from cfg.lr at epoch 1.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

struct LossHistory {
    std::vector<double> train;
    std::vector<double> valid;
};

struct TrainResult {
    MlpAutoencoder model;
    LossHistory history;
};

TrainResult train(MlpAutoencoder ae, const ConfigurationDataset& train_set,
                  const ConfigurationDataset* valid_set, const TrainConfig& cfg);

struct GridSpec {
    std::vector<double> lr;
    std::vector<double> weight_decay;
    std::vector<double> lr_gamma;
    std::vector<int> lr_step;

    /// Flat-autoencoder grid: lr {1e-3, 5e-4, 1e-4}, lambda {1e-5, 1e-6, 1e-7},
    /// gamma {0.3, 0.5}, step {100, 200}.
    static GridSpec reference();
    std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

struct GridEntry {
    TrainConfig config;
    double train_loss = 0.0;
    double valid_loss = 0.0;
};

struct GridResult {
    std::size_t best_index = 0;
    std::vector<GridEntry> entries;
    TrainResult best;
};

/// Trains one model per grid point from the same initialization and keeps
/// the one with the lowest final validation loss.
GridResult grid_search(const ArchitectureSpec& arch, std::uint64_t init_seed,
                       const ConfigurationDataset& train_set,
                       const ConfigurationDataset& valid_set, const TrainConfig& base,
                       const GridSpec& grid);

}  // namespace hamroc
