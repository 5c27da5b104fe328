#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twinstream/errors.hpp"
#include "twinstream/matrix.hpp"

namespace twinstream {

/// Fixed-dimension compressed representation of one user's windowed twin data.
struct FeatureVector {
    std::vector<double> values;
    int user_id = -1;
};

/// Single-conv-layer encoder: conv (F filters, A tracks, k taps) -> relu ->
/// global mean pool -> linear head d x F.
struct EncoderWeights {
    int filters = 0;  // F
    int taps = 0;     // k, odd
    int dim = 0;      // d
    int tracks = 0;   // A
    std::vector<double> kernels;          // F*A*k, index ((f*A)+a)*k + j
    std::vector<double> conv_bias;        // F
    Matrix projection;                    // d x F
    std::vector<double> projection_bias;  // d

    bool operator==(const EncoderWeights&) const = default;
};

/// Mirror of the encoder used as the reconstruction head during training:
/// linear expansion d -> F, broadcast over T, conv F -> A.
struct DecoderWeights {
    Matrix expansion;                   // F x d
    std::vector<double> expansion_bias; // F
    std::vector<double> kernels;        // A*F*k, index ((a*F)+f)*k + j
    std::vector<double> bias;           // A

    bool operator==(const DecoderWeights&) const = default;
};

/// Same-padding 1D convolution over multi-track input:
/// out[f][t] = bias[f] + sum_a sum_j kernel[f][a][j] * input[a][t + j - (k-1)/2],
/// zero outside [0, T).
Matrix conv1d_same(const Matrix& input, const std::vector<double>& kernels,
                   int out_channels, int taps, const std::vector<double>& bias);

FeatureVector encode(const Matrix& input, const EncoderWeights& weights,
                     int user_id = -1);

Matrix decode(const std::vector<double>& feature, const DecoderWeights& weights, int t_len);

struct EncoderHyper {
    int filters = 8;
    int taps = 3;
    int dim = 8;
    double lr = 0.01;
    int epochs = 50;
    int batch = 16;
    std::uint64_t seed = 1;
};

struct AutoencoderTraining {
    EncoderWeights encoder;
    DecoderWeights decoder;
    std::vector<double> loss_curve;  // per-epoch mean reconstruction MSE
};

/// Seeded uniform init in [-1/sqrt(A*k), 1/sqrt(A*k)], zero biases.
AutoencoderTraining init_autoencoder(int tracks, const EncoderHyper& hyper);

/// Mini-batch SGD on mean-squared reconstruction error with analytic
/// gradients; deterministic given the seed. Throws EmptyDataset and
/// DivergedLoss (non-finite loss, lr too high).
AutoencoderTraining train_autoencoder(const std::vector<Matrix>& dataset,
                                      const EncoderHyper& hyper);

/// Reconstruction MSE of one sample, mean over the A*T entries.
double reconstruction_loss(const EncoderWeights& enc, const DecoderWeights& dec,
                           const Matrix& sample);

/// Max over all parameters of |g_analytic - g_numeric| relative error
/// against central finite differences with the given epsilon.
double gradient_check(EncoderWeights enc, DecoderWeights dec, const Matrix& sample,
                      double epsilon);

/// Text format: header "ENC v1 F k d A", then parameters in canonical order
/// (kernels, conv bias, projection row-major, projection bias), 17 significant digits.
void save_encoder(const EncoderWeights& weights, const std::string& path);
EncoderWeights load_encoder(const std::string& path);

}  // namespace twinstream
