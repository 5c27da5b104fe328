#include "twinstream/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "twinstream/rng.hpp"

namespace twinstream {

namespace {

int kernel_index(int out_ch, int in_ch, int tap, int in_channels, int taps) {
    return (out_ch * in_channels + in_ch) * taps + tap;
}

}  // namespace

Matrix conv1d_same(const Matrix& input, const std::vector<double>& kernels,
                   int out_channels, int taps, const std::vector<double>& bias) {
    const int in_channels = input.rows;
    const int t_len = input.cols;
    if (taps < 1 || taps % 2 == 0) throw ShapeMismatch("taps must be odd and positive");
    if (kernels.size() != static_cast<std::size_t>(out_channels * in_channels * taps))
        throw ShapeMismatch("kernel size does not match F*A*k");
    if (bias.size() != static_cast<std::size_t>(out_channels))
        throw ShapeMismatch("bias size does not match filter count");
    if (t_len < 1) throw ShapeMismatch("input must have at least one time step");

    const int half = (taps - 1) / 2;
    Matrix out(out_channels, t_len);
    for (int f = 0; f < out_channels; ++f) {
        for (int t = 0; t < t_len; ++t) {
            double acc = bias[static_cast<std::size_t>(f)];
            for (int a = 0; a < in_channels; ++a) {
                for (int j = 0; j < taps; ++j) {
                    const int src = t + j - half;
                    if (src < 0 || src >= t_len) continue;  // zero padding
                    acc += kernels[static_cast<std::size_t>(
                               kernel_index(f, a, j, in_channels, taps))] *
                           input.at(a, src);
                }
            }
            out.at(f, t) = acc;
        }
    }
    return out;
}

namespace {

struct Forward {
    Matrix conv;                   // F x T pre-activation
    Matrix hidden;                 // F x T relu
    std::vector<double> pooled;    // F
    std::vector<double> feature;   // d
    std::vector<double> expanded;  // F
    Matrix broadcast;              // F x T
    Matrix recon;                  // A x T
    double loss = 0.0;
};

Forward forward_pass(const EncoderWeights& enc, const DecoderWeights& dec,
                     const Matrix& sample) {
    Forward fw;
    fw.conv = conv1d_same(sample, enc.kernels, enc.filters, enc.taps, enc.conv_bias);
    const int t_len = sample.cols;

    fw.hidden = fw.conv;
    for (double& v : fw.hidden.data) v = std::max(v, 0.0);

    fw.pooled.assign(static_cast<std::size_t>(enc.filters), 0.0);
    for (int f = 0; f < enc.filters; ++f) {
        double acc = 0.0;
        for (int t = 0; t < t_len; ++t) acc += fw.hidden.at(f, t);
        fw.pooled[static_cast<std::size_t>(f)] = acc / t_len;
    }

    fw.feature.assign(static_cast<std::size_t>(enc.dim), 0.0);
    for (int i = 0; i < enc.dim; ++i) {
        double acc = enc.projection_bias[static_cast<std::size_t>(i)];
        for (int f = 0; f < enc.filters; ++f)
            acc += enc.projection.at(i, f) * fw.pooled[static_cast<std::size_t>(f)];
        fw.feature[static_cast<std::size_t>(i)] = acc;
    }

    fw.expanded.assign(static_cast<std::size_t>(enc.filters), 0.0);
    for (int f = 0; f < enc.filters; ++f) {
        double acc = dec.expansion_bias[static_cast<std::size_t>(f)];
        for (int i = 0; i < enc.dim; ++i)
            acc += dec.expansion.at(f, i) * fw.feature[static_cast<std::size_t>(i)];
        fw.expanded[static_cast<std::size_t>(f)] = acc;
    }

    fw.broadcast = Matrix(enc.filters, t_len);
    for (int f = 0; f < enc.filters; ++f)
        for (int t = 0; t < t_len; ++t)
            fw.broadcast.at(f, t) = fw.expanded[static_cast<std::size_t>(f)];

    fw.recon = conv1d_same(fw.broadcast, dec.kernels, enc.tracks, enc.taps, dec.bias);

    double acc = 0.0;
    for (std::size_t i = 0; i < fw.recon.data.size(); ++i) {
        const double diff = fw.recon.data[i] - sample.data[i];
        acc += diff * diff;
    }
    fw.loss = acc / static_cast<double>(fw.recon.data.size());
    return fw;
}

struct Gradients {
    std::vector<double> enc_kernels;
    std::vector<double> enc_conv_bias;
    Matrix enc_projection;
    std::vector<double> enc_projection_bias;
    Matrix dec_expansion;
    std::vector<double> dec_expansion_bias;
    std::vector<double> dec_kernels;
    std::vector<double> dec_bias;

    explicit Gradients(const EncoderWeights& enc, const DecoderWeights& dec)
        : enc_kernels(enc.kernels.size(), 0.0),
          enc_conv_bias(enc.conv_bias.size(), 0.0),
          enc_projection(enc.projection.rows, enc.projection.cols),
          enc_projection_bias(enc.projection_bias.size(), 0.0),
          dec_expansion(dec.expansion.rows, dec.expansion.cols),
          dec_expansion_bias(dec.expansion_bias.size(), 0.0),
          dec_kernels(dec.kernels.size(), 0.0),
          dec_bias(dec.bias.size(), 0.0) {}
};

// Analytic gradient of the per-sample reconstruction MSE, accumulated into `g`.
double backprop(const EncoderWeights& enc, const DecoderWeights& dec,
                const Matrix& sample, Gradients& g) {
    const Forward fw = forward_pass(enc, dec, sample);
    const int t_len = sample.cols;
    const int a_ch = enc.tracks;
    const int f_ch = enc.filters;
    const int k = enc.taps;
    const int half = (k - 1) / 2;

    // dL/d recon
    Matrix d_recon(a_ch, t_len);
    const double scale = 2.0 / static_cast<double>(fw.recon.data.size());
    for (std::size_t i = 0; i < d_recon.data.size(); ++i)
        d_recon.data[i] = scale * (fw.recon.data[i] - sample.data[i]);

    // Decoder conv layer: recon[a][t] = dec.bias[a] + sum_f sum_j W[a][f][j] * Q[f][t+j-half]
    Matrix d_broadcast(f_ch, t_len);
    for (int a = 0; a < a_ch; ++a) {
        for (int t = 0; t < t_len; ++t) {
            const double da = d_recon.at(a, t);
            g.dec_bias[static_cast<std::size_t>(a)] += da;
            for (int f = 0; f < f_ch; ++f) {
                for (int j = 0; j < k; ++j) {
                    const int src = t + j - half;
                    if (src < 0 || src >= t_len) continue;
                    const int ki = kernel_index(a, f, j, f_ch, k);
                    g.dec_kernels[static_cast<std::size_t>(ki)] += da * fw.broadcast.at(f, src);
                    d_broadcast.at(f, src) += da * dec.kernels[static_cast<std::size_t>(ki)];
                }
            }
        }
    }

    // Broadcast: Q[f][t] = expanded[f]
    std::vector<double> d_expanded(static_cast<std::size_t>(f_ch), 0.0);
    for (int f = 0; f < f_ch; ++f)
        for (int t = 0; t < t_len; ++t) d_expanded[static_cast<std::size_t>(f)] += d_broadcast.at(f, t);

    // Expansion: expanded = dec.expansion * feature + dec.expansion_bias
    std::vector<double> d_feature(static_cast<std::size_t>(enc.dim), 0.0);
    for (int f = 0; f < f_ch; ++f) {
        const double df = d_expanded[static_cast<std::size_t>(f)];
        g.dec_expansion_bias[static_cast<std::size_t>(f)] += df;
        for (int i = 0; i < enc.dim; ++i) {
            g.dec_expansion.at(f, i) += df * fw.feature[static_cast<std::size_t>(i)];
            d_feature[static_cast<std::size_t>(i)] += df * dec.expansion.at(f, i);
        }
    }

    // Projection: feature = enc.projection * pooled + enc.projection_bias
    std::vector<double> d_pooled(static_cast<std::size_t>(f_ch), 0.0);
    for (int i = 0; i < enc.dim; ++i) {
        const double di = d_feature[static_cast<std::size_t>(i)];
        g.enc_projection_bias[static_cast<std::size_t>(i)] += di;
        for (int f = 0; f < f_ch; ++f) {
            g.enc_projection.at(i, f) += di * fw.pooled[static_cast<std::size_t>(f)];
            d_pooled[static_cast<std::size_t>(f)] += di * enc.projection.at(i, f);
        }
    }

    // Mean pool then relu (derivative 0 at exactly zero).
    Matrix d_conv(f_ch, t_len);
    for (int f = 0; f < f_ch; ++f) {
        const double dp = d_pooled[static_cast<std::size_t>(f)] / t_len;
        for (int t = 0; t < t_len; ++t)
            d_conv.at(f, t) = fw.conv.at(f, t) > 0.0 ? dp : 0.0;
    }

    // Encoder conv layer.
    for (int f = 0; f < f_ch; ++f) {
        for (int t = 0; t < t_len; ++t) {
            const double df = d_conv.at(f, t);
            if (df == 0.0) continue;
            g.enc_conv_bias[static_cast<std::size_t>(f)] += df;
            for (int a = 0; a < a_ch; ++a) {
                for (int j = 0; j < k; ++j) {
                    const int src = t + j - half;
                    if (src < 0 || src >= t_len) continue;
                    g.enc_kernels[static_cast<std::size_t>(kernel_index(f, a, j, a_ch, k))] +=
                        df * sample.at(a, src);
                }
            }
        }
    }
    return fw.loss;
}

void apply_step(EncoderWeights& enc, DecoderWeights& dec, const Gradients& g,
                double step) {
    auto axpy = [step](std::vector<double>& w, const std::vector<double>& dw) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * dw[i];
    };
    axpy(enc.kernels, g.enc_kernels);
    axpy(enc.conv_bias, g.enc_conv_bias);
    axpy(enc.projection.data, g.enc_projection.data);
    axpy(enc.projection_bias, g.enc_projection_bias);
    axpy(dec.expansion.data, g.dec_expansion.data);
    axpy(dec.expansion_bias, g.dec_expansion_bias);
    axpy(dec.kernels, g.dec_kernels);
    axpy(dec.bias, g.dec_bias);
}

}  // namespace

FeatureVector encode(const Matrix& input, const EncoderWeights& weights, int user_id) {
    if (input.rows != weights.tracks)
        throw ShapeMismatch("input has " + std::to_string(input.rows) +
                            " tracks, weights expect " + std::to_string(weights.tracks));
    const Matrix conv =
        conv1d_same(input, weights.kernels, weights.filters, weights.taps, weights.conv_bias);

    std::vector<double> pooled(static_cast<std::size_t>(weights.filters), 0.0);
    for (int f = 0; f < weights.filters; ++f) {
        double acc = 0.0;
        for (int t = 0; t < conv.cols; ++t) acc += std::max(conv.at(f, t), 0.0);
        pooled[static_cast<std::size_t>(f)] = acc / conv.cols;
    }

    FeatureVector out;
    out.user_id = user_id;
    out.values.assign(static_cast<std::size_t>(weights.dim), 0.0);
    for (int i = 0; i < weights.dim; ++i) {
        double acc = weights.projection_bias[static_cast<std::size_t>(i)];
        for (int f = 0; f < weights.filters; ++f)
            acc += weights.projection.at(i, f) * pooled[static_cast<std::size_t>(f)];
        out.values[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

Matrix decode(const std::vector<double>& feature, const DecoderWeights& weights, int t_len) {
    const int f_ch = weights.expansion.rows;
    const int dim = weights.expansion.cols;
    const int a_ch = static_cast<int>(weights.bias.size());
    if (static_cast<int>(feature.size()) != dim)
        throw ShapeMismatch("feature length does not match decoder dim");
    if (t_len < 1) throw ShapeMismatch("decode requires t_len >= 1");
    const int k = a_ch * f_ch > 0
                      ? static_cast<int>(weights.kernels.size()) / (a_ch * f_ch)
                      : 0;
    if (static_cast<std::size_t>(a_ch * f_ch * k) != weights.kernels.size())
        throw ShapeMismatch("decoder kernel size does not match A*F*k");

    std::vector<double> expanded(static_cast<std::size_t>(f_ch), 0.0);
    for (int f = 0; f < f_ch; ++f) {
        double acc = weights.expansion_bias[static_cast<std::size_t>(f)];
        for (int i = 0; i < dim; ++i)
            acc += weights.expansion.at(f, i) * feature[static_cast<std::size_t>(i)];
        expanded[static_cast<std::size_t>(f)] = acc;
    }

    Matrix broadcast(f_ch, t_len);
    for (int f = 0; f < f_ch; ++f)
        for (int t = 0; t < t_len; ++t) broadcast.at(f, t) = expanded[static_cast<std::size_t>(f)];

    return conv1d_same(broadcast, weights.kernels, a_ch, k, weights.bias);
}

AutoencoderTraining init_autoencoder(int tracks, const EncoderHyper& hyper) {
    if (tracks < 1) throw ShapeMismatch("need at least one input track");
    if (hyper.taps < 1 || hyper.taps % 2 == 0)
        throw ShapeMismatch("taps must be odd and positive");

    AutoencoderTraining out;
    EncoderWeights& enc = out.encoder;
    DecoderWeights& dec = out.decoder;
    enc.filters = hyper.filters;
    enc.taps = hyper.taps;
    enc.dim = hyper.dim;
    enc.tracks = tracks;
    enc.kernels.assign(static_cast<std::size_t>(hyper.filters * tracks * hyper.taps), 0.0);
    enc.conv_bias.assign(static_cast<std::size_t>(hyper.filters), 0.0);
    enc.projection = Matrix(hyper.dim, hyper.filters);
    enc.projection_bias.assign(static_cast<std::size_t>(hyper.dim), 0.0);
    dec.expansion = Matrix(hyper.filters, hyper.dim);
    dec.expansion_bias.assign(static_cast<std::size_t>(hyper.filters), 0.0);
    dec.kernels.assign(static_cast<std::size_t>(tracks * hyper.filters * hyper.taps), 0.0);
    dec.bias.assign(static_cast<std::size_t>(tracks), 0.0);

    const double bound = 1.0 / std::sqrt(static_cast<double>(tracks * hyper.taps));
    Rng rng(hyper.seed);
    for (double& w : enc.kernels) w = rng.uniform(-bound, bound);
    for (double& w : enc.projection.data) w = rng.uniform(-bound, bound);
    for (double& w : dec.expansion.data) w = rng.uniform(-bound, bound);
    for (double& w : dec.kernels) w = rng.uniform(-bound, bound);
    return out;
}

AutoencoderTraining train_autoencoder(const std::vector<Matrix>& dataset,
                                      const EncoderHyper& hyper) {
    if (dataset.empty()) throw EmptyDataset("autoencoder training needs samples");
    if (hyper.lr <= 0.0) throw Error("learning rate must be positive");
    const int tracks = dataset.front().rows;
    for (const Matrix& m : dataset)
        if (m.rows != tracks || m.cols != dataset.front().cols)
            throw ShapeMismatch("dataset matrices must share one shape");

    AutoencoderTraining state = init_autoencoder(tracks, hyper);
    Rng order_rng = Rng(hyper.seed).split(0x0badcafe);

    const std::size_t n = dataset.size();
    const std::size_t batch = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::max(1, hyper.batch)));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[static_cast<std::size_t>(order_rng.bounded(i))]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            Gradients grads(state.encoder, state.decoder);
            double batch_loss = 0.0;
            for (std::size_t s = start; s < stop; ++s)
                batch_loss += backprop(state.encoder, state.decoder,
                                       dataset[perm[s]], grads);
            const double inv = 1.0 / static_cast<double>(stop - start);
            batch_loss *= inv;
            if (!std::isfinite(batch_loss))
                throw DivergedLoss("non-finite loss at epoch " + std::to_string(epoch));
            epoch_loss += batch_loss * static_cast<double>(stop - start);
            apply_step(state.encoder, state.decoder, grads, hyper.lr * inv);
        }
        state.loss_curve.push_back(epoch_loss / static_cast<double>(n));
    }
    return state;
}

double reconstruction_loss(const EncoderWeights& enc, const DecoderWeights& dec,
                           const Matrix& sample) {
    return forward_pass(enc, dec, sample).loss;
}

double gradient_check(EncoderWeights enc, DecoderWeights dec, const Matrix& sample,
                      double epsilon) {
    if (epsilon <= 0.0) throw Error("epsilon must be positive");

    Gradients grads(enc, dec);
    backprop(enc, dec, sample, grads);

    const std::vector<std::pair<std::vector<double>*, const std::vector<double>*>> params = {
        {&enc.kernels, &grads.enc_kernels},
        {&enc.conv_bias, &grads.enc_conv_bias},
        {&enc.projection.data, &grads.enc_projection.data},
        {&enc.projection_bias, &grads.enc_projection_bias},
        {&dec.expansion.data, &grads.dec_expansion.data},
        {&dec.expansion_bias, &grads.dec_expansion_bias},
        {&dec.kernels, &grads.dec_kernels},
        {&dec.bias, &grads.dec_bias},
    };

    double worst = 0.0;
    for (auto& [weights, analytic] : params) {
        for (std::size_t i = 0; i < weights->size(); ++i) {
            const double saved = (*weights)[i];
            (*weights)[i] = saved + epsilon;
            const double up = reconstruction_loss(enc, dec, sample);
            (*weights)[i] = saved - epsilon;
            const double down = reconstruction_loss(enc, dec, sample);
            (*weights)[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double ga = (*analytic)[i];
            const double err =
                std::abs(ga - numeric) / std::max(1e-12, std::abs(ga) + std::abs(numeric));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

namespace {

void write_reals(std::ofstream& f, const std::vector<double>& values) {
    char buf[40];
    for (double v : values) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        f << buf << "\n";
    }
}

}  // namespace

void save_encoder(const EncoderWeights& weights, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path + " for writing");
    f << "ENC v1 " << weights.filters << " " << weights.taps << " " << weights.dim
      << " " << weights.tracks << "\n";
    write_reals(f, weights.kernels);
    write_reals(f, weights.conv_bias);
    write_reals(f, weights.projection.data);
    write_reals(f, weights.projection_bias);
    if (!f) throw IoFailure("write to " + path + " failed");
}

EncoderWeights load_encoder(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path + " for reading");
    std::string magic, version;
    EncoderWeights w;
    if (!(f >> magic >> version >> w.filters >> w.taps >> w.dim >> w.tracks) ||
        magic != "ENC" || version != "v1")
        throw FormatVersionMismatch("expected 'ENC v1' header in " + path);

    auto read_reals = [&](std::vector<double>& out, std::size_t count) {
        out.resize(count);
        for (double& v : out)
            if (!(f >> v)) throw FormatVersionMismatch("truncated weights in " + path);
    };
    read_reals(w.kernels, static_cast<std::size_t>(w.filters * w.tracks * w.taps));
    read_reals(w.conv_bias, static_cast<std::size_t>(w.filters));
    w.projection = Matrix(w.dim, w.filters);
    read_reals(w.projection.data, static_cast<std::size_t>(w.dim * w.filters));
    read_reals(w.projection_bias, static_cast<std::size_t>(w.dim));
    return w;
}

}  // namespace twinstream
