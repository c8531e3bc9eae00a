#ifndef ASTRAS_CLASSIFY_CNN_HPP
#define ASTRAS_CLASSIFY_CNN_HPP

#include "astras/classify/common.hpp"
#include "astras/random.hpp"
#include "astras/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <span>

namespace astras {

/// conv(filters x kernel, stride, same padding) -> batch norm -> ReLU ->
/// max pool -> dropout -> fully connected -> softmax, on [1, K, 3] inputs.
struct CnnSpec {
    int width = 2592;
    int channels = 3;
    int filters = 16;
    int kernel = 9;
    int stride = 4;
    int pool = 6;
    int pool_stride = 9;
    double dropout = 0.2;
    int classes = 16;

    int conv_out() const noexcept { return (width + stride - 1) / stride; }
    int pad_total() const noexcept { return std::max((conv_out() - 1) * stride + kernel - width, 0); }
    int pad_left() const noexcept { return pad_total() / 2; }
    int pool_out() const noexcept { return (conv_out() - pool) / pool_stride + 1; }
    int dense_in() const noexcept { return filters * pool_out(); }
    int patch() const noexcept { return channels * kernel; }

    void validate() const
    {
        if (width < 1 || channels < 1 || filters < 1 || kernel < 1 || stride < 1 || pool < 1 || pool_stride < 1
            || classes < 2)
            throw ConfigError("cnn: layer sizes must be positive");
        if (conv_out() < pool)
            throw ConfigError("cnn: pooling window wider than the convolution output");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ConfigError("cnn: dropout must be in [0, 1)");
    }
    bool operator==(const CnnSpec&) const = default;
};

struct CnnModel {
    CnnSpec spec;
    /// Mean training input per (channel, column); inputs are (I - mean) / 100.
    std::vector<double> input_mean;
    std::vector<double> conv_w;  // [filter][channel][tap]
    std::vector<double> conv_b;
    std::vector<double> bn_gamma, bn_beta;
    std::vector<double> bn_mean, bn_var;  // population statistics for inference
    std::vector<double> fc_w;             // [class][dense input]
    std::vector<double> fc_b;
    static constexpr double bn_eps = 1e-5;
    static constexpr double input_scale = 100.0;

    int epochs = 0;
    double validation_accuracy = 0.0;
    bool below_target = false;

    std::vector<std::vector<double>*> parameters()
    {
        return {&conv_w, &conv_b, &bn_gamma, &bn_beta, &fc_w, &fc_b};
    }
    bool operator==(const CnnModel&) const = default;
};

/// He-style initialisation from a seed; batch-norm starts as identity.
inline CnnModel init_cnn(const CnnSpec& spec, std::uint64_t seed)
{
    spec.validate();
    CnnModel m;
    m.spec = spec;
    auto rng = stream_rng(seed, 0xC44);
    std::normal_distribution<double> g(0.0, 1.0);
    m.input_mean.assign(static_cast<std::size_t>(spec.channels * spec.width), 0.0);
    m.conv_w.resize(static_cast<std::size_t>(spec.filters * spec.patch()));
    const double sc = std::sqrt(2.0 / spec.patch());
    for (double& w : m.conv_w)
        w = sc * g(rng);
    m.conv_b.assign(static_cast<std::size_t>(spec.filters), 0.0);
    m.bn_gamma.assign(static_cast<std::size_t>(spec.filters), 1.0);
    m.bn_beta.assign(static_cast<std::size_t>(spec.filters), 0.0);
    m.bn_mean.assign(static_cast<std::size_t>(spec.filters), 0.0);
    m.bn_var.assign(static_cast<std::size_t>(spec.filters), 1.0);
    m.fc_w.resize(static_cast<std::size_t>(spec.classes * spec.dense_in()));
    const double sf = std::sqrt(2.0 / spec.dense_in());
    for (double& w : m.fc_w)
        w = sf * g(rng);
    m.fc_b.assign(static_cast<std::size_t>(spec.classes), 0.0);
    return m;
}

namespace cnn_detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Normalised input of one sample, channel-major (channels x width).
template <class T>
void load_input(const CnnModel& m, const BasicIntensityVectors<T>& iv, double* out)
{
    const int W = m.spec.width;
    if (static_cast<int>(iv.size()) != W)
        throw InputError("cnn: input width does not match the network");
    for (int c = 0; c < m.spec.channels; ++c) {
        const auto& ch = iv.channel(c);
        for (int k = 0; k < W; ++k) {
            const auto i = static_cast<std::size_t>(c * W + k);
            out[i] = (static_cast<double>(ch[static_cast<std::size_t>(k)]) - m.input_mean[i]) / CnnModel::input_scale;
        }
    }
}

/// Activations of one forward pass over a batch; kept for backprop.
struct Tape {
    int B = 0;
    Eigen::MatrixXd cols;   // patch x (B * conv_out)
    Eigen::MatrixXd y;      // filters x (B * conv_out), pre-norm
    Eigen::MatrixXd xhat;   // normalised
    Eigen::MatrixXd act;    // after BN affine (pre-ReLU)
    Eigen::VectorXd mu, inv_std;
    Eigen::MatrixXd pooled; // dense_in x B (after dropout)
    std::vector<int> argmax;  // dense_in x B, column index into act
    Eigen::MatrixXd mask;   // dense_in x B
    Eigen::MatrixXd logits; // classes x B
};

inline void im2col(const CnnSpec& s, const std::vector<double>& x, int B, Eigen::MatrixXd& cols)
{
    const int O = s.conv_out(), pl = s.pad_left(), W = s.width;
    cols.setZero(s.patch(), static_cast<Eigen::Index>(B) * O);
    for (int b = 0; b < B; ++b) {
        const double* xb = x.data() + static_cast<std::size_t>(b) * s.channels * W;
        for (int o = 0; o < O; ++o) {
            const Eigen::Index col = static_cast<Eigen::Index>(b) * O + o;
            for (int c = 0; c < s.channels; ++c)
                for (int t = 0; t < s.kernel; ++t) {
                    const int k = o * s.stride + t - pl;
                    if (k >= 0 && k < W)
                        cols(c * s.kernel + t, col) = xb[c * W + k];
                }
        }
    }
}

/// `train_bn`: normalise with batch statistics; otherwise population ones.
/// `mask`: optional dropout mask (already scaled), dense_in x B.
inline void forward(const CnnModel& m, const std::vector<double>& x, int B, bool train_bn, const Eigen::MatrixXd* mask,
                    Tape& tp)
{
    const CnnSpec& s = m.spec;
    const int O = s.conv_out(), Q = s.pool_out(), F = s.filters;
    tp.B = B;
    im2col(s, x, B, tp.cols);
    const Eigen::Map<const RowMat> W(m.conv_w.data(), F, s.patch());
    tp.y = W * tp.cols;
    for (int f = 0; f < F; ++f)
        tp.y.row(f).array() += m.conv_b[static_cast<std::size_t>(f)];
    tp.mu.resize(F);
    tp.inv_std.resize(F);
    for (int f = 0; f < F; ++f) {
        double mu, var;
        if (train_bn) {
            mu = tp.y.row(f).mean();
            var = (tp.y.row(f).array() - mu).square().mean();
        } else {
            mu = m.bn_mean[static_cast<std::size_t>(f)];
            var = m.bn_var[static_cast<std::size_t>(f)];
        }
        tp.mu(f) = mu;
        tp.inv_std(f) = 1.0 / std::sqrt(var + CnnModel::bn_eps);
    }
    tp.xhat = ((tp.y.colwise() - tp.mu).array().colwise() * tp.inv_std.array()).matrix();
    tp.act = tp.xhat;
    for (int f = 0; f < F; ++f)
        tp.act.row(f) = tp.act.row(f).array() * m.bn_gamma[static_cast<std::size_t>(f)] + m.bn_beta[static_cast<std::size_t>(f)];
    const int D = s.dense_in();
    tp.pooled.resize(D, B);
    tp.argmax.assign(static_cast<std::size_t>(D) * B, 0);
    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F; ++f)
            for (int q = 0; q < Q; ++q) {
                const Eigen::Index base = static_cast<Eigen::Index>(b) * O + static_cast<Eigen::Index>(q) * s.pool_stride;
                Eigen::Index best = base;
                double bv = std::max(tp.act(f, base), 0.0);
                for (int t = 1; t < s.pool; ++t) {
                    const double v = std::max(tp.act(f, base + t), 0.0);
                    if (v > bv) {
                        bv = v;
                        best = base + t;
                    }
                }
                const int d = f * Q + q;
                tp.pooled(d, b) = bv;
                tp.argmax[static_cast<std::size_t>(b) * D + d] = static_cast<int>(best);
            }
    if (mask) {
        tp.mask = *mask;
        tp.pooled.array() *= mask->array();
    } else {
        tp.mask.resize(0, 0);
    }
    const Eigen::Map<const RowMat> Wf(m.fc_w.data(), s.classes, D);
    tp.logits = Wf * tp.pooled;
    for (int c = 0; c < s.classes; ++c)
        tp.logits.row(c).array() += m.fc_b[static_cast<std::size_t>(c)];
}

inline Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits)
{
    Eigen::MatrixXd p = logits;
    for (Eigen::Index b = 0; b < p.cols(); ++b) {
        const double mx = p.col(b).maxCoeff();
        p.col(b) = (p.col(b).array() - mx).exp().matrix();
        p.col(b) /= p.col(b).sum();
    }
    return p;
}

struct Gradients {
    std::vector<double> conv_w, conv_b, bn_gamma, bn_beta, fc_w, fc_b;
};

/// Mean cross-entropy of the batch and its gradient (batch-norm in training mode).
inline double backward(const CnnModel& m, const Tape& tp, std::span<const int> labels, Gradients& g)
{
    const CnnSpec& s = m.spec;
    const int B = tp.B, F = s.filters, D = s.dense_in();
    Eigen::MatrixXd p = softmax(tp.logits);
    double loss = 0.0;
    for (int b = 0; b < B; ++b) {
        const int y = labels[static_cast<std::size_t>(b)];
        loss -= std::log(std::max(p(y, b), 1e-300));
        p(y, b) -= 1.0;
    }
    loss /= B;
    const Eigen::MatrixXd dlog = p / static_cast<double>(B);

    g.fc_w.resize(m.fc_w.size());
    Eigen::Map<RowMat>(g.fc_w.data(), s.classes, D) = dlog * tp.pooled.transpose();
    g.fc_b.resize(m.fc_b.size());
    Eigen::Map<Eigen::VectorXd>(g.fc_b.data(), s.classes) = dlog.rowwise().sum();

    const Eigen::Map<const RowMat> Wf(m.fc_w.data(), s.classes, D);
    Eigen::MatrixXd dpool = Wf.transpose() * dlog;
    if (tp.mask.size())
        dpool.array() *= tp.mask.array();

    Eigen::MatrixXd dact = Eigen::MatrixXd::Zero(tp.act.rows(), tp.act.cols());
    for (int b = 0; b < B; ++b)
        for (int d = 0; d < D; ++d) {
            const int f = d / s.pool_out();
            const int col = tp.argmax[static_cast<std::size_t>(b) * D + d];
            if (tp.act(f, col) > 0.0)
                dact(f, col) += dpool(d, b);
        }

    g.bn_gamma.assign(static_cast<std::size_t>(F), 0.0);
    g.bn_beta.assign(static_cast<std::size_t>(F), 0.0);
    Eigen::MatrixXd dy(F, tp.y.cols());
    const double M = static_cast<double>(tp.y.cols());
    for (int f = 0; f < F; ++f) {
        const double dbeta = dact.row(f).sum();
        const double dgamma = dact.row(f).dot(tp.xhat.row(f));
        g.bn_beta[static_cast<std::size_t>(f)] = dbeta;
        g.bn_gamma[static_cast<std::size_t>(f)] = dgamma;
        const double gam = m.bn_gamma[static_cast<std::size_t>(f)];
        dy.row(f) = (gam * tp.inv_std(f))
            * (dact.row(f).array() - dbeta / M - tp.xhat.row(f).array() * (dgamma / M)).matrix();
    }
    g.conv_w.resize(m.conv_w.size());
    Eigen::Map<RowMat>(g.conv_w.data(), F, s.patch()) = dy * tp.cols.transpose();
    g.conv_b.resize(static_cast<std::size_t>(F));
    Eigen::Map<Eigen::VectorXd>(g.conv_b.data(), F) = dy.rowwise().sum();
    return loss;
}

} // namespace cnn_detail

/// Loss and gradient of a batch with batch-norm in training mode and no dropout.
template <class T>
double cnn_loss_and_gradient(const CnnModel& m, std::span<const BasicIntensityVectors<T>* const> batch,
                             std::span<const int> labels, cnn_detail::Gradients* grad)
{
    const int B = static_cast<int>(batch.size());
    std::vector<double> x(static_cast<std::size_t>(B) * m.spec.channels * m.spec.width);
    for (int b = 0; b < B; ++b)
        cnn_detail::load_input(m, *batch[static_cast<std::size_t>(b)],
                               x.data() + static_cast<std::size_t>(b) * m.spec.channels * m.spec.width);
    cnn_detail::Tape tp;
    cnn_detail::forward(m, x, B, true, nullptr, tp);
    cnn_detail::Gradients g;
    const double loss = cnn_detail::backward(m, tp, labels, g);
    if (grad)
        *grad = std::move(g);
    return loss;
}

/// Class probabilities in inference mode.
template <class T>
std::vector<double> cnn_probabilities(const CnnModel& m, const BasicIntensityVectors<T>& iv)
{
    std::vector<double> x(static_cast<std::size_t>(m.spec.channels * m.spec.width));
    cnn_detail::load_input(m, iv, x.data());
    cnn_detail::Tape tp;
    cnn_detail::forward(m, x, 1, false, nullptr, tp);
    const Eigen::MatrixXd p = cnn_detail::softmax(tp.logits);
    return {p.data(), p.data() + p.size()};
}

template <class T>
Prediction predict(const CnnModel& m, const BasicIntensityVectors<T>& iv)
{
    const auto p = cnn_probabilities(m, iv);
    const auto it = std::max_element(p.begin(), p.end());
    return {static_cast<int>(it - p.begin()), *it};
}

struct CnnTrainOptions {
    double learning_rate = 1e-3;
    double momentum = 0.9;
    int batch_size = 64;
    int max_epochs = 200;
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;
    bool verbose = false;
};

/// SGD with momentum on a fixed model; exposed for step-level checks.
class CnnTrainer {
public:
    CnnTrainer(CnnModel& model, double lr, double momentum) : m_(model), lr_(lr), mom_(momentum)
    {
        for (auto* p : m_.parameters())
            vel_.emplace_back(p->size(), 0.0);
    }

    /// One update on `batch`; returns the loss before the update.
    template <class T>
    double step(std::span<const BasicIntensityVectors<T>* const> batch, std::span<const int> labels,
                std::mt19937_64* dropout_rng)
    {
        const int B = static_cast<int>(batch.size());
        const CnnSpec& s = m_.spec;
        x_.resize(static_cast<std::size_t>(B) * s.channels * s.width);
        for (int b = 0; b < B; ++b)
            cnn_detail::load_input(m_, *batch[static_cast<std::size_t>(b)],
                                   x_.data() + static_cast<std::size_t>(b) * s.channels * s.width);
        Eigen::MatrixXd mask;
        const bool drop = dropout_rng && s.dropout > 0.0;
        if (drop) {
            mask.resize(s.dense_in(), B);
            std::bernoulli_distribution keep(1.0 - s.dropout);
            for (Eigen::Index j = 0; j < mask.cols(); ++j)
                for (Eigen::Index i = 0; i < mask.rows(); ++i)
                    mask(i, j) = keep(*dropout_rng) ? 1.0 / (1.0 - s.dropout) : 0.0;
        }
        cnn_detail::forward(m_, x_, B, true, drop ? &mask : nullptr, tp_);
        cnn_detail::Gradients g;
        const double loss = cnn_detail::backward(m_, tp_, labels, g);
        // Running batch-norm statistics for validation during training.
        for (int f = 0; f < s.filters; ++f) {
            const double var = 1.0 / (tp_.inv_std(f) * tp_.inv_std(f)) - CnnModel::bn_eps;
            m_.bn_mean[static_cast<std::size_t>(f)] = 0.9 * m_.bn_mean[static_cast<std::size_t>(f)] + 0.1 * tp_.mu(f);
            m_.bn_var[static_cast<std::size_t>(f)] = 0.9 * m_.bn_var[static_cast<std::size_t>(f)] + 0.1 * var;
        }
        const std::vector<double>* grads[] = {&g.conv_w, &g.conv_b, &g.bn_gamma, &g.bn_beta, &g.fc_w, &g.fc_b};
        auto params = m_.parameters();
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto& v = vel_[p];
            auto& w = *params[p];
            const auto& gr = *grads[p];
            for (std::size_t i = 0; i < w.size(); ++i) {
                v[i] = mom_ * v[i] - lr_ * gr[i];
                w[i] += v[i];
            }
        }
        return loss;
    }

private:
    CnnModel& m_;
    double lr_, mom_;
    std::vector<std::vector<double>> vel_;
    std::vector<double> x_;
    cnn_detail::Tape tp_;
};

/// Exact population mean / variance of the pre-norm activations over `data`.
template <class T>
void cnn_population_statistics(CnnModel& m, std::span<const BasicIntensityVectors<T>* const> data, int batch = 64)
{
    const CnnSpec& s = m.spec;
    std::vector<double> sum(static_cast<std::size_t>(s.filters), 0.0), sq(static_cast<std::size_t>(s.filters), 0.0);
    double count = 0.0;
    std::vector<double> x;
    cnn_detail::Tape tp;
    for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch)) {
        const int B = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(batch), data.size() - start));
        x.resize(static_cast<std::size_t>(B) * s.channels * s.width);
        for (int b = 0; b < B; ++b)
            cnn_detail::load_input(m, *data[start + static_cast<std::size_t>(b)],
                                   x.data() + static_cast<std::size_t>(b) * s.channels * s.width);
        cnn_detail::forward(m, x, B, true, nullptr, tp);
        for (int f = 0; f < s.filters; ++f) {
            sum[static_cast<std::size_t>(f)] += tp.y.row(f).sum();
            sq[static_cast<std::size_t>(f)] += tp.y.row(f).squaredNorm();
        }
        count += static_cast<double>(tp.y.cols());
    }
    for (int f = 0; f < s.filters; ++f) {
        const double mu = sum[static_cast<std::size_t>(f)] / count;
        m.bn_mean[static_cast<std::size_t>(f)] = mu;
        m.bn_var[static_cast<std::size_t>(f)] = std::max(sq[static_cast<std::size_t>(f)] / count - mu * mu, 0.0);
    }
}

template <class T>
double cnn_accuracy(const CnnModel& m, std::span<const BasicIntensityVectors<T>* const> data, std::span<const int> labels)
{
    if (data.empty())
        return 1.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        ok += predict(m, *data[i]).sector == labels[i];
    return static_cast<double>(ok) / static_cast<double>(data.size());
}

/// Mini-batch SGD with momentum on cross-entropy until the held-out
/// validation accuracy reaches 100% or the epoch cap is hit.
template <class T>
CnnModel train_cnn(std::span<const BasicIntensityVectors<T>* const> data, std::span<const int> labels,
                   const CnnSpec& spec, const CnnTrainOptions& opt = {})
{
    if (data.empty() || data.size() != labels.size())
        throw InputError("cnn: need one label per input");
    for (int y : labels)
        if (y < 0 || y >= spec.classes)
            throw InputError("cnn: label out of range");
    CnnModel m = init_cnn(spec, opt.seed);
    const std::size_t n = data.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto split_rng = stream_rng(opt.seed, 0x5A11);
    std::shuffle(order.begin(), order.end(), split_rng);
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * opt.validation_fraction));
    std::vector<const BasicIntensityVectors<T>*> tr, va;
    std::vector<int> ytr, yva;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_val) {
            va.push_back(data[order[i]]);
            yva.push_back(labels[order[i]]);
        } else {
            tr.push_back(data[order[i]]);
            ytr.push_back(labels[order[i]]);
        }
    }

    for (const auto* iv : tr)
        for (int c = 0; c < spec.channels; ++c)
            for (int k = 0; k < spec.width; ++k)
                m.input_mean[static_cast<std::size_t>(c * spec.width + k)]
                    += static_cast<double>(iv->channel(c)[static_cast<std::size_t>(k)]);
    for (double& v : m.input_mean)
        v /= static_cast<double>(tr.size());

    CnnTrainer trainer(m, opt.learning_rate, opt.momentum);
    auto rng = stream_rng(opt.seed, 0xD20);
    std::vector<std::size_t> idx(tr.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<const BasicIntensityVectors<T>*> bx;
    std::vector<int> by;
    m.below_target = true;
    for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t s = 0; s < idx.size(); s += static_cast<std::size_t>(opt.batch_size)) {
            const std::size_t e = std::min(idx.size(), s + static_cast<std::size_t>(opt.batch_size));
            if (e - s < 2)
                continue;
            bx.clear();
            by.clear();
            for (std::size_t i = s; i < e; ++i) {
                bx.push_back(tr[idx[i]]);
                by.push_back(ytr[idx[i]]);
            }
            trainer.step<T>(bx, by, &rng);
        }
        m.epochs = epoch;
        m.validation_accuracy = cnn_accuracy<T>(m, va, yva);
        if (opt.verbose)
            std::fprintf(stderr, "cnn epoch %d validation accuracy %.4f\n", epoch, m.validation_accuracy);
        if (m.validation_accuracy >= 1.0) {
            m.below_target = false;
            break;
        }
    }
    cnn_population_statistics<T>(m, tr);
    m.validation_accuracy = cnn_accuracy<T>(m, va, yva);
    m.below_target = m.validation_accuracy < 1.0;
    return m;
}

} // namespace astras

#endif // ASTRAS_CLASSIFY_CNN_HPP
