#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sentinel/classify/knn.hpp"
#include "sentinel/data.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::classify {

struct MlpOptions {
    std::size_t hidden = 10;
    std::size_t epochs = 500;
    double learning_rate = 1e-2;
    std::size_t batch = 32;
    std::uint64_t seed = 0;
};

// One rectifier hidden layer, logistic output, binary cross-entropy minimized
// by mini-batch SGD. Good maps to target 1.
struct MlpModel {
    DenseMatrix w1;            // hidden x d
    std::vector<double> b1;    // hidden
    std::vector<double> w2;    // hidden
    double b2 = 0.0;
    MlpOptions opts;
    std::vector<double> epoch_loss;  // full-data loss after each epoch
};

struct MlpGradients {
    DenseMatrix w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
};

namespace mlp_detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double forward(const MlpModel& m, std::span<const double> x,
                      std::vector<double>* hidden_out = nullptr) {
    const std::size_t h = m.w2.size();
    std::vector<double> a(h);
    for (std::size_t i = 0; i < h; ++i) {
        double z = m.b1[i];
        for (std::size_t j = 0; j < x.size(); ++j) z += m.w1(i, j) * x[j];
        a[i] = z > 0.0 ? z : 0.0;
    }
    double z2 = m.b2;
    for (std::size_t i = 0; i < h; ++i) z2 += m.w2[i] * a[i];
    if (hidden_out) *hidden_out = std::move(a);
    return sigmoid(z2);
}

}  // namespace mlp_detail

// Mean binary cross-entropy over the batch (log arguments floored at 1e-12).
inline double mlp_loss(const MlpModel& m, const DenseMatrix& x, const std::vector<double>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double p = mlp_detail::forward(m, x.row(i));
        loss -= y[i] * std::log(std::max(p, 1e-12)) +
                (1.0 - y[i]) * std::log(std::max(1.0 - p, 1e-12));
    }
    return loss / static_cast<double>(x.rows());
}

// Analytic gradient of mlp_loss over the batch.
inline MlpGradients mlp_gradients(const MlpModel& m, const DenseMatrix& x,
                                  const std::vector<double>& y) {
    const std::size_t h = m.w2.size(), d = m.w1.cols(), n = x.rows();
    MlpGradients g;
    g.w1 = DenseMatrix(h, d);
    g.b1.assign(h, 0.0);
    g.w2.assign(h, 0.0);
    g.b2 = 0.0;

    std::vector<double> a;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = mlp_detail::forward(m, x.row(i), &a);
        const double dz2 = (p - y[i]) / static_cast<double>(n);
        g.b2 += dz2;
        for (std::size_t k = 0; k < h; ++k) {
            g.w2[k] += dz2 * a[k];
            if (a[k] > 0.0) {
                const double dz1 = dz2 * m.w2[k];
                g.b1[k] += dz1;
                for (std::size_t j = 0; j < d; ++j) g.w1(k, j) += dz1 * x(i, j);
            }
        }
    }
    return g;
}

inline MlpModel mlp_fit(const DenseMatrix& x, const std::vector<double>& y,
                        const MlpOptions& opts = {}) {
    const std::size_t n = x.rows(), d = x.cols();
    if (n == 0 || n != y.size()) throw std::invalid_argument("mlp_fit: bad training set");
    for (double v : y)
        if (v != 0.0 && v != 1.0)
            throw std::invalid_argument("mlp_fit: targets must be 0 or 1");

    MlpModel m;
    m.opts = opts;
    Rng rng(opts.seed);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(opts.hidden));
    m.w1 = DenseMatrix(opts.hidden, d);
    for (auto& v : m.w1.data()) v = rng.uniform(-s1, s1);
    m.b1.assign(opts.hidden, 0.0);
    m.w2.resize(opts.hidden);
    for (auto& v : m.w2) v = rng.uniform(-s2, s2);
    m.b2 = 0.0;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    DenseMatrix batch_x;
    std::vector<double> batch_y;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += opts.batch) {
            const std::size_t stop = std::min(start + opts.batch, n);
            batch_x = DenseMatrix();
            batch_y.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch_x.append_row(x.row(order[i]));
                batch_y.push_back(y[order[i]]);
            }
            const MlpGradients g = mlp_gradients(m, batch_x, batch_y);
            for (std::size_t k = 0; k < opts.hidden; ++k) {
                for (std::size_t j = 0; j < d; ++j)
                    m.w1(k, j) -= opts.learning_rate * g.w1(k, j);
                m.b1[k] -= opts.learning_rate * g.b1[k];
                m.w2[k] -= opts.learning_rate * g.w2[k];
            }
            m.b2 -= opts.learning_rate * g.b2;
        }
        const double loss = mlp_loss(m, x, y);
        if (!std::isfinite(loss))
            throw std::runtime_error("mlp_fit: non-finite loss at epoch " +
                                     std::to_string(epoch) + "; lower the learning rate");
        m.epoch_loss.push_back(loss);
    }
    return m;
}

inline Prediction mlp_predict(const MlpModel& m, std::span<const double> x) {
    if (x.size() != m.w1.cols()) throw std::invalid_argument("mlp_predict: dimension mismatch");
    const double p = mlp_detail::forward(m, x);
    Prediction out;
    out.label = p > 0.5 ? SpectrumLabel::good : SpectrumLabel::bad;
    out.confidence = out.label == SpectrumLabel::good ? p : 1.0 - p;
    return out;
}

}  // namespace sentinel::classify
