#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentinel/data.hpp"
#include "sentinel/linalg.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/rng.hpp"

namespace sentinel {

struct NmfOptions {
    std::size_t max_iter = 500;
    double tol = 1e-6;  // relative objective decrease
    std::uint64_t seed = 0;
};

// Factorization state for V ~= W * H with everything non-negative.
// W is m x p (one weight row per pattern), H is p x n (one component per row);
// the shapes are forced by the product. grid_window restricts the fit to a
// column range [lo, hi) of the full ordinate grid.
struct NmfModel {
    DenseMatrix W;
    DenseMatrix H;
    std::size_t p = 0;
    std::vector<double> objective_trace;
    std::optional<std::pair<std::size_t, std::size_t>> grid_window;
    std::uint64_t seed = 0;
};

struct NmfReport {
    DenseMatrix components;            // p x n_window
    DenseMatrix weights;               // m x p, rows ordered by meta when present
    std::vector<double> meta_values;   // ordering key per row (row index when no meta)
    std::vector<double> rel_errors;    // per-row relative reconstruction error
    DenseMatrix residuals;             // m x n_window, V - WH row by row
    std::optional<std::pair<std::size_t, std::size_t>> window;
    bool ordered_by_meta = false;
};

namespace nmf_detail {

constexpr double kDenomFloor = 1e-12;

inline DenseMatrix random_init(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            // uniform in (0, scale]: 1 - u maps [0,1) onto (0,1]
            m(i, j) = scale * (1.0 - rng.uniform());
        }
    return m;
}

inline double objective(const DenseMatrix& v, const DenseMatrix& w, const DenseMatrix& h) {
    const DenseMatrix wh = matmul(w, h);
    double s = 0.0;
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.cols(); ++j) {
            const double d = v(i, j) - wh(i, j);
            s += d * d;
        }
    return std::sqrt(s);
}

inline double init_scale(const DenseMatrix& v, std::size_t p) {
    double mean = 0.0;
    for (double x : v.data()) mean += x;
    mean /= static_cast<double>(std::max<std::size_t>(1, v.data().size()));
    return std::max(std::sqrt(std::max(mean, 0.0) / static_cast<double>(p)), 1e-8);
}

}  // namespace nmf_detail

// One multiplicative-update sweep (H then W) for the Frobenius objective.
// Non-negativity is preserved exactly: factors are multiplied by ratios of
// non-negative quantities with denominators floored at 1e-12.
inline void nmf_update_step(NmfModel& model, const DenseMatrix& v) {
    DenseMatrix& w = model.W;
    DenseMatrix& h = model.H;
    if (w.rows() != v.rows() || h.cols() != v.cols() || w.cols() != h.rows())
        throw std::invalid_argument("nmf_update_step: inconsistent shapes");

    // H <- H .* (W^T V) ./ (W^T W H)
    {
        const DenseMatrix wt = transpose(w);
        const DenseMatrix num = matmul(wt, v);
        const DenseMatrix den = matmul(matmul(wt, w), h);
        for (std::size_t i = 0; i < h.rows(); ++i)
            for (std::size_t j = 0; j < h.cols(); ++j)
                h(i, j) *= num(i, j) / std::max(den(i, j), nmf_detail::kDenomFloor);
    }
    // W <- W .* (V H^T) ./ (W H H^T)
    {
        const DenseMatrix ht = transpose(h);
        const DenseMatrix num = matmul(v, ht);
        const DenseMatrix den = matmul(w, matmul(h, ht));
        for (std::size_t i = 0; i < w.rows(); ++i)
            for (std::size_t j = 0; j < w.cols(); ++j)
                w(i, j) *= num(i, j) / std::max(den(i, j), nmf_detail::kDenomFloor);
    }
}

// Iterate updates until the relative objective decrease falls below tol or
// max_iter sweeps have run, appending to the objective trace.
inline void nmf_refine(NmfModel& model, const DenseMatrix& v, const NmfOptions& opts) {
    if (model.objective_trace.empty())
        model.objective_trace.push_back(nmf_detail::objective(v, model.W, model.H));
    double prev = model.objective_trace.back();
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        nmf_update_step(model, v);
        const double cur = nmf_detail::objective(v, model.W, model.H);
        model.objective_trace.push_back(cur);
        if (prev - cur < opts.tol * std::max(prev, nmf_detail::kDenomFloor)) break;
        prev = cur;
    }
}

inline NmfModel nmf_fit(const DenseMatrix& v, std::size_t p, const NmfOptions& opts = {}) {
    if (v.rows() == 0 || v.cols() == 0) throw std::invalid_argument("nmf_fit: empty matrix");
    for (double x : v.data())
        if (x < 0.0) throw std::invalid_argument("nmf_fit: V has negative entries");
    if (p < 1 || p > std::min(v.rows(), v.cols()))
        throw std::invalid_argument("nmf_fit: p out of range 1..min(m,n)");

    NmfModel model;
    model.p = p;
    model.seed = opts.seed;
    Rng rng(opts.seed);
    const double scale = nmf_detail::init_scale(v, p);
    model.W = nmf_detail::random_init(v.rows(), p, scale, rng);
    model.H = nmf_detail::random_init(p, v.cols(), scale, rng);
    model.objective_trace.clear();
    nmf_refine(model, v, opts);
    return model;
}

inline NmfReport nmf_report(const NmfModel& model, const DenseMatrix& v,
                            const std::vector<double>* meta_values = nullptr) {
    if (model.W.rows() == 0 || model.objective_trace.empty())
        throw std::logic_error("nmf_report: model has not been fitted");
    if (model.W.rows() != v.rows() || model.H.cols() != v.cols())
        throw std::invalid_argument("nmf_report: V shape does not match model");

    const std::size_t m = v.rows();
    const DenseMatrix wh = matmul(model.W, model.H);

    // Order rows by meta when a full set of values is supplied.
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    const bool by_meta = meta_values != nullptr && meta_values->size() == m;
    if (by_meta)
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return (*meta_values)[a] < (*meta_values)[b];
        });

    NmfReport rep;
    rep.components = model.H;
    rep.window = model.grid_window;
    rep.ordered_by_meta = by_meta;
    rep.weights = DenseMatrix(m, model.p);
    rep.residuals = DenseMatrix(m, v.cols());
    rep.rel_errors.resize(m);
    rep.meta_values.resize(m);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t i = order[r];
        rep.meta_values[r] = by_meta ? (*meta_values)[i] : static_cast<double>(i);
        for (std::size_t j = 0; j < model.p; ++j) rep.weights(r, j) = model.W(i, j);
        double err2 = 0.0, norm2 = 0.0;
        for (std::size_t j = 0; j < v.cols(); ++j) {
            const double d = v(i, j) - wh(i, j);
            rep.residuals(r, j) = d;
            err2 += d * d;
            norm2 += v(i, j) * v(i, j);
        }
        rep.rel_errors[r] = std::sqrt(err2) / std::max(std::sqrt(norm2), nmf_detail::kDenomFloor);
    }
    return rep;
}

inline nlohmann::json to_json(const NmfReport& rep) {
    auto matrix_rows = [](const DenseMatrix& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto r = m.row(i);
            rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        return rows;
    };
    nlohmann::json j;
    j["components"] = matrix_rows(rep.components);
    j["weights"] = matrix_rows(rep.weights);
    j["meta_values"] = rep.meta_values;
    j["rel_errors"] = rep.rel_errors;
    j["residuals"] = matrix_rows(rep.residuals);
    j["window"] = rep.window ? nlohmann::json::array({rep.window->first, rep.window->second})
                             : nlohmann::json(nullptr);
    return j;
}

// A live decomposition session: the stack of told spectra plus the model,
// refit incrementally as new patterns arrive. H is kept across tells and the
// new weight row starts from the column means of W, which keeps per-pattern
// refits cheap.
class NmfSession {
public:
    NmfSession(std::size_t p, NmfOptions opts = {},
               std::optional<std::pair<std::size_t, std::size_t>> window = std::nullopt,
               std::string order_meta_key = "temperature_C")
        : p_(p), opts_(opts), window_(window), order_meta_key_(std::move(order_meta_key)) {
        if (p_ < 1) throw std::invalid_argument("NmfSession: p must be >= 1");
        if (window_ && window_->first >= window_->second)
            throw std::invalid_argument("NmfSession: empty grid window");
    }

    // Returns the number of patterns told so far.
    std::size_t tell(const Spectrum1D& s) {
        s.validate();
        if (grid_.empty()) {
            grid_ = s.grid;
            if (window_ && window_->second > grid_.size())
                throw std::invalid_argument("NmfSession: window exceeds grid length");
        } else if (s.grid.size() != grid_.size()) {
            throw std::invalid_argument(
                "NmfSession: grid length mismatch (" + std::to_string(s.grid.size()) + " vs " +
                std::to_string(grid_.size()) + "); resample the pattern to the session grid");
        }
        for (double x : s.intensity)
            if (x < 0.0)
                throw std::invalid_argument("NmfSession: negative intensity; NMF needs V >= 0");

        v_full_.append_row(s.intensity);
        metas_.push_back(s.meta.count(order_meta_key_) ? s.meta.at(order_meta_key_)
                                                       : std::numeric_limits<double>::quiet_NaN());
        refit();
        return v_full_.rows();
    }

    const NmfModel& model() const { return model_; }
    const DenseMatrix& data() const { return v_full_; }
    std::size_t patterns() const { return v_full_.rows(); }
    const std::vector<double>& grid() const { return grid_; }
    std::optional<std::pair<std::size_t, std::size_t>> window() const { return window_; }

    NmfReport report() const {
        if (v_full_.rows() == 0) throw std::logic_error("NmfSession: no data told yet");
        const bool have_meta =
            std::none_of(metas_.begin(), metas_.end(), [](double m) { return std::isnan(m); });
        return nmf_report(model_, windowed(), have_meta ? &metas_ : nullptr);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["p"] = p_;
        j["max_iter"] = opts_.max_iter;
        j["tol"] = opts_.tol;
        j["seed"] = opts_.seed;
        j["order_meta_key"] = order_meta_key_;
        j["window"] = window_ ? nlohmann::json::array({window_->first, window_->second})
                              : nlohmann::json(nullptr);
        j["grid"] = grid_;
        // NaN (meta absent) must round-trip; JSON has no NaN literal
        nlohmann::json metas = nlohmann::json::array();
        for (double m : metas_)
            metas.push_back(std::isnan(m) ? nlohmann::json(nullptr) : nlohmann::json(m));
        j["metas"] = metas;
        j["rows"] = v_full_.rows();
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < v_full_.rows(); ++i) {
            const auto r = v_full_.row(i);
            rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        j["v"] = rows;
        nlohmann::json w_rows = nlohmann::json::array();
        for (std::size_t i = 0; i < model_.W.rows(); ++i) {
            const auto r = model_.W.row(i);
            w_rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        j["w"] = w_rows;
        nlohmann::json h_rows = nlohmann::json::array();
        for (std::size_t i = 0; i < model_.H.rows(); ++i) {
            const auto r = model_.H.row(i);
            h_rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        j["h"] = h_rows;
        j["objective_trace"] = model_.objective_trace;
        return j;
    }

    static NmfSession from_json(const nlohmann::json& j) {
        NmfOptions opts;
        opts.max_iter = j.at("max_iter").get<std::size_t>();
        opts.tol = j.at("tol").get<double>();
        opts.seed = j.at("seed").get<std::uint64_t>();
        std::optional<std::pair<std::size_t, std::size_t>> window;
        if (j.at("window").is_array())
            window = std::make_pair(j["window"][0].get<std::size_t>(),
                                    j["window"][1].get<std::size_t>());
        NmfSession s(j.at("p").get<std::size_t>(), opts, window,
                     j.at("order_meta_key").get<std::string>());
        s.grid_ = j.at("grid").get<std::vector<double>>();
        for (const auto& m : j.at("metas"))
            s.metas_.push_back(m.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                           : m.get<double>());
        for (const auto& row : j.at("v")) s.v_full_.append_row(row.get<std::vector<double>>());
        s.model_.p = s.p_;
        s.model_.seed = opts.seed;
        s.model_.grid_window = window;
        for (const auto& row : j.at("w")) s.model_.W.append_row(row.get<std::vector<double>>());
        for (const auto& row : j.at("h")) s.model_.H.append_row(row.get<std::vector<double>>());
        s.model_.objective_trace = j.at("objective_trace").get<std::vector<double>>();
        return s;
    }

private:
    DenseMatrix windowed() const {
        if (!window_) return v_full_;
        return v_full_.col_slice(window_->first, window_->second);
    }

    void refit() {
        const DenseMatrix v = windowed();
        // p is capped by the available rows early in a session and grows back
        // toward the requested value as patterns arrive; any change of the
        // effective p forces a fresh seeded fit.
        const std::size_t p_eff = std::min(p_, std::min(v.rows(), v.cols()));
        if (model_.W.rows() == 0 || model_.p != p_eff) {
            model_ = nmf_fit(v, p_eff, opts_);
            model_.grid_window = window_;
            return;
        }
        // Warm start: keep H, append a W row initialized to the column means of W.
        std::vector<double> new_row(model_.p, 0.0);
        for (std::size_t j = 0; j < model_.p; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < model_.W.rows(); ++i) s += model_.W(i, j);
            new_row[j] = s / static_cast<double>(model_.W.rows());
        }
        model_.W.append_row(new_row);
        model_.objective_trace.clear();
        nmf_refine(model_, v, opts_);
    }

    std::size_t p_;
    NmfOptions opts_;
    std::optional<std::pair<std::size_t, std::size_t>> window_;
    std::string order_meta_key_;
    std::vector<double> grid_;
    std::vector<double> metas_;
    DenseMatrix v_full_;
    NmfModel model_;
};

}  // namespace sentinel
