#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogspeech/common.hpp"
#include "cogspeech/io.hpp"
#include "cogspeech/rng.hpp"

namespace cogspeech {

using Matrix = std::vector<std::vector<double>>;

namespace detail {

inline void check_matrix(const Matrix& X, const std::string& who) {
    if (X.empty()) throw TrainError(who + ": empty input");
    const std::size_t dim = X[0].size();
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].size() != dim)
            throw TrainError(who + ": row " + std::to_string(i) + " has dim " + std::to_string(X[i].size()) +
                             ", expected " + std::to_string(dim));
        for (const double v : X[i])
            if (!std::isfinite(v)) throw TrainError(who + ": non-finite feature in row " + std::to_string(i));
    }
}

inline void check_targets(std::span<const double> y, const std::string& who) {
    for (const double v : y)
        if (!std::isfinite(v)) throw TrainError(who + ": non-finite target");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Classification head: affine -> tanh -> (train-time dropout) -> affine.
// Trained with AdamW on softmax cross-entropy.
// ---------------------------------------------------------------------------

struct TrainConfig {
    int epochs = 20;
    int batch_size = 8;
    double learning_rate = 1e-3;
    double weight_decay = 0.01;
    double dropout = 0.1;
    int hidden = 64;
    std::uint64_t seed = 0;
};

// The learning rate used when fine-tuning large pre-trained encoders;
// far too small for a head trained from scratch, kept as a preset.
inline TrainConfig plm_finetune_preset() {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 8;
    cfg.learning_rate = 2e-5;
    return cfg;
}

struct Prediction {
    int label = 0;
    std::vector<double> probs;
};

class ClassifierHead {
public:
    ClassifierHead() = default;

    ClassifierHead(std::size_t in_dim, std::size_t hidden, std::size_t n_classes, double dropout,
                   std::uint64_t init_seed)
        : in_(in_dim), hidden_(hidden), out_(n_classes), dropout_(dropout) {
        params_.assign(param_count(), 0.0);
        Rng rng(mix_seed(init_seed, 0x1217ull));
        const double w1_sd = 1.0 / std::sqrt(static_cast<double>(in_));
        for (std::size_t i = 0; i < w1_size(); ++i) params_[i] = rng.normal(0.0, w1_sd);
        const double w2_sd = 1.0 / std::sqrt(static_cast<double>(hidden_));
        for (std::size_t i = 0; i < w2_size(); ++i) params_[w2_off() + i] = rng.normal(0.0, w2_sd);
    }

    std::size_t in_dim() const { return in_; }
    std::size_t hidden_dim() const { return hidden_; }
    std::size_t n_classes() const { return out_; }
    double dropout_rate() const { return dropout_; }
    bool trained() const { return trained_; }
    double final_loss() const { return final_loss_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Inference-mode logits: dropout disabled.
    std::vector<double> logits(std::span<const double> x) const {
        if (x.size() != in_)
            throw DataError("classifier head: input dim " + std::to_string(x.size()) + ", expected " +
                            std::to_string(in_));
        std::vector<double> hidden(hidden_);
        forward_hidden(x, hidden);
        std::vector<double> out(out_);
        for (std::size_t o = 0; o < out_; ++o) {
            double z = params_[b2_off() + o];
            const double* w = &params_[w2_off() + o * hidden_];
            for (std::size_t j = 0; j < hidden_; ++j) z += w[j] * hidden[j];
            out[o] = z;
        }
        return out;
    }

    Prediction predict(std::span<const double> x) const {
        if (!trained_) throw TrainError("classifier head: predict called before training");
        Prediction p;
        p.probs = softmax(logits(x));
        p.label = static_cast<int>(std::max_element(p.probs.begin(), p.probs.end()) - p.probs.begin());
        return p;
    }

    static std::vector<double> softmax(std::span<const double> logits) {
        const double mx = *std::max_element(logits.begin(), logits.end());
        std::vector<double> p(logits.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            p[i] = std::exp(logits[i] - mx);
            sum += p[i];
        }
        for (double& v : p) v /= sum;
        return p;
    }

    // Mean cross-entropy and its gradient over the given rows. An empty
    // dropout_masks span means dropout off (used at evaluation time and by
    // the gradient checks); otherwise masks[k] scales the hidden layer of
    // row k.
    double loss_and_grad(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows,
                         std::span<const std::vector<double>> dropout_masks,
                         std::vector<double>* grad_out) const {
        if (grad_out) grad_out->assign(param_count(), 0.0);
        std::vector<double> hidden(hidden_), act(hidden_), dz1(hidden_);
        double total = 0.0;

        for (std::size_t k = 0; k < rows.size(); ++k) {
            const std::size_t r = rows[k];
            const std::vector<double>& x = X[r];
            // forward
            for (std::size_t j = 0; j < hidden_; ++j) {
                double z = params_[b1_off() + j];
                const double* w = &params_[j * in_];
                for (std::size_t i = 0; i < in_; ++i) z += w[i] * x[i];
                act[j] = std::tanh(z);
                hidden[j] = dropout_masks.empty() ? act[j] : act[j] * dropout_masks[k][j];
            }
            std::vector<double> lg(out_);
            for (std::size_t o = 0; o < out_; ++o) {
                double z = params_[b2_off() + o];
                const double* w = &params_[w2_off() + o * hidden_];
                for (std::size_t j = 0; j < hidden_; ++j) z += w[j] * hidden[j];
                lg[o] = z;
            }
            const std::vector<double> p = softmax(lg);
            total += -std::log(std::max(p[static_cast<std::size_t>(y[r])], 1e-300));

            if (!grad_out) continue;
            // backward
            std::vector<double>& g = *grad_out;
            std::fill(dz1.begin(), dz1.end(), 0.0);
            for (std::size_t o = 0; o < out_; ++o) {
                const double dlogit = p[o] - (static_cast<int>(o) == y[r] ? 1.0 : 0.0);
                g[b2_off() + o] += dlogit;
                double* gw2 = &g[w2_off() + o * hidden_];
                const double* w2 = &params_[w2_off() + o * hidden_];
                for (std::size_t j = 0; j < hidden_; ++j) {
                    gw2[j] += dlogit * hidden[j];
                    dz1[j] += dlogit * w2[j];
                }
            }
            for (std::size_t j = 0; j < hidden_; ++j) {
                const double mask = dropout_masks.empty() ? 1.0 : dropout_masks[k][j];
                const double d = dz1[j] * mask * (1.0 - act[j] * act[j]);
                g[b1_off() + j] += d;
                double* gw1 = &g[j * in_];
                for (std::size_t i = 0; i < in_; ++i) gw1[i] += d * x[i];
            }
        }

        const double inv = 1.0 / static_cast<double>(rows.size());
        if (grad_out)
            for (double& v : *grad_out) v *= inv;
        return total * inv;
    }

    // offsets into the flat parameter vector: [W1 | b1 | W2 | b2]
    std::size_t w1_size() const { return hidden_ * in_; }
    std::size_t w2_size() const { return out_ * hidden_; }
    std::size_t b1_off() const { return w1_size(); }
    std::size_t w2_off() const { return w1_size() + hidden_; }
    std::size_t b2_off() const { return w2_off() + w2_size(); }
    std::size_t param_count() const { return w2_off() + w2_size() + out_; }
    bool is_weight_index(std::size_t i) const { return i < b1_off() || (i >= w2_off() && i < b2_off()); }

    void mark_trained(double final_loss) {
        trained_ = true;
        final_loss_ = final_loss;
    }

private:
    void forward_hidden(std::span<const double> x, std::vector<double>& hidden) const {
        for (std::size_t j = 0; j < hidden_; ++j) {
            double z = params_[b1_off() + j];
            const double* w = &params_[j * in_];
            for (std::size_t i = 0; i < in_; ++i) z += w[i] * x[i];
            hidden[j] = std::tanh(z);
        }
    }

    std::size_t in_ = 0, hidden_ = 0, out_ = 0;
    double dropout_ = 0.0;
    std::vector<double> params_;
    bool trained_ = false;
    double final_loss_ = std::numeric_limits<double>::quiet_NaN();
};

// Trains the head with AdamW; bit-reproducible for fixed (X, y, cfg).
inline ClassifierHead train_classifier_head(const Matrix& X, const std::vector<int>& y,
                                            std::size_t n_classes, const TrainConfig& cfg) {
    detail::check_matrix(X, "train_classifier_head");
    if (X.size() != y.size()) throw TrainError("train_classifier_head: |X| != |y|");
    if (X.size() < 2) throw TrainError("train_classifier_head: need at least 2 samples");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0))
        throw ConfigError("train_classifier_head: bad TrainConfig");
    std::vector<std::size_t> class_count(n_classes, 0);
    for (const int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes)
            throw TrainError("train_classifier_head: label out of range");
        ++class_count[static_cast<std::size_t>(label)];
    }
    for (std::size_t c = 0; c < n_classes; ++c)
        if (class_count[c] == 0)
            throw TrainError("train_classifier_head: class " + std::to_string(c) + " absent from training data");

    ClassifierHead head(X[0].size(), static_cast<std::size_t>(cfg.hidden), n_classes, cfg.dropout, cfg.seed);

    const std::size_t n = X.size();
    const std::size_t n_params = head.param_count();
    std::vector<double> m(n_params, 0.0), v(n_params, 0.0), grad;
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    long step = 0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng(mix_seed(cfg.seed, 0x0DE4ull, static_cast<std::uint64_t>(epoch)));
        epoch_rng.shuffle(order);
        for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n, begin + static_cast<std::size_t>(cfg.batch_size));
            const std::span<const std::size_t> rows(order.data() + begin, end - begin);

            std::vector<std::vector<double>> masks;
            if (cfg.dropout > 0.0) {
                Rng mask_rng(mix_seed(cfg.seed, 0xD801ull,
                                      static_cast<std::uint64_t>(epoch) * 1000003ull + begin));
                const double keep = 1.0 - cfg.dropout;
                masks.resize(rows.size());
                for (auto& mask : masks) {
                    mask.resize(head.hidden_dim());
                    for (double& mv : mask) mv = mask_rng.bernoulli(keep) ? 1.0 / keep : 0.0;
                }
            }

            head.loss_and_grad(X, y, rows, masks, &grad);
            ++step;
            const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            auto& params = head.params();
            for (std::size_t i = 0; i < n_params; ++i) {
                m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
                v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
                params[i] -= cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
                if (cfg.weight_decay > 0.0 && head.is_weight_index(i))
                    params[i] -= cfg.learning_rate * cfg.weight_decay * params[i];
            }
        }
    }

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const double final_loss = head.loss_and_grad(X, y, all, {}, nullptr);
    head.mark_trained(final_loss);
    return head;
}

// ---------------------------------------------------------------------------
// Epsilon-insensitive linear SVR, primal subgradient descent on
//   J(w, b) = 0.5 ||w||^2 + C * sum_i max(0, |w.x_i + b - y_i| - epsilon).
// Normalized subgradient steps with 1/sqrt(t) decay; the best-objective
// iterate is returned, which lands inside the zero-loss tube whenever one
// is reachable.
// ---------------------------------------------------------------------------

struct SvrConfig {
    double epsilon = 0.1;
    double c = 10.0;
    int iterations = 8000;
    double step = 1.0;
    std::uint64_t seed = 0;  // training is deterministic; kept for provenance
};

class LinearSvr {
public:
    LinearSvr() = default;
    LinearSvr(std::vector<double> w, double b, SvrConfig cfg, bool converged, double objective)
        : w_(std::move(w)), b_(b), cfg_(cfg), converged_(converged), objective_(objective) {}

    double predict(std::span<const double> x) const {
        if (x.size() != w_.size()) throw DataError("svr: input dim mismatch");
        double z = b_;
        for (std::size_t i = 0; i < w_.size(); ++i) z += w_[i] * x[i];
        return z;
    }

    const std::vector<double>& weights() const { return w_; }
    double bias() const { return b_; }
    const SvrConfig& config() const { return cfg_; }
    bool converged() const { return converged_; }
    double objective() const { return objective_; }

private:
    std::vector<double> w_;
    double b_ = 0.0;
    SvrConfig cfg_;
    bool converged_ = false;
    double objective_ = std::numeric_limits<double>::quiet_NaN();
};

inline LinearSvr train_svr(const Matrix& X, std::span<const double> y, const SvrConfig& cfg) {
    detail::check_matrix(X, "train_svr");
    detail::check_targets(y, "train_svr");
    if (X.size() != y.size()) throw TrainError("train_svr: |X| != |y|");
    if (X.size() < 2) throw TrainError("train_svr: need at least 2 samples");
    if (!(cfg.epsilon >= 0.0) || !(cfg.c > 0.0) || cfg.iterations < 1)
        throw ConfigError("train_svr: bad SvrConfig");

    const std::size_t n = X.size(), d = X[0].size();
    std::vector<double> w(d, 0.0), gw(d);
    double b = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    const auto objective = [&](const std::vector<double>& wv, double bv, double* hinge_out) {
        double reg = 0.0;
        for (const double wi : wv) reg += wi * wi;
        reg *= 0.5;
        double hinge = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = bv - y[i];
            for (std::size_t k = 0; k < d; ++k) r += wv[k] * X[i][k];
            hinge += std::max(0.0, std::abs(r) - cfg.epsilon);
        }
        if (hinge_out) *hinge_out = hinge;
        return reg + cfg.c * hinge;
    };

    double best_hinge = 0.0;
    double best_obj = objective(w, b, &best_hinge);
    std::vector<double> best_w = w;
    double best_b = b;

    for (int t = 0; t < cfg.iterations; ++t) {
        // subgradient
        for (std::size_t k = 0; k < d; ++k) gw[k] = w[k];
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = b - y[i];
            for (std::size_t k = 0; k < d; ++k) r += w[k] * X[i][k];
            if (std::abs(r) > cfg.epsilon) {
                const double s = cfg.c * (r > 0.0 ? 1.0 : -1.0);
                for (std::size_t k = 0; k < d; ++k) gw[k] += s * X[i][k];
                gb += s;
            }
        }
        double norm = gb * gb;
        for (const double g : gw) norm += g * g;
        norm = std::sqrt(norm);
        if (norm < 1e-15) break;  // interior optimum

        const double eta = cfg.step / (norm * std::sqrt(1.0 + static_cast<double>(t)));
        for (std::size_t k = 0; k < d; ++k) w[k] -= eta * gw[k];
        b -= eta * gb;

        double hinge = 0.0;
        const double obj = objective(w, b, &hinge);
        if (obj < best_obj) {
            best_obj = obj;
            best_hinge = hinge;
            best_w = w;
            best_b = b;
        }
    }

    const bool converged = best_hinge == 0.0 || best_obj < 1e-12;
    return LinearSvr(std::move(best_w), best_b, cfg, converged, best_obj);
}

// ---------------------------------------------------------------------------
// Gradient-boosted regression trees: least-squares boosting with exact
// greedy splits, base score = mean(y). Deterministic; no subsampling.
// ---------------------------------------------------------------------------

struct GbrtConfig {
    int rounds = 200;
    int depth = 3;
    double shrinkage = 0.1;
    int min_leaf = 1;
    std::uint64_t seed = 0;  // deterministic; kept for provenance
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

using RegressionTree = std::vector<TreeNode>;

inline double tree_predict(const RegressionTree& tree, std::span<const double> x) {
    int node = 0;
    while (!tree[static_cast<std::size_t>(node)].is_leaf()) {
        const TreeNode& nd = tree[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return tree[static_cast<std::size_t>(node)].value;
}

namespace detail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

inline int grow_tree(RegressionTree& tree, const Matrix& X, const std::vector<double>& residual,
                     std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth_left,
                     int min_leaf) {
    const std::size_t n = hi - lo;
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += residual[idx[i]];
    const double mean = sum / static_cast<double>(n);

    const auto make_leaf = [&] {
        tree.push_back(TreeNode{-1, 0.0, -1, -1, mean});
        return static_cast<int>(tree.size()) - 1;
    };
    if (depth_left == 0 || n < 2 * static_cast<std::size_t>(min_leaf) || n < 2) return make_leaf();

    double parent_ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double dlt = residual[idx[i]] - mean;
        parent_ss += dlt * dlt;
    }
    if (parent_ss < 1e-12) return make_leaf();

    const std::size_t dim = X[0].size();
    SplitChoice best;
    std::vector<std::pair<double, double>> col(n);  // (feature value, residual)
    for (std::size_t f = 0; f < dim; ++f) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t row = idx[lo + i];
            col[i] = {X[row][f], residual[row]};
        }
        std::sort(col.begin(), col.end());
        double left_sum = 0.0;
        double right_sum = sum;
        double total_sq = 0.0;
        for (const auto& [xv, rv] : col) total_sq += rv * rv;
        double left_sq = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_sum += col[i].second;
            left_sq += col[i].second * col[i].second;
            right_sum = sum - left_sum;
            const std::size_t nl = i + 1, nr = n - nl;
            if (col[i].first == col[i + 1].first) continue;  // cannot split between equal values
            if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
            const double right_sq = total_sq - left_sq;
            const double ss_left = left_sq - left_sum * left_sum / static_cast<double>(nl);
            const double ss_right = right_sq - right_sum * right_sum / static_cast<double>(nr);
            const double gain = parent_ss - ss_left - ss_right;
            if (gain > best.gain + 1e-12) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (col[i].first + col[i + 1].first);
                best.gain = gain;
            }
        }
    }
    if (!best.found) return make_leaf();

    const auto mid = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                           idx.begin() + static_cast<std::ptrdiff_t>(hi),
                                           [&](std::size_t row) {
                                               return X[row][static_cast<std::size_t>(best.feature)] <=
                                                      best.threshold;
                                           });
    const std::size_t split = static_cast<std::size_t>(mid - idx.begin());
    const int self = static_cast<int>(tree.size());
    tree.push_back(TreeNode{best.feature, best.threshold, -1, -1, 0.0});
    const int left = grow_tree(tree, X, residual, idx, lo, split, depth_left - 1, min_leaf);
    const int right = grow_tree(tree, X, residual, idx, split, hi, depth_left - 1, min_leaf);
    tree[static_cast<std::size_t>(self)].left = left;
    tree[static_cast<std::size_t>(self)].right = right;
    return self;
}

}  // namespace detail

class Gbrt {
public:
    Gbrt() = default;
    Gbrt(double base, double shrinkage, std::vector<RegressionTree> trees, std::vector<double> rmse_history,
         GbrtConfig cfg)
        : base_(base),
          shrinkage_(shrinkage),
          trees_(std::move(trees)),
          rmse_history_(std::move(rmse_history)),
          cfg_(cfg) {}

    double predict(std::span<const double> x) const {
        double out = base_;
        for (const auto& tree : trees_) out += shrinkage_ * tree_predict(tree, x);
        return out;
    }

    double base_score() const { return base_; }
    double shrinkage() const { return shrinkage_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }
    // training-set RMSE after each boosting round (index 0 = base only)
    const std::vector<double>& rmse_history() const { return rmse_history_; }
    const GbrtConfig& config() const { return cfg_; }

private:
    double base_ = 0.0;
    double shrinkage_ = 0.1;
    std::vector<RegressionTree> trees_;
    std::vector<double> rmse_history_;
    GbrtConfig cfg_;
};

inline Gbrt train_gbrt(const Matrix& X, std::span<const double> y, const GbrtConfig& cfg) {
    detail::check_matrix(X, "train_gbrt");
    detail::check_targets(y, "train_gbrt");
    if (X.size() != y.size()) throw TrainError("train_gbrt: |X| != |y|");
    if (X.size() < 2) throw TrainError("train_gbrt: need at least 2 samples");
    if (cfg.rounds < 0 || cfg.depth < 1 || !(cfg.shrinkage > 0.0) || cfg.min_leaf < 1)
        throw ConfigError("train_gbrt: bad GbrtConfig");

    const std::size_t n = X.size();
    const double base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    std::vector<double> pred(n, base), residual(n);
    const auto running_rmse = [&] {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dlt = y[i] - pred[i];
            ss += dlt * dlt;
        }
        return std::sqrt(ss / static_cast<double>(n));
    };

    std::vector<double> history{running_rmse()};
    std::vector<RegressionTree> trees;
    std::vector<std::size_t> idx(n);

    for (int round = 0; round < cfg.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
        std::iota(idx.begin(), idx.end(), 0);
        RegressionTree tree;
        detail::grow_tree(tree, X, residual, idx, 0, n, cfg.depth, cfg.min_leaf);
        for (std::size_t i = 0; i < n; ++i) pred[i] += cfg.shrinkage * tree_predict(tree, X[i]);
        trees.push_back(std::move(tree));
        history.push_back(running_rmse());
    }
    return Gbrt(base, cfg.shrinkage, std::move(trees), std::move(history), cfg);
}

// ---------------------------------------------------------------------------
// Per-feature standardization, fitted on training data and reapplied at
// prediction time. Stored with regression model bundles.
// ---------------------------------------------------------------------------

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;  // 1/sd, 1.0 where sd == 0

    static Standardizer fit(const Matrix& X) {
        detail::check_matrix(X, "Standardizer::fit");
        const std::size_t n = X.size(), d = X[0].size();
        Standardizer s;
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 1.0);
        for (const auto& row : X)
            for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
        for (double& m : s.mean) m /= static_cast<double>(n);
        std::vector<double> ss(d, 0.0);
        for (const auto& row : X)
            for (std::size_t j = 0; j < d; ++j) {
                const double dlt = row[j] - s.mean[j];
                ss[j] += dlt * dlt;
            }
        for (std::size_t j = 0; j < d; ++j) {
            const double sd = std::sqrt(ss[j] / static_cast<double>(n));
            s.scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
        }
        return s;
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) * scale[j];
        return out;
    }

    Matrix apply(const Matrix& X) const {
        Matrix out;
        out.reserve(X.size());
        for (const auto& row : X) out.push_back(apply(row));
        return out;
    }
};

// ---------------------------------------------------------------------------
// Grid-search cross-validation. Every lattice point is evaluated with the
// identical fold assignment; the winner minimizes mean per-fold validation
// RMSE, ties broken by lattice order.
// ---------------------------------------------------------------------------

struct FoldAssignment {
    std::vector<int> fold_of;  // per row
    int folds = 0;
};

inline FoldAssignment make_folds(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("cross-validation needs >= 2 folds");
    if (n < static_cast<std::size_t>(folds))
        throw DataError("cross-validation: " + std::to_string(n) + " samples < " + std::to_string(folds) +
                        " folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, 0xF01Dull));
    rng.shuffle(order);
    FoldAssignment fa;
    fa.folds = folds;
    fa.fold_of.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) fa.fold_of[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return fa;
}

template <class Hp>
struct GridSearchResult {
    Hp best{};
    std::size_t best_index = 0;
    double best_rmse = std::numeric_limits<double>::infinity();
    std::vector<double> mean_rmse;  // per lattice point
};

// trainer(X_train, y_train, hp) must return a model with
// double predict(std::span<const double>).
template <class Hp, class Trainer>
GridSearchResult<Hp> grid_search_cv(Trainer&& trainer, const std::vector<Hp>& grid, const Matrix& X,
                                    std::span<const double> y, int folds = 4, std::uint64_t seed = 0) {
    if (grid.empty()) throw ConfigError("grid_search_cv: empty grid");
    const FoldAssignment fa = make_folds(X.size(), folds, seed);

    GridSearchResult<Hp> result;
    result.mean_rmse.reserve(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double fold_rmse_sum = 0.0;
        for (int f = 0; f < fa.folds; ++f) {
            Matrix x_tr;
            std::vector<double> y_tr;
            std::vector<std::size_t> val_rows;
            for (std::size_t i = 0; i < X.size(); ++i) {
                if (fa.fold_of[i] == f) {
                    val_rows.push_back(i);
                } else {
                    x_tr.push_back(X[i]);
                    y_tr.push_back(y[i]);
                }
            }
            const auto model = trainer(x_tr, y_tr, grid[g]);
            double ss = 0.0;
            for (const std::size_t i : val_rows) {
                const double d = model.predict(X[i]) - y[i];
                ss += d * d;
            }
            fold_rmse_sum += std::sqrt(ss / static_cast<double>(val_rows.size()));
        }
        const double mean_rmse = fold_rmse_sum / static_cast<double>(fa.folds);
        result.mean_rmse.push_back(mean_rmse);
        if (mean_rmse < result.best_rmse) {
            result.best_rmse = mean_rmse;
            result.best_index = g;
            result.best = grid[g];
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Model artifacts: versioned JSON, loss-free double round-trip.
// ---------------------------------------------------------------------------

constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const ClassifierHead& head, const TrainConfig& cfg) {
    return nlohmann::json{{"format_version", kModelFormatVersion},
                          {"kind", "classifier_head"},
                          {"in_dim", head.in_dim()},
                          {"hidden", head.hidden_dim()},
                          {"n_classes", head.n_classes()},
                          {"dropout", head.dropout_rate()},
                          {"params", head.params()},
                          {"final_loss", head.final_loss()},
                          {"config",
                           {{"epochs", cfg.epochs},
                            {"batch_size", cfg.batch_size},
                            {"learning_rate", cfg.learning_rate},
                            {"weight_decay", cfg.weight_decay},
                            {"dropout", cfg.dropout},
                            {"hidden", cfg.hidden},
                            {"seed", cfg.seed}}}};
}

inline ClassifierHead classifier_head_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != kModelFormatVersion)
        throw ParseError("classifier head artifact: unsupported format version");
    if (j.at("kind").get<std::string>() != "classifier_head")
        throw ParseError("model artifact is not a classifier head");
    ClassifierHead head(j.at("in_dim").get<std::size_t>(), j.at("hidden").get<std::size_t>(),
                        j.at("n_classes").get<std::size_t>(), j.at("dropout").get<double>(), 0);
    head.params() = j.at("params").get<std::vector<double>>();
    if (head.params().size() != head.param_count())
        throw ParseError("classifier head artifact: parameter count mismatch");
    head.mark_trained(j.at("final_loss").get<double>());
    return head;
}

inline nlohmann::json to_json(const LinearSvr& model) {
    return nlohmann::json{{"format_version", kModelFormatVersion},
                          {"kind", "linear_svr"},
                          {"w", model.weights()},
                          {"b", model.bias()},
                          {"epsilon", model.config().epsilon},
                          {"c", model.config().c},
                          {"iterations", model.config().iterations},
                          {"step", model.config().step},
                          {"seed", model.config().seed},
                          {"converged", model.converged()},
                          {"objective", model.objective()}};
}

inline LinearSvr linear_svr_from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "linear_svr") throw ParseError("model artifact is not a linear SVR");
    SvrConfig cfg;
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.c = j.at("c").get<double>();
    cfg.iterations = j.at("iterations").get<int>();
    cfg.step = j.at("step").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return LinearSvr(j.at("w").get<std::vector<double>>(), j.at("b").get<double>(), cfg,
                     j.at("converged").get<bool>(), j.at("objective").get<double>());
}

inline nlohmann::json to_json(const Gbrt& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees()) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& nd : tree)
            nodes.push_back({{"f", nd.feature}, {"t", nd.threshold}, {"l", nd.left}, {"r", nd.right}, {"v", nd.value}});
        trees.push_back(std::move(nodes));
    }
    return nlohmann::json{{"format_version", kModelFormatVersion},
                          {"kind", "gbrt"},
                          {"base", model.base_score()},
                          {"shrinkage", model.shrinkage()},
                          {"trees", std::move(trees)},
                          {"rmse_history", model.rmse_history()},
                          {"config",
                           {{"rounds", model.config().rounds},
                            {"depth", model.config().depth},
                            {"shrinkage", model.config().shrinkage},
                            {"min_leaf", model.config().min_leaf},
                            {"seed", model.config().seed}}}};
}

inline Gbrt gbrt_from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "gbrt") throw ParseError("model artifact is not a GBRT");
    std::vector<RegressionTree> trees;
    for (const auto& nodes : j.at("trees")) {
        RegressionTree tree;
        for (const auto& nd : nodes)
            tree.push_back(TreeNode{nd.at("f").get<int>(), nd.at("t").get<double>(), nd.at("l").get<int>(),
                                    nd.at("r").get<int>(), nd.at("v").get<double>()});
        trees.push_back(std::move(tree));
    }
    GbrtConfig cfg;
    const auto& jc = j.at("config");
    cfg.rounds = jc.at("rounds").get<int>();
    cfg.depth = jc.at("depth").get<int>();
    cfg.shrinkage = jc.at("shrinkage").get<double>();
    cfg.min_leaf = jc.at("min_leaf").get<int>();
    cfg.seed = jc.at("seed").get<std::uint64_t>();
    return Gbrt(j.at("base").get<double>(), j.at("shrinkage").get<double>(), std::move(trees),
                j.at("rmse_history").get<std::vector<double>>(), cfg);
}

inline void save_model(const nlohmann::json& j, const fs::path& path) { write_text_file(path, j.dump(2) + "\n"); }

inline nlohmann::json load_model(const fs::path& path) {
    return nlohmann::json::parse(read_text_file(path));
}

}  // namespace cogspeech
