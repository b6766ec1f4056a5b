#include "fedsim/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fedsim/gmf.hpp"  // adam_step
#include "fedsim/log.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

Mlp::Mlp(int input_dim, std::span<const int> hidden, int output_dim, uint64_t seed)
    : input_dim_(input_dim), output_dim_(output_dim) {
    if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("Mlp: bad dimensions");
    std::vector<int> dims;
    dims.push_back(input_dim);
    for (int h : hidden) {
        if (h < 1) throw std::invalid_argument("Mlp: hidden width must be >= 1");
        dims.push_back(h);
    }
    dims.push_back(output_dim);

    Rng rng(seed);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto in = static_cast<size_t>(dims[l]);
        const auto out = static_cast<size_t>(dims[l + 1]);
        Matrix w(out, in);
        const double scale = std::sqrt(2.0 / static_cast<double>(in));  // He init
        for (double& x : w.data) x = rng.normal(0.0, scale);
        weights_.push_back(std::move(w));
        biases_.emplace_back(out, 0.0);
    }
}

Vec Mlp::forward(std::span<const double> x) const {
    Vec cur(x.begin(), x.end());
    for (size_t l = 0; l < weights_.size(); ++l) {
        const Matrix& w = weights_[l];
        Vec next(w.rows);
        for (size_t o = 0; o < w.rows; ++o) {
            next[o] = biases_[l][o] + dot(w.row(o), cur);
        }
        if (l + 1 < weights_.size()) {
            for (double& v : next) v = std::max(0.0, v);  // ReLU
        }
        cur = std::move(next);
    }
    return cur;
}

Vec Mlp::flatten_params() const {
    Vec flat;
    for (size_t l = 0; l < weights_.size(); ++l) {
        flat.insert(flat.end(), weights_[l].data.begin(), weights_[l].data.end());
        flat.insert(flat.end(), biases_[l].begin(), biases_[l].end());
    }
    return flat;
}

void Mlp::load_params(std::span<const double> flat) {
    size_t pos = 0;
    for (size_t l = 0; l < weights_.size(); ++l) {
        std::copy_n(flat.begin() + static_cast<ptrdiff_t>(pos), weights_[l].data.size(),
                    weights_[l].data.begin());
        pos += weights_[l].data.size();
        std::copy_n(flat.begin() + static_cast<ptrdiff_t>(pos), biases_[l].size(),
                    biases_[l].begin());
        pos += biases_[l].size();
    }
    if (pos != flat.size()) throw std::invalid_argument("load_params: size mismatch");
}

std::string PredictorHyper::label() const {
    std::ostringstream os;
    os << "hidden=";
    for (size_t i = 0; i < hidden.size(); ++i) os << (i ? "x" : "") << hidden[i];
    os << " lr=" << lr << " dropout=" << dropout;
    return os.str();
}

// Shared forward/backward over the whole batch. Dropout masks, when given,
// hold the per-example inverted-dropout scale per hidden unit (0 or
// 1/(1-rate)), indexed [example][hidden layer][unit].
struct MlpTrainer {
    using Masks = std::vector<std::vector<Vec>>;

    static double batch_grad(const Mlp& model, const Matrix& inputs, const Matrix& targets,
                             const Masks* masks, Vec& grad_out) {
        const size_t batch = inputs.rows;
        const size_t layers = model.weights_.size();
        grad_out.assign(model.flatten_params().size(), 0.0);

        // Per-layer gradient offsets into the flat vector.
        std::vector<size_t> offset(layers);
        size_t pos = 0;
        for (size_t l = 0; l < layers; ++l) {
            offset[l] = pos;
            pos += model.weights_[l].data.size() + model.biases_[l].size();
        }

        const double inv = 1.0 / (static_cast<double>(batch) * static_cast<double>(model.output_dim_));
        double loss = 0.0;

        std::vector<Vec> acts(layers + 1);       // post-activation values
        std::vector<Vec> preacts(layers);        // pre-activation values
        for (size_t b = 0; b < batch; ++b) {
            acts[0].assign(inputs.row(b).begin(), inputs.row(b).end());
            for (size_t l = 0; l < layers; ++l) {
                const Matrix& w = model.weights_[l];
                preacts[l].assign(w.rows, 0.0);
                for (size_t o = 0; o < w.rows; ++o) {
                    preacts[l][o] = model.biases_[l][o] + dot(w.row(o), acts[l]);
                }
                acts[l + 1] = preacts[l];
                if (l + 1 < layers) {
                    for (double& v : acts[l + 1]) v = std::max(0.0, v);
                    if (masks) {
                        const Vec& mask = (*masks)[b][l];
                        for (size_t o = 0; o < acts[l + 1].size(); ++o) acts[l + 1][o] *= mask[o];
                    }
                }
            }

            Vec delta(static_cast<size_t>(model.output_dim_));
            const auto target = targets.row(b);
            for (size_t j = 0; j < delta.size(); ++j) {
                const double r = acts[layers][j] - target[j];
                loss += r * r;
                delta[j] = 2.0 * r * inv;
            }

            for (size_t l = layers; l-- > 0;) {
                const Matrix& w = model.weights_[l];
                double* gw = grad_out.data() + offset[l];
                double* gb = gw + w.data.size();
                const Vec& a = acts[l];
                for (size_t o = 0; o < w.rows; ++o) {
                    const double dv = delta[o];
                    gb[o] += dv;
                    double* gwrow = gw + o * w.cols;
                    for (size_t i = 0; i < w.cols; ++i) gwrow[i] += dv * a[i];
                }
                if (l == 0) break;
                Vec prev(w.cols, 0.0);
                for (size_t o = 0; o < w.rows; ++o) {
                    const double dv = delta[o];
                    const auto wrow = w.row(o);
                    for (size_t i = 0; i < w.cols; ++i) prev[i] += dv * wrow[i];
                }
                // Through dropout scale and the ReLU kink.
                if (masks) {
                    const Vec& mask = (*masks)[b][l - 1];
                    for (size_t i = 0; i < prev.size(); ++i) prev[i] *= mask[i];
                }
                for (size_t i = 0; i < prev.size(); ++i) {
                    if (preacts[l - 1][i] <= 0.0) prev[i] = 0.0;
                }
                delta = std::move(prev);
            }
        }
        return loss * inv;
    }
};

double mse(const Mlp& model, const Matrix& inputs, const Matrix& targets) {
    double loss = 0.0;
    for (size_t b = 0; b < inputs.rows; ++b) {
        const Vec y = model.forward(inputs.row(b));
        const auto t = targets.row(b);
        for (size_t j = 0; j < y.size(); ++j) {
            const double r = y[j] - t[j];
            loss += r * r;
        }
    }
    return loss / (static_cast<double>(inputs.rows) * static_cast<double>(model.output_dim()));
}

double rmse(const Mlp& model, const Matrix& inputs, const Matrix& targets) {
    return std::sqrt(mse(model, inputs, targets));
}

Vec mse_gradient(const Mlp& model, const Matrix& inputs, const Matrix& targets) {
    Vec grad;
    MlpTrainer::batch_grad(model, inputs, targets, nullptr, grad);
    return grad;
}

FitResult fit_predictor(const Matrix& inputs, const Matrix& targets, const PredictorHyper& hyper,
                        const TrainOptions& opts, uint64_t seed) {
    if (inputs.rows < 2) throw std::invalid_argument("fit_predictor: need at least 2 pairs");
    if (inputs.rows != targets.rows) throw std::invalid_argument("fit_predictor: pair mismatch");

    FitResult result;
    result.model = Mlp(static_cast<int>(inputs.cols), hyper.hidden,
                       static_cast<int>(targets.cols), derive_seed(seed, 0x11));

    Vec params = result.model.flatten_params();
    AdamState adam(params.size());
    const AdamHyper ah{hyper.lr, opts.beta1, opts.beta2, opts.eps};

    Rng mask_rng(derive_seed(seed, 0xD7));
    const bool use_dropout = hyper.dropout > 0.0;
    const size_t hidden_layers = result.model.layer_count() > 0 ? result.model.layer_count() - 1 : 0;

    Vec grad;
    std::vector<double> rmse_history;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        MlpTrainer::Masks masks;
        if (use_dropout) {
            masks.resize(inputs.rows);
            const double keep = 1.0 - hyper.dropout;
            for (size_t b = 0; b < inputs.rows; ++b) {
                masks[b].resize(hidden_layers);
                for (size_t l = 0; l < hidden_layers; ++l) {
                    const size_t width = static_cast<size_t>(hyper.hidden[l]);
                    masks[b][l].assign(width, 0.0);
                    for (size_t o = 0; o < width; ++o) {
                        if (mask_rng.uniform() < keep) masks[b][l][o] = 1.0 / keep;
                    }
                }
            }
        }
        MlpTrainer::batch_grad(result.model, inputs, targets, use_dropout ? &masks : nullptr, grad);
        adam_step(adam, params, grad, ah);
        result.model.load_params(params);
        result.epochs_run = epoch + 1;

        rmse_history.push_back(rmse(result.model, inputs, targets));
        const size_t w = static_cast<size_t>(opts.plateau_window);
        if (rmse_history.size() > w) {
            const double prev = rmse_history[rmse_history.size() - 1 - w];
            const double cur = rmse_history.back();
            if (std::abs(cur - prev) <= opts.plateau_rel_tol * std::max(prev, 1e-12)) break;
        }
    }
    result.train_rmse = rmse(result.model, inputs, targets);
    return result;
}

std::vector<PredictorHyper> HyperGrid::expand() const {
    std::vector<PredictorHyper> points;
    for (const auto& shape : hidden_shapes) {
        for (double lr : learning_rates) {
            for (double dr : dropouts) {
                points.push_back({shape, lr, dr});
            }
        }
    }
    return points;
}

CvResult cross_validated_fit(const Matrix& inputs, const Matrix& targets, const HyperGrid& grid,
                             int folds, const TrainOptions& opts, uint64_t seed, int threads) {
    const auto points = grid.expand();
    if (points.empty()) throw std::invalid_argument("cross_validated_fit: empty grid");
    const size_t n = inputs.rows;
    if (n < 2) throw std::invalid_argument("cross_validated_fit: need at least 2 pairs");

    int f = folds;
    if (static_cast<size_t>(f) > n) {
        f = static_cast<int>(n);  // leave-one-out
        log_info("cross_validated_fit: only " + std::to_string(n) + " pairs, using " +
                 std::to_string(f) + " folds");
    }
    if (f < 2) f = 2;

    // Seeded shuffle, then contiguous folds as evenly sized as possible.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng fold_rng(derive_seed(seed, 0xF01D));
    fold_rng.shuffle(order);
    std::vector<int> fold_of(n);
    for (size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % static_cast<size_t>(f));

    const size_t cells = points.size() * static_cast<size_t>(f);
    std::vector<double> val_rmse(cells, 0.0);
    parallel_for(cells, threads, [&](size_t cell) {
        const size_t g = cell / static_cast<size_t>(f);
        const int fold = static_cast<int>(cell % static_cast<size_t>(f));
        size_t train_n = 0, val_n = 0;
        for (size_t i = 0; i < n; ++i) (fold_of[i] == fold ? val_n : train_n) += 1;
        Matrix tr_in(train_n, inputs.cols), tr_out(train_n, targets.cols);
        Matrix va_in(val_n, inputs.cols), va_out(val_n, targets.cols);
        size_t ti = 0, vi = 0;
        for (size_t i = 0; i < n; ++i) {
            if (fold_of[i] == fold) {
                va_in.set_row(vi, inputs.row(i));
                va_out.set_row(vi, targets.row(i));
                ++vi;
            } else {
                tr_in.set_row(ti, inputs.row(i));
                tr_out.set_row(ti, targets.row(i));
                ++ti;
            }
        }
        if (train_n < 2) {
            // Degenerate LOO split with 2 pairs; fit_predictor wants 2 rows,
            // so duplicate the single training pair.
            Matrix dup_in(2, inputs.cols), dup_out(2, targets.cols);
            dup_in.set_row(0, tr_in.row(0));
            dup_in.set_row(1, tr_in.row(0));
            dup_out.set_row(0, tr_out.row(0));
            dup_out.set_row(1, tr_out.row(0));
            const auto fit = fit_predictor(dup_in, dup_out, points[g], opts,
                                           derive_seed(seed, g, static_cast<uint64_t>(fold)));
            val_rmse[cell] = rmse(fit.model, va_in, va_out);
            return;
        }
        const auto fit = fit_predictor(tr_in, tr_out, points[g], opts,
                                       derive_seed(seed, g, static_cast<uint64_t>(fold)));
        val_rmse[cell] = rmse(fit.model, va_in, va_out);
    });

    size_t best = 0;
    double best_rmse = std::numeric_limits<double>::infinity();
    std::vector<double> mean_rmse(points.size());
    for (size_t g = 0; g < points.size(); ++g) {
        double sum = 0.0;
        for (int fold = 0; fold < f; ++fold) {
            sum += val_rmse[g * static_cast<size_t>(f) + static_cast<size_t>(fold)];
        }
        mean_rmse[g] = sum / static_cast<double>(f);
        if (mean_rmse[g] < best_rmse) {  // strict: ties keep the earlier grid point
            best_rmse = mean_rmse[g];
            best = g;
        }
    }

    CvResult result;
    result.report.chosen = points[best];
    result.report.folds = f;
    result.report.mean_rmse = mean_rmse[best];
    result.report.fold_rmse.assign(
        val_rmse.begin() + static_cast<ptrdiff_t>(best * static_cast<size_t>(f)),
        val_rmse.begin() + static_cast<ptrdiff_t>((best + 1) * static_cast<size_t>(f)));
    result.model =
        fit_predictor(inputs, targets, points[best], opts, derive_seed(seed, 0xREF17)).model;
    return result;
}

PredictorOutput parse_predictor_output(const std::string& name) {
    if (name == "state") return PredictorOutput::StateComposition;
    if (name == "delta") return PredictorOutput::RawState;
    throw std::invalid_argument("unknown predictor output mode: " + name);
}

Vec blend_prediction(std::span<const double> g_state, std::span<const double> old_row,
                     double gamma, int t) {
    const double w = std::exp(-gamma * static_cast<double>(t));
    Vec out(old_row.size());
    for (size_t j = 0; j < out.size(); ++j) {
        out[j] = w * g_state[j] + (1.0 - w) * old_row[j];
    }
    return out;
}

Vec predict_subordinate(std::span<const double> old_row, const Mlp& model, PredictorOutput mode,
                        double gamma, int t) {
    Vec g = model.forward(old_row);
    if (mode == PredictorOutput::StateComposition) {
        for (size_t j = 0; j < g.size(); ++j) g[j] += old_row[j];
    }
    return blend_prediction(g, old_row, gamma, t);
}

bool patience_check(std::span<const double> loss_history, int p, double eps) {
    if (p < 1) throw std::invalid_argument("patience_check: p must be >= 1");
    const size_t t = loss_history.size();
    if (t <= static_cast<size_t>(p)) return true;
    const double now = loss_history[t - 1];
    const double ref = loss_history[t - 1 - static_cast<size_t>(p)];
    if (ref == 0.0) {
        log_warn("patience: reference loss is zero, treating ratio as stable");
        return false;
    }
    return std::abs(1.0 - now / ref) >= eps;
}

}  // namespace fedsim
