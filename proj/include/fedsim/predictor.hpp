#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsim/matrix.hpp"

namespace fedsim {

// Multi-layer perceptron regressor mapping a user embedding to its predicted
// update: ReLU hidden layers, identity output, trained with full-batch Adam
// on squared error. Dropout applies to hidden activations during training
// only; inference is deterministic.
class Mlp {
  public:
    Mlp() = default;
    Mlp(int input_dim, std::span<const int> hidden, int output_dim, uint64_t seed);

    Vec forward(std::span<const double> x) const;

    int input_dim() const { return input_dim_; }
    int output_dim() const { return output_dim_; }
    size_t layer_count() const { return weights_.size(); }

    // Flattened parameter access for the gradient-check tests.
    Vec flatten_params() const;
    void load_params(std::span<const double> flat);

    friend struct MlpTrainer;

  private:
    int input_dim_ = 0;
    int output_dim_ = 0;
    std::vector<Matrix> weights_;  // layer l: out x in
    std::vector<Vec> biases_;
};

struct PredictorHyper {
    std::vector<int> hidden{64};
    double lr = 1e-2;
    double dropout = 0.0;

    std::string label() const;
};

struct TrainOptions {
    int epochs = 50;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Early exit when train RMSE moves less than this relative amount over
    // the last 5 epochs.
    double plateau_rel_tol = 1e-4;
    int plateau_window = 5;
};

// Mean squared error over pairs and coordinates; gradient of 0.5 factors is
// folded in so the reported value is the plain MSE.
double mse(const Mlp& model, const Matrix& inputs, const Matrix& targets);
double rmse(const Mlp& model, const Matrix& inputs, const Matrix& targets);

// Analytic parameter gradient of the full-batch MSE, flattened in the same
// order as Mlp::flatten_params. Exposed for finite-difference verification.
Vec mse_gradient(const Mlp& model, const Matrix& inputs, const Matrix& targets);

struct FitResult {
    Mlp model;
    double train_rmse = 0.0;
    int epochs_run = 0;
};

// Trains a fresh MLP on (input, target) pairs. Requires >= 2 pairs; the
// engine falls back to no client updates below that.
FitResult fit_predictor(const Matrix& inputs, const Matrix& targets, const PredictorHyper& hyper,
                        const TrainOptions& opts, uint64_t seed);

struct HyperGrid {
    std::vector<std::vector<int>> hidden_shapes{{32}, {64}, {64, 32}};
    std::vector<double> learning_rates{1e-2, 1e-3};
    std::vector<double> dropouts{0.0, 0.2};

    // Expansion order fixes grid-search tie-breaking: shapes outermost, then
    // learning rates, then dropouts.
    std::vector<PredictorHyper> expand() const;
};

struct FitReport {
    PredictorHyper chosen;
    std::vector<double> fold_rmse;  // validation RMSE of the winning point, per fold
    double mean_rmse = 0.0;         // RMSE_t
    int folds = 0;
};

// K-fold cross-validated grid search: mean validation RMSE per grid point,
// argmin wins (ties to the earlier point), winner refit on all pairs. Folds
// shrink to leave-one-out when there are fewer pairs than requested folds.
struct CvResult {
    Mlp model;
    FitReport report;
};
CvResult cross_validated_fit(const Matrix& inputs, const Matrix& targets, const HyperGrid& grid,
                             int folds, const TrainOptions& opts, uint64_t seed, int threads = 1);

// Whether the predictor outputs the embedding delta (added to the old row to
// form the predicted state) or the new state directly.
enum class PredictorOutput { StateComposition, RawState };

PredictorOutput parse_predictor_output(const std::string& name);  // "state" | "delta"

// exp(-gamma t) * g_state + (1 - exp(-gamma t)) * old_row.
Vec blend_prediction(std::span<const double> g_state, std::span<const double> old_row,
                     double gamma, int t);

// Applies the trained predictor to one subordinate row under the decay rule.
Vec predict_subordinate(std::span<const double> old_row, const Mlp& model, PredictorOutput mode,
                        double gamma, int t);

// true = keep predicting. Warmup while t <= p, then |1 - L(t)/L(t-p)| >= eps.
// A zero L(t-p) reads as a stable ratio (stop). Free-function form; the
// monitor below adds the latch.
bool patience_check(std::span<const double> loss_history, int p, double eps);

class PatienceMonitor {
  public:
    PatienceMonitor(int p, double eps) : p_(p), eps_(eps) {}

    // Once false, stays false for the rest of the experiment.
    bool update(std::span<const double> loss_history) {
        if (!active_) return false;
        active_ = patience_check(loss_history, p_, eps_);
        return active_;
    }
    bool active() const { return active_; }

  private:
    int p_;
    double eps_;
    bool active_ = true;
};

}  // namespace fedsim
