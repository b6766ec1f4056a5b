#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fedsim/matrix.hpp"

namespace fedsim {

// Generalized matrix factorisation scorer: sigmoid(scorer . (w_u * v_i) + bias),
// with * the element-wise product. Trained on binary cross-entropy against
// implicit positives plus sampled negatives.
struct GmfModel {
    int dim = 0;
    Matrix user_emb;  // N x dim
    Matrix item_emb;  // M x dim
    Vec scorer;       // dim
    double bias = 0.0;

    int num_users() const { return static_cast<int>(user_emb.rows); }
    int num_items() const { return static_cast<int>(item_emb.rows); }

    bool operator==(const GmfModel& o) const = default;
};

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Moments for one flat parameter block.
struct AdamState {
    Vec m;
    Vec v;
    int64_t step = 0;

    explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam step in place. step counter increments by 1.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const AdamHyper& hyper);

struct GmfInit {
    double emb_scale = 0.01;     // stddev for user/item embeddings
    double scorer_scale = 0.1;   // stddev for the scoring layer
};

GmfModel init_model(int num_users, int num_items, int dim, uint64_t seed,
                    const GmfInit& init = {});

double predict_score(const GmfModel& model, int user, int item);

// Clamps the probability to [1e-7, 1-1e-7] before the logs.
double bce_loss(double pred, int label);

// Analytic gradients of bce_loss(predict_score(...)) for a single example.
// Output spans must be sized dim (grad_scorer) / dim (grad_user, grad_item).
struct GmfExampleGrad {
    Vec user;    // d(loss)/d(w_u)
    Vec item;    // d(loss)/d(v_i)
    Vec scorer;  // d(loss)/d(phi)
    double bias = 0.0;
};
GmfExampleGrad gmf_example_grad(std::span<const double> user_row, std::span<const double> item_row,
                                std::span<const double> scorer, double bias, int label);

struct LocalTrainHyper {
    int epochs = 2;
    int negatives_per_positive = 4;
    int batch_size = 128;
    AdamHyper adam;
};

// What a delegate uploads after local training: its own user row, the rows of
// every item it touched (positives plus sampled negatives), its locally
// trained scoring layer, its interaction count and final loss.
struct LocalUpdate {
    int client_id = -1;
    Vec new_user_row;
    std::vector<std::pair<int, Vec>> touched_item_rows;  // sorted by item id
    Vec new_scorer;
    double new_bias = 0.0;
    int interaction_count = 0;  // n_k
    double final_loss = 0.0;
};

// Local training of one client on its own interactions against a read-only
// snapshot of the global model. Negatives are resampled on every call from
// items absent from `positives`; with an empty negative pool the client
// trains on positives alone. Deterministic under `seed`.
//
// Throws std::invalid_argument when `positives` is empty (callers treat an
// empty shard as a skip-client signal before dispatching).
LocalUpdate local_train(const GmfModel& snapshot, int client_id,
                        std::span<const int> positives, const LocalTrainHyper& hyper,
                        uint64_t seed);

}  // namespace fedsim
