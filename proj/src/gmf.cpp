#include "fedsim/gmf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "fedsim/rng.hpp"

namespace fedsim {

namespace {
constexpr double kProbClamp = 1e-7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const AdamHyper& hyper) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
    }
}

GmfModel init_model(int num_users, int num_items, int dim, uint64_t seed, const GmfInit& init) {
    if (num_users < 1 || num_items < 1 || dim < 1) {
        throw std::invalid_argument("init_model: num_users, num_items and dim must be >= 1");
    }
    GmfModel model;
    model.dim = dim;
    model.user_emb = Matrix(static_cast<size_t>(num_users), static_cast<size_t>(dim));
    model.item_emb = Matrix(static_cast<size_t>(num_items), static_cast<size_t>(dim));
    model.scorer.resize(static_cast<size_t>(dim));
    Rng rng(seed);
    for (double& x : model.user_emb.data) x = rng.normal(0.0, init.emb_scale);
    for (double& x : model.item_emb.data) x = rng.normal(0.0, init.emb_scale);
    for (double& x : model.scorer) x = rng.normal(0.0, init.scorer_scale);
    model.bias = 0.0;
    return model;
}

double predict_score(const GmfModel& model, int user, int item) {
    if (user < 0 || user >= model.num_users() || item < 0 || item >= model.num_items()) {
        throw std::invalid_argument("predict_score: id out of range");
    }
    const auto w = model.user_emb.row(static_cast<size_t>(user));
    const auto v = model.item_emb.row(static_cast<size_t>(item));
    double z = model.bias;
    for (int j = 0; j < model.dim; ++j) z += model.scorer[static_cast<size_t>(j)] * w[static_cast<size_t>(j)] * v[static_cast<size_t>(j)];
    return sigmoid(z);
}

double bce_loss(double pred, int label) {
    const double p = std::clamp(pred, kProbClamp, 1.0 - kProbClamp);
    return label ? -std::log(p) : -std::log(1.0 - p);
}

GmfExampleGrad gmf_example_grad(std::span<const double> user_row, std::span<const double> item_row,
                                std::span<const double> scorer, double bias, int label) {
    const size_t d = user_row.size();
    double z = bias;
    for (size_t j = 0; j < d; ++j) z += scorer[j] * user_row[j] * item_row[j];
    const double p = sigmoid(z);
    const double dz = p - static_cast<double>(label);  // d(bce)/dz

    GmfExampleGrad g;
    g.user.resize(d);
    g.item.resize(d);
    g.scorer.resize(d);
    for (size_t j = 0; j < d; ++j) {
        g.user[j] = dz * scorer[j] * item_row[j];
        g.item[j] = dz * scorer[j] * user_row[j];
        g.scorer[j] = dz * user_row[j] * item_row[j];
    }
    g.bias = dz;
    return g;
}

namespace {

// Flat view of the client-local parameter block:
// [user row | touched item rows | scorer | bias].
struct LocalParams {
    size_t d;
    size_t n_items;
    Vec flat;

    std::span<double> user() { return {flat.data(), d}; }
    std::span<double> item(size_t idx) { return {flat.data() + d * (1 + idx), d}; }
    std::span<double> scorer() { return {flat.data() + d * (1 + n_items), d}; }
    double& bias() { return flat[d * (2 + n_items)]; }
    size_t size() const { return d * (2 + n_items) + 1; }
};

}  // namespace

LocalUpdate local_train(const GmfModel& snapshot, int client_id,
                        std::span<const int> positives, const LocalTrainHyper& hyper,
                        uint64_t seed) {
    if (positives.empty()) {
        throw std::invalid_argument("local_train: client has no interactions");
    }
    const size_t d = static_cast<size_t>(snapshot.dim);
    const int num_items = snapshot.num_items();
    Rng rng(seed);

    std::unordered_set<int> positive_set(positives.begin(), positives.end());
    const size_t pool = static_cast<size_t>(num_items) - positive_set.size();

    // Example list: positives first, then nu negatives per positive drawn
    // uniformly (with replacement across draws) from never-interacted items.
    std::vector<std::pair<int, int>> examples;  // (item, label)
    examples.reserve(positives.size() * static_cast<size_t>(1 + hyper.negatives_per_positive));
    for (int item : positives) examples.emplace_back(item, 1);
    if (pool > 0) {
        for (size_t p = 0; p < positives.size(); ++p) {
            for (int n = 0; n < hyper.negatives_per_positive; ++n) {
                int item;
                do {
                    item = static_cast<int>(rng.uniform_index(static_cast<size_t>(num_items)));
                } while (positive_set.count(item) > 0);
                examples.emplace_back(item, 0);
            }
        }
    }

    // Touched items: positives plus sampled negatives, deduplicated.
    std::vector<int> touched;
    touched.reserve(examples.size());
    for (const auto& [item, label] : examples) touched.push_back(item);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    std::unordered_map<int, size_t> item_index;
    item_index.reserve(touched.size());
    for (size_t i = 0; i < touched.size(); ++i) item_index[touched[i]] = i;

    LocalParams params{d, touched.size(), {}};
    params.flat.resize(params.size());
    std::copy_n(snapshot.user_emb.row(static_cast<size_t>(client_id)).data(), d, params.user().data());
    for (size_t i = 0; i < touched.size(); ++i) {
        std::copy_n(snapshot.item_emb.row(static_cast<size_t>(touched[i])).data(), d,
                    params.item(i).data());
    }
    std::copy_n(snapshot.scorer.data(), d, params.scorer().data());
    params.bias() = snapshot.bias;

    AdamState adam(params.size());
    Vec grad(params.size());

    const size_t batch = hyper.batch_size > 0 ? static_cast<size_t>(hyper.batch_size)
                                              : examples.size();
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += batch) {
            const size_t end = std::min(start + batch, order.size());
            std::fill(grad.begin(), grad.end(), 0.0);
            const double inv = 1.0 / static_cast<double>(end - start);
            for (size_t idx = start; idx < end; ++idx) {
                const auto& [item, label] = examples[order[idx]];
                const size_t ii = item_index[item];
                const auto g = gmf_example_grad(params.user(), params.item(ii), params.scorer(),
                                                params.bias(), label);
                double* gu = grad.data();
                double* gi = grad.data() + d * (1 + ii);
                double* gs = grad.data() + d * (1 + touched.size());
                for (size_t j = 0; j < d; ++j) {
                    gu[j] += inv * g.user[j];
                    gi[j] += inv * g.item[j];
                    gs[j] += inv * g.scorer[j];
                }
                grad[params.size() - 1] += inv * g.bias;
            }
            adam_step(adam, params.flat, grad, hyper.adam);
        }
    }

    LocalUpdate update;
    update.client_id = client_id;
    update.new_user_row.assign(params.user().begin(), params.user().end());
    update.touched_item_rows.reserve(touched.size());
    for (size_t i = 0; i < touched.size(); ++i) {
        update.touched_item_rows.emplace_back(touched[i],
                                              Vec(params.item(i).begin(), params.item(i).end()));
    }
    update.new_scorer.assign(params.scorer().begin(), params.scorer().end());
    update.new_bias = params.bias();
    update.interaction_count = static_cast<int>(positives.size());

    // Mean loss over the epoch's example set at the returned parameters; with
    // epochs == 0 this is the loss of the untouched snapshot.
    double loss = 0.0;
    for (const auto& [item, label] : examples) {
        const size_t ii = item_index[item];
        double z = params.bias();
        const auto w = params.user();
        const auto v = params.item(ii);
        const auto s = params.scorer();
        for (size_t j = 0; j < d; ++j) z += s[j] * w[j] * v[j];
        loss += bce_loss(sigmoid(z), label);
    }
    update.final_loss = loss / static_cast<double>(examples.size());
    return update;
}

}  // namespace fedsim
