#include "fedsim/client_strategies.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "fedsim/rng.hpp"

namespace fedsim {

ClientStrategy parse_client_strategy(const std::string& name) {
    if (name == "fedavg") return ClientStrategy::FedAvg;
    if (name == "wcu") return ClientStrategy::Wcu;
    if (name == "fedfast") return ClientStrategy::FedFast;
    if (name == "fedfnn") return ClientStrategy::FedFnn;
    throw std::invalid_argument("unknown client strategy: " + name);
}

std::string to_string(ClientStrategy s) {
    switch (s) {
        case ClientStrategy::FedAvg: return "fedavg";
        case ClientStrategy::Wcu: return "wcu";
        case ClientStrategy::FedFast: return "fedfast";
        case ClientStrategy::FedFnn: return "fedfnn";
    }
    return "?";
}

std::map<int, Vec> fedavg_subordinates(const std::map<int, Vec>& delegate_rows,
                                       std::span<const int> subordinates) {
    std::map<int, Vec> out;
    if (delegate_rows.empty()) return out;
    const size_t d = delegate_rows.begin()->second.size();
    Vec mean(d, 0.0);
    for (const auto& [k, row] : delegate_rows) {
        for (size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(delegate_rows.size());
    for (double& x : mean) x *= inv;
    for (int j : subordinates) out.emplace(j, mean);
    return out;
}

std::map<int, Vec> wcu_subordinates() { return {}; }

namespace {

size_t nearest_centroid(const Matrix& centroids, std::span<const double> point) {
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < centroids.rows; ++c) {
        const double dist = squared_distance(centroids.row(c), point);
        if (dist < best_d) {
            best_d = dist;
            best = c;
        }
    }
    return best;
}

}  // namespace

ClusterModel kmeans_fit(const Matrix& points, int k, int max_iters, uint64_t seed) {
    const size_t n = points.rows;
    const size_t d = points.cols;
    if (k < 1 || static_cast<size_t>(k) > n) {
        throw std::invalid_argument("kmeans_fit: need 1 <= k <= number of points");
    }
    Rng rng(seed);
    ClusterModel model;
    model.k = k;
    model.centroids = Matrix(static_cast<size_t>(k), d);
    model.assignment.assign(n, 0);

    // k-means++ seeding.
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    size_t first = rng.uniform_index(n);
    model.centroids.set_row(0, points.row(first));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double dd = squared_distance(points.row(i), model.centroids.row(static_cast<size_t>(c - 1)));
            dist2[i] = std::min(dist2[i], dd);
            total += dist2[i];
        }
        size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_index(n);  // all points coincide
        }
        model.centroids.set_row(static_cast<size_t>(c), points.row(pick));
    }

    std::vector<int> counts(static_cast<size_t>(k));
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = iter == 0;
        for (size_t i = 0; i < n; ++i) {
            const int a = static_cast<int>(nearest_centroid(model.centroids, points.row(i)));
            if (a != model.assignment[i]) changed = true;
            model.assignment[i] = a;
        }
        if (!changed) break;

        Matrix sums(static_cast<size_t>(k), d);
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < n; ++i) {
            const auto c = static_cast<size_t>(model.assignment[i]);
            counts[c] += 1;
            auto row = sums.row(c);
            const auto p = points.row(i);
            for (size_t j = 0; j < d; ++j) row[j] += p[j];
        }
        for (size_t c = 0; c < static_cast<size_t>(k); ++c) {
            if (counts[c] == 0) {
                // Re-seed from the point farthest from its own centroid.
                size_t far = 0;
                double far_d = -1.0;
                for (size_t i = 0; i < n; ++i) {
                    const double dd = squared_distance(
                        points.row(i), model.centroids.row(static_cast<size_t>(model.assignment[i])));
                    if (dd > far_d) {
                        far_d = dd;
                        far = i;
                    }
                }
                model.centroids.set_row(c, points.row(far));
                model.assignment[far] = static_cast<int>(c);
                continue;
            }
            auto row = sums.row(c);
            const double inv = 1.0 / static_cast<double>(counts[c]);
            for (size_t j = 0; j < d; ++j) row[j] *= inv;
            model.centroids.set_row(c, row);
        }
    }

    model.inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
        model.inertia += squared_distance(
            points.row(i), model.centroids.row(static_cast<size_t>(model.assignment[i])));
    }
    return model;
}

std::map<int, Vec> fedfast_subordinates(const ClusterModel& cluster,
                                        const std::map<int, Vec>& delegate_rows,
                                        const Matrix& pre_round_user_emb,
                                        std::span<const int> subordinates) {
    const size_t d = pre_round_user_emb.cols;
    std::vector<Vec> delta(static_cast<size_t>(cluster.k), Vec(d, 0.0));
    std::vector<int> counts(static_cast<size_t>(cluster.k), 0);
    for (const auto& [k, new_row] : delegate_rows) {
        const auto c = static_cast<size_t>(cluster.assignment[static_cast<size_t>(k)]);
        const auto old_row = pre_round_user_emb.row(static_cast<size_t>(k));
        for (size_t j = 0; j < d; ++j) delta[c][j] += new_row[j] - old_row[j];
        counts[c] += 1;
    }
    for (size_t c = 0; c < delta.size(); ++c) {
        if (counts[c] > 0) {
            const double inv = 1.0 / static_cast<double>(counts[c]);
            for (double& x : delta[c]) x *= inv;
        }
    }

    std::map<int, Vec> out;
    for (int j : subordinates) {
        const auto c = static_cast<size_t>(cluster.assignment[static_cast<size_t>(j)]);
        if (counts[c] == 0) continue;
        Vec row = pre_round_user_emb.row_copy(static_cast<size_t>(j));
        for (size_t x = 0; x < d; ++x) row[x] += delta[c][x];
        out.emplace(j, std::move(row));
    }
    return out;
}

}  // namespace fedsim
