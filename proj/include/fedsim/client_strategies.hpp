#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedsim/matrix.hpp"

namespace fedsim {

enum class ClientStrategy { FedAvg, Wcu, FedFast, FedFnn };

ClientStrategy parse_client_strategy(const std::string& name);
std::string to_string(ClientStrategy s);

// Subordinate updates are returned as a map so strategies can never touch a
// delegate row; the engine applies them after computing the delegate commits.

// Every subordinate row becomes the mean of the delegates' new rows.
std::map<int, Vec> fedavg_subordinates(const std::map<int, Vec>& delegate_rows,
                                       std::span<const int> subordinates);

// No client updates: subordinates keep their rows.
std::map<int, Vec> wcu_subordinates();

struct ClusterModel {
    int k = 0;
    Matrix centroids;             // k x d
    std::vector<int> assignment;  // point -> cluster
    double inertia = 0.0;
};

// Lloyd's algorithm with k-means++ seeding; stops on an assignment fixpoint
// or after max_iters. Empty clusters are re-seeded from the point farthest
// from its centroid.
ClusterModel kmeans_fit(const Matrix& points, int k, int max_iters, uint64_t seed);

// Per-cluster mean delegate delta (new - old), added to every subordinate of
// that cluster. Clusters without delegates leave their subordinates alone.
std::map<int, Vec> fedfast_subordinates(const ClusterModel& cluster,
                                        const std::map<int, Vec>& delegate_rows,
                                        const Matrix& pre_round_user_emb,
                                        std::span<const int> subordinates);

}  // namespace fedsim
