#pragma once

#include <cstdint>
#include <vector>

#include "fedsim/dataset.hpp"

namespace fedsim {

// Clustered-preference interaction generator: G non-overlapping user/item
// groups, Beta-driven per-user sparsity, per-group item popularity, and
// eta-weighted in-group item selection.
struct GenParams {
    int num_users = 1000;
    int num_items = 1000;
    int num_groups = 5;
    double sparsity = 0.063;   // base sparsity s
    double beta_a = 1.0;
    double beta_b = 3.0;
    double eta = 0.9;
    uint64_t seed = 1;
};

void validate(const GenParams& params);  // throws std::invalid_argument

// Equal-sized contiguous blocks; the remainder goes to the last group.
struct GroupMap {
    std::vector<int> user_group;  // user -> group
    std::vector<int> item_group;  // item -> group
};

GroupMap assign_groups(const GenParams& params);

// Per-user sparsity: raw draws r_u ~ Beta(a, b); s_u = s + s * (r_u - median(r)),
// clamped to [1/M, 1] so every user gets at least one interaction.
std::vector<double> gen_sparsity(const GenParams& params, uint64_t seed);

// Raw (unnormalised) per-item popularity ~ Beta(a, b), drawn group by group.
std::vector<double> gen_popularity(const GenParams& params, const GroupMap& groups,
                                   uint64_t seed);

// p(u, i) = h(u, i) p_i / sum_j h(u, j) p_j with h = eta in-group, 1 - eta
// otherwise.
double interaction_prob(int user, int item, const GroupMap& groups,
                        const std::vector<double>& popularity, double eta);

struct GeneratedData {
    Dataset dataset;
    GroupMap groups;
    std::vector<double> user_sparsity;
    std::vector<double> popularity;
};

// Per user: n_u = ceil(M * s_u) distinct items, sampled without replacement
// with probabilities renormalised after every draw. Timestamps record draw
// order so a leave-one-out split holds out the last sampled item.
GeneratedData generate_dataset(const GenParams& params);

}  // namespace fedsim
