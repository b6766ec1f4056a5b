#include "fedsim/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim {

void validate(const GenParams& p) {
    if (p.num_users < 1 || p.num_items < 1) {
        throw std::invalid_argument("datagen: num_users and num_items must be >= 1");
    }
    if (p.num_groups < 1 || p.num_groups > std::min(p.num_users, p.num_items)) {
        throw std::invalid_argument("datagen: need 1 <= groups <= min(users, items)");
    }
    if (!(p.sparsity > 0.0 && p.sparsity < 1.0)) {
        throw std::invalid_argument("datagen: sparsity must lie in (0, 1)");
    }
    if (!(p.eta > 0.0 && p.eta <= 1.0)) {
        throw std::invalid_argument("datagen: eta must lie in (0, 1]");
    }
    if (p.beta_a <= 0.0 || p.beta_b <= 0.0) {
        throw std::invalid_argument("datagen: beta parameters must be positive");
    }
}

GroupMap assign_groups(const GenParams& p) {
    GroupMap map;
    map.user_group.resize(static_cast<size_t>(p.num_users));
    map.item_group.resize(static_cast<size_t>(p.num_items));
    const int ug = p.num_users / p.num_groups;  // remainder joins the last group
    const int ig = p.num_items / p.num_groups;
    for (int u = 0; u < p.num_users; ++u) {
        map.user_group[static_cast<size_t>(u)] = std::min(u / ug, p.num_groups - 1);
    }
    for (int i = 0; i < p.num_items; ++i) {
        map.item_group[static_cast<size_t>(i)] = std::min(i / ig, p.num_groups - 1);
    }
    return map;
}

namespace {

double median_of(std::vector<double> v) {
    const size_t n = v.size();
    std::sort(v.begin(), v.end());
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<double> gen_sparsity(const GenParams& p, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> raw(static_cast<size_t>(p.num_users));
    for (double& r : raw) r = rng.beta(p.beta_a, p.beta_b);
    const double med = median_of(raw);
    const double floor = 1.0 / static_cast<double>(p.num_items);
    std::vector<double> out(raw.size());
    for (size_t u = 0; u < raw.size(); ++u) {
        out[u] = std::clamp(p.sparsity + p.sparsity * (raw[u] - med), floor, 1.0);
    }
    return out;
}

std::vector<double> gen_popularity(const GenParams& p, const GroupMap& groups, uint64_t seed) {
    std::vector<double> pop(static_cast<size_t>(p.num_items));
    // Group-major draw order so adding users leaves item popularity unchanged.
    for (int g = 0; g < p.num_groups; ++g) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(g)));
        for (int i = 0; i < p.num_items; ++i) {
            if (groups.item_group[static_cast<size_t>(i)] == g) {
                pop[static_cast<size_t>(i)] = rng.beta(p.beta_a, p.beta_b);
            }
        }
    }
    return pop;
}

double interaction_prob(int user, int item, const GroupMap& groups,
                        const std::vector<double>& popularity, double eta) {
    const int ug = groups.user_group[static_cast<size_t>(user)];
    double denom = 0.0;
    for (size_t j = 0; j < popularity.size(); ++j) {
        const double h = groups.item_group[j] == ug ? eta : 1.0 - eta;
        denom += h * popularity[j];
    }
    const double h = groups.item_group[static_cast<size_t>(item)] == ug ? eta : 1.0 - eta;
    return h * popularity[static_cast<size_t>(item)] / denom;
}

GeneratedData generate_dataset(const GenParams& p) {
    validate(p);
    GeneratedData out;
    out.groups = assign_groups(p);
    out.user_sparsity = gen_sparsity(p, derive_seed(p.seed, 0xA1));
    out.popularity = gen_popularity(p, out.groups, derive_seed(p.seed, 0xB2));

    Dataset& ds = out.dataset;
    ds.num_users = p.num_users;
    ds.num_items = p.num_items;
    ds.user_ids.resize(static_cast<size_t>(p.num_users));
    ds.item_ids.resize(static_cast<size_t>(p.num_items));
    std::iota(ds.user_ids.begin(), ds.user_ids.end(), 0);
    std::iota(ds.item_ids.begin(), ds.item_ids.end(), 0);
    ds.user_hist.resize(static_cast<size_t>(p.num_users));

    const size_t m = static_cast<size_t>(p.num_items);
    for (int u = 0; u < p.num_users; ++u) {
        const int ug = out.groups.user_group[static_cast<size_t>(u)];
        const size_t n_u = static_cast<size_t>(
            std::ceil(static_cast<double>(p.num_items) * out.user_sparsity[static_cast<size_t>(u)]));

        // Effective weights h(u, .) * p; drawn items get weight zero, which is
        // exactly a renormalised draw over the remaining items. The total is
        // recomputed per draw to keep the renormalisation free of float drift.
        std::vector<double> weight(m);
        for (size_t i = 0; i < m; ++i) {
            const double h = out.groups.item_group[i] == ug ? p.eta : 1.0 - p.eta;
            weight[i] = h * out.popularity[i];
        }

        Rng rng(derive_seed(p.seed, 0xC3, static_cast<uint64_t>(u)));
        auto& hist = ds.user_hist[static_cast<size_t>(u)];
        hist.reserve(n_u);
        for (size_t draw = 0; draw < n_u; ++draw) {
            double total = 0.0;
            for (size_t i = 0; i < m; ++i) total += weight[i];
            if (total <= 0.0) break;
            const double target = rng.uniform() * total;
            double acc = 0.0;
            size_t pick = m;
            for (size_t i = 0; i < m; ++i) {
                if (weight[i] == 0.0) continue;
                acc += weight[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
            if (pick == m) {  // float accumulation landed past the end
                for (size_t i = m; i-- > 0;) {
                    if (weight[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
            hist.push_back({static_cast<int>(pick), static_cast<int64_t>(draw)});
            weight[pick] = 0.0;
        }
        std::sort(hist.begin(), hist.end(),
                  [](const Interaction& a, const Interaction& b) { return a.item < b.item; });
    }
    return out;
}

}  // namespace fedsim
