#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedsim {

enum class DataFormat { TsvUirt, CsvUir };

DataFormat parse_data_format(const std::string& name);  // "tsv_uirt" | "csv_uir"

struct Interaction {
    int item = 0;
    int64_t timestamp = 0;
};

// Implicit-feedback dataset with dense contiguous ids. Every rating in the
// source file counts as a positive interaction; duplicate (user, item) pairs
// collapse to the latest timestamp.
struct Dataset {
    int num_users = 0;
    int num_items = 0;
    std::vector<std::vector<Interaction>> user_hist;  // indexed by dense user id
    std::vector<int64_t> user_ids;                    // dense -> raw
    std::vector<int64_t> item_ids;                    // dense -> raw

    size_t interactions() const {
        size_t n = 0;
        for (const auto& h : user_hist) n += h.size();
        return n;
    }
    double sparsity() const {
        return static_cast<double>(interactions()) /
               (static_cast<double>(num_users) * static_cast<double>(num_items));
    }
};

Dataset load_dataset(const std::string& path, DataFormat format);

// Held-out ranking candidates: one target (the user's latest interaction)
// plus up to 99 sampled negatives per evaluated user.
struct EvalSplit {
    struct Entry {
        int user = 0;
        int target = 0;
        std::vector<int> negatives;
    };
    std::vector<Entry> entries;
    int users_excluded = 0;        // users with a single interaction, kept in train only
    int users_short_negatives = 0; // users whose full history left fewer than 99 candidates
};

struct LooSplit {
    Dataset train;
    EvalSplit eval;
};

// Latest-timestamp interaction per user held out (ties broken by larger item
// id); 99 negatives drawn uniformly without replacement from items the user
// never interacted with. Users with fewer than two interactions stay in train
// and are excluded from evaluation.
LooSplit leave_one_out(const Dataset& dataset, uint64_t seed);

// The training interactions of exactly one user. Unknown ids are an error.
std::span<const Interaction> client_shard(const Dataset& train, int client_id);

// Canonical JSON cache, value-identical on reload.
void save_cache(const Dataset& dataset, const std::string& path);
Dataset load_cache(const std::string& path);

// Writes a dataset back out as "user<TAB>item<TAB>1<TAB>timestamp" rows with
// raw ids, the shape load_dataset ingests.
void write_interactions_tsv(const Dataset& dataset, const std::string& path);

}  // namespace fedsim
