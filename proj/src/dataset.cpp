#include "fedsim/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "fedsim/rng.hpp"

namespace fedsim {

DataFormat parse_data_format(const std::string& name) {
    if (name == "tsv_uirt") return DataFormat::TsvUirt;
    if (name == "csv_uir") return DataFormat::CsvUir;
    throw std::invalid_argument("unknown data format: " + name);
}

namespace {

struct RawRow {
    int64_t user;
    int64_t item;
    int64_t timestamp;
};

int64_t parse_int(const std::string& tok, const char* field, size_t line_no) {
    int64_t value = 0;
    const auto* begin = tok.data();
    const auto* end = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                 ": non-numeric " + field + " '" + tok + "'");
    }
    return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

}  // namespace

Dataset load_dataset(const std::string& path, DataFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    const char sep = format == DataFormat::TsvUirt ? '\t' : ',';
    const size_t min_fields = format == DataFormat::TsvUirt ? 4 : 3;

    std::vector<RawRow> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, sep);
        if (fields.size() < min_fields) {
            throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(min_fields) +
                                     " fields, got " + std::to_string(fields.size()));
        }
        RawRow row;
        row.user = parse_int(fields[0], "user id", line_no);
        row.item = parse_int(fields[1], "item id", line_no);
        parse_int(fields[2], "rating", line_no);  // validated, value ignored (implicit feedback)
        row.timestamp = format == DataFormat::TsvUirt ? parse_int(fields[3], "timestamp", line_no) : 0;
        rows.push_back(row);
    }
    if (rows.empty()) throw std::runtime_error("empty dataset file: " + path);

    std::vector<int64_t> users, items;
    users.reserve(rows.size());
    items.reserve(rows.size());
    for (const auto& r : rows) {
        users.push_back(r.user);
        items.push_back(r.item);
    }
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());

    std::unordered_map<int64_t, int> user_to_dense, item_to_dense;
    user_to_dense.reserve(users.size());
    item_to_dense.reserve(items.size());
    for (size_t i = 0; i < users.size(); ++i) user_to_dense[users[i]] = static_cast<int>(i);
    for (size_t i = 0; i < items.size(); ++i) item_to_dense[items[i]] = static_cast<int>(i);

    Dataset ds;
    ds.num_users = static_cast<int>(users.size());
    ds.num_items = static_cast<int>(items.size());
    ds.user_ids = std::move(users);
    ds.item_ids = std::move(items);
    ds.user_hist.resize(static_cast<size_t>(ds.num_users));

    // Collapse duplicates keeping the latest timestamp.
    std::vector<std::map<int, int64_t>> latest(static_cast<size_t>(ds.num_users));
    for (const auto& r : rows) {
        auto& m = latest[static_cast<size_t>(user_to_dense[r.user])];
        auto [it, inserted] = m.emplace(item_to_dense[r.item], r.timestamp);
        if (!inserted && r.timestamp > it->second) it->second = r.timestamp;
    }
    for (int u = 0; u < ds.num_users; ++u) {
        auto& hist = ds.user_hist[static_cast<size_t>(u)];
        hist.reserve(latest[static_cast<size_t>(u)].size());
        for (const auto& [item, ts] : latest[static_cast<size_t>(u)]) {
            hist.push_back({item, ts});
        }
    }
    return ds;
}

LooSplit leave_one_out(const Dataset& dataset, uint64_t seed) {
    LooSplit split;
    split.train = dataset;
    for (int u = 0; u < dataset.num_users; ++u) {
        const auto& hist = dataset.user_hist[static_cast<size_t>(u)];
        if (hist.size() < 2) {
            split.eval.users_excluded += 1;
            continue;
        }
        // Latest timestamp; ties broken by larger item id.
        size_t best = 0;
        for (size_t i = 1; i < hist.size(); ++i) {
            if (hist[i].timestamp > hist[best].timestamp ||
                (hist[i].timestamp == hist[best].timestamp && hist[i].item > hist[best].item)) {
                best = i;
            }
        }
        EvalSplit::Entry entry;
        entry.user = u;
        entry.target = hist[best].item;
        auto& train_hist = split.train.user_hist[static_cast<size_t>(u)];
        train_hist.erase(train_hist.begin() + static_cast<ptrdiff_t>(best));

        std::unordered_set<int> seen;
        seen.reserve(hist.size());
        for (const auto& it : hist) seen.insert(it.item);

        std::vector<int> candidates;
        candidates.reserve(static_cast<size_t>(dataset.num_items) - seen.size());
        for (int item = 0; item < dataset.num_items; ++item) {
            if (seen.count(item) == 0) candidates.push_back(item);
        }
        Rng rng(derive_seed(seed, static_cast<uint64_t>(u)));
        if (candidates.size() <= 99) {
            split.eval.users_short_negatives += 1;
            entry.negatives = std::move(candidates);
        } else {
            // Partial Fisher-Yates: first 99 after seeded prefix shuffle.
            for (size_t i = 0; i < 99; ++i) {
                const size_t j = i + rng.uniform_index(candidates.size() - i);
                std::swap(candidates[i], candidates[j]);
            }
            entry.negatives.assign(candidates.begin(), candidates.begin() + 99);
        }
        split.eval.entries.push_back(std::move(entry));
    }
    return split;
}

std::span<const Interaction> client_shard(const Dataset& train, int client_id) {
    if (client_id < 0 || client_id >= train.num_users) {
        throw std::invalid_argument("client_shard: unknown client id " + std::to_string(client_id));
    }
    return train.user_hist[static_cast<size_t>(client_id)];
}

void save_cache(const Dataset& dataset, const std::string& path) {
    nlohmann::json j;
    j["num_users"] = dataset.num_users;
    j["num_items"] = dataset.num_items;
    j["user_ids"] = dataset.user_ids;
    j["item_ids"] = dataset.item_ids;
    auto& hist = j["user_hist"] = nlohmann::json::array();
    for (const auto& h : dataset.user_hist) {
        nlohmann::json items = nlohmann::json::array();
        nlohmann::json stamps = nlohmann::json::array();
        for (const auto& it : h) {
            items.push_back(it.item);
            stamps.push_back(it.timestamp);
        }
        hist.push_back({{"items", std::move(items)}, {"ts", std::move(stamps)}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write cache file: " + path);
    out << j.dump() << "\n";
}

Dataset load_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cache file: " + path);
    nlohmann::json j;
    in >> j;
    Dataset ds;
    ds.num_users = j.at("num_users").get<int>();
    ds.num_items = j.at("num_items").get<int>();
    ds.user_ids = j.at("user_ids").get<std::vector<int64_t>>();
    ds.item_ids = j.at("item_ids").get<std::vector<int64_t>>();
    for (const auto& h : j.at("user_hist")) {
        std::vector<Interaction> hist;
        const auto& items = h.at("items");
        const auto& stamps = h.at("ts");
        hist.reserve(items.size());
        for (size_t i = 0; i < items.size(); ++i) {
            hist.push_back({items[i].get<int>(), stamps[i].get<int64_t>()});
        }
        ds.user_hist.push_back(std::move(hist));
    }
    return ds;
}

void write_interactions_tsv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write interactions file: " + path);
    for (int u = 0; u < dataset.num_users; ++u) {
        for (const auto& it : dataset.user_hist[static_cast<size_t>(u)]) {
            out << dataset.user_ids[static_cast<size_t>(u)] << '\t'
                << dataset.item_ids[static_cast<size_t>(it.item)] << '\t' << 1 << '\t'
                << it.timestamp << '\n';
        }
    }
}

}  // namespace fedsim
