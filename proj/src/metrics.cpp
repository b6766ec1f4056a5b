#include "fedsim/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsim {

int rank_of_target(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("rank_of_target: no candidates");
    const double target = scores[0];
    int rank = 1;
    for (size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] >= target) ++rank;
    }
    return rank;
}

int rank_of_target(std::span<const std::pair<int, double>> scored_candidates, int target) {
    double target_score = 0.0;
    bool found = false;
    for (const auto& [id, score] : scored_candidates) {
        if (id == target) {
            target_score = score;
            found = true;
            break;
        }
    }
    if (!found) throw std::invalid_argument("rank_of_target: target not among candidates");
    int rank = 1;
    for (const auto& [id, score] : scored_candidates) {
        if (id != target && score >= target_score) ++rank;
    }
    return rank;
}

int hr_at_k(int rank, int k) { return rank <= k ? 1 : 0; }

double ndcg_at_k(int rank, int k) {
    if (rank > k) return 0.0;
    return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

RankingMetrics evaluate(const GmfModel& model, const EvalSplit& split, int k) {
    return evaluate_subset(model, split, k, [](int) { return true; });
}

RankingMetrics evaluate_subset(const GmfModel& model, const EvalSplit& split, int k,
                               const std::function<bool(int)>& keep) {
    if (split.entries.empty()) throw std::invalid_argument("evaluate: empty split");
    double hr = 0.0;
    double ndcg = 0.0;
    size_t n = 0;
    std::vector<double> scores;
    for (const auto& entry : split.entries) {
        if (!keep(entry.user)) continue;
        scores.clear();
        scores.push_back(predict_score(model, entry.user, entry.target));
        for (int neg : entry.negatives) scores.push_back(predict_score(model, entry.user, neg));
        const int rank = rank_of_target(scores);
        hr += hr_at_k(rank, k);
        ndcg += ndcg_at_k(rank, k);
        ++n;
    }
    if (n == 0) throw std::invalid_argument("evaluate: no users selected");
    return {hr / static_cast<double>(n), ndcg / static_cast<double>(n)};
}

}  // namespace fedsim
