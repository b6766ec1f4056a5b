#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/gmf.hpp"

namespace fedsim {

// 1 + the number of candidates scored at least as high as the target; ties
// count against the target so constant scorers get no credit. scores[0] must
// be the target's score, the rest are the negatives.
int rank_of_target(std::span<const double> scores);

// Same rank over (candidate, score) pairs; the target must be present.
int rank_of_target(std::span<const std::pair<int, double>> scored_candidates, int target);

int hr_at_k(int rank, int k);
double ndcg_at_k(int rank, int k);

struct RankingMetrics {
    double hr = 0.0;
    double ndcg = 0.0;
};

// Mean HR@k / nDCG@k over every evaluated user, scoring the held-out target
// against its sampled negatives.
RankingMetrics evaluate(const GmfModel& model, const EvalSplit& split, int k);

// Same, restricted to users for which `keep(user)` holds. Empty selections
// are an error, as is an empty split.
RankingMetrics evaluate_subset(const GmfModel& model, const EvalSplit& split, int k,
                               const std::function<bool(int)>& keep);

}  // namespace fedsim
