#pragma once

#include <vector>

// Test-only oracle: maximum unit-quantity crossing volume among qualified
// orders, by exhaustive matching search. Independent of the production
// matching path.
namespace p2pgrid::testing {

inline int max_pairs_rec(const std::vector<double>& qa, const std::vector<double>& qb,
                         std::size_t ai, unsigned used) {
    if (ai == qa.size()) return 0;
    int best = max_pairs_rec(qa, qb, ai + 1, used);
    for (std::size_t j = 0; j < qb.size(); ++j) {
        if (used & (1u << j)) continue;
        if (qa[ai] < qb[j])
            best = std::max(best, 1 + max_pairs_rec(qa, qb, ai + 1, used | (1u << j)));
    }
    return best;
}

inline int oracle_max_qualified_quantity(const std::vector<double>& ask_prices,
                                         const std::vector<double>& bid_prices, double gamma) {
    std::vector<double> qa, qb;
    for (double p : ask_prices)
        if (p < gamma) qa.push_back(p);
    for (double p : bid_prices)
        if (p > gamma) qb.push_back(p);
    return max_pairs_rec(qa, qb, 0, 0u);
}

} // namespace p2pgrid::testing
