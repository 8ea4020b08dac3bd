#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace docforge {

// Two-row Levenshtein DP over arbitrary element sequences.
// Unit insert/delete/substitute costs.
template <typename T>
std::size_t sequence_edit_distance(std::span<const T> a, std::span<const T> b) {
    if (a.size() > b.size()) return sequence_edit_distance(b, a);
    // a is the shorter sequence; rows are sized by it.
    std::vector<std::size_t> prev(a.size() + 1);
    std::vector<std::size_t> cur(a.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});

    for (std::size_t j = 1; j <= b.size(); ++j) {
        cur[0] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            const std::size_t sub = prev[i - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[i] = std::min({prev[i] + 1, cur[i - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[a.size()];
}

template <typename Seq>
std::size_t sequence_edit_distance(const Seq& a, const Seq& b) {
    using T = typename Seq::value_type;
    return sequence_edit_distance(std::span<const T>(a.data(), a.size()),
                                  std::span<const T>(b.data(), b.size()));
}

}  // namespace docforge
