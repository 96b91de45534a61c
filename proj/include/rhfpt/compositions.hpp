#pragma once

#include <functional>
#include <vector>

namespace rhfpt {

/// Ordered compositions of `total` into parts in [1, max_part], visited in
/// lexicographic order. `visit` receives each composition; enumeration is
/// deterministic.
inline void for_each_composition(
    int total, int max_part,
    const std::function<void(const std::vector<int>&)>& visit) {
  if (total <= 0) return;
  std::vector<int> parts;
  std::function<void(int)> rec = [&](int remaining) {
    if (remaining == 0) {
      visit(parts);
      return;
    }
    const int cap = std::min(remaining, max_part);
    for (int p = 1; p <= cap; ++p) {
      parts.push_back(p);
      rec(remaining - p);
      parts.pop_back();
    }
  };
  rec(total);
}

/// Ordered compositions of `total` with exactly `length` parts in
/// [1, max_part].
inline void for_each_composition_of_length(
    int total, int length, int max_part,
    const std::function<void(const std::vector<int>&)>& visit) {
  if (length == 0) {
    if (total == 0) visit({});
    return;
  }
  for_each_composition(total, max_part, [&](const std::vector<int>& parts) {
    if (static_cast<int>(parts.size()) == length) visit(parts);
  });
}

}  // namespace rhfpt
