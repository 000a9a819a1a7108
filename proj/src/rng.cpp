#include "lfi/rng.hpp"

#include <algorithm>
#include <unordered_set>

#include "lfi/errors.hpp"

namespace lfi::nd {

std::vector<int> sample_without_replacement(int n, int m, RngStream& rng) {
  if (m > n || m < 0) throw ContractViolation("sample_without_replacement: m > n");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m));
  if (m == n) {
    for (int i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  // Rejection on a hash set: expected draws m / (1 - m/n), which stays O(m)
  // because minibatches are far smaller than the dataset. When they are not,
  // fall through to a partial Fisher-Yates over an explicit index array.
  if (m * 2 <= n) {
    std::unordered_set<int> seen;
    seen.reserve(static_cast<std::size_t>(m) * 2);
    while (static_cast<int>(out.size()) < m) {
      int idx = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      if (seen.insert(idx).second) out.push_back(idx);
    }
  } else {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < m; ++i) {
      int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - i)));
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
      out.push_back(all[static_cast<std::size_t>(i)]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lfi::nd
