#pragma once

#include "cdp/types.hpp"

#include <cstdint>
#include <vector>

namespace cdp {

/// Disjoint cover of the grid indices by regions 1..count (the binary
/// selectors S_r sum to the identity).
struct RegionPartition {
  GridShape shape;
  Index count = 1;
  std::vector<std::int32_t> membership;  // per flat index, region id in 1..count
};

namespace detail {
inline void validate_partition(const RegionPartition& p) {
  const Index n = p.shape.size();
  if (p.count < 1 || p.count > n)
    throw std::invalid_argument("RegionPartition: need 1 <= count <= n");
  if (static_cast<Index>(p.membership.size()) != n)
    throw std::invalid_argument("RegionPartition: membership length must equal n");
  std::vector<Index> sizes(static_cast<std::size_t>(p.count), 0);
  for (std::int32_t r : p.membership) {
    if (r < 1 || r > p.count)
      throw std::invalid_argument("RegionPartition: membership out of range");
    ++sizes[static_cast<std::size_t>(r - 1)];
  }
  for (Index s : sizes)
    if (s == 0) throw std::invalid_argument("RegionPartition: every region must be nonempty");
}
}  // namespace detail

/// Contiguous equal-size blocks in flat index order; the last block absorbs
/// the remainder.
inline RegionPartition gen_regions(const GridShape& shape, Index count) {
  const Index n = shape.size();
  if (count < 1 || count > n)
    throw std::invalid_argument("gen_regions: need 1 <= R <= n");
  RegionPartition p{shape, count, std::vector<std::int32_t>(static_cast<std::size_t>(n))};
  const Index base = n / count;
  for (Index k = 0; k < n; ++k) {
    Index r = k / base;
    if (r >= count) r = count - 1;  // remainder goes to the last block
    p.membership[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(r + 1);
  }
  detail::validate_partition(p);
  return p;
}

/// Wraps an explicit membership vector, validating the partition property.
inline RegionPartition make_custom_partition(const GridShape& shape, Index count,
                                             std::vector<std::int32_t> membership) {
  RegionPartition p{shape, count, std::move(membership)};
  detail::validate_partition(p);
  return p;
}

}  // namespace cdp
