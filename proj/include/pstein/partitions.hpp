#pragma once

// The partition class indexing the integrals of M_ij: partitions of four
// variable groups of sizes (i, i, j, j) whose blocks have at least two
// variables, never repeat a group, and connect all four groups.

#include <cstddef>
#include <string>
#include <vector>

namespace pstein {

inline constexpr int kMaxPartitionOrder = 4;

/// Variable x^{(group)}_{slot}; group in 1..4, slot in 1..i (groups 1, 2) or
/// 1..j (groups 3, 4).
struct PartitionVariable {
  int group = 1;
  int slot = 1;
  friend bool operator==(const PartitionVariable&,
                         const PartitionVariable&) = default;
};

struct Partition {
  std::vector<std::vector<PartitionVariable>> blocks;

  std::size_t size() const { return blocks.size(); }
  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Position of a variable in the canonical order x^(1)_1..x^(1)_i, x^(2)_1..,
/// x^(3)_1..x^(3)_j, x^(4)_1..x^(4)_j.
int variable_index(const PartitionVariable& v, int i, int j);
PartitionVariable variable_at(int index, int i, int j);

/// Every valid partition, in lexicographic order of restricted growth
/// strings over the canonical variable order. Blocks are listed by their
/// first variable and hold variables in canonical order.
/// Throws std::invalid_argument unless 1 <= i, j <= 4.
std::vector<Partition> enumerate_partitions(int i, int j);

std::size_t count_partitions(int i, int j);

/// Checks block size >= 2, distinct groups within each block, and group
/// connectivity. Throws std::invalid_argument for overlapping, missing or
/// out-of-range variables.
bool is_valid(const Partition& partition, int i, int j);

/// Restricted growth string of a partition covering all 2i + 2j variables.
std::vector<int> restricted_growth_string(const Partition& partition, int i,
                                          int j);

/// "{1:1, 2:1} {3:1, 4:1}" (group:slot per variable, one brace per block).
std::string format_partition(const Partition& partition);

}  // namespace pstein
