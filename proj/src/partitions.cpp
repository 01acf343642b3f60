#include "pstein/partitions.hpp"

#include <array>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace pstein {

namespace {

void check_orders(int i, int j) {
  if (i < 1 || j < 1 || i > kMaxPartitionOrder || j > kMaxPartitionOrder) {
    throw std::invalid_argument("partition orders must satisfy 1 <= i, j <= " +
                                std::to_string(kMaxPartitionOrder));
  }
}

/// Union-find over the four groups, linked through shared blocks.
bool groups_connected(const std::vector<unsigned>& block_groups) {
  std::array<int, 4> parent{0, 1, 2, 3};
  auto find = [&](int g) {
    while (parent[g] != g) g = parent[g] = parent[parent[g]];
    return g;
  };
  for (unsigned mask : block_groups) {
    int first = -1;
    for (int g = 0; g < 4; ++g) {
      if (!(mask & (1u << g))) continue;
      if (first < 0) {
        first = find(g);
      } else {
        parent[find(g)] = first;
      }
    }
  }
  const int root = find(0);
  for (int g = 1; g < 4; ++g) {
    if (find(g) != root) return false;
  }
  return true;
}

class Enumerator {
 public:
  Enumerator(int i, int j) : i_(i), j_(j), n_(2 * i + 2 * j), rgs_(n_) {
    for (int v = 0; v < n_; ++v) group_bit_.push_back(1u << (variable_at(v, i, j).group - 1));
  }

  std::vector<Partition> run() {
    visit(0);
    return std::move(out_);
  }

 private:
  void visit(int v) {
    if (v == n_) {
      if (groups_connected(block_groups_)) emit();
      return;
    }
    const int remaining_after = n_ - v - 1;
    const int blocks = static_cast<int>(block_groups_.size());
    for (int b = 0; b <= blocks; ++b) {
      if (b < blocks && (block_groups_[b] & group_bit_[v])) continue;
      // Singletons after this step must each still receive a variable.
      const int singles_after =
          singletons_ + (b == blocks ? 1 : (block_sizes_[b] == 1 ? -1 : 0));
      if (singles_after > remaining_after) continue;
      if (b == blocks) {
        block_groups_.push_back(group_bit_[v]);
        block_sizes_.push_back(1);
      } else {
        block_groups_[b] |= group_bit_[v];
        ++block_sizes_[b];
      }
      const int saved_singletons = singletons_;
      singletons_ = singles_after;
      rgs_[v] = b;
      visit(v + 1);
      singletons_ = saved_singletons;
      if (b == blocks) {
        block_groups_.pop_back();
        block_sizes_.pop_back();
      } else {
        block_groups_[b] &= ~group_bit_[v];
        --block_sizes_[b];
      }
    }
  }

  void emit() {
    Partition p;
    p.blocks.resize(block_groups_.size());
    for (int v = 0; v < n_; ++v) {
      p.blocks[rgs_[v]].push_back(variable_at(v, i_, j_));
    }
    out_.push_back(std::move(p));
  }

  int i_, j_, n_;
  std::vector<int> rgs_;
  std::vector<unsigned> group_bit_;
  std::vector<unsigned> block_groups_;
  std::vector<int> block_sizes_;
  int singletons_ = 0;
  std::vector<Partition> out_;
};

}  // namespace

int variable_index(const PartitionVariable& v, int i, int j) {
  const int limit = v.group <= 2 ? i : j;
  if (v.group < 1 || v.group > 4 || v.slot < 1 || v.slot > limit) {
    throw std::invalid_argument("partition variable out of range");
  }
  switch (v.group) {
    case 1: return v.slot - 1;
    case 2: return i + v.slot - 1;
    case 3: return 2 * i + v.slot - 1;
    default: return 2 * i + j + v.slot - 1;
  }
}

PartitionVariable variable_at(int index, int i, int j) {
  if (index < 0 || index >= 2 * i + 2 * j) {
    throw std::invalid_argument("partition variable index out of range");
  }
  if (index < i) return {1, index + 1};
  if (index < 2 * i) return {2, index - i + 1};
  if (index < 2 * i + j) return {3, index - 2 * i + 1};
  return {4, index - 2 * i - j + 1};
}

std::vector<Partition> enumerate_partitions(int i, int j) {
  check_orders(i, j);
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::vector<Partition>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({i, j});
  if (it == cache.end()) {
    it = cache.emplace(std::pair{i, j}, Enumerator(i, j).run()).first;
  }
  return it->second;
}

std::size_t count_partitions(int i, int j) {
  return enumerate_partitions(i, j).size();
}

std::vector<int> restricted_growth_string(const Partition& partition, int i,
                                          int j) {
  check_orders(i, j);
  const int n = 2 * i + 2 * j;
  std::vector<int> owner(n, -1);
  for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
    if (partition.blocks[b].empty()) {
      throw std::invalid_argument("partition has an empty block");
    }
    for (const auto& v : partition.blocks[b]) {
      const int idx = variable_index(v, i, j);
      if (owner[idx] != -1) {
        throw std::invalid_argument("partition blocks overlap");
      }
      owner[idx] = static_cast<int>(b);
    }
  }
  // Relabel blocks in order of first appearance.
  std::vector<int> label(partition.blocks.size(), -1);
  std::vector<int> rgs(n);
  int next = 0;
  for (int v = 0; v < n; ++v) {
    if (owner[v] == -1) {
      throw std::invalid_argument("partition does not cover every variable");
    }
    if (label[owner[v]] == -1) label[owner[v]] = next++;
    rgs[v] = label[owner[v]];
  }
  return rgs;
}

bool is_valid(const Partition& partition, int i, int j) {
  restricted_growth_string(partition, i, j);  // throws when malformed
  std::vector<unsigned> block_groups;
  for (const auto& block : partition.blocks) {
    if (block.size() < 2) return false;
    unsigned mask = 0;
    for (const auto& v : block) {
      const unsigned bit = 1u << (v.group - 1);
      if (mask & bit) return false;
      mask |= bit;
    }
    block_groups.push_back(mask);
  }
  return groups_connected(block_groups);
}

std::string format_partition(const Partition& partition) {
  std::string out;
  for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
    if (b > 0) out += ' ';
    out += '{';
    for (std::size_t v = 0; v < partition.blocks[b].size(); ++v) {
      if (v > 0) out += ", ";
      out += std::to_string(partition.blocks[b][v].group) + ':' +
             std::to_string(partition.blocks[b][v].slot);
    }
    out += '}';
  }
  return out;
}

}  // namespace pstein
