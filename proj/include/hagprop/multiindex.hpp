#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace hagprop {

// d-dimensional multi-index j = (j_1, ..., j_d), all entries >= 0.
using MultiIndex = std::vector<int>;

inline int degree(const MultiIndex& j) {
  int s = 0;
  for (int jk : j) s += jk;
  return s;
}

// j! = prod(j_k!), exact up to |j| <= 20, log-space beyond.
double log_factorial(const MultiIndex& j);
std::uint64_t factorial_exact(const MultiIndex& j);  // throws if |j| > 20

// Dense graded enumeration of all j with |j| <= J.
// Ordering: by degree, then descending lexicographic within a degree, so
// (d=2, J=1) enumerates (0,0), (1,0), (0,1).  Truncation to |j| <= n is a
// prefix of the table.
class MultiIndexTable {
 public:
  MultiIndexTable(int dimension, int max_degree);

  int dimension() const { return dim_; }
  int max_degree() const { return max_deg_; }
  std::size_t size() const { return indices_.size(); }

  const MultiIndex& operator[](std::size_t k) const { return indices_[k]; }

  // Position of j in the table; throws std::domain_error if |j| > J or any
  // entry is negative.
  std::size_t offset(const MultiIndex& j) const;

  // Offsets [0, count) hold exactly the indices with |j| <= n.
  std::size_t count_upto(int n) const;

  // Number of indices with |j| == L, i.e. binomial(L+d-1, d-1).
  std::size_t grade_count(int L) const;

 private:
  int dim_;
  int max_deg_;
  std::vector<MultiIndex> indices_;
  std::vector<std::size_t> grade_start_;  // grade_start_[L] = first offset of degree L
  std::map<MultiIndex, std::size_t> offsets_;
};

inline MultiIndexTable enumerate_upto(int dimension, int max_degree) {
  return MultiIndexTable(dimension, max_degree);
}

std::uint64_t binomial(int n, int k);

}  // namespace hagprop
