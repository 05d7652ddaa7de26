#include "hagprop/multiindex.hpp"

#include <algorithm>
#include <cmath>

namespace hagprop {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

double log_factorial(const MultiIndex& j) {
  double s = 0.0;
  for (int jk : j) s += std::lgamma(static_cast<double>(jk) + 1.0);
  return s;
}

std::uint64_t factorial_exact(const MultiIndex& j) {
  if (degree(j) > 20) throw std::domain_error("factorial_exact: |j| > 20, use log_factorial");
  std::uint64_t r = 1;
  for (int jk : j)
    for (int i = 2; i <= jk; ++i) r *= static_cast<std::uint64_t>(i);
  return r;
}

namespace {

// All indices of fixed degree L in descending lexicographic order.
void emit_grade(int dim, int L, MultiIndex& work, int pos, int rest,
                std::vector<MultiIndex>& out) {
  if (pos == dim - 1) {
    work[pos] = rest;
    out.push_back(work);
    return;
  }
  for (int v = rest; v >= 0; --v) {
    work[pos] = v;
    emit_grade(dim, L, work, pos + 1, rest - v, out);
  }
}

}  // namespace

MultiIndexTable::MultiIndexTable(int dimension, int max_degree)
    : dim_(dimension), max_deg_(max_degree) {
  if (dimension < 1) throw std::invalid_argument("MultiIndexTable: dimension must be >= 1");
  if (max_degree < 0) throw std::invalid_argument("MultiIndexTable: max degree must be >= 0");
  MultiIndex work(dim_, 0);
  grade_start_.reserve(max_deg_ + 2);
  for (int L = 0; L <= max_deg_; ++L) {
    grade_start_.push_back(indices_.size());
    emit_grade(dim_, L, work, 0, L, indices_);
  }
  grade_start_.push_back(indices_.size());
  for (std::size_t k = 0; k < indices_.size(); ++k) offsets_[indices_[k]] = k;
}

std::size_t MultiIndexTable::offset(const MultiIndex& j) const {
  auto it = offsets_.find(j);
  if (it == offsets_.end()) throw std::domain_error("MultiIndexTable::offset: index out of range");
  return it->second;
}

std::size_t MultiIndexTable::count_upto(int n) const {
  if (n < 0) return 0;
  n = std::min(n, max_deg_);
  return grade_start_[n + 1];
}

std::size_t MultiIndexTable::grade_count(int L) const {
  if (L < 0 || L > max_deg_) return 0;
  return grade_start_[L + 1] - grade_start_[L];
}

}  // namespace hagprop
