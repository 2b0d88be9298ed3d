// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ZOMOPT_QUERY_LEDGER_HPP
#define ZOMOPT_QUERY_LEDGER_HPP

#include <cstdint>
#include <map>
#include <string>

namespace zomopt {

/// Exact count of objective evaluations, the fairness currency for all
/// optimizer comparisons. Monotone nondecreasing; the total always equals
/// the sum of the per-phase breakdown.
class QueryLedger {
 public:
  void add(const std::string& phase, std::uint64_t n) {
    breakdown_[phase] += n;
    total_ += n;
  }

  std::uint64_t total() const { return total_; }

  std::uint64_t phase(const std::string& name) const {
    const auto it = breakdown_.find(name);
    return it == breakdown_.end() ? 0 : it->second;
  }

  const std::map<std::string, std::uint64_t>& breakdown() const {
    return breakdown_;
  }

 private:
  std::uint64_t total_ = 0;
  std::map<std::string, std::uint64_t> breakdown_;
};

}  // namespace zomopt

#endif  // ZOMOPT_QUERY_LEDGER_HPP
