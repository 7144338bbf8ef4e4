#pragma once

// Choosing l proxy sites out of N candidates to minimize a latency objective
// over each domain's best RTT among the chosen sites.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cgn/core.hpp"

namespace cgn::siteselect {

enum class Objective { Median, Average, P95 };

std::string_view objective_name(Objective o);
Objective parse_objective(std::string_view name);

class TooLargeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Domains x locations RTT matrix (ms). Missing entries are +infinity.
/// Locations are kept sorted by id so index order equals id order.
class SelectionProblem {
 public:
  /// rows[d][l] is the RTT from domain d to locations[l]; NaN or inf = missing.
  SelectionProblem(std::vector<std::string> domains, std::vector<VantageId> locations,
                   const std::vector<std::vector<double>>& rows, std::size_t budget,
                   Objective objective);

  std::size_t domain_count() const noexcept { return domains_.size(); }
  std::size_t location_count() const noexcept { return locations_.size(); }
  std::size_t budget() const noexcept { return budget_; }
  Objective objective() const noexcept { return objective_; }
  const std::vector<std::string>& domains() const noexcept { return domains_; }
  const std::vector<VantageId>& locations() const noexcept { return locations_; }
  /// RTTs of every domain to one location, in domain order.
  const std::vector<double>& column(std::size_t location) const { return columns_.at(location); }
  std::size_t index_of(const VantageId& id) const;

  SelectionProblem with_budget(std::size_t budget) const;

 private:
  std::vector<std::string> domains_;
  std::vector<VantageId> locations_;
  std::vector<std::vector<double>> columns_;
  std::size_t budget_;
  Objective objective_;
};

struct SelectionResult {
  std::vector<VantageId> chosen;  // sorted
  double objective_value;
  int rounds_used = 0;  // heuristic only
};

/// Objective applied to the per-domain minimum over `chosen`. Returns +inf
/// when some domain has no finite entry among the chosen locations.
double evaluate(const SelectionProblem& problem, const std::vector<VantageId>& chosen);
double evaluate_indices(const SelectionProblem& problem, const std::vector<std::size_t>& chosen);

/// Objective of an already-reduced per-domain envelope.
double apply_objective(Objective objective, const std::vector<double>& envelope);

inline constexpr std::uint64_t kDefaultBruteForceCap = 200'000;

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::size_t n, std::size_t k);

/// Exhaustive optimum; ties go to the lexicographically smallest id tuple.
SelectionResult select_brute_force(const SelectionProblem& problem,
                                   std::uint64_t cap = kDefaultBruteForceCap);

struct HeuristicParams {
  std::size_t pool_size = 20;
  std::size_t keep_size = 15;
  int rounds = 8;
  std::uint64_t seed = 1;
  std::uint64_t cap = kDefaultBruteForceCap;
};

/// Iterated pool search: each round brute-forces the budget within a pool of
/// the kept locations plus random fresh ones, then shrinks the pool to
/// keep_size by greedily dropping the location whose removal hurts least.
SelectionResult select_heuristic(const SelectionProblem& problem, const HeuristicParams& params);

/// Best objective found for every budget 1..max_budget (heuristic search).
std::vector<double> objective_curve(const SelectionProblem& problem, std::size_t max_budget,
                                    const HeuristicParams& params);

// Files.
SelectionProblem parse_matrix_csv(std::string_view text, std::size_t budget, Objective objective);
/// Pivots census samples into a matrix using each (domain, vantage) minimum.
SelectionProblem from_rtt_table(const RttTable& table, std::size_t budget, Objective objective);
std::string result_json(const SelectionProblem& problem, const SelectionResult& result,
                        std::optional<std::uint64_t> seed);

}  // namespace cgn::siteselect
