#include "cgn/siteselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include <json.hpp>

#include "cgn/io.hpp"
#include "cgn/kernels.hpp"
#include "cgn/stats.hpp"

namespace cgn::siteselect {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Best {
  std::vector<std::size_t> chosen;
  double value = kInf;
  bool found = false;
};

// Lexicographic comparison of index tuples equals id-tuple comparison because
// locations are stored sorted by id.
bool better(double value, const std::vector<std::size_t>& chosen, const Best& best) {
  if (!best.found) return true;
  if (value < best.value) return true;
  return value == best.value && chosen < best.chosen;
}

// Depth-first enumeration of budget-sized subsets of `pool` (sorted indices),
// keeping one lower envelope per depth so each node costs one min_of pass.
class SubsetSearch {
 public:
  SubsetSearch(const SelectionProblem& problem, const std::vector<std::size_t>& pool, std::size_t budget)
      : problem_(problem), pool_(pool), budget_(budget),
        envelopes_(budget + 1, std::vector<double>(problem.domain_count(), kInf)) {}

  Best run() {
    stack_.clear();
    descend(0, 0);
    return best_;
  }

 private:
  void descend(std::size_t depth, std::size_t start) {
    const auto& kt = kernels::active();
    const std::size_t n = problem_.domain_count();
    for (std::size_t i = start; i + (budget_ - depth) <= pool_.size(); ++i) {
      const auto& col = problem_.column(pool_[i]);
      kt.min_of(envelopes_[depth + 1].data(), envelopes_[depth].data(), col.data(), n);
      stack_.push_back(pool_[i]);
      if (depth + 1 == budget_) {
        double v = apply_objective(problem_.objective(), envelopes_[depth + 1]);
        if (better(v, stack_, best_)) {
          best_.chosen = stack_;
          best_.value = v;
          best_.found = true;
        }
      } else {
        descend(depth + 1, i + 1);
      }
      stack_.pop_back();
    }
  }

  const SelectionProblem& problem_;
  const std::vector<std::size_t>& pool_;
  std::size_t budget_;
  std::vector<std::vector<double>> envelopes_;
  std::vector<std::size_t> stack_;
  Best best_;
};

Best brute_force_within(const SelectionProblem& problem, std::vector<std::size_t> pool,
                        std::size_t budget, std::uint64_t cap) {
  std::sort(pool.begin(), pool.end());
  if (budget == 0 || budget > pool.size()) throw ValidationError("budget must be in [1, pool size]");
  auto combos = binomial(pool.size(), budget);
  if (combos > cap) {
    throw TooLargeError("C(" + std::to_string(pool.size()) + ", " + std::to_string(budget) + ") = " +
                        std::to_string(combos) + " subsets exceeds the brute-force cap of " +
                        std::to_string(cap) + "; use the heuristic");
  }
  return SubsetSearch(problem, pool, budget).run();
}

std::vector<VantageId> ids_of(const SelectionProblem& problem, const std::vector<std::size_t>& idx) {
  std::vector<VantageId> out;
  for (auto i : idx) out.push_back(problem.locations()[i]);
  return out;
}

double envelope_objective(const SelectionProblem& problem, const std::vector<std::size_t>& set) {
  return evaluate_indices(problem, set);
}

}  // namespace

std::string_view objective_name(Objective o) {
  switch (o) {
    case Objective::Median: return "median";
    case Objective::Average: return "average";
    case Objective::P95: return "p95";
  }
  return "?";
}

Objective parse_objective(std::string_view name) {
  if (name == "median") return Objective::Median;
  if (name == "average") return Objective::Average;
  if (name == "p95") return Objective::P95;
  throw ValidationError("unknown objective '" + std::string(name) + "' (median|average|p95)");
}

SelectionProblem::SelectionProblem(std::vector<std::string> domains, std::vector<VantageId> locations,
                                   const std::vector<std::vector<double>>& rows, std::size_t budget,
                                   Objective objective)
    : domains_(std::move(domains)), budget_(budget), objective_(objective) {
  if (rows.size() != domains_.size()) throw ValidationError("matrix row count does not match domains");
  if (locations.empty()) throw ValidationError("no candidate locations");
  if (domains_.empty()) throw ValidationError("no domains");
  if (budget_ < 1 || budget_ > locations.size()) {
    throw ValidationError("budget must be in [1, " + std::to_string(locations.size()) + "]");
  }
  std::vector<std::size_t> order(locations.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return locations[a] < locations[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (locations[order[k]] == locations[order[k - 1]]) {
      throw ValidationError("duplicate location id " + locations[order[k]].str());
    }
  }
  columns_.assign(locations.size(), std::vector<double>(domains_.size(), kInf));
  for (std::size_t d = 0; d < rows.size(); ++d) {
    if (rows[d].size() != locations.size()) {
      throw ValidationError("matrix row for " + domains_[d] + " has the wrong width");
    }
    bool any = false;
    for (std::size_t k = 0; k < order.size(); ++k) {
      double v = rows[d][order[k]];
      if (std::isnan(v)) v = kInf;
      if (v < 0) throw ValidationError("negative RTT in matrix for " + domains_[d]);
      columns_[k][d] = v;
      any = any || std::isfinite(v);
    }
    if (!any) throw ValidationError("domain " + domains_[d] + " has no finite RTT entry");
  }
  for (auto i : order) locations_.push_back(locations[i]);
}

std::size_t SelectionProblem::index_of(const VantageId& id) const {
  auto it = std::lower_bound(locations_.begin(), locations_.end(), id);
  if (it == locations_.end() || *it != id) throw ValidationError("unknown location " + id.str());
  return std::size_t(it - locations_.begin());
}

SelectionProblem SelectionProblem::with_budget(std::size_t budget) const {
  if (budget < 1 || budget > locations_.size()) throw ValidationError("budget out of range");
  SelectionProblem copy = *this;
  copy.budget_ = budget;
  return copy;
}

double apply_objective(Objective objective, const std::vector<double>& envelope) {
  const double total = kernels::sum(envelope);
  if (!std::isfinite(total)) return kInf;
  switch (objective) {
    case Objective::Average: return total / double(envelope.size());
    case Objective::Median: return nearest_rank_copy(envelope, 0.5);
    case Objective::P95: return nearest_rank_copy(envelope, 0.95);
  }
  return kInf;
}

double evaluate_indices(const SelectionProblem& problem, const std::vector<std::size_t>& chosen) {
  if (chosen.empty()) throw ValidationError("chosen set must be non-empty");
  std::vector<double> env(problem.domain_count(), kInf);
  for (auto i : chosen) kernels::min_into(env, problem.column(i));
  return apply_objective(problem.objective(), env);
}

double evaluate(const SelectionProblem& problem, const std::vector<VantageId>& chosen) {
  std::vector<std::size_t> idx;
  for (const auto& id : chosen) idx.push_back(problem.index_of(id));
  return evaluate_indices(problem, idx);
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return std::uint64_t(r);
}

SelectionResult select_brute_force(const SelectionProblem& problem, std::uint64_t cap) {
  std::vector<std::size_t> all(problem.location_count());
  std::iota(all.begin(), all.end(), 0);
  auto best = brute_force_within(problem, all, problem.budget(), cap);
  return {ids_of(problem, best.chosen), best.value, 0};
}

SelectionResult select_heuristic(const SelectionProblem& problem, const HeuristicParams& params) {
  const std::size_t n = problem.location_count();
  const std::size_t l = problem.budget();
  if (params.rounds <= 0) throw ValidationError("rounds must be positive");
  if (params.keep_size < l || params.pool_size < params.keep_size) {
    throw ValidationError("need pool_size >= keep_size >= budget");
  }
  std::mt19937_64 rng(params.seed);
  std::vector<std::size_t> kept;
  Best overall;
  int rounds_used = 0;

  for (int round = 0; round < params.rounds; ++round) {
    ++rounds_used;
    std::vector<std::size_t> pool = kept;
    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(kept.begin(), kept.end(), i) == kept.end()) fresh.push_back(i);
    }
    for (std::size_t i = fresh.size(); i > 1; --i) std::swap(fresh[i - 1], fresh[rng() % i]);
    for (std::size_t i = 0; i < fresh.size() && pool.size() < params.pool_size; ++i) pool.push_back(fresh[i]);
    std::sort(pool.begin(), pool.end());

    auto best = brute_force_within(problem, pool, l, params.cap);
    if (better(best.value, best.chosen, overall)) overall = best;
    if (n <= params.pool_size) break;  // the pool held every location: exact

    // Shrink the pool: drop the location whose removal worsens the pool's
    // budget optimum least; among equals prefer locations outside the current
    // optimum, then the smallest loss on the pool's full envelope.
    std::vector<std::size_t> current = pool;
    Best cur = best;
    while (current.size() > params.keep_size) {
      using Key = std::tuple<double, int, double, std::size_t>;
      std::optional<Key> pick;
      std::size_t pick_pos = 0;
      bool need_members = true;
      for (std::size_t pos = 0; pos < current.size(); ++pos) {
        if (std::find(cur.chosen.begin(), cur.chosen.end(), current[pos]) == cur.chosen.end()) {
          need_members = false;
          break;
        }
      }
      for (std::size_t pos = 0; pos < current.size(); ++pos) {
        const std::size_t x = current[pos];
        const bool member = std::find(cur.chosen.begin(), cur.chosen.end(), x) != cur.chosen.end();
        if (member && !need_members) continue;
        std::vector<std::size_t> rest;
        for (auto y : current) {
          if (y != x) rest.push_back(y);
        }
        double worsening = 0.0;
        if (member) worsening = brute_force_within(problem, rest, l, params.cap).value - cur.value;
        // Larger indices go first on full ties so lower ids are retained.
        Key key{worsening, member ? 1 : 0, envelope_objective(problem, rest),
                std::numeric_limits<std::size_t>::max() - x};
        if (!pick || key < *pick) {
          pick = key;
          pick_pos = pos;
        }
      }
      const std::size_t removed = current[pick_pos];
      current.erase(current.begin() + std::ptrdiff_t(pick_pos));
      if (std::find(cur.chosen.begin(), cur.chosen.end(), removed) != cur.chosen.end()) {
        cur = brute_force_within(problem, current, l, params.cap);
      }
    }
    kept = current;
  }
  return {ids_of(problem, overall.chosen), overall.value, rounds_used};
}

std::vector<double> objective_curve(const SelectionProblem& problem, std::size_t max_budget,
                                    const HeuristicParams& params) {
  std::vector<double> out;
  for (std::size_t l = 1; l <= max_budget; ++l) {
    HeuristicParams p = params;
    p.keep_size = std::max(p.keep_size, l);
    p.pool_size = std::max(p.pool_size, p.keep_size);
    auto sub = problem.with_budget(l);
    // Small instances are solved exactly; the heuristic handles the rest.
    if (binomial(problem.location_count(), l) <= p.cap) {
      out.push_back(select_brute_force(sub, p.cap).objective_value);
    } else {
      out.push_back(select_heuristic(sub, p).objective_value);
    }
  }
  return out;
}

SelectionProblem parse_matrix_csv(std::string_view text, std::size_t budget, Objective objective) {
  auto doc = io::parse_csv(text);
  if (doc.header.size() < 2 || doc.header.front() != "domain") {
    throw ValidationError("matrix CSV header must be domain,loc1,loc2,...");
  }
  std::vector<VantageId> locations;
  for (std::size_t i = 1; i < doc.header.size(); ++i) locations.emplace_back(doc.header[i]);
  std::vector<std::string> domains;
  std::vector<std::vector<double>> rows;
  for (const auto& row : doc.rows) {
    domains.push_back(Domain(row.fields[0]).str());
    std::vector<double> r;
    for (std::size_t i = 1; i < row.fields.size(); ++i) {
      r.push_back(row.fields[i].empty() ? kInf : io::parse_double(row.fields[i], row.line));
    }
    rows.push_back(std::move(r));
  }
  return SelectionProblem(std::move(domains), std::move(locations), rows, budget, objective);
}

SelectionProblem from_rtt_table(const RttTable& table, std::size_t budget, Objective objective) {
  auto domains = table.domains();
  auto vantages = table.vantages();
  std::map<Domain, std::size_t> drow;
  std::map<VantageId, std::size_t> vcol;
  for (std::size_t i = 0; i < domains.size(); ++i) drow[domains[i]] = i;
  for (std::size_t i = 0; i < vantages.size(); ++i) vcol[vantages[i]] = i;
  std::vector<std::vector<double>> rows(domains.size(), std::vector<double>(vantages.size(), kInf));
  for (const auto& s : table.samples()) {
    double& cell = rows[drow[s.domain]][vcol[s.vantage]];
    cell = std::min(cell, s.rtt_ms);
  }
  std::vector<std::string> names;
  for (const auto& d : domains) names.push_back(d.str());
  return SelectionProblem(std::move(names), std::move(vantages), rows, budget, objective);
}

std::string result_json(const SelectionProblem& problem, const SelectionResult& result,
                        std::optional<std::uint64_t> seed) {
  nlohmann::json j;
  j["chosen"] = nlohmann::json::array();
  for (const auto& id : result.chosen) j["chosen"].push_back(id.str());
  j["objective"] = std::string(objective_name(problem.objective()));
  j["value_ms"] = result.objective_value;
  j["budget"] = problem.budget();
  if (seed) {
    j["seed"] = *seed;
  } else {
    j["seed"] = nullptr;
  }
  if (result.rounds_used > 0) j["rounds_used"] = result.rounds_used;
  return j.dump(2) + "\n";
}

}  // namespace cgn::siteselect
