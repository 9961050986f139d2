#pragma once

// Claims are small expression trees over the terminal lattice coordinates:
// asset prices, jump counts per mark, and the accumulated mark sum.

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace bsdelab {

/// Coordinates a payoff may read at a lattice node.
struct TerminalState {
  std::vector<double> assets;      // S, one entry per asset
  std::vector<long> jump_counts;   // one entry per mark
  std::vector<double> mark_sum;    // sum of realized mark vectors, per component
};

class ClaimExpr {
 public:
  virtual ~ClaimExpr() = default;
  virtual double eval(const TerminalState& s) const = 0;
};

using ClaimPtr = std::shared_ptr<const ClaimExpr>;

/// Parses the JSON expression language. Throws ConfigError on unknown ops,
/// missing fields or out-of-range indices (checked against the given sizes).
ClaimPtr parse_claim(const nlohmann::json& j, int asset_count, int mark_count);

/// Convenience builders used by tests.
ClaimPtr claim_constant(double c);
ClaimPtr claim_asset(int index);
ClaimPtr claim_jump_indicator(double scale, long threshold);  // scale * 1{total jumps >= threshold}
ClaimPtr claim_sum(ClaimPtr a, ClaimPtr b);
ClaimPtr claim_scale(double factor, ClaimPtr a);

/// Bitmask of coordinates a claim expression reads: 1 = asset prices,
/// 2 = jump history.
int claim_dependence(const nlohmann::json& j);

/// True when the payoff provably splits into an asset part plus a jump part
/// (sums/scalings of single-sided terms). Checks relying on exact martingale
/// decomposition only apply to this class.
bool claim_separable(const nlohmann::json& j);

}  // namespace bsdelab
