// Ground transport costs and exact optimal-transport discrepancies on finite
// supports.  Label mismatches cost a genuine +infinity, carried by a
// dedicated extended-real type so that no large sentinel float can leak into
// downstream arithmetic (exp(-inf/eps) must be exactly zero).

#pragma once

#include <cstdint>
#include <vector>

#include "ssldro/dataset.hpp"
#include "ssldro/errors.hpp"
#include "ssldro/vecops.hpp"

namespace ssldro {

// Extended real in [0, +inf].  value() on the infinite variant throws, which
// turns any accidental arithmetic on an infinite cost into a loud failure
// instead of a silent NaN.
class CostValue {
public:
    static CostValue finite(double v) {
        if (!(v >= 0.0)) throw numeric_error("CostValue: negative cost");
        return CostValue(v, false);
    }
    static CostValue infinite() { return CostValue(0.0, true); }

    bool is_infinite() const { return infinite_; }
    double value() const {
        if (infinite_) throw numeric_error("CostValue: reading an infinite cost as a number");
        return value_;
    }

private:
    CostValue(double v, bool inf) : value_(v), infinite_(inf) {}
    double value_;
    bool infinite_;
};

// Ground cost c((x,y),(x',y')) = ||x - x'||_q^rho when y = y', +inf otherwise.
// q may be std::numeric_limits<double>::infinity() for the max norm.
struct TransportCost {
    double q = 2.0;
    double rho = 1.0;
};

CostValue cost(const SupportPoint& u, const SupportPoint& v, const TransportCost& tc);

// A coupling between two finite distributions; entries index into the
// source/target supports of whatever produced the plan.
struct PlanEntry {
    std::size_t source = 0;
    std::size_t target = 0;
    double mass = 0.0;
};

struct TransportPlan {
    std::vector<PlanEntry> entries;
};

// Exact minimum-cost transportation: min sum C[i][j] pi[i][j] subject to
// row sums a, column sums b, pi >= 0.  Requires sum(a) == sum(b) within
// 1e-9 and all costs finite.  Primal transportation simplex; exact LP
// optimum up to double-precision pivoting.
struct TransportSolution {
    double value = 0.0;
    TransportPlan plan;
};

TransportSolution solve_transportation(const std::vector<double>& a,
                                       const std::vector<double>& b,
                                       const std::vector<std::vector<double>>& C);

// Optimal transport discrepancy D_c(P, Q) between two distributions given as
// mass vectors aligned with `support`.  Infinite when the per-label masses
// disagree (no finite-cost coupling exists).
CostValue discrepancy(const std::vector<double>& P,
                      const std::vector<double>& Q,
                      const SupportSet& support,
                      const TransportCost& tc);

// Spot-check that D_c^{1/rho} behaves like a metric on random distributions
// over a small random support (symmetry, identity, triangle inequality).
struct MetricReport {
    double max_triangle_violation = 0.0;
    double max_symmetry_gap = 0.0;
    double max_identity_gap = 0.0;
    int triples_checked = 0;
};

MetricReport metric_check(const TransportCost& tc, std::uint64_t seed, int num_triples = 20);

} // namespace ssldro
