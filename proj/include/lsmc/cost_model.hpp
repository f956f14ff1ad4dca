#pragma once

#include <cmath>

#include "lsmc/types.hpp"

namespace lsmc {

/// Trading friction parameters.  Defaults are a monthly large-cap setting:
/// 30 bp proportional cost, shallow supply/demand curve, two thirds of the
/// temporary displacement sticking as permanent impact.
struct CostModel {
  enum class Timing { pre_return, post_return };

  bool enabled = true;
  double tc_rate = 0.003;
  double k = 8e-6;                      // curvature of the marginal price curve
  double spread = 0.0;                  // absolute ask minus bid; 0 quotes both sides at mid
  double perm_impact_frac = 2.0 / 3.0;  // share of temporary displacement that persists
  Timing timing = Timing::pre_return;

  double ask(double mid) const { return mid + 0.5 * spread; }
  double bid(double mid) const { return mid - 0.5 * spread; }

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// Marginal price paid for the dq-th unit of an order.  Buys walk up from the
/// ask, sells walk down from the bid, and dq = 0 returns the ask exactly.
template <typename Scalar>
Scalar msdc_price(Scalar dq, Scalar s_ask, Scalar s_bid, Scalar k) {
  if (dq > Scalar(0)) return s_ask * std::exp(k * std::sqrt(dq));
  if (dq < Scalar(0)) return s_bid * std::exp(-k * std::sqrt(-dq));
  return s_ask;
}

// Execution shortfall of a block of |dq| units versus the quoted side,
// i.e. the area between the marginal price curve and the ask (buy) or bid
// (sell).  Closed forms of the displacement integrals:
//
//   buy:  S_A / k^2 * (2 y e - 2 (e - y) - y^2),  e = expm1(y),  y = k sqrt(dq)
//   sell: S_B / k^2 * (y^2 + 2 e (1 + y) + 2 y),  e = expm1(-y)
//
// Both brackets are O(y^3) sums of O(y^2) terms, so below y = 0.05 they are
// replaced by the series sum_{m>=3} 2(m-1)/m! * t^m (t = +/- y), which keeps
// full relative accuracy down to y -> 0.
template <typename Scalar>
Scalar liquidity_cost(Scalar dq, Scalar s_ask, Scalar s_bid, Scalar k) {
  if (!std::isfinite(dq) || !std::isfinite(s_ask) || !std::isfinite(s_bid) || !std::isfinite(k))
    throw std::invalid_argument("liquidity_cost: non-finite input");
  if (dq == Scalar(0) || k == Scalar(0)) return Scalar(0);
  const bool buy = dq > Scalar(0);
  const Scalar y = k * std::sqrt(buy ? dq : -dq);
  if (y < Scalar(0.05)) {
    const Scalar t = buy ? y : -y;
    const Scalar bracket =
        t * t * t *
        (Scalar(2) / Scalar(3) +
         t * (Scalar(1) / Scalar(4) +
              t * (Scalar(1) / Scalar(15) +
                   t * (Scalar(1) / Scalar(72) +
                        t * (Scalar(1) / Scalar(420) + t / Scalar(2880))))));
    return (buy ? s_ask : s_bid) * std::abs(bracket) / (k * k);
  }
  if (buy) {
    const Scalar e = std::expm1(y);
    return s_ask * (Scalar(2) * y * e - Scalar(2) * (e - y) - y * y) / (k * k);
  }
  const Scalar e = std::expm1(-y);
  return s_bid * (y * y + Scalar(2) * e * (Scalar(1) + y) + Scalar(2) * y) / (k * k);
}

/// Proportional cost on traded value.
template <typename Scalar>
Scalar transaction_cost(Scalar dq, Scalar price, Scalar rate) {
  return rate * std::abs(dq) * price;
}

/// Post-trade mid after `frac` of the temporary displacement sticks.
template <typename Scalar>
Scalar permanent_impact(Scalar dq, Scalar s_pre, Scalar k, Scalar frac) {
  return s_pre + frac * (msdc_price(dq, s_pre, s_pre, k) - s_pre);
}

/// One rebalancing trade: target positions against inherited ones.
struct TradePlan {
  Vector pre_positions;   // units held walking into the step
  Vector post_positions;  // units held after rebalancing
  Vector delta;           // post - pre
  Vector pre_prices;      // mid quotes the trade executes against
};

TradePlan make_trade_plan(const Vector& pre_positions, const Vector& post_positions,
                          const Vector& pre_prices);

struct TradeCosts {
  double transaction = 0.0;
  double liquidity = 0.0;
  double total() const { return transaction + liquidity; }
};

TradeCosts trade_costs(const TradePlan& plan, const CostModel& costs);

struct StepResult {
  double wealth = 0.0;
  Vector positions;    // units per asset held over the period
  Vector post_prices;  // impact-shifted mids, basis for next-period compounding
  bool floored = false;
};

/// Advance wealth one period: rebalance to weights `alpha` at prices
/// `prices`, pay frictions, earn r_f on the cash leg and `r_next` on the
/// risky legs.  `wealth_floor` clips a wipe-out to a small positive value so
/// utilities stay defined; hits are flagged in the result.
StepResult step_wealth(double w, const Vector& alpha, const Vector& prices, const Vector& r_next,
                       double r_f, const CostModel& costs, const Vector& prev_positions,
                       double wealth_floor);

}  // namespace lsmc
