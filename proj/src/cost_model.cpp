#include "lsmc/cost_model.hpp"

namespace lsmc {

void CostModel::validate() const {
  if (!(tc_rate >= 0.0) || !std::isfinite(tc_rate))
    throw std::invalid_argument("cost model: tc_rate must be finite and >= 0");
  if (!(k >= 0.0) || !std::isfinite(k))
    throw std::invalid_argument("cost model: k must be finite and >= 0");
  if (!(spread >= 0.0) || !std::isfinite(spread))
    throw std::invalid_argument("cost model: spread must be finite and >= 0");
  if (!(perm_impact_frac >= 0.0 && perm_impact_frac <= 1.0))
    throw std::invalid_argument("cost model: perm_impact_frac must lie in [0, 1]");
}

TradePlan make_trade_plan(const Vector& pre_positions, const Vector& post_positions,
                          const Vector& pre_prices) {
  if (pre_positions.size() != post_positions.size() || pre_positions.size() != pre_prices.size())
    throw std::invalid_argument("trade plan: mismatched vector lengths");
  TradePlan plan;
  plan.pre_positions = pre_positions;
  plan.post_positions = post_positions;
  plan.delta = post_positions - pre_positions;
  plan.pre_prices = pre_prices;
  return plan;
}

TradeCosts trade_costs(const TradePlan& plan, const CostModel& costs) {
  TradeCosts out;
  if (!costs.enabled) return out;
  for (Index i = 0; i < plan.delta.size(); ++i) {
    const double mid = plan.pre_prices[i];
    out.transaction += transaction_cost(plan.delta[i], mid, costs.tc_rate);
    out.liquidity += liquidity_cost(plan.delta[i], costs.ask(mid), costs.bid(mid), costs.k);
  }
  return out;
}

StepResult step_wealth(double w, const Vector& alpha, const Vector& prices, const Vector& r_next,
                       double r_f, const CostModel& costs, const Vector& prev_positions,
                       double wealth_floor) {
  const Index d = alpha.size();
  if (prices.size() != d || r_next.size() != d || prev_positions.size() != d)
    throw std::invalid_argument("step_wealth: mismatched vector lengths");
  if (!std::isfinite(w) || !alpha.allFinite() || !prices.allFinite() || !r_next.allFinite())
    throw std::invalid_argument("step_wealth: non-finite input");
  if ((prices.array() <= 0.0).any())
    throw std::invalid_argument("step_wealth: prices must be positive");

  const Vector q = (alpha.array() * w / prices.array()).matrix();
  const TradePlan plan = make_trade_plan(prev_positions, q, prices);
  const double cost = trade_costs(plan, costs).total();

  Vector s_post = prices;
  if (costs.enabled && costs.perm_impact_frac > 0.0) {
    for (Index i = 0; i < d; ++i)
      s_post[i] = permanent_impact(plan.delta[i], prices[i], costs.k, costs.perm_impact_frac);
  }

  const double cash_frac = 1.0 - alpha.sum();
  double w_next;
  if (costs.timing == CostModel::Timing::pre_return) {
    const double qf = cash_frac * w - cost;
    w_next = (w - cost) + qf * r_f + (q.array() * s_post.array() * r_next.array()).sum();
  } else {
    const double qf = cash_frac * w;
    w_next = w + qf * r_f + (q.array() * s_post.array() * r_next.array()).sum() - cost;
  }

  StepResult out;
  out.positions = q;
  out.post_prices = std::move(s_post);
  if (w_next < wealth_floor) {
    out.wealth = wealth_floor;
    out.floored = true;
  } else {
    out.wealth = w_next;
  }
  return out;
}

}  // namespace lsmc
