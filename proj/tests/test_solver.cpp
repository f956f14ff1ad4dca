#include <doctest.h>

#include <chrono>
#include <cmath>

#include "lsmc/rng.hpp"
#include "lsmc/solver.hpp"

using namespace lsmc;

namespace {

ProblemSpec tiny_spec() {
  ProblemSpec spec;
  spec.market = make_synthetic_var(2, 31);
  spec.asset_indices = {0, 1};
  spec.s0 = Vector::Constant(2, 100.0);
  spec.horizon = 2;
  spec.mesh = 0.25;
  spec.n_paths = 300;
  spec.seed = 42;
  spec.costs.enabled = false;
  return spec;
}

}  // namespace

TEST_CASE("maximizer mode strings round-trip") {
  for (const auto m : {MaximizerMode::grid_only, MaximizerMode::local_adaptive,
                       MaximizerMode::global_adaptive}) {
    CHECK(maximizer_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(maximizer_mode_from_string("newton"), std::invalid_argument);
}

TEST_CASE("spec validation catches bad knobs") {
  ProblemSpec spec = tiny_spec();
  CHECK_NOTHROW(spec.validate());

  SUBCASE("mesh must be dyadic") {
    spec.mesh = 0.3;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("asset indices must exist") {
    spec.asset_indices = {0, 5};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("s0 must match assets") {
    spec.s0 = Vector::Constant(1, 100.0);
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("maximizer bounds") {
    spec.maximizer.refine_depth = 99;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("wealth floor inside (0, 1)") {
    spec.wealth_floor_frac = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
}

TEST_CASE("forward pass rolls wealth under admissible randomized controls") {
  const ProblemSpec spec = tiny_spec();
  const ForwardPaths fw = forward_simulate(spec);

  REQUIRE(fw.controls.size() == 2);
  REQUIRE(fw.wealth.rows() == 300);
  REQUIRE(fw.wealth.cols() == 3);
  CHECK((fw.wealth.col(0).array() == spec.w0).all());
  CHECK((fw.wealth.array() >= spec.wealth_floor()).all());
  CHECK(fw.floor_hits == 0);

  for (const auto& ctrl : fw.controls) {
    for (Index m = 0; m < ctrl.rows(); ++m) {
      Vector a = ctrl.row(m);
      CHECK(in_admissible_set(a));
    }
  }

  SUBCASE("wealth matches the frictionless recursion path by path") {
    for (const Index m : {Index{0}, Index{17}, Index{299}}) {
      double w = spec.w0;
      for (Index n = 0; n < 2; ++n) {
        const Vector alpha = fw.controls[static_cast<std::size_t>(n)].row(m);
        const Vector r = fw.market.returns[static_cast<std::size_t>(n + 1)].row(m);
        w *= 1.0 + (1.0 - alpha.sum()) * spec.rf_per_period + alpha.dot(r);
        CHECK(fw.wealth(m, n + 1) == doctest::Approx(w).epsilon(1e-12));
      }
    }
  }
  SUBCASE("forward pass is deterministic") {
    const ForwardPaths fw2 = forward_simulate(spec);
    CHECK((fw.wealth - fw2.wealth).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fw.controls[1] - fw2.controls[1]).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("controls are stable when more paths are added") {
    ProblemSpec wider = spec;
    wider.n_paths = 512;
    const ForwardPaths fw2 = forward_simulate(wider);
    CHECK((fw.controls[0] - fw2.controls[0].topRows(300)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fw.wealth - fw2.wealth.topRows(300)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("terminal backward step fits the mean utility at a point state") {
  ProblemSpec spec = tiny_spec();
  spec.horizon = 1;
  const ControlGrid grid = build_simplex_grid(2, spec.mesh);
  const ForwardPaths fw = forward_simulate(spec);
  const StepValue sv = backward_step(0, fw, nullptr, grid, spec);

  REQUIRE(sv.betas.cols() == grid.size());
  // With a deterministic initial state the regression collapses to the
  // per-node sample mean of terminal utility.
  Policy pol;
  pol.grid = grid;
  pol.steps = {sv};
  const Vector z0 = spec.market.stationary_mean();
  const Vector cv = pol.continuation_values(0, z0, spec.w0);

  Vector qzero = Vector::Zero(2);
  for (const Index j : {Index{0}, Index{5}, Index{grid.size() - 1}}) {
    const Vector alpha = grid.node(j);
    double mean_u = 0.0;
    for (Index m = 0; m < spec.n_paths; ++m) {
      const Vector prices = fw.market.prices[0].row(m);
      const Vector r = fw.market.returns[1].row(m);
      const StepResult res = step_wealth(spec.w0, alpha, prices, r, spec.rf_per_period,
                                         spec.costs, qzero, spec.wealth_floor());
      mean_u += crra_utility(res.wealth, spec.utility.gamma);
    }
    mean_u /= static_cast<double>(spec.n_paths);
    CHECK(cv[j] == doctest::Approx(mean_u).epsilon(1e-9));
  }

  SUBCASE("step guards") {
    CHECK_THROWS_AS(backward_step(1, fw, nullptr, grid, spec), std::invalid_argument);
    CHECK_THROWS_AS(backward_step(-1, fw, nullptr, grid, spec), std::invalid_argument);
  }
}

TEST_CASE("grid-only extraction returns the argmax node") {
  const ControlGrid grid = build_simplex_grid(2, 0.5);
  Vector cv(grid.size());
  cv << 0.0, 1.0, 5.0, 2.0, 3.0, 4.0;
  MaximizerSpec ms;
  ms.mode = MaximizerMode::grid_only;
  const ExtractResult res = extract_control(cv, grid, ms);
  CHECK(res.node == 2);
  CHECK((res.alpha - grid.node(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.surrogate_evals == 0);

  SUBCASE("ties resolve to the lexicographically smallest node") {
    Vector flat = Vector::Constant(grid.size(), 1.0);
    CHECK(extract_control(flat, grid, ms).node == 0);
  }
  SUBCASE("size mismatch throws") {
    Vector bad(3);
    bad.setZero();
    CHECK_THROWS_AS(extract_control(bad, grid, ms), std::invalid_argument);
  }
}

TEST_CASE("local refinement recovers an off-grid quadratic peak") {
  const ControlGrid grid = build_simplex_grid(1, 0.25);
  const double star = 0.33;
  Vector cv(grid.size());
  for (Index j = 0; j < grid.size(); ++j) {
    const double a = grid.nodes()(j, 0);
    cv[j] = -(a - star) * (a - star);
  }
  MaximizerSpec ms;  // local_adaptive, depth 5
  const ExtractResult res = extract_control(cv, grid, ms, 1e-6);

  CHECK(res.node == 1);  // 0.25 is the best grid node
  // Greedy dyadic walk: 0.25 -> 0.375 -> 0.3125 -> 0.34375 -> 0.328125.
  CHECK(res.alpha[0] == doctest::Approx(0.328125).epsilon(1e-12));
  CHECK(std::abs(res.alpha[0] - star) < 0.25 / 32.0);
  CHECK(res.surrogate_evals == 11);  // 1 + 2 per level
  CHECK_FALSE(res.underdetermined);

  SUBCASE("depth zero keeps the grid node") {
    MaximizerSpec coarse = ms;
    coarse.refine_depth = 0;
    CHECK(extract_control(cv, grid, coarse, 1e-6).alpha[0] == doctest::Approx(0.25));
  }
  SUBCASE("global surrogate of matching degree agrees") {
    MaximizerSpec g;
    g.mode = MaximizerMode::global_adaptive;
    g.global_degree = 2;
    const ExtractResult gres = extract_control(cv, grid, g);
    CHECK(gres.alpha[0] == doctest::Approx(0.328125).epsilon(1e-12));
  }
}

TEST_CASE("refined controls stay admissible near every start node") {
  const ControlGrid grid = build_simplex_grid(3, 0.25);
  MaximizerSpec ms;
  ControlExtractor ex(grid, ms, 1e-6);
  std::mt19937_64 eng = rng::substream(5, rng::Stream::surface, 0);
  for (int trial = 0; trial < 60; ++trial) {
    Vector cv(grid.size());
    for (Index j = 0; j < cv.size(); ++j) cv[j] = rng::uniform01(eng);
    const ExtractResult res = ex.extract(cv);
    REQUIRE(in_admissible_set(res.alpha));
    const Vector start = grid.node(res.node);
    CHECK((res.alpha - start).cwiseAbs().maxCoeff() <= grid.mesh() + 1e-12);
    CHECK(res.surrogate_evals <= 1 + 2 * 3 * ms.refine_depth);
  }
}

TEST_CASE("corner patches widen until the local fit is determined") {
  const ControlGrid grid = build_simplex_grid(2, 0.5);
  Vector cv = Vector::Zero(grid.size());
  cv[0] = 1.0;  // argmax at the origin corner: 4 neighbors, 6 quadratic terms
  MaximizerSpec ms;
  const ExtractResult res = extract_control(cv, grid, ms);
  CHECK(res.node == 0);
  // The widened patch spans all 6 grid nodes, which exactly determine the
  // quadratic; its maximum over the simplex stays at the corner.
  CHECK_FALSE(res.underdetermined);
  CHECK(res.alpha.cwiseAbs().maxCoeff() == 0.0);
  CHECK(in_admissible_set(res.alpha));

  SUBCASE("direct patch widening") {
    const LocalPatch p1 = local_patch(grid, Index{0});
    const LocalPatch p2 = local_patch(grid, Index{0}, 2);
    CHECK(p1.node_indices.size() == 4);
    CHECK(p2.node_indices.size() == 6);
    CHECK(p2.hi[0] == 1.0);
    CHECK(local_patch(grid, Index{0}, 7).node_indices.size() == 6);
  }
}

TEST_CASE("solve produces a deterministic, evaluable policy") {
  const ProblemSpec spec = tiny_spec();
  const SolveResult a = solve(spec);
  const SolveResult b = solve(spec);

  REQUIRE(a.policy.n_steps() == 2);
  CHECK(a.policy.grid.size() == 15);
  CHECK(a.policy.spec_digest.size() == 16);
  CHECK(a.policy.spec_digest == b.policy.spec_digest);
  for (Index n = 0; n < 2; ++n) {
    CHECK((a.policy.steps[static_cast<std::size_t>(n)].betas -
           b.policy.steps[static_cast<std::size_t>(n)].betas)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  CHECK(a.diagnostics.step_seconds.size() == 2);
  CHECK(a.diagnostics.total_seconds > 0.0);

  const Vector z0 = spec.market.stationary_mean();
  const Vector alpha0 = a.policy.control_at(0, z0, spec.w0);
  CHECK(in_admissible_set(alpha0));
  CHECK((alpha0 - b.policy.control_at(0, z0, spec.w0)).cwiseAbs().maxCoeff() == 0.0);

  const EvalReport rep = replay_policy(a.policy, spec, 777, 256);
  CHECK(std::isfinite(rep.cer_bp));
  CHECK((rep.initial_allocation - alpha0).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("policy guards") {
    CHECK_THROWS_AS(a.policy.continuation_values(5, z0, 1.0), std::invalid_argument);
    Vector short_z(1);
    short_z << 0.0;
    CHECK_THROWS_AS(a.policy.continuation_values(0, short_z, 1.0), std::invalid_argument);
  }
  SUBCASE("changing the seed changes the fit") {
    ProblemSpec other = spec;
    other.seed = 43;
    const SolveResult c = solve(other);
    CHECK(c.policy.spec_digest != a.policy.spec_digest);
    CHECK((c.policy.steps[0].betas - a.policy.steps[0].betas).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("an expired deadline aborts the solve") {
  const ProblemSpec spec = tiny_spec();
  const auto past = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  CHECK_THROWS_AS(solve(spec, Deadline{past}), BudgetExceeded);
}
