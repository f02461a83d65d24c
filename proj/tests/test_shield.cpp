#include <gtest/gtest.h>

#include "hyshield/experiment.hpp"
#include "hyshield/persistence.hpp"
#include "toy_oracle.hpp"

using namespace hyshield;

TEST(Grid, Sizes) {
    EXPECT_EQ(GridSpec::defaults().size(), 9702u);
    GridSpec g{{{{0, 1, 2}, {0, 1, 2}, {0, 1, 2}, {0, 1, 2}}}};
    EXPECT_EQ(g.size(), 16u);
    GridSpec one{{{{0, 1, 1}, {0, 1, 1}, {0, 1, 1}, {0, 1, 1}}}};
    EXPECT_EQ(one.size(), 1u);
    EXPECT_EQ(representative(0, one).h, 0.5);
}

TEST(Grid, BinConvention) {
    const GridAxis a{0.0, 10.0, 5};
    EXPECT_EQ(a.bin_of(2.0), 1); // interior edge goes up
    EXPECT_EQ(a.bin_of(1.999), 0);
    EXPECT_EQ(a.bin_of(10.0), 4); // last bin closed
    EXPECT_EQ(a.bin_of(50.0), 4);
    EXPECT_EQ(a.bin_of(-3.0), 0);
}

TEST(Grid, FlattenRoundTrip) {
    const auto g = GridSpec::defaults();
    for (StateId s = 0; s < g.size(); s += 7) EXPECT_EQ(flatten(unflatten(s, g), g), s);
    EXPECT_THROW(unflatten(static_cast<StateId>(g.size()), g), std::out_of_range);
}

TEST(Grid, RepresentativeProjectsToItsCell) {
    const auto g = ExperimentConfig{}.grid;
    for (StateId s = 0; s < g.size(); ++s) EXPECT_EQ(project(representative(s, g), g).id, s);
}

TEST(Grid, LowerCornerRepresentative) {
    const auto g = GridSpec::defaults();
    const auto x = representative(0, g);
    EXPECT_DOUBLE_EQ(x.h, 19000.0 + 0.5 * 32000.0 / 21);
    EXPECT_DOUBLE_EQ(x.V, 900.0 + 0.5 * 3200.0 / 21);
    EXPECT_DOUBLE_EQ(x.gamma, deg2rad(-10.0) + 0.5 * deg2rad(20.0) / 11);
    EXPECT_DOUBLE_EQ(x.m, 7500.0);
}

TEST(Grid, GuardTolerance) {
    const auto g = GridSpec::defaults();
    const double w = g.h().width();
    EXPECT_TRUE(within_grid_guard({g.h().hi + 0.9 * w, 2500.0, 0.0, 9000.0}, g));
    EXPECT_FALSE(within_grid_guard({g.h().hi + 1.1 * w, 2500.0, 0.0, 9000.0}, g));
}

TEST(Grid, DefaultBoxAlignsWithBinEdges) {
    const ExperimentConfig c;
    const double faces[3][2] = {{c.box.h_star - c.box.dh, c.box.h_star + c.box.dh},
                                {c.box.V_star - c.box.dV, c.box.V_star + c.box.dV},
                                {c.box.gamma_star - c.box.dgamma, c.box.gamma_star + c.box.dgamma}};
    for (int d = 0; d < 3; ++d)
        for (double f : faces[d]) {
            const auto& a = c.grid.axes[d];
            const double k = (f - a.lo) / a.width();
            EXPECT_NEAR(k, std::round(k), 1e-9) << "dimension " << d;
        }
}

TEST(Viability, ChainExample) {
    // States 0..4, actions move -1/0/+1 (clamped); landing on 0 is unsafe.
    TransitionTable t(5, 3);
    for (StateId s = 0; s < 5; ++s)
        for (ActionId a = 0; a < 3; ++a) {
            const int n = std::clamp(static_cast<int>(s) + static_cast<int>(a) - 1, 0, 4);
            t.at(s, a) = {n != 0, n != 0 ? static_cast<StateId>(n) : kNoSuccessor};
        }
    const auto r = compute_feasible_set(t);
    // State 0 itself can still step away to 1, so every state stays viable.
    EXPECT_EQ(r.feasible_count(), 5u);
    EXPECT_TRUE(toy::matches_oracle(t, SweepOrder::jacobi));
    EXPECT_EQ(r.admissible_mask(0), ActionMask(0b100));
    EXPECT_EQ(r.admissible_mask(1), ActionMask(0b110));
    EXPECT_EQ(r.admissible_mask(3), ActionMask(0b111));
    // Forbidding the escape from 0 removes it.
    t.at(0, 2) = {false, kNoSuccessor};
    const auto r2 = compute_feasible_set(t);
    EXPECT_EQ(r2.feasible_count(), 4u);
    EXPECT_THROW((void)r2.admissible_mask(0), ContractError);
}

TEST(Viability, RandomInstancesMatchBruteForce) {
    Rng rng(42);
    for (int k = 0; k < 200; ++k) {
        const auto t = toy::random_instance(rng);
        for (auto order : {SweepOrder::jacobi, SweepOrder::ascending_in_place, SweepOrder::descending_in_place})
            EXPECT_TRUE(toy::matches_oracle(t, order)) << "instance " << k;
    }
}

TEST(Viability, ResultIsForwardInvariantAndIdempotent) {
    Rng rng(7);
    for (int k = 0; k < 100; ++k) {
        const auto t = toy::random_instance(rng, 6, 3);
        const auto r = compute_feasible_set(t);
        std::vector<std::uint8_t> cand(t.num_states());
        for (StateId s = 0; s < t.num_states(); ++s) {
            cand[s] = r.is_feasible(s);
            if (!r.is_feasible(s)) continue;
            EXPECT_FALSE(r.admissible_mask(s).empty());
            for (ActionId a : r.admissible_mask(s).ids()) EXPECT_TRUE(r.is_feasible(r.successor(s, a)));
        }
        EXPECT_EQ(prune_sweep(t, cand), 0u);
    }
}

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.grid.axes[0].bins = 8;
    c.grid.axes[1].bins = 10;
    c.grid.axes[2].bins = 8;
    return c;
}

} // namespace

TEST(Viability, UnboundedLimitsKeepEverything) {
    auto c = small_config();
    c.limits.hard = HardLimits::unbounded();
    // Every hold stays on the grid as long as hull exits are not treated as unsafe.
    const Experiment ex(c);
    const auto r = ex.compute_viability();
    EXPECT_EQ(r.feasible_count(), r.num_states());
}

TEST(Viability, TighterLimitsNeverEnlargeTheSet) {
    auto c = small_config();
    const auto loose = Experiment(c).compute_viability();
    c.limits.hard.q_max = 50000.0;
    c.limits.hard.qdot_max = 3.0e4;
    const auto tight = Experiment(c).compute_viability();
    EXPECT_LE(tight.feasible_count(), loose.feasible_count());
    for (StateId s = 0; s < tight.num_states(); ++s)
        if (tight.is_feasible(s)) {
            EXPECT_TRUE(loose.is_feasible(s));
        }
}

TEST(Viability, DefaultConfiguration) {
    const Experiment ex(ExperimentConfig{});
    const auto r = ex.compute_viability();
    EXPECT_GT(r.feasible_count(), 0u);
    EXPECT_LT(r.feasible_count(), r.num_states());
    EXPECT_TRUE(r.is_feasible(project(ex.config().nominal, ex.config().grid).id));
    EXPECT_TRUE(r.is_feasible(project(ex.config().x0, ex.config().grid).id));
    const auto t = ex.shield_model().transitions();
    std::vector<std::uint8_t> cand(r.num_states());
    for (StateId s = 0; s < r.num_states(); ++s) cand[s] = r.is_feasible(s);
    EXPECT_EQ(prune_sweep(t, cand), 0u);
}

TEST(Viability, NominalCellActionIsSafe) {
    const Experiment ex(ExperimentConfig{});
    const auto& sm = ex.shield_model();
    const auto s = project(ex.config().nominal, ex.config().grid).id;
    EXPECT_TRUE(sm.one_step_hard_safe(s, sm.actions().id(1, 1)).safe);
}

TEST(Viability, OverspeedCellIsUnsafe) {
    auto c = small_config();
    c.grid.axes[1] = {4700.0, 5700.0, 2}; // M > 15 near 35 km throughout
    const Experiment ex(c);
    const auto& sm = ex.shield_model();
    for (StateId s = 0; s < c.grid.size(); ++s)
        if (std::abs(representative(s, c.grid).h - 35000.0) < 2500.0)
            for (ActionId a = 0; a < sm.actions().size(); ++a) {
                EXPECT_FALSE(sm.one_step_hard_safe(s, a).safe);
            }
}

TEST(Viability, SecondComputationIsIdentical) {
    const Experiment ex(small_config());
    const auto a = ex.compute_viability();
    const auto b = ex.compute_viability();
    EXPECT_EQ(serialize(a), serialize(b));
}
