#include <gtest/gtest.h>

#include <random>

#include "hob/bellman.hpp"
#include "hob/control.hpp"
#include "test_util.hpp"

using namespace hob;
using test::make_tensor;

namespace {

/// Two-state order-2 problem with two policies per row and a known
/// optimum; rows are s.d.d. M-matrix rows.
PolicyProblem two_state_m2() {
    auto gen = [](int i, int label) -> PolicyRow {
        PolicyRow row;
        const int j = 1 - i;
        if (label == 0) {
            row.entries.push_back({{i, i}, 2.0});
            row.entries.push_back({{i, j}, -0.5});
            row.rhs = 1.0;
        } else {
            row.entries.push_back({{i, i}, 4.0});
            row.entries.push_back({{i, j}, -1.0});
            row.rhs = 3.0;
        }
        return row;
    };
    return PolicyProblem(2, 2, {2, 2}, gen);
}

PolicyProblem single_policy_problem() {
    auto gen = [](int i, int) -> PolicyRow {
        PolicyRow row;
        row.entries.push_back({{i, i, i}, 1.0});
        row.rhs = (i + 2.0) * (i + 2.0);
        return row;
    };
    return PolicyProblem(3, 3, {1, 1, 1}, gen);
}

} // namespace

TEST(LocalResiduals, SinglePolicyMatchesContraction) {
    auto prob = single_policy_problem();
    const Vec u{1.5, 2.5, 3.5};
    const auto res = local_residuals(prob, u);
    Policy p(3, 0);
    auto [a, b] = assemble(prob, p);
    const Vec au = contract(a, u);
    for (int i = 0; i < 3; ++i) {
        ASSERT_EQ(res[i].size(), 1u);
        EXPECT_NEAR(res[i][0], au[i] - b[i], 1e-14);
    }
}

TEST(LocalResiduals, MatchesGlobalPolicyEnumeration) {
    auto prob = two_state_m2();
    const Vec u{0.8, 1.3};
    const auto res = local_residuals(prob, u);
    // all four global policies, assembled explicitly
    for (int p0 = 0; p0 < 2; ++p0)
        for (int p1 = 0; p1 < 2; ++p1) {
            auto [a, b] = assemble(prob, {p0, p1});
            const Vec au = contract(a, u);
            EXPECT_NEAR(res[0][p0], au[0] - b[0], 1e-14);
            EXPECT_NEAR(res[1][p1], au[1] - b[1], 1e-14);
        }
}

TEST(LocalResiduals, SchemeSolutionMinimaVanish) {
    const auto c = parameterization_1();
    Grid g(32);
    auto prob = assemble_od(c, g);
    const auto rep = policy_iteration(prob);
    const auto res = local_residuals(prob, rep.u);
    for (int i = 0; i < prob.dim(); ++i) {
        const double rowmin = *std::min_element(res[i].begin(), res[i].end());
        EXPECT_LE(std::abs(rowmin), 1e-8) << "row " << i;
    }
}

TEST(BellmanResidual, ZeroVectorGivesMinusB) {
    auto prob = two_state_m2();
    const Vec res = bellman_residual(prob, {0.0, 0.0});
    // rowwise min of -b over labels = -max b = -3
    EXPECT_DOUBLE_EQ(res[0], -3.0);
    EXPECT_DOUBLE_EQ(res[1], -3.0);
}

TEST(BellmanResidual, MatchesEnumerationOnRandomProblems) {
    std::mt19937_64 rng(211);
    std::uniform_real_distribution<double> uval(0.3, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        auto prob = test::random_policy_problem(rng, 2 + rep % 2, 3, 3);
        Vec u(3);
        for (auto& v : u) v = uval(rng);
        const Vec res = bellman_residual(prob, u);
        // enumerate every global policy and take coordinatewise minima
        Vec want(3, std::numeric_limits<double>::infinity());
        Policy p(3, 0);
        while (true) {
            auto [a, b] = assemble(prob, p);
            const Vec au = contract(a, u);
            for (int i = 0; i < 3; ++i) want[i] = std::min(want[i], au[i] - b[i]);
            int i = 2;
            while (i >= 0 && p[i] + 1 == prob.policy_count(i)) p[i--] = 0;
            if (i < 0) break;
            ++p[i];
        }
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(res[i], want[i], 1e-12);
    }
}

TEST(Pivot, FirstPickIsRowwiseArgmaxOfRhs) {
    auto prob = two_state_m2();
    const Policy p = pivot_locally_optimal(prob, {0.0, 0.0}, {});
    EXPECT_EQ(p, (Policy{1, 1})); // label 1 has the larger rhs in both rows
}

TEST(Pivot, SinglePolicyProblemReturnsIt) {
    auto prob = single_policy_problem();
    const Policy p = pivot_locally_optimal(prob, {1.0, 1.0, 1.0}, {});
    EXPECT_EQ(p, (Policy{0, 0, 0}));
}

TEST(Pivot, VisitedArgminPerturbsSmallestRow) {
    auto prob = two_state_m2();
    PolicySet visited;
    visited.insert({1, 1});
    const Policy p = pivot_locally_optimal(prob, {0.0, 0.0}, visited);
    EXPECT_EQ(p, (Policy{0, 1})); // differs from the argmin in the first row only
}

TEST(Pivot, PrefersUnvisitedTieOverPerturbation) {
    // row 0 has a strict argmin; row 1 ties across both labels. With the
    // canonical argmin visited, the pivot must stay inside the argmin set
    // (flip the tied row) rather than perturb the strict row.
    auto gen = [](int i, int label) -> PolicyRow {
        PolicyRow row;
        row.entries.push_back({{i, i}, 2.0});
        row.rhs = i == 0 ? (label == 0 ? 1.0 : 0.5) : 1.0;
        return row;
    };
    PolicyProblem prob(2, 2, {2, 2}, gen);
    PolicySet visited;
    visited.insert({0, 0});
    const Policy p = pivot_locally_optimal(prob, {0.0, 0.0}, visited);
    EXPECT_EQ(p, (Policy{0, 1}));
}

TEST(Pivot, ThrowsWhenAllPoliciesVisited) {
    auto prob = single_policy_problem();
    PolicySet visited;
    visited.insert({0, 0, 0});
    try {
        pivot_locally_optimal(prob, {1.0, 1.0, 1.0}, visited);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PoliciesExhausted);
    }
}

TEST(PolicyIteration, TwoStateProblemMatchesEnumeration) {
    auto prob = two_state_m2();
    const auto rep = policy_iteration(prob);
    const Vec want = test::brute_force_bellman(prob);
    EXPECT_LE(inf_dist(rep.u, want), 1e-8);
    EXPECT_LE(std::abs(rep.residual_inf), 1e-8 * (1.0 + 3.0));
    // the final policy attains the rowwise minimum
    const auto res = local_residuals(prob, rep.u);
    for (int i = 0; i < prob.dim(); ++i) {
        const double rowmin = *std::min_element(res[i].begin(), res[i].end());
        EXPECT_LE(res[i][rep.final_policy[i]], rowmin + 1e-9);
    }
}

TEST(PolicyIteration, SinglePolicyStopsAfterOneSolve) {
    auto prob = single_policy_problem();
    const auto rep = policy_iteration(prob);
    EXPECT_EQ(rep.outer_iterations, 1);
    EXPECT_NEAR(rep.u[0], 2.0, 1e-10);
    EXPECT_NEAR(rep.u[1], 3.0, 1e-10);
    EXPECT_NEAR(rep.u[2], 4.0, 1e-10);
}

TEST(PolicyIteration, MatchesEnumerationOnRandomProblems) {
    std::mt19937_64 rng(223);
    for (int rep = 0; rep < 30; ++rep) {
        const int m = 2 + rep % 2;
        const int n = 2 + rep % 3;
        auto prob = test::random_policy_problem(rng, m, n, 3);
        if (prob.policy_space_size() > 64) continue;
        const auto pi = policy_iteration(prob);
        const Vec want = test::brute_force_bellman(prob);
        EXPECT_LE(inf_dist(pi.u, want), 1e-8) << "m=" << m << " n=" << n;
        EXPECT_LE(static_cast<long long>(pi.visited_policy_count), prob.policy_space_size());
        // iterate domination
        for (const auto& it : pi.history)
            EXPECT_TRUE(verify_domination(prob, pi.u, it.u, it.policy));
    }
}

TEST(PolicyIteration, OrderTwoSequenceMatchesClassicalPolicyIteration) {
    std::mt19937_64 rng(227);
    for (int rep = 0; rep < 20; ++rep) {
        auto prob = test::random_policy_problem(rng, 2, 3, 3);
        const auto ours = policy_iteration(prob);
        const auto classical = test::classical_policy_iteration_m2(prob);
        ASSERT_LE(ours.history.size(), classical.policies.size());
        for (std::size_t k = 0; k < ours.history.size(); ++k)
            EXPECT_EQ(ours.history[k].policy, classical.policies[k]) << "step " << k;
        EXPECT_LE(inf_dist(ours.u, classical.u), 1e-8);
    }
}

TEST(PolicyIteration, ExhaustsPoliciesUnderImpossibleTolerance) {
    // irrational solutions keep the residual nonzero in floating point, so
    // a zero tolerance can never be met and the policy space runs out
    auto gen = [](int, int label) -> PolicyRow {
        PolicyRow row;
        row.entries.push_back({{0, 0, 0}, 1.0});
        row.rhs = label == 0 ? 2.0 : 3.0;
        return row;
    };
    PolicyProblem prob(3, 1, {2}, gen);
    try {
        policy_iteration(prob, {}, 0.0);
        FAIL() << "expected exhaustion";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PoliciesExhausted);
    }
}

TEST(PolicyIteration, RejectsNonStrongMPolicy) {
    auto gen = [](int i, int label) -> PolicyRow {
        PolicyRow row;
        const int j = 1 - i;
        row.entries.push_back({{i, i}, 1.0});
        if (label == 1) row.entries.push_back({{i, j}, 0.5}); // positive off-diagonal
        row.rhs = label == 1 ? 2.0 : 1.0;
        return row;
    };
    PolicyProblem prob(2, 2, {2, 2}, gen);
    try {
        policy_iteration(prob);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::StructureViolation);
    }
}

TEST(VerifyDomination, DetectsViolations) {
    auto prob = single_policy_problem();
    const Vec u{2.0, 3.0, 4.0};
    EXPECT_TRUE(verify_domination(prob, u, u, {0, 0, 0}));
    Vec corrupted = u;
    corrupted[1] += 1.0;
    EXPECT_FALSE(verify_domination(prob, u, corrupted, {0, 0, 0}));
}
