#include <gtest/gtest.h>

#include <random>

#include "hob/tensor.hpp"
#include "test_util.hpp"

using namespace hob;
using test::make_tensor;

TEST(SparseTensor, RejectsDuplicatesAndBadIndices) {
    EXPECT_THROW(make_tensor(3, 2, {{{0, 0, 0}, 1.0}, {{0, 0, 0}, 2.0}}), Error);
    EXPECT_THROW(make_tensor(3, 2, {{{0, 0, 2}, 1.0}}), Error);
    EXPECT_THROW(make_tensor(3, 2, {{{0, 0}, 1.0}}), Error);
    EXPECT_THROW(make_tensor(3, 2, {{{0, 0, 0}, std::nan("")}}), Error);
    EXPECT_THROW(SparseTensor(1, 2, {}), Error);
}

TEST(SparseTensor, DropsExactZerosAndSortsRows) {
    auto a = make_tensor(3, 3, {{{1, 2, 0}, 3.0}, {{1, 0, 2}, 2.0}, {{0, 1, 1}, 0.0}});
    EXPECT_EQ(a.nnz(), 2);
    EXPECT_EQ(a.row_begin(0), a.row_end(0)); // zero entry dropped
    // row 1 iterates in lexicographic tuple order
    auto t0 = a.index(a.row_begin(1));
    EXPECT_EQ(t0[1], 0);
    EXPECT_EQ(a.value(a.row_begin(1)), 2.0);
}

TEST(Contract, IdentityGivesCoordinatewisePower) {
    auto id = SparseTensor::identity(3, 2);
    const Vec y = contract(id, {2.0, 3.0});
    EXPECT_DOUBLE_EQ(y[0], 4.0);
    EXPECT_DOUBLE_EQ(y[1], 9.0);
}

TEST(Contract, RowSumZeroTensorAnnihilatesOnes) {
    const Vec y = contract(test::row_sum_zero_tensor(), {1.0, 1.0});
    EXPECT_DOUBLE_EQ(y[0], 0.0);
    EXPECT_DOUBLE_EQ(y[1], 0.0);
}

TEST(Contract, MatchesDenseOracleOnRandomTensor) {
    std::mt19937_64 rng(7);
    auto a = test::random_tensor(rng, 3, 4, 10);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    Vec x(4);
    for (auto& v : x) v = val(rng);
    const Vec got = contract(a, x);
    const Vec want = test::dense_contract_oracle(a, x);
    for (int i = 0; i < 4; ++i)
        EXPECT_NEAR(got[i], want[i], 1e-12 * (1.0 + std::abs(want[i])));
}

TEST(Contract, MatchesDenseOracleOnAllSmallShapes) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    for (int n = 1; n <= 4; ++n)
        for (int m = 2; m <= 4; ++m)
            for (int rep = 0; rep < 5; ++rep) {
                auto a = test::random_tensor(rng, m, n, 2 * n);
                Vec x(n);
                for (auto& v : x) v = val(rng);
                const Vec got = contract(a, x);
                const Vec want = test::dense_contract_oracle(a, x);
                for (int i = 0; i < n; ++i)
                    EXPECT_NEAR(got[i], want[i], 1e-12 * (1.0 + std::abs(want[i])))
                        << "n=" << n << " m=" << m;
            }
}

TEST(Contract, Homogeneity) {
    std::mt19937_64 rng(13);
    auto a = test::random_tensor(rng, 4, 3, 12);
    Vec x{0.7, 1.3, 0.4};
    const Vec y = contract(a, x);
    Vec cx = x;
    for (auto& v : cx) v *= 2.0;
    const Vec cy = contract(a, cx);
    for (int i = 0; i < 3; ++i)
        EXPECT_NEAR(cy[i], 8.0 * y[i], 1e-12 * (1.0 + std::abs(cy[i])));
}

TEST(Contract, DimensionMismatch) {
    auto id = SparseTensor::identity(3, 2);
    EXPECT_THROW(contract(id, {1.0, 2.0, 3.0}), Error);
}

TEST(Jacobian, IdentityTensor) {
    auto id = SparseTensor::identity(3, 2);
    const Matrix j = jacobian(id, {2.0, 3.0});
    EXPECT_DOUBLE_EQ(j(0, 0), 4.0);
    EXPECT_DOUBLE_EQ(j(1, 1), 6.0);
    EXPECT_DOUBLE_EQ(j(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(j(1, 0), 0.0);
}

TEST(Jacobian, SingleEntryHandExpansion) {
    auto a = make_tensor(3, 2, {{{0, 0, 1}, 5.0}});
    const Matrix j = jacobian(a, {2.0, 3.0});
    EXPECT_DOUBLE_EQ(j(0, 0), 15.0); // 5 * x_1
    EXPECT_DOUBLE_EQ(j(0, 1), 10.0); // 5 * x_0
    EXPECT_DOUBLE_EQ(j(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(j(1, 1), 0.0);
}

TEST(Jacobian, MatchesFiniteDifferences) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> val(0.5, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 2 + rep % 4;
        const int m = 2 + rep % 3;
        auto a = test::random_tensor(rng, m, n, 3 * n);
        Vec x(n);
        for (auto& v : x) v = val(rng);
        const Matrix j = jacobian(a, x);
        const Matrix fd = test::fd_jacobian_oracle(a, x);
        double jmax = 0.0;
        for (double v : j.a) jmax = std::max(jmax, std::abs(v));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                EXPECT_NEAR(j(r, c), fd(r, c), 1e-6 * (1.0 + jmax));
    }
}

TEST(Permute, IdentityPermutationIsNoop) {
    std::mt19937_64 rng(19);
    auto a = test::random_tensor(rng, 3, 4, 10);
    EXPECT_TRUE(permute(a, {0, 1, 2, 3}) == a);
}

TEST(Permute, SwapOnRowSumZeroTensorIsSymmetric) {
    auto a = test::row_sum_zero_tensor();
    EXPECT_TRUE(permute(a, {1, 0}) == a);
}

TEST(Permute, ProofIdentityHolds) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 3 + rep % 3;
        auto a = test::random_tensor(rng, 3, n, 3 * n);
        std::vector<int> pi(n);
        for (int i = 0; i < n; ++i) pi[i] = i;
        std::shuffle(pi.begin(), pi.end(), rng);
        auto ap = permute(a, pi);
        EXPECT_EQ(ap.nnz(), a.nnz());
        Vec x(n);
        for (auto& v : x) v = val(rng);
        Vec y(n);
        for (int i = 0; i < n; ++i) y[i] = x[pi[i]];
        const Vec lhs = contract(ap, y);
        const Vec rhs = contract(a, x);
        for (int i = 0; i < n; ++i)
            EXPECT_NEAR(lhs[i], rhs[pi[i]], 1e-12 * (1.0 + std::abs(rhs[pi[i]])));
    }
}

TEST(Permute, RejectsNonPermutation) {
    auto a = SparseTensor::identity(3, 3);
    EXPECT_THROW(permute(a, {0, 0, 1}), Error);
    EXPECT_THROW(permute(a, {0, 1}), Error);
}

TEST(Embed, HalvedPlacementForOrderThree) {
    auto a = SparseTensor::identity(3, 2);
    auto b2 = make_tensor(2, 2, {{{0, 1}, 4.0}});
    auto ap = embed_lower_order(a, {b2});
    EXPECT_EQ(ap.dim(), 3);
    auto entries = ap.entries();
    std::map<IndexTuple, double> got;
    for (auto& e : entries) got[e.idx] = e.value;
    EXPECT_DOUBLE_EQ(got.at({0, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(got.at({1, 1, 1}), 1.0);
    EXPECT_DOUBLE_EQ(got.at({0, 1, 2}), -2.0);
    EXPECT_DOUBLE_EQ(got.at({0, 2, 1}), -2.0);
    EXPECT_DOUBLE_EQ(got.at({2, 2, 2}), 1.0);
    EXPECT_EQ(entries.size(), 5u);
}

TEST(Embed, EmptyListOnlyPadsCorner) {
    auto a = SparseTensor::identity(3, 2);
    auto ap = embed_lower_order(a, {});
    EXPECT_EQ(ap.dim(), 3);
    EXPECT_EQ(ap.nnz(), 3);
    EXPECT_DOUBLE_EQ(ap.diagonal(2), 1.0);
}

TEST(Embed, FoldingIdentityHoldsForRandomInputs) {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> val(0.2, 1.5);
    for (int rep = 0; rep < 20; ++rep) {
        const int m = 3 + rep % 2;
        const int n = 2 + rep % 3;
        auto a = test::random_sdd_m_tensor(rng, m, n);
        std::vector<SparseTensor> lower;
        lower.push_back(test::random_tensor(rng, 2, n, 2 * n, /*positive=*/true));
        if (m == 4) lower.push_back(test::random_tensor(rng, 3, n, 2 * n, /*positive=*/true));
        auto ap = embed_lower_order(a, lower);

        Vec x(n);
        for (auto& v : x) v = val(rng);
        Vec y = x;
        y.push_back(1.0);
        const Vec lhs = contract(ap, y);
        Vec want = contract(a, x);
        for (const auto& b : lower) {
            const Vec bx = contract(b, x);
            for (int i = 0; i < n; ++i) want[i] -= bx[i];
        }
        want.push_back(1.0);
        for (int i = 0; i <= n; ++i)
            EXPECT_NEAR(lhs[i], want[i], 1e-12 * (1.0 + std::abs(want[i])));
    }
}

TEST(Embed, PreservesZTensorProperty) {
    std::mt19937_64 rng(31);
    auto a = test::random_sdd_m_tensor(rng, 3, 3);
    auto b2 = test::random_tensor(rng, 2, 3, 5, /*positive=*/true);
    auto ap = embed_lower_order(a, {b2});
    for (int e = 0; e < ap.nnz(); ++e) {
        auto t = ap.index(e);
        const bool diag = t[1] == t[0] && t[2] == t[0];
        if (!diag) { EXPECT_LE(ap.value(e), 0.0); }
    }
}

TEST(Embed, RejectsBadInputs) {
    auto a = SparseTensor::identity(3, 2);
    EXPECT_THROW(embed_lower_order(a, {make_tensor(2, 2, {{{0, 1}, -1.0}})}), Error);
    EXPECT_THROW(embed_lower_order(a, {SparseTensor::identity(3, 2)}), Error);
    EXPECT_THROW(embed_lower_order(a, {SparseTensor::identity(2, 3)}), Error);
}
