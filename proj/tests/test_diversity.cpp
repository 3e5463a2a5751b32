// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "harq_noma/diversity.hpp"

using namespace harq_noma;

namespace {

constexpr HarqScheme I = HarqScheme::TypeI;
constexpr HarqScheme CC = HarqScheme::ChaseCombining;
constexpr HarqScheme IR = HarqScheme::IncrementalRedundancy;

SystemConfig two_user(double c, int k = 4, double r2 = 1.0, Strategy strategy = Strategy::Simple) {
    SystemConfig cfg;
    cfg.num_users = 2;
    cfg.max_rounds = k;
    cfg.rates = {1.0, r2};
    cfg.mean_gains = {2.0, 1.0};
    cfg.p1_watts = 1.0;
    cfg.ratios = {c};
    cfg.strategy = strategy;
    return validate_config(cfg);
}

SystemConfig fig5_config() {
    SystemConfig cfg;
    cfg.num_users = 4;
    cfg.max_rounds = 3;
    cfg.rates = {2.0, 2.0, 2.0, 2.0};
    cfg.mean_gains = {2.0, 1.0, 0.5, 1.0 / 3.0};
    cfg.p1_watts = 1.0;
    cfg.ratios = {2.0, 1.4, 4.0};
    return validate_config(cfg);
}

} // namespace

TEST(Pairwise, ChaseStaircase) {
    EXPECT_EQ(pairwise_diversity(CC, 4, 1.0, 0.4), 2);
    EXPECT_EQ(pairwise_diversity(CC, 4, 1.0, 0.8), 3);
    EXPECT_EQ(pairwise_diversity(CC, 4, 1.0, 1.2), 4);
}

TEST(Pairwise, TypeIZeroWhenRatioTooSmall) {
    EXPECT_EQ(pairwise_diversity(I, 4, 1.0, 1.0), 0);
    EXPECT_EQ(pairwise_diversity(I, 4, 1.0, 0.8), 0);
    EXPECT_EQ(pairwise_diversity(I, 4, 1.0, 1.2), 4);
}

TEST(Pairwise, IncrementalRedundancyExample) {
    // floor(1 / log2(1.4)) = floor(2.06) = 2
    EXPECT_EQ(pairwise_diversity(IR, 4, 1.0, 0.4), 2);
}

TEST(Pairwise, UnboundedRatioIsFullDiversity) {
    for (HarqScheme s : kAllSchemes) EXPECT_EQ(pairwise_diversity(s, 5, 3.0, PowerRatio::unbounded()), 5);
}

TEST(Pairwise, IntegerBoundaryFallsOnLowSide) {
    // (2^R - 1)/c = 2 exactly: CC loses two orders.
    EXPECT_EQ(pairwise_diversity(CC, 4, 1.0, 0.5), 2);
    // 2^R - 1 = 3 computed from a non-integer rate, c = 1
    EXPECT_EQ(pairwise_diversity(CC, 4, 2.0, 1.0), 1);
    EXPECT_EQ(pairwise_diversity(CC, 4, std::log2(1.0 + 0.3 * 3.0), 0.3), 1);
    // R = 2 log2(1 + c) exactly: IR loses two orders.
    EXPECT_EQ(pairwise_diversity(IR, 4, 2.0 * std::log2(1.7), 0.7), 2);
}

TEST(Pairwise, RejectsBadInputs) {
    EXPECT_THROW(pairwise_diversity(CC, 0, 1.0, 0.4), std::invalid_argument);
    EXPECT_THROW(pairwise_diversity(CC, 4, -1.0, 0.4), std::invalid_argument);
    EXPECT_THROW(pairwise_diversity(CC, 4, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(pairwise_diversity(CC, 4, 1.0, -2.0), std::invalid_argument);
}

TEST(DiversityProperty, SchemeOrderingOnGrid) {
    int violations = 0;
    for (int k = 1; k <= 6; ++k)
        for (int ri = 1; ri <= 40; ++ri)
            for (int ci = 1; ci <= 40; ++ci) {
                const double r = ri / 10.0;
                const double c = ci / 10.0;
                const int di = pairwise_diversity(I, k, r, c);
                const int dcc = pairwise_diversity(CC, k, r, c);
                const int dir = pairwise_diversity(IR, k, r, c);
                if (!(di <= dcc && dcc <= dir)) ++violations;
                if (di < 0 || dir > k) ++violations;
            }
    EXPECT_EQ(violations, 0);
}

TEST(DiversityProperty, NonIncreasingStepInRate) {
    for (HarqScheme s : kAllSchemes)
        for (double c : {0.2, 0.5, 1.0, 1.7, 3.0}) {
            int prev = pairwise_diversity(s, 5, 0.0, c);
            EXPECT_EQ(prev, 5);
            int steps = 0;
            for (int i = 1; i <= 800; ++i) {
                const int d = pairwise_diversity(s, 5, i * 0.01, c);
                EXPECT_LE(d, prev);
                steps += d != prev;
                prev = d;
            }
            EXPECT_LE(steps, 5);
        }
}

TEST(DiversityProperty, FullDiversityCondition) {
    for (int k = 1; k <= 6; ++k)
        for (int ri = 1; ri <= 40; ++ri)
            for (int ci = 1; ci <= 40; ++ci) {
                const double r = ri / 10.0 + 0.0123;  // keep off exact boundaries
                const double c = ci / 10.0;
                const bool full = r < std::log2(1.0 + c);
                for (HarqScheme s : kAllSchemes) ASSERT_EQ(pairwise_diversity(s, k, r, c) == k, full);
            }
}

TEST(UserDiversity, Fig5Table) {
    const SystemConfig cfg = fig5_config();
    const DiversityReport ti = user_diversity(cfg, I);
    const DiversityReport cc = user_diversity(cfg, CC);
    const DiversityReport ir = user_diversity(cfg, IR);
    for (int u = 1; u <= 3; ++u) {
        EXPECT_EQ(ti.user(u), 0);
        EXPECT_EQ(cc.user(u), 1);
        EXPECT_EQ(ir.user(u), 2);
    }
    EXPECT_EQ(ti.user(4), 3);
    EXPECT_EQ(cc.user(4), 3);
    EXPECT_EQ(ir.user(4), 3);
    EXPECT_EQ(ti.pair(3, 3), 0);
    EXPECT_EQ(ti.pair(1, 2), 0);  // floor(3/2) = 1
    EXPECT_EQ(cc.pair(1, 2), 2);
    EXPECT_EQ(cc.pair(2, 3), 1);
    EXPECT_EQ(cc.pair(1, 1), 3);
    EXPECT_EQ(cc.pair(2, 1), -1);
}

TEST(UserDiversity, ReportInvariants) {
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> users(1, 6);
    std::uniform_int_distribution<int> rounds(1, 6);
    std::uniform_real_distribution<double> ratio(0.1, 5.0);
    std::uniform_real_distribution<double> rate(0.1, 4.0);
    for (int t = 0; t < 2000; ++t) {
        SystemConfig cfg;
        cfg.num_users = users(gen);
        cfg.max_rounds = rounds(gen);
        for (int i = 0; i < cfg.num_users; ++i) {
            cfg.rates.push_back(rate(gen));
            cfg.mean_gains.push_back(1.0 / (i + 1));
            if (i > 0) cfg.ratios.push_back(ratio(gen));
        }
        cfg.p1_watts = 1.0;
        cfg = validate_config(cfg);
        for (HarqScheme s : kAllSchemes) {
            const DiversityReport r = user_diversity(cfg, s);
            const int m = cfg.num_users;
            for (int i = 1; i <= m; ++i) {
                int best = cfg.max_rounds;
                for (int j = i; j <= m; ++j) best = std::min(best, r.pair(i, j));
                ASSERT_EQ(r.user(i), best);
                ASSERT_GE(r.user(i), 0);
                ASSERT_LE(r.user(i), cfg.max_rounds);
                if (i >= 2) {
                    ASSERT_LE(r.user(i - 1), r.user(i));
                }
            }
            if (m >= 2) {
                ASSERT_EQ(r.user(1), r.user(2));
            }
            // uniform power scaling leaves every order unchanged
            const DiversityReport scaled = user_diversity(with_reference_power(cfg, 1234.5), s);
            ASSERT_EQ(scaled.per_user, r.per_user);
            ASSERT_EQ(scaled.pairwise, r.pairwise);
        }
    }
}

TEST(Conditional, Examples) {
    EXPECT_EQ(conditional_diversity_d2ell(CC, 4, 2, 1.0, 0.4), 2);
    EXPECT_EQ(conditional_diversity_d2ell(I, 3, 1, 1.0, 1.5), 3);
    for (HarqScheme s : kAllSchemes)
        for (double c : {0.3, 0.9, 2.5}) EXPECT_EQ(conditional_diversity_d2ell(s, 4, 4, 1.3, c), pairwise_diversity(s, 4, 1.3, c));
    EXPECT_THROW(conditional_diversity_d2ell(CC, 4, 0, 1.0, 0.4), std::out_of_range);
    EXPECT_THROW(conditional_diversity_d2ell(CC, 4, 5, 1.0, 0.4), std::out_of_range);
}

TEST(PowerEfficientDiversity, MatchesSimpleStrategy) {
    for (int k = 1; k <= 6; ++k)
        for (double c : {0.1, 0.25, 0.4, 0.5, 0.8, 1.0, 1.2, 3.0})
            for (double r2 : {0.3, 1.0, 1.5, 2.0, 3.2})
                for (HarqScheme s : kAllSchemes) {
                    const SystemConfig cfg = two_user(c, k, r2, Strategy::PowerEfficient);
                    const DiversityReport pe = power_efficient_diversity(cfg, s);
                    const DiversityReport simple = user_diversity(cfg, s);
                    ASSERT_EQ(pe.per_user, simple.per_user);
                    ASSERT_EQ(pe.strategy, Strategy::PowerEfficient);
                    ASSERT_EQ(pe.conditional.size(), static_cast<std::size_t>(k));
                }
}

TEST(PowerEfficientDiversity, ChaseExample) {
    const DiversityReport r = power_efficient_diversity(two_user(0.4, 4, 1.0, Strategy::PowerEfficient), CC);
    EXPECT_EQ(r.user(2), 2);
    EXPECT_EQ(r.user(1), 2);
    EXPECT_EQ(r.conditional, (std::vector<int>{3, 2, 2, 2}));
}

TEST(PowerEfficientDiversity, NeedsTwoUsers) {
    EXPECT_THROW(power_efficient_diversity(fig5_config(), CC), std::invalid_argument);
}

TEST(Empirical, Examples) {
    EXPECT_NEAR(empirical_diversity(2e-2, 2e-5, 10.0), 3.0, 1e-12);
    EXPECT_EQ(empirical_diversity(0.3, 0.3, 5.0), 0.0);
    const auto p = [](double watts) { return 0.7 * std::pow(watts, -2.0); };
    EXPECT_NEAR(empirical_diversity(p(dbw_to_watts(3.0)), p(dbw_to_watts(9.5)), 6.5), 2.0, 1e-12);
}

TEST(Empirical, Errors) {
    EXPECT_THROW(empirical_diversity(0.0, 1e-3, 10.0), std::domain_error);
    EXPECT_THROW(empirical_diversity(1e-3, -1.0, 10.0), std::domain_error);
    EXPECT_THROW(empirical_diversity(1e-3, 1e-4, 0.0), std::invalid_argument);
}

TEST(Union, Examples) {
    EXPECT_EQ(union_diversity({4, 2, 3}), 2);
    EXPECT_EQ(union_diversity({5}), 5);
    EXPECT_EQ(union_diversity({3, 4}), 3);
    EXPECT_THROW(union_diversity(std::span<const int>()), std::invalid_argument);
    EXPECT_THROW(union_diversity({2, -1}), std::invalid_argument);
}
