#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "chemolab/hypothesis.hpp"
#include "oracles.hpp"

using namespace chemolab;

namespace {

constexpr double kTol = 1e-12;

ModelParams make(int n, double m, double eta, double alpha = 2.0, double beta = 2.0,
                 Sign sign = Sign::attractive) {
    ModelParams p;
    p.n = n;
    p.m = m;
    p.eta = eta;
    p.alpha = alpha;
    p.beta = beta;
    p.sign = sign;
    return p;
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::ConfigError;
}

}  // namespace

TEST(Params, ValidationNamesTheViolatedInvariant) {
    ModelParams p;
    EXPECT_NO_THROW(validate(p));
    p.n = 2;
    EXPECT_EQ(code_of([&] { validate(p); }), ErrorCode::DimensionTooLow);
    p = ModelParams{};
    p.beta = 0.5;
    EXPECT_EQ(code_of([&] { validate(p); }), ErrorCode::InvalidParams);
    p = ModelParams{};
    p.a = 0.0;
    EXPECT_EQ(code_of([&] { validate(p); }), ErrorCode::InvalidParams);
    EXPECT_NO_THROW(validate_for_dynamics(p));
}

TEST(Params, JsonRoundTrip) {
    ModelParams p = make(5, 1.3, 0.7, 2.5, 1.5, Sign::repulsive);
    p.a = 0.25;
    p.b = 3.0;
    const nlohmann::json j = p;
    EXPECT_EQ(j.at("sign"), "repulsive");
    EXPECT_EQ(j.get<ModelParams>(), p);
}

TEST(SobolevExponent, KnownValues) {
    EXPECT_DOUBLE_EQ(sobolev_exponent(3), 6.0);
    EXPECT_DOUBLE_EQ(sobolev_exponent(4), 4.0);
    EXPECT_DOUBLE_EQ(sobolev_exponent(6), 3.0);
    EXPECT_EQ(code_of([] { sobolev_exponent(2); }), ErrorCode::DimensionTooLow);
}

TEST(Thresholds, DocumentedValues) {
    EXPECT_NEAR(h1_threshold(make(3, 1, 1)), 3.5, kTol);
    EXPECT_NEAR(h1_threshold(make(3, 2, 1)), 2.0, kTol);
    EXPECT_NEAR(h1_threshold(make(3, 1, 2)), 3.5, kTol);
    EXPECT_NEAR(h2_threshold(make(3, 1, 1)), 1.0, kTol);
    EXPECT_NEAR(h2_threshold(make(3, 1, 2)), 3.5, kTol);
    EXPECT_NEAR(h2_threshold(make(3, 2, 1)), 2.0, kTol);
}

TEST(Thresholds, MatchExactRationalOracle) {
    // Exponents on a grid of sixths so the oracle is exact.
    for (int n = 3; n <= 9; ++n)
        for (int m6 = 1; m6 <= 18; ++m6)
            for (int e6 = 1; e6 <= 18; ++e6) {
                const oracle::Rational m(m6, 6), eta(e6, 6);
                const ModelParams p = make(n, m.value(), eta.value());
                EXPECT_NEAR(h1_threshold(p), oracle::h1(n, m, eta).value(), kTol) << n << " " << m6 << " " << e6;
                EXPECT_NEAR(h2_threshold(p), oracle::h2(n, m, eta).value(), kTol) << n << " " << m6 << " " << e6;
            }
}

TEST(Thresholds, RepulsiveThresholdNeverExceedsAttractive) {
    oracle::ParamSampler s(11);
    for (int i = 0; i < 10000; ++i) {
        const ModelParams p = s.draw();
        ASSERT_LE(h2_threshold(p), h1_threshold(p)) << i;
    }
}

TEST(CheckHypothesis, DocumentedExamples) {
    auto r = check_hypothesis(make(3, 1, 1, 2, 2));
    EXPECT_TRUE(r.h1_holds);
    EXPECT_NEAR(r.h1_margin, 0.5, kTol);
    EXPECT_EQ(r.predicted, Prediction::bounded);
    EXPECT_NEAR(r.l, 6.0, kTol);

    r = check_hypothesis(make(3, 1, 1, 1, 1));
    EXPECT_FALSE(r.h1_holds);
    EXPECT_EQ(r.predicted, Prediction::no_guarantee);
    EXPECT_FALSE(r.p_bar_in_scope);

    r = check_hypothesis(make(3, 1, 1, 1, 1, Sign::repulsive));
    EXPECT_TRUE(r.h2_holds);
    EXPECT_EQ(r.predicted, Prediction::bounded);
}

TEST(CheckHypothesis, EqualityIsNoGuarantee) {
    // alpha + beta = 3.5 exactly.
    const auto r = check_hypothesis(make(3, 1, 1, 1.5, 2.0));
    EXPECT_FALSE(r.h1_holds);
    EXPECT_EQ(r.predicted, Prediction::no_guarantee);
}

TEST(CheckHypothesis, SourceFreeModelHasNoGuarantee) {
    ModelParams p = make(3, 1, 1, 3, 3);
    p.a = 0.0;
    p.b = 0.0;
    const auto r = check_hypothesis(p);
    EXPECT_TRUE(r.h1_holds);
    EXPECT_EQ(r.predicted, Prediction::no_guarantee);
}

TEST(CheckHypothesis, H1ImpliesH2AndJsonFields) {
    oracle::ParamSampler s(12);
    for (int i = 0; i < 2000; ++i) {
        const auto r = check_hypothesis(s.draw());
        if (r.h1_holds) ASSERT_TRUE(r.h2_holds);
    }
    const nlohmann::json j = check_hypothesis(make(3, 1, 1));
    for (const char* key : {"l", "h1_threshold", "h2_threshold", "h1_holds", "h2_holds", "p_bar"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
}

TEST(ReducedCondition, GrowthBranchEquivalenceForLinearDiffusion) {
    oracle::ParamSampler s(13);
    int checked = 0;
    for (int i = 0; i < 10000; ++i) {
        ModelParams p = s.draw();
        p.m = 1.0;
        p.eta = p.alpha;
        const double l = sobolev_exponent(p.n);
        const double gap = p.alpha + p.beta - (2 * p.eta * l - p.m * l - 2 * p.eta) / (l - 2);
        if (std::abs(gap) < kTol) continue;
        ASSERT_EQ(growth_branch_holds(p), reduced_linear_condition(p)) << i;
        ++checked;
    }
    EXPECT_GT(checked, 9900);
}

TEST(ReducedCondition, DoesNotImplyFullH1) {
    // alpha < 1 + 2 beta / 3 holds but alpha + beta = 3 < 3.5.
    const ModelParams p = make(3, 1, 1, 1, 2);
    EXPECT_TRUE(reduced_linear_condition(p));
    EXPECT_FALSE(check_hypothesis(p).h1_holds);
}

TEST(PBar, DocumentedExamples) {
    const ModelParams p = make(3, 1, 1, 2, 2);
    const std::array<double, 11> expected{1, 0.5, 0, 0, -3, 0, 3, 3, -3, 0, 0};
    const auto entries = p_bar_entries(p);
    for (std::size_t i = 0; i < entries.size(); ++i) EXPECT_NEAR(entries[i], expected[i], kTol) << i;
    EXPECT_NEAR(p_bar(p), 3.0, kTol);
    EXPECT_NEAR(p_bar(make(3, 1, 1, 3, 2)), 4.0, kTol);
}

TEST(PBar, AtLeastOneAndGuardedByH1) {
    oracle::ParamSampler s(14);
    for (int i = 0; i < 2000; ++i) EXPECT_GE(p_bar_unchecked(s.draw()), 1.0);
    EXPECT_EQ(code_of([] { p_bar(make(3, 1, 1, 1, 1)); }), ErrorCode::H1Violated);
}

TEST(PPrime, DocumentedExamples) {
    EXPECT_NEAR(p_prime(4, 2, 2), 3.5, kTol);
    EXPECT_NEAR(p_prime(10, 1, 1), 5.5, kTol);
    // p + alpha - 1 = beta: the interval is empty.
    EXPECT_EQ(code_of([] { p_prime(2, 1, 2); }), ErrorCode::IntervalViolation);
}

TEST(LambdaTildes, DocumentedExample) {
    const ModelParams p = make(3, 1, 1, 2, 2);
    const auto f = lambda_fractions(4.0, p);
    EXPECT_NEAR(f.numerator[0], 16, kTol);
    EXPECT_NEAR(f.denominator[0], 38, kTol);
    EXPECT_NEAR(f.numerator[1], 14, kTol);
    EXPECT_NEAR(f.denominator[1], 16, kTol);
    EXPECT_NEAR(f.numerator[2], 16, kTol);
    EXPECT_NEAR(f.denominator[2], 28, kTol);
    const auto t = lambda_tildes(4.0, p);
    EXPECT_NEAR(t.lambda0, 16.0 / 38.0, kTol);
    EXPECT_NEAR(t.lambda1, 14.0 / 16.0, kTol);
    EXPECT_NEAR(t.lambda_eta, 16.0 / 28.0, kTol);
    const nlohmann::json j = t;
    EXPECT_TRUE(j.contains("lambdaEta"));
}

TEST(LambdaTildes, ApproachOneFromBelowForLargeP) {
    const ModelParams p = make(3, 1, 1, 2, 2);
    const auto a = lambda_tildes(1e2, p);
    const auto b = lambda_tildes(1e4, p);
    EXPECT_LT(a.lambda0, b.lambda0);
    EXPECT_LT(a.lambda1, b.lambda1);
    EXPECT_LT(a.lambda_eta, b.lambda_eta);
    EXPECT_LT(b.lambda0, 1.0);
    EXPECT_GT(b.lambda0, 0.999);
}

TEST(LambdaTildes, InsideUnitIntervalAboveCriticalExponent) {
    oracle::ParamSampler s(15);
    int tested = 0;
    for (int i = 0; i < 20000 && tested < 5000; ++i) {
        const ModelParams p = s.draw();
        if (!check_hypothesis(p).h1_holds) continue;
        const double pe = p_bar(p) + s.uniform(1e-9, 100.0);
        const auto f = lambda_fractions(pe, p);
        for (int c = 0; c < 3; ++c) ASSERT_GT(f.denominator[c], 0.0) << i;
        EXPECT_NO_THROW(lambda_tildes(pe, p)) << i;
        ++tested;
    }
    EXPECT_EQ(tested, 5000);
}

TEST(LambdaTildes, RejectsExponentsBelowTheRange) {
    EXPECT_EQ(code_of([] { lambda_tildes(0.1, make(3, 1, 1, 0.2, 1.0)); }), ErrorCode::RangeViolation);
}

TEST(GagliardoNirenberg, DocumentedExamples) {
    auto g = gn_exponents(2, 1, 6);
    EXPECT_NEAR(g.lambda, 0.6, kTol);
    EXPECT_NEAR(g.gamma, 2.0, kTol);
    g = gn_exponents(3, 2, 6);
    EXPECT_NEAR(g.lambda, 0.5, kTol);
    EXPECT_NEAR(g.gamma, 6.0, kTol);
    EXPECT_EQ(code_of([] { gn_exponents(2, 2, 6); }), ErrorCode::InadmissibleExponents);
    EXPECT_EQ(code_of([] { gn_exponents(7, 2, 6); }), ErrorCode::InadmissibleExponents);
}

TEST(GagliardoNirenberg, StrictSideConditionIsExactlyPositiveSlack) {
    oracle::ParamSampler s(16);
    for (int i = 0; i < 20000; ++i) {
        const double l = sobolev_exponent(std::uniform_int_distribution<int>(3, 10)(s.rng));
        const double r = s.uniform(1.0, l - 1e-6);
        const double q = s.uniform(r, l);
        if (!(r < q)) continue;
        const double lambda = (1 / r - 1 / q) / (1 / r - 1 / l);
        const double slack = 2 - lambda * q;
        const double side = 2 / r + 1 - 2 / l - q / r;
        if (std::abs(slack) < 1e-9 || std::abs(side) < 1e-9) continue;
        ASSERT_EQ(slack > 0, side > 0) << "q=" << q << " r=" << r << " l=" << l;
        if (slack > 0) {
            const auto g = gn_exponents(q, r, l);
            ASSERT_GT(g.lambda, 0.0);
            ASSERT_LT(g.lambda, 1.0);
            ASSERT_GT(g.gamma, 0.0);
        }
    }
}

TEST(GagliardoNirenberg, LooseSideConditionStillNeedsPositiveSlack) {
    // r = 1.5, l = 6: strict admits q < 3, loose admits q < 4, but 2 - lambda q > 0
    // again forces q < 3.
    EXPECT_NO_THROW(gn_exponents(2.9, 1.5, 6.0));
    EXPECT_NO_THROW(gn_exponents(2.9, 1.5, 6.0, GNAdmissibility::loose));
    EXPECT_EQ(code_of([] { gn_exponents(3.5, 1.5, 6.0); }), ErrorCode::InadmissibleExponents);
    EXPECT_EQ(code_of([] { gn_exponents(3.5, 1.5, 6.0, GNAdmissibility::loose); }),
              ErrorCode::InadmissibleExponents);
}

TEST(GagliardoNirenberg, GammaContinuousInQ) {
    const double r = 1.5, l = 6.0;
    double prev = gn_exponents(1.6, r, l).gamma;
    // gamma grows like 1/(3 - q) towards the admissibility edge, so compare
    // relative steps.
    for (double q = 1.601; q < 2.9; q += 0.001) {
        const double g = gn_exponents(q, r, l).gamma;
        ASSERT_LT(std::abs(g - prev), 0.05 * std::abs(prev)) << q;
        prev = g;
    }
}

TEST(InterpolationA1, DocumentedExamples) {
    EXPECT_NEAR(interpolation_a1(3.5, 2, 5), 2.0 / 7.0, kTol);
    EXPECT_EQ(interpolation_a1(2, 2, 5), 1.0);
    EXPECT_EQ(interpolation_a1(5, 2, 5), 0.0);
    EXPECT_EQ(code_of([] { interpolation_a1(1, 2, 5); }), ErrorCode::OrderingViolation);
    EXPECT_EQ(code_of([] { interpolation_a1(2, 2, 2); }), ErrorCode::OrderingViolation);
}

TEST(DissipationC1, DocumentedExamples) {
    EXPECT_NEAR(dissipation_c1(2, 1), 1.0, kTol);
    EXPECT_EQ(dissipation_c1(1, 0.7), 0.0);
    EXPECT_NEAR(dissipation_c1(4, 1), 1.5, kTol);
}

TEST(MoserTable, FirstRowOfExampleFamily) {
    const auto rows = moser_table(make(3, 1, 1, 2, 2), 1);
    ASSERT_EQ(rows.size(), 1u);
    const auto& r = rows[0];
    EXPECT_NEAR(r.p_k, 5.0, kTol);
    EXPECT_NEAR(r.q1_k, 2.4, kTol);
    EXPECT_NEAR(r.r_k, 1.6, kTol);
    // lambda from its definition with q = 2.4, r = 1.6, l = 6.
    const double lambda = (1 / 1.6 - 1 / 2.4) / (1 / 1.6 - 1 / 6.0);
    EXPECT_NEAR(r.lambda1_k, lambda, kTol);
    EXPECT_NEAR(r.mu1_k, 2 * (1 - lambda) * 2.4 / (2 - lambda * 2.4) / 1.6, kTol);
    EXPECT_LE(r.mu1_k, 2.0);
}

TEST(MoserTable, MuBoundedAndNondecreasing) {
    const auto rows = moser_table(make(3, 1, 1, 2, 2), 40);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        EXPECT_LE(rows[k].mu1_k, 2.0);
        EXPECT_LE(rows[k].muEta_k, 2.0);
        EXPECT_LE(rows[k].mu0_k, 2.0);
        if (k > 0) {
            EXPECT_GE(rows[k].mu1_k, rows[k - 1].mu1_k - kTol);
            EXPECT_GE(rows[k].muEta_k, rows[k - 1].muEta_k - kTol);
            EXPECT_GE(rows[k].mu0_k, rows[k - 1].mu0_k - kTol);
        }
    }
    EXPECT_LT(std::abs(rows.back().mu1_k - 2.0), 0.2);
    EXPECT_LT(std::abs(rows.back().muEta_k - 2.0), 0.2);
    EXPECT_LT(std::abs(rows.back().mu0_k - 2.0), 0.2);
}

TEST(MoserTable, ExponentLimits) {
    // With p_k = 2^k + p_bar the q's tend to 2 and r_k to 1, so lambda tends to
    // (1 - 1/2)/(1 - 1/l) = l/(2(l-1)).
    const auto rows = moser_table(make(3, 1, 1, 2, 2), 40);
    const auto& last = rows.back();
    EXPECT_NEAR(last.q1_k, 2.0, 1e-9);
    EXPECT_NEAR(last.qEta_k, 2.0, 1e-9);
    EXPECT_NEAR(last.q0_k, 2.0, 1e-9);
    EXPECT_NEAR(last.r_k, 1.0, 1e-9);
    EXPECT_NEAR(last.lambda1_k, 6.0 / 10.0, 1e-9);
}

TEST(MoserTable, MuBoundHoldsOnRandomH1Draws) {
    oracle::ParamSampler s(17);
    int tested = 0;
    for (int i = 0; i < 5000; ++i) {
        const ModelParams p = s.draw();
        if (!check_hypothesis(p).h1_holds) continue;
        ASSERT_NO_THROW(moser_table(p, 40)) << nlohmann::json(p).dump();
        ++tested;
    }
    EXPECT_GT(tested, 500);
}

TEST(MoserTable, ShiftedConventionIsInadmissibleAtFirstStep) {
    // p_0 + 1 = p_1, so r_1 = 2(p_0 + 1)/(m + p_1 - 1) equals q0_1 and r < q fails.
    EXPECT_EQ(code_of([] { moser_table(make(3, 1, 1, 2, 2), 3, MoserConvention::shifted); }),
              ErrorCode::InadmissibleExponents);
    EXPECT_EQ(code_of([] { moser_table(make(3, 1, 1, 1, 1), 3); }), ErrorCode::H1Violated);
}

TEST(RecursiveBound, DocumentedExamples) {
    EXPECT_NEAR(recursive_bound(1, 1, 7).value, 1.0, kTol);
    EXPECT_NEAR(recursive_bound(2, 1, 3).value, 8.0, 1e-9);
    EXPECT_NEAR(recursive_bound(2, 2, 3).value, 2048.0, 1e-9);
    const auto big = recursive_bound(2, 10, 20);
    EXPECT_TRUE(big.overflow);
    EXPECT_TRUE(std::isinf(big.value));
}

TEST(RecursiveBound, UnrolledFormDominatesRecursion) {
    // M_k = L M_{k-1}^2 exactly: the stated bound fails at k = 2, the unrolled one is attained.
    const double L = 2.0;
    std::vector<double> M{1.0};
    std::vector<double> theta;
    for (int k = 1; k <= 6; ++k) {
        M.push_back(L * M.back() * M.back());
        theta.push_back(2.0);
        EXPECT_NEAR(M.back(), unrolled_recursive_bound(L, 1.0, k).value, 1e-9 * M.back());
    }
    const auto check = check_recursive_sequence(M, theta, L);
    EXPECT_TRUE(check.recursion_holds);
    EXPECT_FALSE(check.stays_below_bound);
    EXPECT_EQ(check.first_bound_violation, 2);
}

TEST(RecursiveBound, SequencesWithSmallExponentsStayBelow) {
    oracle::ParamSampler s(18);
    for (int trial = 0; trial < 200; ++trial) {
        const double L = s.uniform(0.5, 1.0);
        std::vector<double> M{s.uniform(1.0, 3.0)};
        std::vector<double> theta;
        for (int k = 1; k <= 8; ++k) {
            const double th = s.uniform(0.5, 2.0);
            const double next = L * std::pow(M.back(), th) * s.uniform(0.5, 1.0);
            if (next < 1.0) break;
            theta.push_back(th);
            M.push_back(next);
        }
        const auto check = check_recursive_sequence(M, theta, L);
        EXPECT_TRUE(check.recursion_holds);
        EXPECT_TRUE(check.stays_below_bound);
    }
}
