#include "usdsilo/termstructure.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace usdsilo {
namespace {

TEST(DayCountTest, RatioOfIdenticalPeriodsIs365Over360) {
    for (int days : {1, 7, 91, 182, 365})
        EXPECT_NEAR(accrualFromDays(DayCount::Act360, days) /
                        accrualFromDays(DayCount::Act365Fixed, days),
                    365.0 / 360.0, 1e-12);
    EXPECT_NEAR(accrualFromYears(DayCount::Act360, 0.25) /
                    accrualFromYears(DayCount::Act365Fixed, 0.25),
                365.0 / 360.0, 1e-12);
}

TEST(TenorStructureTest, RegularGrid) {
    const auto tenor = TenorStructure::regular(0.0, 4, 0.25, DayCount::Act365Fixed,
                                               DayCount::Act360);
    EXPECT_EQ(tenor.size(), 4);
    EXPECT_DOUBLE_EQ(tenor.time(0), 0.0);
    EXPECT_DOUBLE_EQ(tenor.time(4), 1.0);
    EXPECT_DOUBLE_EQ(tenor.fixedAccrual(1), 0.25);
    EXPECT_DOUBLE_EQ(tenor.floatAccrual(1), 0.25 * 365.0 / 360.0);
    EXPECT_DOUBLE_EQ(tenor.floatAccrualUsd(1), tenor.floatAccrual(1));
}

TEST(TenorStructureTest, Validation) {
    EXPECT_THROW(TenorStructure(0.0, {1.0, 0.5}, {1.0, 1.0}, {1.0, 1.0}),
                 std::invalid_argument);
    EXPECT_THROW(TenorStructure(1.0, {0.5}, {1.0}, {1.0}), std::invalid_argument);
    EXPECT_THROW(TenorStructure(0.0, {1.0}, {0.0}, {1.0}), std::invalid_argument);
    EXPECT_THROW(TenorStructure(0.0, {1.0}, {1.0}, {1.0, 1.0}), std::invalid_argument);
    // a fixed/float accrual ratio of 0.8 is no day-count convention
    EXPECT_THROW(TenorStructure(0.0, {1.0}, {0.8}, {1.0}), std::invalid_argument);
    EXPECT_NO_THROW(TenorStructure(0.0, {1.0}, {360.0 / 365.0}, {1.0}));
}

TEST(DiscountCurveTest, AnchorAndPillarsExact) {
    const DiscountCurve curve({1.0, 2.0}, {0.98, 0.96});
    EXPECT_DOUBLE_EQ(curve.df(0.0), 1.0);
    EXPECT_EQ(curve.df(1.0), 0.98);
    EXPECT_EQ(curve.df(2.0), 0.96);
}

TEST(DiscountCurveTest, LogLinearMidpoint) {
    const DiscountCurve curve({1.0, 2.0}, {0.98, 0.96});
    // hand evaluation of the rule: exp((ln 0.98 + ln 0.96) / 2)
    const double expected = std::exp(0.5 * (std::log(0.98) + std::log(0.96)));
    EXPECT_DOUBLE_EQ(curve.df(1.5), expected);
    EXPECT_NEAR(curve.df(1.5), 0.969948, 1e-6);
}

TEST(DiscountCurveTest, InterpolatesFromAnchor) {
    const DiscountCurve curve({2.0}, {0.96});
    EXPECT_DOUBLE_EQ(curve.df(1.0), std::exp(0.5 * std::log(0.96)));
}

TEST(DiscountCurveTest, ExtrapolationOptIn) {
    const DiscountCurve curve({1.0, 2.0}, {0.98, 0.96});
    EXPECT_THROW(curve.df(2.5), ExtrapolationError);
    EXPECT_THROW(curve.df(-0.1), ExtrapolationError);
    const DiscountCurve open = curve.withExtrapolation(true);
    // flat continuously-compounded forward from the last segment
    const double fwd = -(std::log(0.96) - std::log(0.98)) / 1.0;
    EXPECT_DOUBLE_EQ(open.df(2.5), 0.96 * std::exp(-fwd * 0.5));
    EXPECT_NEAR(open.df(2.0 + 1e-12), 0.96, 1e-10);  // continuous at the seam
}

TEST(DiscountCurveTest, Validation) {
    EXPECT_THROW(DiscountCurve({1.0, 2.0}, {0.98}), std::invalid_argument);
    EXPECT_THROW(DiscountCurve({2.0, 1.0}, {0.98, 0.96}), std::invalid_argument);
    EXPECT_THROW(DiscountCurve({1.0}, {-0.5}), std::invalid_argument);
    EXPECT_THROW(DiscountCurve({1.0}, {0.0}), std::invalid_argument);
    EXPECT_THROW(DiscountCurve({0.0, 1.0}, {0.99, 0.98}), std::invalid_argument);
    // explicit anchor pillar (0, 1) is accepted
    const DiscountCurve c({0.0, 1.0}, {1.0, 0.98});
    EXPECT_EQ(c.df(1.0), 0.98);
    // non-monotone discount factors are legal: the effective forward rate
    // can be negative when the basis is wide
    EXPECT_NO_THROW(DiscountCurve({1.0, 2.0}, {0.98, 0.99}));
}

TEST(DiscountCurveTest, ForwardDf) {
    const DiscountCurve curve({1.0, 2.0}, {0.98, 0.96});
    EXPECT_DOUBLE_EQ(curve.forwardDf(1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(curve.forwardDf(1.0, 2.0), 0.96 / 0.98);
    EXPECT_NEAR(curve.forwardDf(1.0, 2.0), 0.979592, 1e-6);
    EXPECT_THROW(curve.forwardDf(2.0, 1.0), std::invalid_argument);
}

TEST(DiscountCurveTest, ForwardDfTelescopes) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> rate(-0.02, 0.08);
    std::vector<double> times;
    std::vector<double> dfs;
    double t = 0.0;
    double logDf = 0.0;
    for (int i = 0; i < 30; ++i) {
        t += 0.1 + 0.4 * std::generate_canonical<double, 53>(gen);
        logDf -= rate(gen) * 0.3;
        times.push_back(t);
        dfs.push_back(std::exp(logDf));
    }
    const DiscountCurve curve(times, dfs);
    double product = 1.0;
    for (std::size_t i = 1; i < times.size(); ++i)
        product *= curve.forwardDf(times[i - 1], times[i]);
    EXPECT_NEAR(product, curve.df(times.back()) / curve.df(times.front()), 1e-14);
}

TEST(DiscountCurveTest, InterpolationIsContinuous) {
    const DiscountCurve curve({1.0, 2.0, 3.5}, {0.98, 0.99, 0.90});
    for (double pillar : {1.0, 2.0, 3.5}) {
        EXPECT_NEAR(curve.df(pillar - 1e-10), curve.df(pillar), 1e-9);
        if (pillar < 3.5) EXPECT_NEAR(curve.df(pillar + 1e-10), curve.df(pillar), 1e-9);
    }
}

TEST(DiscountCurveTest, ValueSemantics) {
    const DiscountCurve a({1.0}, {0.98});
    DiscountCurve b = a;
    b = b.withExtrapolation(true);
    EXPECT_FALSE(a.extrapolationAllowed());
    EXPECT_TRUE(b.extrapolationAllowed());
}

TEST(ForwardCurveTest, ContiguityAndAlignment) {
    const auto tenor = TenorStructure::regular(0.0, 3, 0.5);
    const auto fc = ForwardCurve::onTenor(ForwardCurve::Kind::LiborForward, tenor,
                                          {0.01, 0.02, 0.03});
    EXPECT_TRUE(fc.alignedWith(tenor));
    EXPECT_DOUBLE_EQ(fc.value(1), 0.02);
    EXPECT_THROW(ForwardCurve(ForwardCurve::Kind::LiborForward,
                              {{0.0, 0.5}, {0.6, 1.0}}, {0.01, 0.02}),
                 std::invalid_argument);
    EXPECT_THROW(ForwardCurve(ForwardCurve::Kind::LiborForward, {{0.5, 0.5}}, {0.01}),
                 std::invalid_argument);
}

TEST(ForwardCurveTest, NegativeSpreadTriggersWarningHook) {
    int warnings = 0;
    auto previous = warnHandler();
    warnHandler() = [&](const std::string&) { ++warnings; };
    const auto tenor = TenorStructure::regular(0.0, 2, 0.5);
    ForwardCurve::onTenor(ForwardCurve::Kind::LiborOisSpread, tenor, {0.001, -0.002});
    warnHandler() = previous;
    EXPECT_EQ(warnings, 1);
}

TEST(CompoundedOisRateTest, Examples) {
    EXPECT_DOUBLE_EQ(compoundedOisPeriodRate(0.0, 0.25), 0.0);
    EXPECT_DOUBLE_EQ(compoundedOisPeriodRate(0.0025, 0.25), std::expm1(0.0025) / 0.25);
    EXPECT_NEAR(compoundedOisPeriodRate(0.0025, 0.25), 0.010013, 1e-6);
    EXPECT_DOUBLE_EQ(compoundedOisPeriodRate(0.02, 0.5), std::expm1(0.02) / 0.5);
    EXPECT_NEAR(compoundedOisPeriodRate(0.02, 0.5), 0.040402, 1e-6);
    EXPECT_THROW(compoundedOisPeriodRate(0.01, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace usdsilo
