#include "usdsilo/bootstrap.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "usdsilo/pricing.hpp"

namespace usdsilo {
namespace {

// Synthetic world used by the round-trip oracles: known smooth curves from
// which par quotes are computed through the pricing module and fed back in.
struct World {
    TenorStructure tenor;
    CurveSet cs;
    double ratio;
};

World makeWorld(int periods, double spacing, bool mixedDayCounts = false) {
    const DayCount fixedDc = mixedDayCounts ? DayCount::Act360 : DayCount::Act365Fixed;
    TenorStructure tenor =
        TenorStructure::regular(0.0, periods, spacing, fixedDc, DayCount::Act365Fixed,
                                DayCount::Act365Fixed);
    DiscountCurve dbar = DiscountCurve::flat(0.05, tenor.pillars());
    DiscountCurve usdOis = DiscountCurve::flat(0.03, tenor.pillars());
    std::vector<double> lois(static_cast<std::size_t>(periods), 0.002);
    std::vector<double> libor(static_cast<std::size_t>(periods));
    std::vector<double> ois(static_cast<std::size_t>(periods));
    for (int m = 1; m <= periods; ++m) {
        const double eff = (dbar.df(tenor.time(m - 1)) / dbar.df(tenor.time(m)) - 1.0) /
                           tenor.floatAccrual(m);
        libor[m - 1] = eff + 0.003;
        ois[m - 1] = eff - 0.001;
    }
    CurveSet cs{"JPY",
                dbar,
                ForwardCurve::onTenor(ForwardCurve::Kind::LiborForward, tenor, libor),
                ForwardCurve::onTenor(ForwardCurve::Kind::CompoundedOisForward, tenor, ois),
                UsdDomesticCurves{usdOis, ForwardCurve::onTenor(
                                              ForwardCurve::Kind::LiborOisSpread, tenor, lois)},
                0.0125};
    const double ratio = tenor.fixedAccrual(1) / tenor.floatAccrual(1);
    return {std::move(tenor), std::move(cs), ratio};
}

// --------------------------------------------------------------------------
// USD OIS bootstrap
// --------------------------------------------------------------------------

TEST(UsdOisBootstrapTest, ZeroRatesGiveUnitDiscounts) {
    const auto tenor = TenorStructure::regular(0.0, 6, 0.5);
    const auto curve = usdOisFromParRates(tenor, std::vector<double>(6, 0.0));
    for (int m = 1; m <= 6; ++m) EXPECT_DOUBLE_EQ(curve.df(tenor.time(m)), 1.0);
}

TEST(UsdOisBootstrapTest, SinglePeriodAnnuity) {
    const auto tenor = TenorStructure::regular(0.0, 1, 1.0);
    const auto curve = usdOisFromParRates(tenor, {0.05});
    EXPECT_DOUBLE_EQ(curve.df(1.0), 1.0 / 1.05);
    EXPECT_NEAR(curve.df(1.0), 0.952381, 1e-6);
}

TEST(UsdOisBootstrapTest, RoundTripRecoversCurve) {
    const auto tenor = TenorStructure::regular(0.0, 40, 0.25);
    const DiscountCurve truth = DiscountCurve::flat(0.03, tenor.pillars());
    // oracle: par rates from the telescoped floating leg, S_M = (1 - D_M) / annuity
    std::vector<double> rates(40);
    double annuitySum = 0.0;
    for (int m = 1; m <= 40; ++m) {
        annuitySum += tenor.floatAccrual(m) * truth.df(tenor.time(m));
        rates[m - 1] = (1.0 - truth.df(tenor.time(m))) / annuitySum;
    }
    const auto rebuilt = usdOisFromParRates(tenor, rates);
    for (int m = 1; m <= 40; ++m)
        EXPECT_NEAR(rebuilt.df(tenor.time(m)), truth.df(tenor.time(m)), 1e-12);
}

TEST(UsdOisBootstrapTest, Errors) {
    const auto tenor = TenorStructure::regular(0.0, 2, 1.0);
    EXPECT_THROW(usdOisFromParRates(tenor, {0.01}), QuoteGapError);
    try {
        usdOisFromParRates(tenor, {0.9, 8.0});  // second pillar goes negative
        FAIL() << "expected NonPositiveDiscountError";
    } catch (const NonPositiveDiscountError& e) {
        EXPECT_EQ(e.pillarIndex, 2);
    }
}

// --------------------------------------------------------------------------
// LIBOR-route effective discount bootstrap
// --------------------------------------------------------------------------

TEST(LiborBootstrapTest, AllZeroRatesFreezeTheCurve) {
    const auto tenor = TenorStructure::regular(0.0, 8, 0.25);
    std::vector<double> zeros(8, 0.0);
    UsdDomesticCurves usd{
        DiscountCurve::flat(0.0, tenor.pillars()),
        ForwardCurve::onTenor(ForwardCurve::Kind::LiborOisSpread, tenor, zeros)};
    SiloQuotesLibor quotes{tenor, zeros, zeros, 1.0};
    const auto dbar = bootstrapEffectiveDiscountLibor(quotes, usd);
    for (int m = 1; m <= 8; ++m) EXPECT_DOUBLE_EQ(dbar.df(tenor.time(m)), 1.0);
}

TEST(LiborBootstrapTest, OnePeriodHandCase) {
    // one period, Delta = delta = 1, S1 + B1 = 0.06, USD term with
    // deltaUsd = 1, forward df ratio 0.97, spread 0.002:
    // Dbar(0,T1) = (1 + 0.97 * 0.002) / 1.06
    const TenorStructure tenor(0.0, {1.0}, {1.0}, {1.0});
    // a USD curve with df(1) = 0.97 makes the one-period forward df 0.97
    UsdDomesticCurves usd{
        DiscountCurve({1.0}, {0.97}),
        ForwardCurve::onTenor(ForwardCurve::Kind::LiborOisSpread, tenor, {0.002})};
    SiloQuotesLibor quotes{tenor, {0.04}, {0.02}, 1.0};
    const auto dbar = bootstrapEffectiveDiscountLibor(quotes, usd);
    const double expected = (1.0 + 0.97 * 0.002) / 1.06;
    EXPECT_DOUBLE_EQ(dbar.df(1.0), expected);
    EXPECT_NEAR(dbar.df(1.0), 0.945226, 1e-6);
}

TEST(LiborBootstrapTest, RoundTripAgainstPricingModule) {
    for (bool mixed : {false, true}) {
        World world = makeWorld(40, 0.25, mixed);
        SiloQuotesLibor quotes{world.tenor, {}, {}, world.ratio};
        for (int m = 1; m <= world.tenor.size(); ++m) {
            quotes.irsParRates.push_back(irsParRate(world.cs, world.tenor, m));
            quotes.ccsBasis.push_back(mtmccsParSpread(world.cs, world.tenor, m, world.ratio));
        }
        const auto rebuilt = bootstrapEffectiveDiscountLibor(quotes, world.cs.usd);
        double maxErr = 0.0;
        for (int m = 1; m <= world.tenor.size(); ++m)
            maxErr = std::max(maxErr, std::abs(rebuilt.df(world.tenor.time(m)) -
                                               world.cs.dbarJ.df(world.tenor.time(m))));
        EXPECT_LT(maxErr, 1e-10) << "mixed day counts = " << mixed;
    }
}

TEST(LiborBootstrapTest, OrderInvariance) {
    World world = makeWorld(12, 0.5);
    SiloQuotesLibor quotes{world.tenor, {}, {}, world.ratio};
    for (int m = 1; m <= 12; ++m) {
        quotes.irsParRates.push_back(irsParRate(world.cs, world.tenor, m));
        quotes.ccsBasis.push_back(mtmccsParSpread(world.cs, world.tenor, m, world.ratio));
    }
    const auto full = bootstrapEffectiveDiscountLibor(quotes, world.cs.usd);
    // truncate to the first 11 quotes: the recursion is forward-only, so the
    // shared pillars must agree bitwise
    TenorStructure shortTenor = TenorStructure::regular(0.0, 11, 0.5);
    SiloQuotesLibor shortQuotes{shortTenor,
                                {quotes.irsParRates.begin(), quotes.irsParRates.end() - 1},
                                {quotes.ccsBasis.begin(), quotes.ccsBasis.end() - 1},
                                world.ratio};
    std::vector<double> lois(11, 0.002);
    UsdDomesticCurves shortUsd{world.cs.usd.oisDiscount,
                               ForwardCurve::onTenor(ForwardCurve::Kind::LiborOisSpread,
                                                     shortTenor, lois)};
    const auto partial = bootstrapEffectiveDiscountLibor(shortQuotes, shortUsd);
    for (int m = 1; m <= 11; ++m)
        EXPECT_EQ(partial.df(shortTenor.time(m)), full.df(world.tenor.time(m)));
}

TEST(LiborBootstrapTest, WiderBasisLowersTheLastDiscount) {
    World world = makeWorld(10, 0.5);
    SiloQuotesLibor quotes{world.tenor, {}, {}, world.ratio};
    for (int m = 1; m <= 10; ++m) {
        quotes.irsParRates.push_back(irsParRate(world.cs, world.tenor, m));
        quotes.ccsBasis.push_back(mtmccsParSpread(world.cs, world.tenor, m, world.ratio));
    }
    const double base = bootstrapEffectiveDiscountLibor(quotes, world.cs.usd)
                            .df(world.tenor.time(10));
    for (double bump : {1e-4, 1e-3, 5e-3}) {
        SiloQuotesLibor bumped = quotes;
        bumped.ccsBasis.back() += bump;
        const double lower = bootstrapEffectiveDiscountLibor(bumped, world.cs.usd)
                                 .df(world.tenor.time(10));
        EXPECT_LT(lower, base) << "bump = " << bump;
    }
}

TEST(LiborBootstrapTest, Errors) {
    World world = makeWorld(4, 0.5);
    SiloQuotesLibor quotes{world.tenor, {0.01, 0.01, 0.01}, {0.0, 0.0, 0.0, 0.0}, 1.0};
    EXPECT_THROW(bootstrapEffectiveDiscountLibor(quotes, world.cs.usd), QuoteGapError);
    SiloQuotesLibor nanQuotes{world.tenor,
                              {0.01, std::nan(""), 0.01, 0.01},
                              {0.0, 0.0, 0.0, 0.0},
                              1.0};
    EXPECT_THROW(bootstrapEffectiveDiscountLibor(nanQuotes, world.cs.usd), QuoteGapError);
    // misaligned USD spread periods
    const auto other = TenorStructure::regular(0.0, 4, 0.25);
    UsdDomesticCurves misaligned{
        world.cs.usd.oisDiscount,
        ForwardCurve::onTenor(ForwardCurve::Kind::LiborOisSpread, other,
                              std::vector<double>(4, 0.001))};
    SiloQuotesLibor ok{world.tenor, std::vector<double>(4, 0.01),
                       std::vector<double>(4, 0.0), 1.0};
    EXPECT_THROW(bootstrapEffectiveDiscountLibor(ok, misaligned), QuoteGapError);
    // quotes inconsistent enough to push a discount factor negative
    SiloQuotesLibor bad{world.tenor, {0.9, -3.5, 0.9, 0.9}, std::vector<double>(4, 0.0), 1.0};
    EXPECT_THROW(bootstrapEffectiveDiscountLibor(bad, world.cs.usd),
                 NonPositiveDiscountError);
}

// --------------------------------------------------------------------------
// Forward extraction
// --------------------------------------------------------------------------

TEST(ExtractForwardsTest, FlatParRatesGiveFlatForwards) {
    // S_M = s for every M solves to L_m = s for any positive discounting
    std::mt19937_64 gen(3);
    const auto tenor = TenorStructure::regular(0.0, 10, 0.5);
    std::vector<double> times = tenor.pillars();
    std::vector<double> dfs;
    double df = 1.0;
    for (int m = 0; m < 10; ++m) {
        df *= 0.96 + 0.05 * std::generate_canonical<double, 53>(gen);
        dfs.push_back(df);
    }
    const DiscountCurve dbar(times, dfs);
    SiloQuotesLibor quotes{tenor, std::vector<double>(10, 0.033),
                           std::vector<double>(10, 0.0), 1.0};
    const auto fwds = extractLiborForwards(quotes, dbar);
    for (int m = 0; m < 10; ++m) EXPECT_NEAR(fwds.value(m), 0.033, 1e-13);
}

TEST(ExtractForwardsTest, SinglePeriodIdentity) {
    const TenorStructure tenor(0.0, {0.5}, {0.5 * 365.0 / 360.0}, {0.5});
    const DiscountCurve dbar({0.5}, {0.99});
    SiloQuotesLibor quotes{tenor, {0.02}, {0.0}, 365.0 / 360.0};
    const auto fwds = extractLiborForwards(quotes, dbar);
    EXPECT_NEAR(fwds.value(0), (365.0 / 360.0) * 0.02, 1e-15);
}

TEST(ExtractForwardsTest, RoundTripFromSeededForwards) {
    World world = makeWorld(20, 0.25);
    SiloQuotesLibor quotes{world.tenor, {}, {}, world.ratio};
    for (int m = 1; m <= 20; ++m)
        quotes.irsParRates.push_back(irsParRate(world.cs, world.tenor, m));
    const auto fwds = extractLiborForwards(quotes, world.cs.dbarJ);
    for (int m = 0; m < 20; ++m)
        EXPECT_NEAR(fwds.value(m), world.cs.liborJ.value(m), 1e-12);
}

// --------------------------------------------------------------------------
// OIS-route effective discount bootstrap
// --------------------------------------------------------------------------

TEST(OisBootstrapTest, ZeroQuotesFreezeTheCurve) {
    const auto tenor = TenorStructure::regular(0.0, 8, 0.25);
    std::vector<double> zeros(8, 0.0);
    SiloQuotesOis quotes{tenor, zeros, zeros};
    const auto dbar = bootstrapEffectiveDiscountOis(quotes);
    for (int m = 1; m <= 8; ++m) EXPECT_DOUBLE_EQ(dbar.df(tenor.time(m)), 1.0);
}

TEST(OisBootstrapTest, SinglePeriod) {
    const TenorStructure tenor(0.0, {1.0}, {1.0}, {1.0});
    SiloQuotesOis quotes{tenor, {0.03}, {0.01}};
    const auto dbar = bootstrapEffectiveDiscountOis(quotes);
    EXPECT_DOUBLE_EQ(dbar.df(1.0), 1.0 / 1.04);
    EXPECT_NEAR(dbar.df(1.0), 0.961538, 1e-6);
}

TEST(OisBootstrapTest, RoundTripAgainstPricingModule) {
    World world = makeWorld(40, 0.25);
    SiloQuotesOis quotes{world.tenor, {}, {}};
    for (int m = 1; m <= 40; ++m) {
        quotes.oisParRates.push_back(oisParRate(world.cs, world.tenor, m));
        quotes.ccoisBasis.push_back(mtmccoisParSpread(world.cs, world.tenor, 0, m));
    }
    const auto rebuilt = bootstrapEffectiveDiscountOis(quotes);
    double maxErr = 0.0;
    for (int m = 1; m <= 40; ++m)
        maxErr = std::max(maxErr, std::abs(rebuilt.df(world.tenor.time(m)) -
                                           world.cs.dbarJ.df(world.tenor.time(m))));
    EXPECT_LT(maxErr, 1e-12);
}

TEST(OisBootstrapTest, ForwardStartUsesSuppliedShortEndDiscount) {
    const TenorStructure tenor(0.5, {1.0, 1.5}, {0.5, 0.5}, {0.5, 0.5});
    SiloQuotesOis quotes{tenor, {0.04, 0.04}, {0.0, 0.0}};
    const auto dbar = bootstrapEffectiveDiscountOis(quotes, 0.99);
    EXPECT_DOUBLE_EQ(dbar.df(0.5), 0.99);
    EXPECT_DOUBLE_EQ(dbar.df(1.0), 0.99 / (1.0 + 0.5 * 0.04));
}

TEST(OisForwardsFromCurveTest, MirrorsExtraction) {
    World world = makeWorld(16, 0.25);
    std::vector<double> parRates;
    for (int m = 1; m <= 16; ++m)
        parRates.push_back(oisParRate(world.cs, world.tenor, m));
    const auto fwds = oisForwardsFromCurve(world.tenor, world.cs.dbarJ, parRates);
    EXPECT_EQ(fwds.kind(), ForwardCurve::Kind::CompoundedOisForward);
    for (int m = 0; m < 16; ++m)
        EXPECT_NEAR(fwds.value(m), world.cs.oisJ->value(m), 1e-12);
    // single-period identity: the first forward is the first par rate
    EXPECT_NEAR(fwds.value(0), parRates[0], 1e-15);
}

// --------------------------------------------------------------------------
// Densification
// --------------------------------------------------------------------------

TEST(DensifyTest, LinearInQuoteSpace) {
    const std::vector<std::pair<double, double>> points = {{1.0, 0.01}, {3.0, 0.03}};
    const auto dense = densifyQuotes(points, {0.5, 1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(dense[0], 0.01);  // flat before the first quote
    EXPECT_DOUBLE_EQ(dense[1], 0.01);
    EXPECT_DOUBLE_EQ(dense[2], 0.02);
    EXPECT_DOUBLE_EQ(dense[3], 0.03);
    EXPECT_THROW(densifyQuotes(points, {0.5, 4.0}), QuoteGapError);
    EXPECT_THROW(densifyQuotes({}, {1.0}), QuoteGapError);
    EXPECT_THROW(densifyQuotes({{1.0, 0.01}, {1.0, 0.02}}, {1.0}), QuoteGapError);
}

}  // namespace
}  // namespace usdsilo
