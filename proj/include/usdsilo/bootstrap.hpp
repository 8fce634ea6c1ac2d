#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "usdsilo/errors.hpp"
#include "usdsilo/termstructure.hpp"

namespace usdsilo {

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

/// USD domestic market state: the USD OIS discount curve D(i) and the
/// forward LIBOR-OIS spreads B(i) per accrual period.
struct UsdDomesticCurves {
    DiscountCurve oisDiscount;
    ForwardCurve liborOisSpreads;
};

/// Dense per-pillar quotes for the LIBOR route: IRS par rates S_M and
/// cross-currency basis spreads B_M for every maturity index 1..M, plus the
/// constant fixed/float day-count ratio used in the par-spread display.
struct SiloQuotesLibor {
    TenorStructure tenor;
    std::vector<double> irsParRates;
    std::vector<double> ccsBasis;
    double dayCountRatio = 1.0;
};

/// Dense per-pillar quotes for the OIS route: OIS par rates and MtMCCOIS
/// basis spreads.
struct SiloQuotesOis {
    TenorStructure tenor;
    std::vector<double> oisParRates;
    std::vector<double> ccoisBasis;
};

namespace detail {

inline void requireDense(std::size_t got, int expected, const char* what) {
    if (static_cast<int>(got) != expected)
        throw QuoteGapError(std::string(what) + ": expected " + std::to_string(expected) +
                            " dense quotes, got " + std::to_string(got));
    // NaN marks a maturity index left unfilled by densification.
}

inline void requireFinite(const std::vector<double>& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
            throw QuoteGapError(std::string(what) + ": missing quote at maturity index " +
                                std::to_string(i + 1));
}

inline DiscountCurve curveFromPillars(const TenorStructure& tenor, double dfAtStart,
                                      const std::vector<double>& dfs) {
    std::vector<double> times;
    std::vector<double> values;
    times.reserve(dfs.size() + 1);
    values.reserve(dfs.size() + 1);
    if (tenor.start() > 0.0) {
        times.push_back(tenor.start());
        values.push_back(dfAtStart);
    }
    for (int m = 1; m <= tenor.size(); ++m) {
        times.push_back(tenor.time(m));
        values.push_back(dfs[m - 1]);
    }
    return DiscountCurve(std::move(times), std::move(values));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// USD domestic bootstrap
// ---------------------------------------------------------------------------

/// Builds the USD OIS discount curve from dense par rates on a spot-start
/// grid. Same-currency collateral makes the floating leg telescope, so each
/// par equation solves in closed form:
///
///   D(0,T_M) = (D(0,T0) - S_M * sum_{m<M} delta_m D(0,T_m)) / (1 + delta_M S_M)
inline DiscountCurve usdOisFromParRates(const TenorStructure& tenor,
                                        const std::vector<double>& oisRates) {
    if (tenor.start() != 0.0)
        throw std::invalid_argument("usdOisFromParRates: grid must be spot-start (T0 = 0)");
    detail::requireDense(oisRates.size(), tenor.size(), "usdOisFromParRates");
    detail::requireFinite(oisRates, "usdOisFromParRates");

    std::vector<double> dfs(tenor.size());
    double annuity = 0.0;  // sum_{m<M} delta_m D(0,T_m)
    for (int M = 1; M <= tenor.size(); ++M) {
        const double s = oisRates[M - 1];
        const double deltaM = tenor.floatAccrualUsd(M);
        const double df = (1.0 - s * annuity) / (1.0 + deltaM * s);
        if (!(df > 0.0))
            throw NonPositiveDiscountError(
                "usdOisFromParRates: non-positive discount factor at pillar " + std::to_string(M),
                M);
        dfs[M - 1] = df;
        annuity += deltaM * df;
    }
    return detail::curveFromPillars(tenor, 1.0, dfs);
}

// ---------------------------------------------------------------------------
// Effective discount curve, LIBOR route
// ---------------------------------------------------------------------------

/// Bootstraps the effective USD-collateralized discount curve of currency j
/// from IRS par rates and MtMCCS basis spreads, given the USD domestic
/// curves. For each maturity index M:
///
///   Dbar(0,T_M) = { Dbar(0,T0)
///                   - (r S_M + B_M) * sum_{m=1}^{M-1} delta_m Dbar(0,T_m)
///                   + sum_{m=1}^{M} deltaUsd_m * [D(0,T_m)/D(0,T_{m-1})]
///                       * Busd_m * Dbar(0,T_{m-1}) }
///                 / (1 + Delta_M S_M + delta_M B_M)
///
/// with r the constant fixed/float day-count ratio carried by the quotes.
/// Fails loudly (with the pillar index) on a non-positive discount factor.
inline DiscountCurve bootstrapEffectiveDiscountLibor(const SiloQuotesLibor& quotes,
                                                     const UsdDomesticCurves& usd,
                                                     double dfAtStart = 1.0) {
    const TenorStructure& tenor = quotes.tenor;
    detail::requireDense(quotes.irsParRates.size(), tenor.size(),
                         "bootstrapEffectiveDiscountLibor(irs)");
    detail::requireDense(quotes.ccsBasis.size(), tenor.size(),
                         "bootstrapEffectiveDiscountLibor(ccs)");
    detail::requireFinite(quotes.irsParRates, "bootstrapEffectiveDiscountLibor(irs)");
    detail::requireFinite(quotes.ccsBasis, "bootstrapEffectiveDiscountLibor(ccs)");
    if (!usd.liborOisSpreads.alignedWith(tenor))
        throw QuoteGapError(
            "bootstrapEffectiveDiscountLibor: USD LIBOR-OIS spread periods do not align with "
            "the bootstrap grid");
    if (!(dfAtStart > 0.0))
        throw std::invalid_argument("bootstrapEffectiveDiscountLibor: dfAtStart must be > 0");

    const double ratio = quotes.dayCountRatio;
    std::vector<double> dbar(tenor.size());
    double annuityJ = 0.0;  // sum_{m<M} delta_m Dbar(0,T_m)
    double usdSum = 0.0;    // sum_{m<M} deltaUsd_m fwdDf_m Busd_m Dbar(0,T_{m-1})
    for (int M = 1; M <= tenor.size(); ++M) {
        const double sM = quotes.irsParRates[M - 1];
        const double bM = quotes.ccsBasis[M - 1];
        const double dbarPrev = M == 1 ? dfAtStart : dbar[M - 2];
        usdSum += tenor.floatAccrualUsd(M) *
                  usd.oisDiscount.forwardDf(tenor.time(M - 1), tenor.time(M)) *
                  usd.liborOisSpreads.value(M - 1) * dbarPrev;
        const double numerator = dfAtStart - (ratio * sM + bM) * annuityJ + usdSum;
        const double denominator =
            1.0 + tenor.fixedAccrual(M) * sM + tenor.floatAccrual(M) * bM;
        const double df = numerator / denominator;
        if (!(df > 0.0))
            throw NonPositiveDiscountError(
                "bootstrapEffectiveDiscountLibor: non-positive discount factor at pillar " +
                    std::to_string(M),
                M);
        dbar[M - 1] = df;
        annuityJ += tenor.floatAccrual(M) * df;
    }
    return detail::curveFromPillars(tenor, dfAtStart, dbar);
}

/// Recovers the forward LIBORs of currency j from the bootstrapped effective
/// discount curve and the IRS par rates, period by period:
///
///   L_M = (S_M * sum_{m<=M} Delta_m Dbar(0,T_m)
///          - sum_{m<M} delta_m Dbar(0,T_m) L_m) / (delta_M Dbar(0,T_M))
///
/// The floating-leg sum discounts with Dbar(0,T_m), keeping the recursion an
/// exact inverse of the par-rate definition.
inline ForwardCurve extractLiborForwards(const SiloQuotesLibor& quotes,
                                         const DiscountCurve& dbar) {
    const TenorStructure& tenor = quotes.tenor;
    detail::requireDense(quotes.irsParRates.size(), tenor.size(), "extractLiborForwards");
    detail::requireFinite(quotes.irsParRates, "extractLiborForwards");

    std::vector<double> fwds(tenor.size());
    double fixedSum = 0.0;
    double floatSum = 0.0;
    for (int M = 1; M <= tenor.size(); ++M) {
        const double df = dbar.df(tenor.time(M));
        fixedSum += tenor.fixedAccrual(M) * df;
        const double l =
            (quotes.irsParRates[M - 1] * fixedSum - floatSum) / (tenor.floatAccrual(M) * df);
        fwds[M - 1] = l;
        floatSum += tenor.floatAccrual(M) * df * l;
    }
    return ForwardCurve::onTenor(ForwardCurve::Kind::LiborForward, tenor, std::move(fwds));
}

// ---------------------------------------------------------------------------
// Effective discount curve, OIS route
// ---------------------------------------------------------------------------

/// Bootstraps the effective discount curve from OIS par rates and MtMCCOIS
/// basis spreads. The USD leg of a MtMCCOIS prices to zero, so no USD inputs
/// enter:
///
///   Dbar(0,T_M) = (Dbar(0,T0) - (S_M + B_M) * sum_{m<M} delta_m Dbar(0,T_m))
///                 / (1 + delta_M (S_M + B_M))
inline DiscountCurve bootstrapEffectiveDiscountOis(const SiloQuotesOis& quotes,
                                                   double dfAtStart = 1.0) {
    const TenorStructure& tenor = quotes.tenor;
    detail::requireDense(quotes.oisParRates.size(), tenor.size(),
                         "bootstrapEffectiveDiscountOis(ois)");
    detail::requireDense(quotes.ccoisBasis.size(), tenor.size(),
                         "bootstrapEffectiveDiscountOis(ccois)");
    detail::requireFinite(quotes.oisParRates, "bootstrapEffectiveDiscountOis(ois)");
    detail::requireFinite(quotes.ccoisBasis, "bootstrapEffectiveDiscountOis(ccois)");
    if (!(dfAtStart > 0.0))
        throw std::invalid_argument("bootstrapEffectiveDiscountOis: dfAtStart must be > 0");

    std::vector<double> dbar(tenor.size());
    double annuity = 0.0;
    for (int M = 1; M <= tenor.size(); ++M) {
        const double q = quotes.oisParRates[M - 1] + quotes.ccoisBasis[M - 1];
        const double df = (dfAtStart - q * annuity) / (1.0 + tenor.floatAccrual(M) * q);
        if (!(df > 0.0))
            throw NonPositiveDiscountError(
                "bootstrapEffectiveDiscountOis: non-positive discount factor at pillar " +
                    std::to_string(M),
                M);
        dbar[M - 1] = df;
        annuity += tenor.floatAccrual(M) * df;
    }
    return detail::curveFromPillars(tenor, dfAtStart, dbar);
}

/// Recovers the expected compounded-OIS period rates from the effective
/// discount curve and dense OIS par rates. Same telescoping recursion as the
/// LIBOR extraction with fixed and floating accruals both delta_m.
inline ForwardCurve oisForwardsFromCurve(const TenorStructure& tenor, const DiscountCurve& dbar,
                                         const std::vector<double>& oisRates) {
    detail::requireDense(oisRates.size(), tenor.size(), "oisForwardsFromCurve");
    detail::requireFinite(oisRates, "oisForwardsFromCurve");

    std::vector<double> fwds(tenor.size());
    double annuity = 0.0;
    double floatSum = 0.0;
    for (int M = 1; M <= tenor.size(); ++M) {
        const double df = dbar.df(tenor.time(M));
        annuity += tenor.floatAccrual(M) * df;
        const double l = (oisRates[M - 1] * annuity - floatSum) / (tenor.floatAccrual(M) * df);
        fwds[M - 1] = l;
        floatSum += tenor.floatAccrual(M) * df * l;
    }
    return ForwardCurve::onTenor(ForwardCurve::Kind::CompoundedOisForward, tenor,
                                 std::move(fwds));
}

// ---------------------------------------------------------------------------
// Quote densification
// ---------------------------------------------------------------------------

/// Linear interpolation of sparse (maturity, quote) points onto a dense
/// pillar grid, flat before the first quoted maturity. Pillars beyond the
/// last quote are a gap, not an extrapolation.
inline std::vector<double> densifyQuotes(const std::vector<std::pair<double, double>>& points,
                                         const std::vector<double>& pillarTimes) {
    if (points.empty()) throw QuoteGapError("densifyQuotes: no quotes supplied");
    std::vector<std::pair<double, double>> sorted(points);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].first == sorted[i - 1].first)
            throw QuoteGapError("densifyQuotes: duplicate quote at maturity " +
                                std::to_string(sorted[i].first));
    std::vector<double> out(pillarTimes.size());
    for (std::size_t i = 0; i < pillarTimes.size(); ++i) {
        const double t = pillarTimes[i];
        if (t > sorted.back().first + 1e-9)
            throw QuoteGapError("densifyQuotes: pillar " + std::to_string(t) +
                                " lies beyond the last quote (" +
                                std::to_string(sorted.back().first) + ")");
        if (t <= sorted.front().first) {
            out[i] = sorted.front().second;
            continue;
        }
        auto hi = std::lower_bound(sorted.begin(), sorted.end(), std::make_pair(t, -1e308));
        if (hi != sorted.end() && hi->first == t) {
            out[i] = hi->second;
            continue;
        }
        if (hi == sorted.end()) {  // within 1e-9 of the last quote
            out[i] = sorted.back().second;
            continue;
        }
        auto lo = hi - 1;
        const double w = (t - lo->first) / (hi->first - lo->first);
        out[i] = lo->second + w * (hi->second - lo->second);
    }
    return out;
}

}  // namespace usdsilo
