#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "usdsilo/bootstrap.hpp"
#include "usdsilo/errors.hpp"
#include "usdsilo/termstructure.hpp"

namespace usdsilo {

// ---------------------------------------------------------------------------
// Curve set
// ---------------------------------------------------------------------------

/// Everything needed to value the instrument set of one currency-j silo.
///
/// FX orientation: every spot stored here is USD per one unit of the non-USD
/// currency (f_x^{(i,j)} with i = USD). Both orientations are exposed through
/// accessors so call sites never take a silent reciprocal.
struct CurveSet {
    std::string currency;                 // label of currency j
    DiscountCurve dbarJ;                  // effective USD-collateralized discounting of j
    ForwardCurve liborJ;                  // forward LIBORs of j
    std::optional<ForwardCurve> oisJ;     // expected compounded-OIS period rates of j
    UsdDomesticCurves usd;                // USD OIS discounting + LIBOR-OIS spreads
    double fxSpotUsdPerJ = 1.0;           // f_x^{(i,j)}(0), USD per unit of j

    std::string currencyK;                // optional second non-USD currency k
    std::optional<DiscountCurve> dbarK;
    std::optional<double> fxSpotUsdPerK;  // f_x^{(i,k)}(0), USD per unit of k

    double fxSpotJPerUsd() const { return 1.0 / fxSpotUsdPerJ; }

    void validate() const {
        if (!(fxSpotUsdPerJ > 0.0))
            throw std::invalid_argument("CurveSet: FX spot must be > 0");
        if (fxSpotUsdPerK && !(*fxSpotUsdPerK > 0.0))
            throw std::invalid_argument("CurveSet: FX spot (k) must be > 0");
        if (dbarK.has_value() != fxSpotUsdPerK.has_value())
            throw std::invalid_argument("CurveSet: currency k needs both a curve and a spot");
    }
};

/// Swap trade description on a shared tenor grid.
struct SwapSpec {
    enum class Kind { Irs, Ois, MtmCcs, MtmCcois };
    TenorStructure tenor;
    int startIndex = 0;            // S, grid index of the first accrual start
    int endIndex = 0;              // M, grid index of the last payment
    Kind kind = Kind::Irs;
    double fixedRateOrSpread = 0.0;
    bool payer = true;             // pay fixed (IRS/OIS) or pay the j-leg (CCS kinds)
    double notional = 1.0;         // currency-j units

    void validate() const {
        if (startIndex < 0 || startIndex >= endIndex || endIndex > tenor.size())
            throw std::invalid_argument("SwapSpec: need 0 <= S < M <= grid length");
    }
};

namespace detail {

inline void checkAligned(const ForwardCurve& fc, const TenorStructure& tenor,
                         const char* what) {
    if (!fc.alignedWith(tenor))
        throw std::invalid_argument(std::string(what) +
                                    ": forward curve periods do not align with the tenor grid");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Par rates and annuities
// ---------------------------------------------------------------------------

/// Floating-leg annuity sum_{m=S+1}^{M} delta_m Dbar(0,T_m).
inline double annuity(const DiscountCurve& dbar, const TenorStructure& tenor, int S, int M) {
    if (S < 0 || S >= M || M > tenor.size())
        throw EmptyAnnuityError("annuity: empty accrual range");
    double a = 0.0;
    for (int m = S + 1; m <= M; ++m) a += tenor.floatAccrual(m) * dbar.df(tenor.time(m));
    if (a == 0.0) throw EmptyAnnuityError("annuity: sum evaluated to zero");
    return a;
}

/// Fixed-leg annuity sum_{m=S+1}^{M} Delta_m Dbar(0,T_m).
inline double fixedAnnuity(const DiscountCurve& dbar, const TenorStructure& tenor, int S,
                           int M) {
    if (S < 0 || S >= M || M > tenor.size())
        throw EmptyAnnuityError("fixedAnnuity: empty accrual range");
    double a = 0.0;
    for (int m = S + 1; m <= M; ++m) a += tenor.fixedAccrual(m) * dbar.df(tenor.time(m));
    if (a == 0.0) throw EmptyAnnuityError("fixedAnnuity: sum evaluated to zero");
    return a;
}

/// IRS par rate: sum delta_m Dbar_m L_m / sum Delta_m Dbar_m.
inline double irsParRate(const CurveSet& cs, const TenorStructure& tenor, int M, int S = 0) {
    detail::checkAligned(cs.liborJ, tenor, "irsParRate");
    double num = 0.0;
    for (int m = S + 1; m <= M; ++m)
        num += tenor.floatAccrual(m) * cs.dbarJ.df(tenor.time(m)) * cs.liborJ.value(m - 1);
    return num / fixedAnnuity(cs.dbarJ, tenor, S, M);
}

/// Effective swap rate of the discounting rate:
/// (Dbar(0,T_S) - Dbar(0,T_M)) / sum_{m=S+1}^{M} delta_m Dbar(0,T_m).
inline double effectiveSwapRate(const DiscountCurve& dbar, const TenorStructure& tenor, int S,
                                int M) {
    const double a = annuity(dbar, tenor, S, M);
    return (dbar.df(tenor.time(S)) - dbar.df(tenor.time(M))) / a;
}

/// Forward OIS rate: sum delta_m Dbar_m Lois_m / sum delta_m Dbar_m over
/// periods S+1..M.
inline double forwardOisRate(const CurveSet& cs, const TenorStructure& tenor, int S, int M) {
    if (!cs.oisJ) throw MissingCurveError("forwardOisRate: curve set carries no OIS forwards");
    detail::checkAligned(*cs.oisJ, tenor, "forwardOisRate");
    double num = 0.0;
    for (int m = S + 1; m <= M; ++m)
        num += tenor.floatAccrual(m) * cs.dbarJ.df(tenor.time(m)) * cs.oisJ->value(m - 1);
    return num / annuity(cs.dbarJ, tenor, S, M);
}

/// Spot-start OIS par rate.
inline double oisParRate(const CurveSet& cs, const TenorStructure& tenor, int M) {
    return forwardOisRate(cs, tenor, 0, M);
}

// ---------------------------------------------------------------------------
// Mark-to-market cross currency swaps
// ---------------------------------------------------------------------------

/// Present values of both MtMCCS legs per unit of currency-j notional, both
/// in currency-j units.
///
/// The j-leg pays LIBOR plus the spread with notional exchanges:
///   pvJ = -Dbar(0,T_S) + Dbar(0,T_M) + sum delta_m Dbar_m (L_m + spread).
/// The USD leg pays USD LIBOR flat with the notional refreshed each fixing;
/// with the LIBOR-OIS/FX covariance and the one-period timing adjustment
/// dropped it reduces to
///   pvUsdInJ = sum deltaUsd_m [D(0,T_m)/D(0,T_{m-1})] Busd_m Dbar(0,T_{m-1}).
inline std::pair<double, double> mtmccsLegPvs(const CurveSet& cs, const TenorStructure& tenor,
                                              int M, double spread, int S = 0) {
    detail::checkAligned(cs.liborJ, tenor, "mtmccsLegPvs");
    detail::checkAligned(cs.usd.liborOisSpreads, tenor, "mtmccsLegPvs");
    double pvJ = -cs.dbarJ.df(tenor.time(S)) + cs.dbarJ.df(tenor.time(M));
    double pvUsd = 0.0;
    for (int m = S + 1; m <= M; ++m) {
        pvJ += tenor.floatAccrual(m) * cs.dbarJ.df(tenor.time(m)) *
               (cs.liborJ.value(m - 1) + spread);
        pvUsd += tenor.floatAccrualUsd(m) *
                 cs.usd.oisDiscount.forwardDf(tenor.time(m - 1), tenor.time(m)) *
                 cs.usd.liborOisSpreads.value(m - 1) * cs.dbarJ.df(tenor.time(m - 1));
    }
    return {pvJ, pvUsd};
}

/// Par MtMCCS basis spread for the M-period swap:
///   B_M = (Sbar_M - ratio * S_M)
///         + sum deltaUsd_m (Dfwd Busd)_m Dbar(0,T_{m-1}) / sum delta_m Dbar(0,T_m)
/// where Sbar is the effective swap rate and ratio the constant fixed/float
/// day-count ratio.
inline double mtmccsParSpread(const CurveSet& cs, const TenorStructure& tenor, int M,
                              double dayCountRatio = 1.0, int S = 0) {
    detail::checkAligned(cs.usd.liborOisSpreads, tenor, "mtmccsParSpread");
    const double sbar = effectiveSwapRate(cs.dbarJ, tenor, S, M);
    const double irs = irsParRate(cs, tenor, M, S);
    double usdSum = 0.0;
    for (int m = S + 1; m <= M; ++m)
        usdSum += tenor.floatAccrualUsd(m) *
                  cs.usd.oisDiscount.forwardDf(tenor.time(m - 1), tenor.time(m)) *
                  cs.usd.liborOisSpreads.value(m - 1) * cs.dbarJ.df(tenor.time(m - 1));
    return (sbar - dayCountRatio * irs) + usdSum / annuity(cs.dbarJ, tenor, S, M);
}

/// Par MtMCCOIS basis spread: the swap spread between the effective
/// discounting rate and OIS, Sbar - Sois, on the same annuity.
inline double mtmccoisParSpread(const CurveSet& cs, const TenorStructure& tenor, int S, int M) {
    return effectiveSwapRate(cs.dbarJ, tenor, S, M) - forwardOisRate(cs, tenor, S, M);
}

/// USD leg of a MtMCCOIS: it pays the USD overnight rate and is USD
/// collateralized, so its value is identically zero. Kept explicit so
/// trade-level aggregation covers both legs.
inline constexpr double usdLegPvMtmccois() { return 0.0; }

// ---------------------------------------------------------------------------
// FX forwards
// ---------------------------------------------------------------------------

/// USD-collateralized FX forward between j and USD, in USD per unit of j:
///   f_x^{(i,j)}(0,T) = f_x^{(i,j)}(0) * DbarJ(0,T) / D(0,T).
inline double fxForwardUsd(const CurveSet& cs, double T) {
    return cs.fxSpotUsdPerJ * cs.dbarJ.df(T) / cs.usd.oisDiscount.df(T);
}

/// Same forward for the second currency k, in USD per unit of k.
inline double fxForwardUsdK(const CurveSet& cs, double T) {
    if (!cs.dbarK || !cs.fxSpotUsdPerK)
        throw MissingCurveError("fxForwardUsdK: curve set carries no currency k");
    return *cs.fxSpotUsdPerK * cs.dbarK->df(T) / cs.usd.oisDiscount.df(T);
}

/// FX forward between the two non-USD currencies inside the USD silo, in
/// units of j per unit of k:
///   f_x^{(j,k)}(0,T) = f_x^{(j,k)}(0) * DbarK(0,T) / DbarJ(0,T).
inline double fxForwardCross(const CurveSet& cs, double T) {
    if (!cs.dbarK || !cs.fxSpotUsdPerK)
        throw MissingCurveError("fxForwardCross: curve set carries no currency k");
    const double spotJPerK = *cs.fxSpotUsdPerK / cs.fxSpotUsdPerJ;
    return spotJPerK * cs.dbarK->df(T) / cs.dbarJ.df(T);
}

// ---------------------------------------------------------------------------
// Collateral-rate overlays
// ---------------------------------------------------------------------------

/// Adjusted collateral rate making currency-j collateral economically
/// identical to USD collateral, extracted from a short FX swap. Inputs are
/// oriented USD-per-j; the forward is spot + point. Simple compounding over
/// the (one business day) accrual:
///   ctilde = ((1 + accrual * usdOvernight) * spot / forward - 1) / accrual.
inline double overlayRateDomestic(double fxSpot, double fxForwardPoint, double usdOvernight,
                                  double accrual) {
    if (!(accrual > 0.0))
        throw std::invalid_argument("overlayRateDomestic: accrual must be > 0");
    if (!(fxSpot > 0.0))
        throw NonPositiveForwardError("overlayRateDomestic: spot must be > 0");
    const double fwd = fxSpot + fxForwardPoint;
    if (!(fwd > 0.0))
        throw NonPositiveForwardError("overlayRateDomestic: spot + point must be > 0");
    return ((1.0 + accrual * usdOvernight) * fxSpot / fwd - 1.0) / accrual;
}

/// Overlay rate when a third currency k is posted: the same inversion on the
/// (k, USD) FX swap, which recovers the effective discounting rate of k.
inline double overlayRateThirdCurrency(const CurveSet& cs, double tShort) {
    if (!cs.dbarK || !cs.fxSpotUsdPerK)
        throw MissingCurveError("overlayRateThirdCurrency: curve set carries no currency k");
    if (!(tShort > 0.0))
        throw std::invalid_argument("overlayRateThirdCurrency: period must be > 0");
    const double spot = *cs.fxSpotUsdPerK;
    const double fwd = fxForwardUsdK(cs, tShort);
    const double usdSimple = (1.0 / cs.usd.oisDiscount.df(tShort) - 1.0) / tShort;
    return overlayRateDomestic(spot, fwd - spot, usdSimple, tShort);
}

// ---------------------------------------------------------------------------
// Trade valuation (CLI surface)
// ---------------------------------------------------------------------------

struct SwapValuation {
    double pv = 0.0;        // notional-scaled, currency-j units
    double par = 0.0;       // par rate (IRS/OIS) or par spread (CCS kinds)
    double legFixed = 0.0;  // per unit notional, receiver-of-leg sign
    double legFloat = 0.0;
};

/// Values one swap trade against a curve set. `dayCountRatio` feeds the
/// MtMCCS par spread only.
inline SwapValuation valueSwap(const CurveSet& cs, const SwapSpec& spec,
                               double dayCountRatio = 1.0) {
    spec.validate();
    const TenorStructure& tenor = spec.tenor;
    const int S = spec.startIndex;
    const int M = spec.endIndex;
    SwapValuation out;
    const double sign = spec.payer ? 1.0 : -1.0;
    switch (spec.kind) {
        case SwapSpec::Kind::Irs: {
            double floatLeg = 0.0;
            for (int m = S + 1; m <= M; ++m)
                floatLeg += tenor.floatAccrual(m) * cs.dbarJ.df(tenor.time(m)) *
                            cs.liborJ.value(m - 1);
            const double fixedLeg = spec.fixedRateOrSpread * fixedAnnuity(cs.dbarJ, tenor, S, M);
            out.par = irsParRate(cs, tenor, M, S);
            out.legFixed = fixedLeg;
            out.legFloat = floatLeg;
            out.pv = sign * (floatLeg - fixedLeg) * spec.notional;
            break;
        }
        case SwapSpec::Kind::Ois: {
            if (!cs.oisJ) throw MissingCurveError("valueSwap: OIS trade without OIS forwards");
            double floatLeg = 0.0;
            for (int m = S + 1; m <= M; ++m)
                floatLeg += tenor.floatAccrual(m) * cs.dbarJ.df(tenor.time(m)) *
                            cs.oisJ->value(m - 1);
            const double fixedLeg = spec.fixedRateOrSpread * annuity(cs.dbarJ, tenor, S, M);
            out.par = forwardOisRate(cs, tenor, S, M);
            out.legFixed = fixedLeg;
            out.legFloat = floatLeg;
            out.pv = sign * (floatLeg - fixedLeg) * spec.notional;
            break;
        }
        case SwapSpec::Kind::MtmCcs: {
            auto [pvJ, pvUsd] = mtmccsLegPvs(cs, tenor, M, spec.fixedRateOrSpread, S);
            out.par = mtmccsParSpread(cs, tenor, M, dayCountRatio, S);
            out.legFixed = pvUsd;  // USD leg expressed in j
            out.legFloat = pvJ;
            // payer = pay the j-leg, receive the USD leg
            out.pv = sign * (pvUsd - pvJ) * spec.notional;
            break;
        }
        case SwapSpec::Kind::MtmCcois: {
            if (!cs.oisJ)
                throw MissingCurveError("valueSwap: MtMCCOIS trade without OIS forwards");
            double pvJ = -cs.dbarJ.df(tenor.time(S)) + cs.dbarJ.df(tenor.time(M));
            for (int m = S + 1; m <= M; ++m)
                pvJ += tenor.floatAccrual(m) * cs.dbarJ.df(tenor.time(m)) *
                       (cs.oisJ->value(m - 1) + spec.fixedRateOrSpread);
            const double pvUsd = usdLegPvMtmccois();
            out.par = mtmccoisParSpread(cs, tenor, S, M);
            out.legFixed = pvUsd;
            out.legFloat = pvJ;
            out.pv = sign * (pvUsd - pvJ) * spec.notional;
            break;
        }
    }
    return out;
}

/// PV in currency j of receiving one unit of j against paying `strike` USD
/// at T, both flows USD collateralized. Zero at the par forward.
inline double fxForwardPv(const CurveSet& cs, double T, double strike) {
    return cs.dbarJ.df(T) - strike * cs.usd.oisDiscount.df(T) / cs.fxSpotUsdPerJ;
}

}  // namespace usdsilo
