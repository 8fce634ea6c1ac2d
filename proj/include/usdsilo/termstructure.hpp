#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "usdsilo/errors.hpp"

namespace usdsilo {

/// Sink used by the library to surface non-fatal data warnings
/// (negative basis spreads, negative simulated spreads, ...).
/// Defaults to a no-op; the CLI installs a stderr logger.
inline std::function<void(const std::string&)>& warnHandler() {
    static std::function<void(const std::string&)> handler = [](const std::string&) {};
    return handler;
}

inline void warn(const std::string& message) { warnHandler()(message); }

// ---------------------------------------------------------------------------
// Day counts
// ---------------------------------------------------------------------------

/// Day-count conventions supported for accrual fractions. Time itself is a
/// plain year fraction; conventions only rescale period lengths.
enum class DayCount { Act360, Act365Fixed };

/// Accrual fraction of a whole-day count under a convention.
inline double accrualFromDays(DayCount dc, double days) {
    return dc == DayCount::Act360 ? days / 360.0 : days / 365.0;
}

/// Accrual fraction of a calendar period expressed in Act365F years.
/// Act365F is the identity; Act360 rescales by 365/360.
inline double accrualFromYears(DayCount dc, double years) {
    return dc == DayCount::Act360 ? years * 365.0 / 360.0 : years;
}

inline const char* toString(DayCount dc) {
    return dc == DayCount::Act360 ? "ACT360" : "ACT365F";
}

inline DayCount dayCountFromString(const std::string& s) {
    if (s == "ACT360") return DayCount::Act360;
    if (s == "ACT365F") return DayCount::Act365Fixed;
    throw ParseError("unknown day count '" + s + "' (expected ACT360 or ACT365F)");
}

// ---------------------------------------------------------------------------
// Tenor structure
// ---------------------------------------------------------------------------

/// Payment grid T0..TM with per-period accrual fractions for the fixed leg
/// (Delta_m), the floating leg (delta_m) and optionally the USD leg.
class TenorStructure {
public:
    TenorStructure(double start, std::vector<double> pillars,
                   std::vector<double> fixedAccruals, std::vector<double> floatAccruals,
                   std::optional<std::vector<double>> floatAccrualsUsd = std::nullopt)
        : start_(start),
          pillars_(std::move(pillars)),
          fixedAccruals_(std::move(fixedAccruals)),
          floatAccruals_(std::move(floatAccruals)),
          floatAccrualsUsd_(std::move(floatAccrualsUsd)) {
        validate();
    }

    /// Evenly spaced grid of `periods` steps of `spacing` years starting at
    /// `start`, with accruals derived from the leg day-count conventions.
    static TenorStructure regular(double start, int periods, double spacing,
                                  DayCount fixedDc = DayCount::Act365Fixed,
                                  DayCount floatDc = DayCount::Act365Fixed,
                                  std::optional<DayCount> usdFloatDc = std::nullopt) {
        if (periods < 1) throw std::invalid_argument("TenorStructure: periods must be >= 1");
        if (spacing <= 0.0) throw std::invalid_argument("TenorStructure: spacing must be > 0");
        std::vector<double> pillars(periods);
        for (int m = 0; m < periods; ++m) pillars[m] = start + spacing * (m + 1);
        std::vector<double> fixed(periods, accrualFromYears(fixedDc, spacing));
        std::vector<double> flt(periods, accrualFromYears(floatDc, spacing));
        std::optional<std::vector<double>> usd;
        if (usdFloatDc)
            usd = std::vector<double>(periods, accrualFromYears(*usdFloatDc, spacing));
        return TenorStructure(start, std::move(pillars), std::move(fixed), std::move(flt),
                              std::move(usd));
    }

    double start() const { return start_; }
    int size() const { return static_cast<int>(pillars_.size()); }

    /// Grid time of index m: time(0) == T0, time(m) == Tm.
    double time(int m) const { return m == 0 ? start_ : pillars_[m - 1]; }

    const std::vector<double>& pillars() const { return pillars_; }
    double fixedAccrual(int m) const { return fixedAccruals_[m - 1]; }    // Delta_m, m in 1..M
    double floatAccrual(int m) const { return floatAccruals_[m - 1]; }    // delta_m
    double floatAccrualUsd(int m) const {
        return floatAccrualsUsd_ ? (*floatAccrualsUsd_)[m - 1] : floatAccruals_[m - 1];
    }
    const std::vector<double>& fixedAccruals() const { return fixedAccruals_; }
    const std::vector<double>& floatAccruals() const { return floatAccruals_; }
    bool hasUsdAccruals() const { return floatAccrualsUsd_.has_value(); }

private:
    void validate() const {
        const auto M = pillars_.size();
        if (M == 0) throw std::invalid_argument("TenorStructure: empty pillar list");
        if (!(start_ < pillars_.front()))
            throw std::invalid_argument("TenorStructure: T0 must precede T1");
        for (std::size_t m = 1; m < M; ++m)
            if (!(pillars_[m - 1] < pillars_[m]))
                throw std::invalid_argument("TenorStructure: pillars must be strictly increasing");
        if (fixedAccruals_.size() != M || floatAccruals_.size() != M ||
            (floatAccrualsUsd_ && floatAccrualsUsd_->size() != M))
            throw std::invalid_argument("TenorStructure: accrual lists must have length M");
        for (std::size_t m = 0; m < M; ++m) {
            if (!(fixedAccruals_[m] > 0.0) || !(floatAccruals_[m] > 0.0) ||
                (floatAccrualsUsd_ && !((*floatAccrualsUsd_)[m] > 0.0)))
                throw std::invalid_argument("TenorStructure: accrual fractions must be > 0");
            // Day-count ratios such as 360/365 live here; anything outside
            // [0.9, 1.1] is a mixed-up convention, not a convention.
            const double ratio = fixedAccruals_[m] / floatAccruals_[m];
            if (ratio < 0.9 || ratio > 1.1)
                throw std::invalid_argument(
                    "TenorStructure: fixed/float accrual ratio outside [0.9, 1.1] at period " +
                    std::to_string(m + 1));
        }
    }

    double start_;
    std::vector<double> pillars_;
    std::vector<double> fixedAccruals_;
    std::vector<double> floatAccruals_;
    std::optional<std::vector<double>> floatAccrualsUsd_;
};

// ---------------------------------------------------------------------------
// Discount curve
// ---------------------------------------------------------------------------

enum class Interp { LogLinearDf };

inline const char* toString(Interp i) {
    (void)i;
    return "loglinear_df";
}

inline Interp interpFromString(const std::string& s) {
    if (s == "loglinear_df") return Interp::LogLinearDf;
    throw ParseError("unknown interpolation rule '" + s + "'");
}

/// Discount-factor curve anchored at t = 0 with df(0) = 1.
///
/// Log-linear interpolation on discount factors between pillars (piecewise
/// constant instantaneous forwards). Pillar values are reproduced exactly.
/// Discount factors are not required to be monotone: the effective curves
/// built here embed a cross-currency basis and their forward rate can be
/// negative. Extrapolation beyond the last pillar is an explicit opt-in
/// (flat continuously-compounded forward), never silent.
class DiscountCurve {
public:
    DiscountCurve(std::vector<double> pillarTimes, std::vector<double> pillarDfs,
                  Interp interp = Interp::LogLinearDf, bool allowExtrapolation = false)
        : times_(std::move(pillarTimes)),
          dfs_(std::move(pillarDfs)),
          interp_(interp),
          extrapolate_(allowExtrapolation) {
        if (times_.empty() || times_.size() != dfs_.size())
            throw std::invalid_argument("DiscountCurve: pillar/df length mismatch");
        // A redundant explicit anchor pillar (0, 1) is accepted and stripped.
        if (times_.front() == 0.0) {
            if (dfs_.front() != 1.0)
                throw std::invalid_argument("DiscountCurve: df at anchor must equal 1");
            times_.erase(times_.begin());
            dfs_.erase(dfs_.begin());
            if (times_.empty())
                throw std::invalid_argument("DiscountCurve: needs at least one pillar past t=0");
        }
        if (!(times_.front() > 0.0))
            throw std::invalid_argument("DiscountCurve: pillar times must be positive");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (!(times_[i - 1] < times_[i]))
                throw std::invalid_argument("DiscountCurve: pillar times must be ascending");
        for (double df : dfs_)
            if (!(df > 0.0) || !std::isfinite(df))
                throw std::invalid_argument("DiscountCurve: discount factors must be > 0");
    }

    /// Flat curve at a continuously-compounded rate, pillar per grid point.
    static DiscountCurve flat(double rate, const std::vector<double>& times) {
        std::vector<double> dfs(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) dfs[i] = std::exp(-rate * times[i]);
        return DiscountCurve(times, dfs);
    }

    double anchor() const { return 0.0; }
    const std::vector<double>& pillarTimes() const { return times_; }
    const std::vector<double>& pillarDfs() const { return dfs_; }
    Interp interp() const { return interp_; }
    bool extrapolationAllowed() const { return extrapolate_; }
    double maxTime() const { return times_.back(); }

    /// Copy with extrapolation toggled.
    DiscountCurve withExtrapolation(bool on) const {
        DiscountCurve c(*this);
        c.extrapolate_ = on;
        return c;
    }

    /// Discount factor at time t. Exact at pillars, log-linear in between,
    /// df(0) = 1. Throws ExtrapolationError outside [0, maxTime] unless
    /// extrapolation was enabled.
    double df(double t) const {
        if (t < 0.0)
            throw ExtrapolationError("df requested before the curve anchor (t = " +
                                     std::to_string(t) + ")");
        if (t == 0.0) return 1.0;
        auto it = std::lower_bound(times_.begin(), times_.end(), t);
        if (it != times_.end() && *it == t)
            return dfs_[static_cast<std::size_t>(it - times_.begin())];
        if (it == times_.end()) {
            if (!extrapolate_)
                throw ExtrapolationError("df requested beyond the last pillar (t = " +
                                         std::to_string(t) + ", max = " +
                                         std::to_string(times_.back()) + ")");
            // Flat continuously-compounded forward from the last segment.
            const double fwd = lastSegmentForward();
            return dfs_.back() * std::exp(-fwd * (t - times_.back()));
        }
        const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
        const double tHi = times_[hi];
        const double lnHi = std::log(dfs_[hi]);
        const double tLo = hi == 0 ? 0.0 : times_[hi - 1];
        const double lnLo = hi == 0 ? 0.0 : std::log(dfs_[hi - 1]);
        const double w = (t - tLo) / (tHi - tLo);
        return std::exp(lnLo + w * (lnHi - lnLo));
    }

    /// Forward discount factor df(t2)/df(t1); equals 1 when t1 == t2.
    double forwardDf(double t1, double t2) const {
        if (t1 > t2)
            throw std::invalid_argument("forwardDf: t1 must not exceed t2");
        if (t1 == t2) return 1.0;
        return df(t2) / df(t1);
    }

private:
    double lastSegmentForward() const {
        if (times_.size() == 1) return -std::log(dfs_.back()) / times_.back();
        const std::size_t n = times_.size() - 1;
        return -(std::log(dfs_[n]) - std::log(dfs_[n - 1])) / (times_[n] - times_[n - 1]);
    }

    std::vector<double> times_;
    std::vector<double> dfs_;
    Interp interp_;
    bool extrapolate_;
};

// ---------------------------------------------------------------------------
// Forward curve
// ---------------------------------------------------------------------------

/// Expected period rates over a contiguous ascending set of accrual periods.
class ForwardCurve {
public:
    enum class Kind { LiborForward, LiborOisSpread, CompoundedOisForward };

    struct Period {
        double start;
        double end;
    };

    ForwardCurve(Kind kind, std::vector<Period> periods, std::vector<double> values)
        : kind_(kind), periods_(std::move(periods)), values_(std::move(values)) {
        if (periods_.empty() || periods_.size() != values_.size())
            throw std::invalid_argument("ForwardCurve: period/value length mismatch");
        for (std::size_t i = 0; i < periods_.size(); ++i) {
            if (!(periods_[i].start < periods_[i].end))
                throw std::invalid_argument("ForwardCurve: degenerate period");
            if (i > 0 && periods_[i].start != periods_[i - 1].end)
                throw std::invalid_argument("ForwardCurve: periods must be contiguous");
        }
        if (kind_ == Kind::LiborOisSpread) {
            // Market LIBOR-OIS spreads are empirically positive, but the type
            // admits any real; negative inputs only trigger the warning hook.
            for (std::size_t i = 0; i < values_.size(); ++i)
                if (values_[i] < 0.0)
                    warn("ForwardCurve: negative LIBOR-OIS spread at period " +
                         std::to_string(i + 1));
        }
    }

    /// Forward curve on the periods of a tenor grid.
    static ForwardCurve onTenor(Kind kind, const TenorStructure& tenor,
                                std::vector<double> values) {
        std::vector<Period> periods(tenor.size());
        for (int m = 1; m <= tenor.size(); ++m)
            periods[m - 1] = {tenor.time(m - 1), tenor.time(m)};
        return ForwardCurve(kind, std::move(periods), std::move(values));
    }

    Kind kind() const { return kind_; }
    int size() const { return static_cast<int>(values_.size()); }
    const Period& period(int i) const { return periods_[i]; }
    double value(int i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<Period>& periods() const { return periods_; }

    /// True when period i covers (Tm-1, Tm) of the grid for every i.
    bool alignedWith(const TenorStructure& tenor, double tol = 1e-9) const {
        if (size() < tenor.size()) return false;
        for (int m = 1; m <= tenor.size(); ++m) {
            const Period& p = periods_[m - 1];
            if (std::abs(p.start - tenor.time(m - 1)) > tol ||
                std::abs(p.end - tenor.time(m)) > tol)
                return false;
        }
        return true;
    }

private:
    Kind kind_;
    std::vector<Period> periods_;
    std::vector<double> values_;
};

inline const char* toString(ForwardCurve::Kind k) {
    switch (k) {
        case ForwardCurve::Kind::LiborForward: return "libor_forward";
        case ForwardCurve::Kind::LiborOisSpread: return "libor_ois_spread";
        case ForwardCurve::Kind::CompoundedOisForward: return "compounded_ois_forward";
    }
    return "?";
}

inline ForwardCurve::Kind forwardKindFromString(const std::string& s) {
    if (s == "libor_forward") return ForwardCurve::Kind::LiborForward;
    if (s == "libor_ois_spread") return ForwardCurve::Kind::LiborOisSpread;
    if (s == "compounded_ois_forward") return ForwardCurve::Kind::CompoundedOisForward;
    throw ParseError("unknown forward curve kind '" + s + "'");
}

// ---------------------------------------------------------------------------

/// Period rate of a compounded overnight leg: (exp(integral of c) - 1) / accrual.
inline double compoundedOisPeriodRate(double shortRatePathIntegral, double accrual) {
    if (!(accrual > 0.0))
        throw std::invalid_argument("compoundedOisPeriodRate: accrual must be > 0");
    return std::expm1(shortRatePathIntegral) / accrual;
}

}  // namespace usdsilo
