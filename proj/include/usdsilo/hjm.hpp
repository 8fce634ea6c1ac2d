#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "usdsilo/errors.hpp"
#include "usdsilo/pricing.hpp"
#include "usdsilo/rng.hpp"
#include "usdsilo/stats.hpp"
#include "usdsilo/termstructure.hpp"

namespace usdsilo {

// ---------------------------------------------------------------------------
// Model specification
// ---------------------------------------------------------------------------

/// One factor of the instantaneous-forward volatility:
/// sigma_k(t,s) = a_k * exp(-lambda_k (s - t)).
struct HjmVolFactor {
    double a = 0.0;
    double lambda = 0.0;
};

/// Bond volatility component: integral of sigma_k(t,u) du over [t, t+tau].
inline double hjmBondVolFactor(const HjmVolFactor& f, double tau) {
    if (f.lambda == 0.0) return f.a * tau;
    return -f.a * std::expm1(-f.lambda * tau) / f.lambda;
}

/// No-arbitrage drift of the instantaneous forward under the adjusted
/// risk-neutral measure: sigma(t,s) . integral_t^s sigma(t,u) du.
inline double hjmDrift(const std::vector<HjmVolFactor>& factors, double t, double s) {
    if (s < t) throw std::invalid_argument("hjmDrift: requires t <= s");
    const double tau = s - t;
    double drift = 0.0;
    for (const auto& f : factors)
        drift += f.a * std::exp(-f.lambda * tau) * hjmBondVolFactor(f, tau);
    return drift;
}

/// Multi-factor model of the USD-silo term structure: the effective
/// instantaneous forward of currency j, per-period compounded-OIS forwards,
/// per-period LIBOR-OIS spreads, and the spot FX against USD, all driven by
/// one d-dimensional Brownian motion under the adjusted risk-neutral measure
/// of currency j. The USD short rate is deterministic (curve-implied).
struct HjmModelSpec {
    std::vector<HjmVolFactor> factors;           // sigma(t,s) parameterization
    std::vector<std::vector<double>> oisVols;    // sigma_m per period, each R^d
    std::vector<std::vector<double>> liborVols;  // Sigma_m per period, each R^d
    std::vector<double> fxVol;                   // sigma_X in R^d
    double fmax = 10.0;                          // |forward| sanity bound, per annum

    TenorStructure tenor;
    DiscountCurve dbar;                  // Dbar(0, .)
    DiscountCurve usdOis;                // D(0, .) of USD, the c^(i) source
    std::vector<double> oisForwards;     // Lois_m(0) per period; may be empty
    std::vector<double> liborForwards;   // L_m(0) per period; may be empty
    double fxSpotJPerUsd = 1.0;          // f_x^{(j,i)}(0), units of j per USD

    int factorCount() const { return static_cast<int>(factors.size()); }

    /// Same per-factor volatility vector for every period.
    static std::vector<std::vector<double>> broadcast(int periods,
                                                      const std::vector<double>& v) {
        return std::vector<std::vector<double>>(static_cast<std::size_t>(periods), v);
    }

    void validate() const {
        const int d = factorCount();
        if (d < 1) throw std::invalid_argument("HjmModelSpec: needs at least one factor");
        for (const auto& f : factors)
            if (!(f.lambda >= 0.0) || !std::isfinite(f.a))
                throw std::invalid_argument("HjmModelSpec: invalid volatility factor");
        if (!(fmax > 0.0)) throw std::invalid_argument("HjmModelSpec: fmax must be > 0");
        if (!(fxSpotJPerUsd > 0.0))
            throw std::invalid_argument("HjmModelSpec: FX spot must be > 0");
        if (!fxVol.empty() && static_cast<int>(fxVol.size()) != d)
            throw std::invalid_argument("HjmModelSpec: fxVol dimension mismatch");
        const auto checkVols = [&](const std::vector<std::vector<double>>& vols,
                                   const char* what) {
            if (vols.empty()) return;
            if (static_cast<int>(vols.size()) != tenor.size())
                throw std::invalid_argument(std::string("HjmModelSpec: ") + what +
                                            " must carry one vector per period");
            for (const auto& v : vols)
                if (static_cast<int>(v.size()) != d)
                    throw std::invalid_argument(std::string("HjmModelSpec: ") + what +
                                                " dimension mismatch");
        };
        checkVols(oisVols, "oisVols");
        checkVols(liborVols, "liborVols");
        if (!oisForwards.empty() &&
            static_cast<int>(oisForwards.size()) != tenor.size())
            throw std::invalid_argument("HjmModelSpec: oisForwards size mismatch");
        if (!liborForwards.empty()) {
            if (static_cast<int>(liborForwards.size()) != tenor.size())
                throw std::invalid_argument("HjmModelSpec: liborForwards size mismatch");
            if (oisForwards.empty())
                throw std::invalid_argument(
                    "HjmModelSpec: LIBOR forwards are modelled as OIS + spread and need "
                    "OIS forwards alongside");
        }
    }

    /// Model over the market state of a curve set.
    static HjmModelSpec fromCurveSet(const CurveSet& cs, const TenorStructure& tenor,
                                     std::vector<HjmVolFactor> factors,
                                     std::vector<double> oisVol, std::vector<double> liborVol,
                                     std::vector<double> fxVol, double fmax = 10.0) {
        HjmModelSpec m{std::move(factors),
                       {},
                       {},
                       std::move(fxVol),
                       fmax,
                       tenor,
                       cs.dbarJ,
                       cs.usd.oisDiscount,
                       {},
                       {},
                       cs.fxSpotJPerUsd()};
        if (cs.oisJ) {
            detail::checkAligned(*cs.oisJ, tenor, "HjmModelSpec::fromCurveSet");
            m.oisForwards.assign(cs.oisJ->values().begin(),
                                 cs.oisJ->values().begin() + tenor.size());
            m.oisVols = broadcast(tenor.size(), oisVol);
        }
        if (cs.oisJ && cs.liborJ.alignedWith(tenor)) {
            m.liborForwards.assign(cs.liborJ.values().begin(),
                                   cs.liborJ.values().begin() + tenor.size());
            m.liborVols = broadcast(tenor.size(), liborVol);
        }
        m.validate();
        return m;
    }
};

// ---------------------------------------------------------------------------
// Simulation grid
// ---------------------------------------------------------------------------

/// Euler grid: curve maturities carried by each path plus the simulation
/// times, which are a prefix of the maturities.
struct SimGrid {
    std::vector<double> timeSteps;      // t_0..t_K, t_i == fwdMaturities[i]
    std::vector<double> fwdMaturities;  // s_0..s_N, all tenor pillars included
    std::vector<int> pillarOfTenor;     // refined index of tenor grid index 0..M
    long paths = 0;
    uint64_t seed = 0;

    int stepCount() const { return static_cast<int>(timeSteps.size()) - 1; }
    int maturityCount() const { return static_cast<int>(fwdMaturities.size()) - 1; }

    void validate() const {
        if (paths < 2) throw std::invalid_argument("SimGrid: needs at least 2 paths");
        if (timeSteps.size() < 2 || fwdMaturities.size() < timeSteps.size())
            throw std::invalid_argument("SimGrid: needs at least one step");
        for (std::size_t i = 0; i < timeSteps.size(); ++i)
            if (timeSteps[i] != fwdMaturities[i])
                throw std::invalid_argument(
                    "SimGrid: timeSteps must be a prefix of fwdMaturities");
        for (std::size_t i = 1; i < fwdMaturities.size(); ++i)
            if (!(fwdMaturities[i - 1] < fwdMaturities[i]))
                throw std::invalid_argument("SimGrid: grid times must be ascending");
    }
};

/// Builds the grid from a tenor structure, `substeps` Euler steps per tenor
/// interval, simulated up to tenor index `stepsToTenorIndex` (-1 = the whole
/// grid).
inline SimGrid makeSimGrid(const TenorStructure& tenor, int substeps, long paths,
                           uint64_t seed, int stepsToTenorIndex = -1) {
    if (substeps < 1) throw std::invalid_argument("makeSimGrid: substeps must be >= 1");
    SimGrid g;
    g.paths = paths;
    g.seed = seed;
    g.pillarOfTenor.resize(static_cast<std::size_t>(tenor.size()) + 1);
    g.fwdMaturities.push_back(tenor.time(0));
    g.pillarOfTenor[0] = 0;
    for (int m = 1; m <= tenor.size(); ++m) {
        const double lo = tenor.time(m - 1);
        const double hi = tenor.time(m);
        for (int k = 1; k < substeps; ++k)
            g.fwdMaturities.push_back(lo + (hi - lo) * k / substeps);
        g.fwdMaturities.push_back(hi);
        g.pillarOfTenor[m] = static_cast<int>(g.fwdMaturities.size()) - 1;
    }
    const int lastTenor = stepsToTenorIndex < 0 ? tenor.size() : stepsToTenorIndex;
    if (lastTenor < 1 || lastTenor > tenor.size())
        throw std::invalid_argument("makeSimGrid: stepsToTenorIndex out of range");
    const int lastRefined = g.pillarOfTenor[lastTenor];
    g.timeSteps.assign(g.fwdMaturities.begin(), g.fwdMaturities.begin() + lastRefined + 1);
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// Path state
// ---------------------------------------------------------------------------

class HjmEngine;

/// State of one simulated path at a grid time.
///
/// The curve block is stored as deflated bonds Dbar(t,s_m)/betaBar(t),
/// held as baseline(0,s_m) times an accumulated log increment, which keeps
/// the zero-volatility path bitwise equal to the initial curve. The
/// discretized forward curve, the numeraire and the spot FX are exposed as
/// views of that block.
class PathState {
public:
    int timeIndex() const { return step_; }

    /// Dbar(t, s_m) / betaBar(t) for maturity index m >= timeIndex().
    double deflatedBond(int m) const;

    /// Adjusted collateral account betaBar(t) = exp(int_0^t rbar).
    double betaBar() const { return 1.0 / betaBarInverse(); }
    double betaBarInverse() const { return deflatedBond(step_); }

    /// Average effective instantaneous forward over grid interval
    /// [s_n, s_{n+1}], n >= timeIndex().
    double fbar(int n) const;

    /// Spot FX, units of currency j per USD.
    double fxJPerUsd() const;

    /// Deflated FX claim betaBar(t)^{-1} f_x^{(j,i)}(t) exp(int_0^t c^(i)):
    /// a unit-initialized exact martingale of the scheme.
    double fxClaimNormalized() const { return std::exp(fxAcc_); }

    double oisForward(int period) const { return oisFwd_[period - 1]; }    // 1-based
    double liborOisSpread(int period) const { return spread_[period - 1]; }
    double liborForward(int period) const {
        return oisFwd_[period - 1] + spread_[period - 1];
    }

    bool hasOisForwards() const { return !oisFwd_.empty(); }
    bool hasLiborForwards() const { return !spread_.empty(); }

private:
    friend class HjmEngine;
    const HjmEngine* engine_ = nullptr;
    int step_ = 0;
    std::vector<double> zAcc_;    // accumulated log increments of deflated bonds
    std::vector<double> oisFwd_;  // per tenor period
    std::vector<double> spread_;  // LIBOR-OIS spread per tenor period
    double fxAcc_ = 0.0;          // accumulated log increment of the FX claim
};

// ---------------------------------------------------------------------------
// Swaptions and simulation requests
// ---------------------------------------------------------------------------

struct SwaptionSpec {
    enum class Kind { OisPayer, OisReceiver, BasisSpreadPayer, BasisSpreadReceiver };
    int expiryIndex = 0;  // S: tenor index of expiry = underlying start
    int endIndex = 0;     // M: tenor index of the last payment
    double strike = 0.0;
    Kind kind = Kind::OisPayer;

    bool isPayer() const { return kind == Kind::OisPayer || kind == Kind::BasisSpreadPayer; }
    bool isBasis() const {
        return kind == Kind::BasisSpreadPayer || kind == Kind::BasisSpreadReceiver;
    }

    void validate(const TenorStructure& tenor) const {
        if (expiryIndex < 1 || expiryIndex >= endIndex || endIndex > tenor.size())
            throw std::invalid_argument("SwaptionSpec: need 1 <= S < M <= grid length");
    }
};

inline const char* toString(SwaptionSpec::Kind k) {
    switch (k) {
        case SwaptionSpec::Kind::OisPayer: return "ois_payer";
        case SwaptionSpec::Kind::OisReceiver: return "ois_receiver";
        case SwaptionSpec::Kind::BasisSpreadPayer: return "basis_spread_payer";
        case SwaptionSpec::Kind::BasisSpreadReceiver: return "basis_spread_receiver";
    }
    return "?";
}

inline SwaptionSpec::Kind swaptionKindFromString(const std::string& s) {
    if (s == "ois_payer") return SwaptionSpec::Kind::OisPayer;
    if (s == "ois_receiver") return SwaptionSpec::Kind::OisReceiver;
    if (s == "basis_spread_payer") return SwaptionSpec::Kind::BasisSpreadPayer;
    if (s == "basis_spread_receiver") return SwaptionSpec::Kind::BasisSpreadReceiver;
    throw ParseError("unknown swaption kind '" + s + "'");
}

struct McEstimate {
    double value = 0.0;
    double stdError = 0.0;
    long paths = 0;
};

struct PillarCheck {
    double t = 0.0;
    double mean = 0.0;
    double target = 0.0;
    double stdError = 0.0;
    double z = 0.0;
};

struct DiagnosticsReport {
    std::vector<PillarCheck> deflatedBonds;  // E[Dbar(t,T)/betaBar] vs Dbar(0,T)
    std::vector<PillarCheck> deflatedFx;     // FX claim vs its forward
    bool hasAnnuityChecks = false;
    PillarCheck sbarDrift;  // annuity-deflated effective swap rate drift vs 0
    PillarCheck soisDrift;  // annuity-deflated forward OIS rate drift vs 0
    long negativeSpreadPaths = 0;
    double maxAbsForward = 0.0;

    double maxAbsZ() const {
        double z = 0.0;
        for (const auto& c : deflatedBonds) z = std::max(z, std::abs(c.z));
        for (const auto& c : deflatedFx) z = std::max(z, std::abs(c.z));
        if (hasAnnuityChecks) {
            z = std::max(z, std::abs(sbarDrift.z));
            z = std::max(z, std::abs(soisDrift.z));
        }
        return z;
    }
};

struct FunctionalRequest {
    std::string name;
    int atTenorIndex = 0;  // evaluation time
    std::function<double(const PathState&)> fn;
};

struct SimRequest {
    std::vector<SwaptionSpec> swaptions;
    bool diagnostics = false;
    std::optional<std::pair<int, int>> annuitySlice;  // (S, M) for the drift checks
    std::vector<FunctionalRequest> functionals;
    int threads = 1;
    bool retainStates = false;  // keep every path's terminal state (small runs only)
};

struct SimulationResult {
    std::vector<McEstimate> swaptionPrices;  // parallel to SimRequest::swaptions
    DiagnosticsReport diagnostics;
    std::vector<std::pair<std::string, RunningStat>> functionalStats;
    std::vector<PathState> retainedStates;
    long paths = 0;
    uint64_t seed = 0;
};

struct EngineOptions {
    /// Negative control: omit every no-arbitrage drift term. Martingale
    /// diagnostics are expected to fail with maturity-growing z-scores.
    bool dropDrift = false;
};

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Euler HJM engine under the adjusted risk-neutral measure of currency j
/// with betaBar as numeraire.
///
/// Per step the integrated-forward increments are applied with the drift of
/// the one-step forward measure (the exact compensator of the frozen-
/// coefficient lognormal step), so every deflated bond, every deflated
/// forward and the deflated FX claim are discrete martingales with no
/// time-step bias; the Euler error relative to the continuous-time drift is
/// O(h^2) per step. Gaussians come from a counter-based stream keyed by
/// (seed, path, step, factor), making results independent of path order and
/// worker count.
class HjmEngine {
public:
    HjmEngine(HjmModelSpec model, SimGrid grid, EngineOptions options = {})
        : model_(std::move(model)), grid_(std::move(grid)), options_(options) {
        model_.validate();
        grid_.validate();
        for (int m = 0; m <= model_.tenor.size(); ++m)
            if (grid_.fwdMaturities[grid_.pillarOfTenor[m]] != model_.tenor.time(m))
                throw std::invalid_argument("HjmEngine: grid does not carry the tenor pillars");
        precompute();
    }

    const HjmModelSpec& model() const { return model_; }
    const SimGrid& grid() const { return grid_; }
    int steps() const { return grid_.stepCount(); }
    int factorCount() const { return model_.factorCount(); }

    PathState initialState() const {
        PathState st;
        resetState(st);
        return st;
    }

    void resetState(PathState& st) const {
        st.engine_ = this;
        st.step_ = 0;
        st.zAcc_.assign(dfBase_.size(), 0.0);
        st.oisFwd_ = model_.oisForwards;
        st.spread_.clear();
        if (!model_.liborForwards.empty()) {
            st.spread_.resize(model_.liborForwards.size());
            for (std::size_t p = 0; p < st.spread_.size(); ++p)
                st.spread_[p] = model_.liborForwards[p] - model_.oisForwards[p];
        }
        st.fxAcc_ = 0.0;
    }

    /// One Euler step with externally supplied standard normals (one per
    /// factor). Throws StateExplosionError when a forward leaves [-fmax, fmax].
    void evolveStep(PathState& st, std::span<const double> z, long pathIndex = -1) const {
        const int j = st.step_;
        if (j >= steps()) throw std::logic_error("evolveStep: grid exhausted");
        if (static_cast<int>(z.size()) != factorCount())
            throw std::invalid_argument("evolveStep: needs one gaussian per factor");
        const int d = factorCount();
        const int N = grid_.maturityCount();

        const double* drift = &zDrift_[static_cast<std::size_t>(j) * (N + 1)];
        const double* vol = &zVol_[static_cast<std::size_t>(j) * (N + 1) * d];
        for (int m = j + 1; m <= N; ++m) {
            double dz = drift[m];
            for (int k = 0; k < d; ++k) dz += vol[m * d + k] * z[k];
            st.zAcc_[m] += dz;
        }

        if (!st.oisFwd_.empty()) {
            const int M = model_.tenor.size();
            const double* fd = &oisDrift_[static_cast<std::size_t>(j) * (M + 1)];
            const double* fv = &oisVol_[static_cast<std::size_t>(j) * (M + 1) * d];
            for (int p = firstLivePeriod_[j]; p <= M; ++p) {
                double df = fd[p];
                for (int k = 0; k < d; ++k) df += fv[p * d + k] * z[k];
                st.oisFwd_[p - 1] += df;
            }
            if (!st.spread_.empty()) {
                const double* sd = &spreadDrift_[static_cast<std::size_t>(j) * (M + 1)];
                const double* sv = &spreadVol_[static_cast<std::size_t>(j) * (M + 1) * d];
                for (int p = firstLivePeriod_[j]; p <= M; ++p) {
                    double ds = sd[p];
                    for (int k = 0; k < d; ++k) ds += sv[p * d + k] * z[k];
                    st.spread_[p - 1] += ds;
                }
            }
        }

        double dg = gDrift_[j];
        for (int k = 0; k < d; ++k) dg += gVol_[static_cast<std::size_t>(j) * d + k] * z[k];
        st.fxAcc_ += dg;

        st.step_ = j + 1;

        for (int n = st.step_; n < N; ++n) {
            const double f = st.fbar(n);
            if (!(std::abs(f) <= model_.fmax))
                throw StateExplosionError(
                    "simulated forward " + std::to_string(f) + " left the [-" +
                        std::to_string(model_.fmax) + ", " + std::to_string(model_.fmax) +
                        "] band (path " + std::to_string(pathIndex) + ", step " +
                        std::to_string(st.step_) + ")",
                    pathIndex, st.step_);
        }
    }

    /// Monte-Carlo driver. Deterministic given (model, grid, request up to
    /// thread count): accumulation is chunked by path index and merged in
    /// chunk order.
    SimulationResult run(const SimRequest& request) const;

    // -- deterministic references -------------------------------------------

    double baselineDeflatedBond(int m) const { return dfBase_[m]; }
    double usdGridDiscount(int timeIdx) const { return cDisc_[timeIdx]; }
    int refinedIndexOfTenor(int m) const { return grid_.pillarOfTenor[m]; }

    /// Undiscounted swaption payoff at the state's current time (must be the
    /// swaption expiry), already deflated by the numeraire:
    /// betaBar^{-1} A(T_S) (S(T_S) - K)^+ evaluated through deflated bonds.
    double deflatedSwaptionPayoff(const PathState& st, const SwaptionSpec& sw) const {
        const TenorStructure& tenor = model_.tenor;
        double den = 0.0;
        double num = 0.0;
        for (int m = sw.expiryIndex + 1; m <= sw.endIndex; ++m) {
            const double zb = st.deflatedBond(grid_.pillarOfTenor[m]);
            den += tenor.floatAccrual(m) * zb;
            num += tenor.floatAccrual(m) * zb * st.oisForward(m);
        }
        const double sois = num / den;
        double fwd = sois;
        if (sw.isBasis()) {
            const double sbar = (st.deflatedBond(grid_.pillarOfTenor[sw.expiryIndex]) -
                                 st.deflatedBond(grid_.pillarOfTenor[sw.endIndex])) /
                                den;
            fwd = sbar - sois;
        }
        const double intrinsic = sw.isPayer() ? fwd - sw.strike : sw.strike - fwd;
        return den * std::max(intrinsic, 0.0);
    }

private:
    friend class PathState;

    void precompute() {
        const int d = factorCount();
        const int N = grid_.maturityCount();
        const int K = steps();
        const int M = model_.tenor.size();

        dfBase_.resize(N + 1);
        for (int m = 0; m <= N; ++m) dfBase_[m] = model_.dbar.df(grid_.fwdMaturities[m]);
        x0_.resize(N);
        for (int n = 0; n < N; ++n) x0_[n] = std::log(dfBase_[n] / dfBase_[n + 1]);
        gridDt_.resize(N);
        for (int n = 0; n < N; ++n)
            gridDt_[n] = grid_.fwdMaturities[n + 1] - grid_.fwdMaturities[n];

        cDisc_.resize(K + 1);
        const double usdDf0 = model_.usdOis.df(grid_.timeSteps[0]);
        for (int i = 0; i <= K; ++i)
            cDisc_[i] = model_.usdOis.df(grid_.timeSteps[i]) / usdDf0;

        const bool haveFx = !model_.fxVol.empty();
        zDrift_.assign(static_cast<std::size_t>(K) * (N + 1), 0.0);
        zVol_.assign(static_cast<std::size_t>(K) * (N + 1) * d, 0.0);
        gDrift_.assign(K, 0.0);
        gVol_.assign(static_cast<std::size_t>(K) * d, 0.0);
        firstLivePeriod_.assign(K, M + 1);

        std::vector<double> nu(d);
        for (int j = 0; j < K; ++j) {
            const double t = grid_.timeSteps[j];
            const double h = grid_.timeSteps[j + 1] - t;
            const double sqrtH = std::sqrt(h);
            // bond volatility over the step itself: the one-step numeraire
            std::vector<double> nuStep(d);
            for (int k = 0; k < d; ++k)
                nuStep[k] = hjmBondVolFactor(model_.factors[k], grid_.timeSteps[j + 1] - t);
            for (int m = j + 1; m <= N; ++m) {
                double norm2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    nu[k] = hjmBondVolFactor(model_.factors[k], grid_.fwdMaturities[m] - t);
                    norm2 += nu[k] * nu[k];
                    zVol_[(static_cast<std::size_t>(j) * (N + 1) + m) * d + k] =
                        -sqrtH * nu[k];
                }
                if (!options_.dropDrift)
                    zDrift_[static_cast<std::size_t>(j) * (N + 1) + m] = -0.5 * norm2 * h;
            }
            double gNorm2 = 0.0;
            for (int k = 0; k < d; ++k) {
                const double sx = haveFx ? model_.fxVol[k] : 0.0;
                const double gv = sx - nuStep[k];
                gNorm2 += gv * gv;
                gVol_[static_cast<std::size_t>(j) * d + k] = sqrtH * gv;
            }
            if (!options_.dropDrift) gDrift_[j] = -0.5 * gNorm2 * h;
        }

        if (!model_.oisForwards.empty()) {
            const int dM = M + 1;
            oisDrift_.assign(static_cast<std::size_t>(K) * dM, 0.0);
            oisVol_.assign(static_cast<std::size_t>(K) * dM * d, 0.0);
            const bool haveSpread = !model_.liborForwards.empty();
            if (haveSpread) {
                spreadDrift_.assign(static_cast<std::size_t>(K) * dM, 0.0);
                spreadVol_.assign(static_cast<std::size_t>(K) * dM * d, 0.0);
            }
            for (int j = 0; j < K; ++j) {
                const double t = grid_.timeSteps[j];
                const double h = grid_.timeSteps[j + 1] - t;
                const double sqrtH = std::sqrt(h);
                for (int p = 1; p <= M; ++p) {
                    // forward of period p is live while t_{j+1} <= T_{p-1}
                    if (grid_.pillarOfTenor[p - 1] < j + 1) continue;
                    firstLivePeriod_[j] = std::min(firstLivePeriod_[j], p);
                    double driftOis = 0.0;
                    double driftSpread = 0.0;
                    for (int k = 0; k < d; ++k) {
                        const double nuEnd =
                            hjmBondVolFactor(model_.factors[k], model_.tenor.time(p) - t);
                        const double so = model_.oisVols[p - 1][k];
                        oisVol_[(static_cast<std::size_t>(j) * dM + p) * d + k] = sqrtH * so;
                        driftOis += so * nuEnd;
                        if (haveSpread) {
                            const double ss = model_.liborVols[p - 1][k] - so;
                            spreadVol_[(static_cast<std::size_t>(j) * dM + p) * d + k] =
                                sqrtH * ss;
                            driftSpread += ss * nuEnd;
                        }
                    }
                    if (!options_.dropDrift) {
                        oisDrift_[static_cast<std::size_t>(j) * dM + p] = driftOis * h;
                        if (haveSpread)
                            spreadDrift_[static_cast<std::size_t>(j) * dM + p] =
                                driftSpread * h;
                    }
                }
            }
        }
    }

    HjmModelSpec model_;
    SimGrid grid_;
    EngineOptions options_;

    std::vector<double> dfBase_;   // Dbar(0, s_m)
    std::vector<double> x0_;       // initial integrated forwards per grid interval
    std::vector<double> gridDt_;   // s_{n+1} - s_n
    std::vector<double> cDisc_;    // exp(-int_0^t c^(i)) at step times
    std::vector<double> zDrift_;   // [step][maturity]
    std::vector<double> zVol_;     // [step][maturity][factor]
    std::vector<double> oisDrift_;
    std::vector<double> oisVol_;
    std::vector<double> spreadDrift_;
    std::vector<double> spreadVol_;
    std::vector<double> gDrift_;
    std::vector<double> gVol_;
    std::vector<int> firstLivePeriod_;
};

inline double PathState::deflatedBond(int m) const {
    return engine_->dfBase_[m] * std::exp(zAcc_[m]);
}

inline double PathState::fbar(int n) const {
    return (engine_->x0_[n] + zAcc_[n] - zAcc_[n + 1]) / engine_->gridDt_[n];
}

inline double PathState::fxJPerUsd() const {
    return engine_->model_.fxSpotJPerUsd * std::exp(fxAcc_) * engine_->cDisc_[step_] /
           deflatedBond(step_);
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

namespace detail {

struct ChunkAccum {
    std::vector<RunningStat> bonds;
    std::vector<RunningStat> fx;
    RunningStat u1, u2;
    std::vector<RunningStat> swaptions;
    std::vector<RunningStat> functionals;
    long negativeSpreadPaths = 0;
    double maxAbsForward = 0.0;
    std::vector<PathState> states;
    long explodedPath = -1;
    int explodedStep = -1;
    std::string explosionWhat;
};

}  // namespace detail

inline SimulationResult HjmEngine::run(const SimRequest& request) const {
    const TenorStructure& tenor = model_.tenor;
    for (const auto& sw : request.swaptions) {
        sw.validate(tenor);
        if (model_.oisForwards.empty())
            throw MissingCurveError("run: swaption pricing needs OIS forwards in the model");
        if (grid_.pillarOfTenor[sw.expiryIndex] > steps())
            throw std::invalid_argument("run: swaption expires beyond the simulated horizon");
    }
    std::pair<int, int> slice{0, 0};
    bool annuityChecks = false;
    if (request.diagnostics && !model_.oisForwards.empty()) {
        slice = request.annuitySlice.value_or(
            std::make_pair(std::max(1, tenor.size() / 2), tenor.size()));
        if (slice.first < 1 || slice.first >= slice.second || slice.second > tenor.size())
            throw std::invalid_argument("run: invalid annuity slice");
        annuityChecks = grid_.pillarOfTenor[slice.first] <= steps();
    }
    for (const auto& f : request.functionals)
        if (f.atTenorIndex < 1 || f.atTenorIndex > tenor.size() ||
            grid_.pillarOfTenor[f.atTenorIndex] > steps())
            throw std::invalid_argument("run: functional time outside the simulated horizon");

    // diagnostics recorded at simulated tenor pillars
    std::vector<int> recordTenor;
    if (request.diagnostics)
        for (int m = 1; m <= tenor.size(); ++m)
            if (grid_.pillarOfTenor[m] <= steps()) recordTenor.push_back(m);

    // deterministic slice references for the annuity drift checks
    double den0 = 0.0, num0 = 0.0, numOis0 = 0.0;
    if (annuityChecks) {
        for (int m = slice.first + 1; m <= slice.second; ++m) {
            const double df = dfBase_[grid_.pillarOfTenor[m]];
            den0 += tenor.floatAccrual(m) * df;
            numOis0 += tenor.floatAccrual(m) * df * model_.oisForwards[m - 1];
        }
        num0 = dfBase_[grid_.pillarOfTenor[slice.first]] -
               dfBase_[grid_.pillarOfTenor[slice.second]];
    }

    const int d = factorCount();
    const int K = steps();
    const long paths = grid_.paths;
    constexpr long kChunk = 2048;
    const long chunks = (paths + kChunk - 1) / kChunk;
    std::vector<detail::ChunkAccum> accums(static_cast<std::size_t>(chunks));

    const int threads = std::max(1, request.threads);
    std::atomic<long> nextChunk{0};

    auto worker = [&]() {
        PathState st;
        std::vector<double> z(static_cast<std::size_t>(d));
        for (;;) {
            const long c = nextChunk.fetch_add(1);
            if (c >= chunks) return;
            auto& acc = accums[static_cast<std::size_t>(c)];
            acc.bonds.resize(recordTenor.size());
            acc.fx.resize(recordTenor.size());
            acc.swaptions.resize(request.swaptions.size());
            acc.functionals.resize(request.functionals.size());
            const long first = c * kChunk;
            const long last = std::min(paths, first + kChunk);
            for (long path = first; path < last; ++path) {
                resetState(st);
                bool negativeSpread = false;
                try {
                    std::size_t rec = 0;
                    for (int j = 0; j < K; ++j) {
                        for (int k = 0; k < d; ++k)
                            z[static_cast<std::size_t>(k)] =
                                rng::normalDraw(grid_.seed, static_cast<uint64_t>(path),
                                                static_cast<uint32_t>(j),
                                                static_cast<uint32_t>(k));
                        evolveStep(st, z, path);
                        const int arrived = st.timeIndex();
                        for (int n = arrived; n < grid_.maturityCount(); ++n)
                            acc.maxAbsForward = std::max(acc.maxAbsForward,
                                                         std::abs(st.fbar(n)));
                        if (!st.spread_.empty())
                            for (int p = 1; p <= tenor.size(); ++p)
                                if (grid_.pillarOfTenor[p - 1] >= arrived &&
                                    st.liborOisSpread(p) < 0.0)
                                    negativeSpread = true;
                        if (rec < recordTenor.size() &&
                            grid_.pillarOfTenor[recordTenor[rec]] == arrived) {
                            acc.bonds[rec].add(st.deflatedBond(arrived));
                            acc.fx[rec].add(model_.fxSpotJPerUsd * st.fxClaimNormalized());
                            ++rec;
                        }
                        if (annuityChecks && grid_.pillarOfTenor[slice.first] == arrived) {
                            double den = 0.0, numOis = 0.0;
                            for (int m = slice.first + 1; m <= slice.second; ++m) {
                                const double zb = st.deflatedBond(grid_.pillarOfTenor[m]);
                                den += tenor.floatAccrual(m) * zb;
                                numOis += tenor.floatAccrual(m) * zb * st.oisForward(m);
                            }
                            const double zS = st.deflatedBond(grid_.pillarOfTenor[slice.first]);
                            const double zM =
                                st.deflatedBond(grid_.pillarOfTenor[slice.second]);
                            acc.u1.add(den0 * (zS - zM) - num0 * den);
                            acc.u2.add(den0 * numOis - numOis0 * den);
                        }
                        for (std::size_t s = 0; s < request.swaptions.size(); ++s)
                            if (grid_.pillarOfTenor[request.swaptions[s].expiryIndex] ==
                                arrived)
                                acc.swaptions[s].add(
                                    deflatedSwaptionPayoff(st, request.swaptions[s]));
                        for (std::size_t f = 0; f < request.functionals.size(); ++f)
                            if (grid_.pillarOfTenor[request.functionals[f].atTenorIndex] ==
                                arrived)
                                acc.functionals[f].add(request.functionals[f].fn(st));
                    }
                } catch (const StateExplosionError& e) {
                    if (acc.explodedPath < 0) {
                        acc.explodedPath = path;
                        acc.explodedStep = e.stepIndex;
                        acc.explosionWhat = e.what();
                    }
                    continue;
                }
                if (negativeSpread) ++acc.negativeSpreadPaths;
                if (request.retainStates) acc.states.push_back(st);
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // first explosion in path order aborts the whole path set
    for (const auto& acc : accums)
        if (acc.explodedPath >= 0)
            throw StateExplosionError(acc.explosionWhat, acc.explodedPath, acc.explodedStep);

    // merge in fixed chunk order: results are independent of the thread count
    detail::ChunkAccum total;
    total.bonds.resize(recordTenor.size());
    total.fx.resize(recordTenor.size());
    total.swaptions.resize(request.swaptions.size());
    total.functionals.resize(request.functionals.size());
    SimulationResult result;
    for (auto& acc : accums) {
        for (std::size_t i = 0; i < recordTenor.size(); ++i) {
            total.bonds[i].merge(acc.bonds[i]);
            total.fx[i].merge(acc.fx[i]);
        }
        total.u1.merge(acc.u1);
        total.u2.merge(acc.u2);
        for (std::size_t s = 0; s < request.swaptions.size(); ++s)
            total.swaptions[s].merge(acc.swaptions[s]);
        for (std::size_t f = 0; f < request.functionals.size(); ++f)
            total.functionals[f].merge(acc.functionals[f]);
        total.negativeSpreadPaths += acc.negativeSpreadPaths;
        total.maxAbsForward = std::max(total.maxAbsForward, acc.maxAbsForward);
        for (auto& s : acc.states) result.retainedStates.push_back(std::move(s));
    }

    result.paths = paths;
    result.seed = grid_.seed;
    for (std::size_t s = 0; s < request.swaptions.size(); ++s)
        result.swaptionPrices.push_back({total.swaptions[s].mean(),
                                         total.swaptions[s].stdError(),
                                         total.swaptions[s].count()});
    for (std::size_t f = 0; f < request.functionals.size(); ++f)
        result.functionalStats.emplace_back(request.functionals[f].name,
                                            total.functionals[f]);

    if (request.diagnostics) {
        DiagnosticsReport& diag = result.diagnostics;
        for (std::size_t i = 0; i < recordTenor.size(); ++i) {
            const int refined = grid_.pillarOfTenor[recordTenor[i]];
            PillarCheck bond;
            bond.t = grid_.fwdMaturities[refined];
            bond.mean = total.bonds[i].mean();
            bond.target = dfBase_[refined];
            bond.stdError = total.bonds[i].stdError();
            bond.z = zScore(total.bonds[i], bond.target);
            diag.deflatedBonds.push_back(bond);

            PillarCheck fx;
            fx.t = bond.t;
            // scaled view E[betaBar^{-1} fx] vs fx(0) D^(i)(0,t); the scaling
            // by the deterministic USD discount leaves the z-score unchanged
            fx.mean = total.fx[i].mean() * cDisc_[refined];
            fx.target = model_.fxSpotJPerUsd * cDisc_[refined];
            fx.stdError = total.fx[i].stdError() * cDisc_[refined];
            fx.z = zScore(total.fx[i], model_.fxSpotJPerUsd);
            diag.deflatedFx.push_back(fx);
        }
        if (annuityChecks) {
            diag.hasAnnuityChecks = true;
            const double scale = den0 * den0;
            diag.sbarDrift = {grid_.fwdMaturities[grid_.pillarOfTenor[slice.first]],
                              total.u1.mean() / scale, 0.0, total.u1.stdError() / scale,
                              zScore(total.u1, 0.0)};
            diag.soisDrift = {diag.sbarDrift.t, total.u2.mean() / scale, 0.0,
                              total.u2.stdError() / scale, zScore(total.u2, 0.0)};
        }
        diag.negativeSpreadPaths = total.negativeSpreadPaths;
        diag.maxAbsForward = total.maxAbsForward;
        if (diag.negativeSpreadPaths > 0)
            warn("simulation: LIBOR-OIS spread went negative on " +
                 std::to_string(diag.negativeSpreadPaths) + " of " + std::to_string(paths) +
                 " paths");
    }
    return result;
}

// ---------------------------------------------------------------------------
// Swaption pricing fronts
// ---------------------------------------------------------------------------

inline McEstimate priceOisSwaption(const HjmEngine& engine, const SwaptionSpec& swaption,
                                   int threads = 1) {
    if (swaption.isBasis())
        throw std::invalid_argument("priceOisSwaption: expected an OIS swaption kind");
    SimRequest req;
    req.swaptions = {swaption};
    req.threads = threads;
    return engine.run(req).swaptionPrices.front();
}

inline McEstimate priceBasisSwaption(const HjmEngine& engine, const SwaptionSpec& swaption,
                                     int threads = 1) {
    if (!swaption.isBasis())
        throw std::invalid_argument("priceBasisSwaption: expected a basis-spread kind");
    SimRequest req;
    req.swaptions = {swaption};
    req.threads = threads;
    return engine.run(req).swaptionPrices.front();
}

inline DiagnosticsReport martingaleDiagnostics(const HjmEngine& engine, int threads = 1,
                                               std::optional<std::pair<int, int>> slice =
                                                   std::nullopt) {
    SimRequest req;
    req.diagnostics = true;
    req.annuitySlice = slice;
    req.threads = threads;
    return engine.run(req).diagnostics;
}

/// Deterministic swaption value under zero volatility:
/// A(0) max(+/-(forward - strike), 0) with the annuity and the forward taken
/// from the curve set. The Monte-Carlo price degenerates to exactly this
/// number when every volatility is zero.
inline double swaptionIntrinsic(const CurveSet& cs, const TenorStructure& tenor,
                                const SwaptionSpec& sw) {
    sw.validate(tenor);
    const double a0 = annuity(cs.dbarJ, tenor, sw.expiryIndex, sw.endIndex);
    const double fwd = sw.isBasis() ? mtmccoisParSpread(cs, tenor, sw.expiryIndex, sw.endIndex)
                                    : forwardOisRate(cs, tenor, sw.expiryIndex, sw.endIndex);
    const double intrinsic = sw.isPayer() ? fwd - sw.strike : sw.strike - fwd;
    return a0 * std::max(intrinsic, 0.0);
}

}  // namespace usdsilo
