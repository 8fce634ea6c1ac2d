// silo: USD-silo curve construction, pricing and simulation from the command line.
//
// Subcommands: build-curves, price, overlay, simulate, selftest.
// Exit codes: 0 success, 1 I/O or parse failure, 2 data inconsistency,
// 3 numerical failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "usdsilo/bootstrap.hpp"
#include "usdsilo/errors.hpp"
#include "usdsilo/hjm.hpp"
#include "usdsilo/io.hpp"
#include "usdsilo/pricing.hpp"
#include "usdsilo/termstructure.hpp"

namespace fs = std::filesystem;
using namespace usdsilo;

namespace {

// ---------------------------------------------------------------------------
// Logging (SILO_LOG = debug | info | warn | error | off; default warn)
// ---------------------------------------------------------------------------

int logLevel() {
    static const int level = [] {
        const char* env = std::getenv("SILO_LOG");
        if (!env) return 1;
        const std::string s(env);
        if (s == "debug") return 3;
        if (s == "info") return 2;
        if (s == "warn") return 1;
        if (s == "error") return 0;
        return -1;  // off
    }();
    return level;
}

void logAt(int level, const char* tag, const std::string& msg) {
    if (logLevel() >= level) std::cerr << "silo " << tag << ": " << msg << "\n";
}
void logError(const std::string& m) { logAt(0, "error", m); }
void logWarn(const std::string& m) { logAt(1, "warn", m); }
void logInfo(const std::string& m) { logAt(2, "info", m); }

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// ---------------------------------------------------------------------------
// Shared option bags
// ---------------------------------------------------------------------------

struct BuildOptions {
    std::string quotesPath;
    std::string outDir;
    std::string route = "libor";
    std::string currency = "JPY";
    double fxSpot = 1.0;  // USD per unit of currency j
    double grid = 0.25;
    std::string fixedDc = "ACT365F";
    std::string floatDc = "ACT365F";
    std::string usdFloatDc = "ACT365F";
};

struct PriceOptions {
    std::string curveSetPath;
    std::string curveSetKPath;
    std::string tradesPath;
    std::string outPath;
    bool extrapolate = false;
};

struct OverlayOptions {
    std::string pointsPath;
    std::string outPath;
    std::string currency = "JPY";
};

struct SimulateOptions {
    std::string curveSetPath;
    std::string modelPath;
    std::string tradesPath;
    std::string outPath;
    long pathsOverride = 0;
    uint64_t seedOverride = 0;
    bool seedSet = false;
    int threads = 1;
    bool corruptDrift = false;
};

// ---------------------------------------------------------------------------
// Curve-set loading
// ---------------------------------------------------------------------------

struct LoadedCurveSet {
    CurveSet cs;
    TenorStructure tenor;
    double dayCountRatio = 1.0;
    std::string route;
};

LoadedCurveSet loadCurveSet(const std::string& manifestPath, bool extrapolate = false) {
    const fs::path dir = fs::path(manifestPath).parent_path();
    const auto m = io::readCurveSetManifest(io::readFile(manifestPath));
    auto readCurve = [&](const std::string& name) {
        return io::readDiscountCurve(io::readFile((dir / name).string()), name);
    };
    DiscountCurve dbar = readCurve(m.dbarFile).withExtrapolation(extrapolate);
    DiscountCurve usdOis = readCurve(m.usdOisFile).withExtrapolation(extrapolate);
    ForwardCurve fwds =
        io::readForwardCurve(io::readFile((dir / m.forwardFile).string()), m.forwardFile);
    ForwardCurve usdLois =
        io::readForwardCurve(io::readFile((dir / m.usdLoisFile).string()), m.usdLoisFile);

    const int periods = fwds.size();
    TenorStructure tenor = TenorStructure::regular(
        0.0, periods, m.gridSpacing, dayCountFromString(m.fixedDc),
        dayCountFromString(m.floatDc), dayCountFromString(m.usdFloatDc));

    CurveSet cs{m.currency, std::move(dbar),          std::move(fwds), std::nullopt,
                UsdDomesticCurves{std::move(usdOis), std::move(usdLois)},
                m.fxSpotUsdPerJ};
    if (m.route == "ois") {
        // the forward file holds compounded-OIS forwards; expose them as such
        cs.oisJ = cs.liborJ;
        // LIBOR ops are unavailable on this route; keep the slot aligned
    }
    cs.validate();
    return {std::move(cs), std::move(tenor), m.dayCountRatio(), m.route};
}

void attachCurrencyK(LoadedCurveSet& base, const std::string& manifestPathK,
                     bool extrapolate) {
    LoadedCurveSet k = loadCurveSet(manifestPathK, extrapolate);
    base.cs.currencyK = k.cs.currency;
    base.cs.dbarK = k.cs.dbarJ;
    base.cs.fxSpotUsdPerK = k.cs.fxSpotUsdPerJ;
    base.cs.validate();
}

int tenorIndexOf(const TenorStructure& tenor, double t, const char* what) {
    const double spacing = tenor.time(1) - tenor.time(0);
    const int idx = static_cast<int>(std::lround((t - tenor.start()) / spacing));
    if (idx < 0 || idx > tenor.size() || std::abs(tenor.time(idx) - t) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": time " + std::to_string(t) +
                                    " is not on the curve grid");
    return idx;
}

// ---------------------------------------------------------------------------
// build-curves
// ---------------------------------------------------------------------------

struct QuoteResidual {
    std::string instrument;
    double maturity;
    double quote;
    double reprice;
};

int cmdBuildCurves(const BuildOptions& opt) {
    const auto table = io::readQuotesCsv(io::readFile(opt.quotesPath));
    const DayCount fixedDc = dayCountFromString(opt.fixedDc);
    const DayCount floatDc = dayCountFromString(opt.floatDc);
    const DayCount usdDc = dayCountFromString(opt.usdFloatDc);

    auto require = [&](io::Instrument inst) -> const std::vector<std::pair<double, double>>& {
        auto it = table.find(inst);
        if (it == table.end() || it->second.empty())
            throw QuoteGapError(std::string("build-curves: route '") + opt.route +
                                "' needs " + io::toString(inst) + " quotes");
        return it->second;
    };

    const bool liborRoute = opt.route == "libor";
    const auto& primary = require(liborRoute ? io::Instrument::Irs : io::Instrument::Ois);
    const auto& basis =
        require(liborRoute ? io::Instrument::MtmCcs : io::Instrument::MtmCcois);
    const auto& usdOisQuotes = require(io::Instrument::UsdOis);

    double maxT = 0.0;
    for (const auto& [t, v] : primary) maxT = std::max(maxT, t);
    const int periods = static_cast<int>(std::lround(maxT / opt.grid));
    if (periods < 1 || std::abs(periods * opt.grid - maxT) > 1e-9)
        throw QuoteGapError("build-curves: quote maturities do not sit on a grid of spacing " +
                            std::to_string(opt.grid));
    TenorStructure tenor =
        TenorStructure::regular(0.0, periods, opt.grid, fixedDc, floatDc, usdDc);
    logInfo("grid: " + std::to_string(periods) + " periods of " + std::to_string(opt.grid) +
            "y");

    const DiscountCurve usdOis =
        usdOisFromParRates(tenor, densifyQuotes(usdOisQuotes, tenor.pillars()));
    std::vector<double> loisValues(static_cast<std::size_t>(periods), 0.0);
    if (auto it = table.find(io::Instrument::UsdLois); it != table.end()) {
        loisValues = densifyQuotes(it->second, tenor.pillars());
    } else if (liborRoute) {
        throw QuoteGapError("build-curves: route 'libor' needs USDLOIS quotes");
    } else {
        logWarn("no USDLOIS quotes; USD LIBOR-OIS spreads default to zero");
    }
    UsdDomesticCurves usd{usdOis, ForwardCurve::onTenor(ForwardCurve::Kind::LiborOisSpread,
                                                        tenor, loisValues)};

    const double ratio = tenor.fixedAccrual(1) / tenor.floatAccrual(1);
    DiscountCurve dbar = [&] {
        if (liborRoute) {
            SiloQuotesLibor q{tenor, densifyQuotes(primary, tenor.pillars()),
                              densifyQuotes(basis, tenor.pillars()), ratio};
            return bootstrapEffectiveDiscountLibor(q, usd);
        }
        SiloQuotesOis q{tenor, densifyQuotes(primary, tenor.pillars()),
                        densifyQuotes(basis, tenor.pillars())};
        return bootstrapEffectiveDiscountOis(q);
    }();
    ForwardCurve fwds = [&] {
        if (liborRoute) {
            SiloQuotesLibor q{tenor, densifyQuotes(primary, tenor.pillars()),
                              densifyQuotes(basis, tenor.pillars()), ratio};
            return extractLiborForwards(q, dbar);
        }
        return oisForwardsFromCurve(tenor, dbar, densifyQuotes(primary, tenor.pillars()));
    }();

    CurveSet cs{opt.currency, dbar,   fwds, std::nullopt, usd, opt.fxSpot,
                "",           std::nullopt, std::nullopt};
    if (!liborRoute) cs.oisJ = fwds;

    // reprice every input quote through the pricing module
    std::vector<QuoteResidual> residuals;
    for (const auto& [inst, rows] : table) {
        for (const auto& [t, quote] : rows) {
            const int m = tenorIndexOf(tenor, t, "build-curves");
            double reprice = 0.0;
            switch (inst) {
                case io::Instrument::Irs: reprice = irsParRate(cs, tenor, m); break;
                case io::Instrument::MtmCcs:
                    reprice = mtmccsParSpread(cs, tenor, m, ratio);
                    break;
                case io::Instrument::Ois:
                case io::Instrument::MtmCcois: {
                    CurveSet tmp = cs;
                    tmp.oisJ = fwds;
                    reprice = inst == io::Instrument::Ois
                                  ? oisParRate(tmp, tenor, m)
                                  : mtmccoisParSpread(tmp, tenor, 0, m);
                    break;
                }
                case io::Instrument::UsdOis: {
                    double a = 0.0;
                    for (int i = 1; i <= m; ++i)
                        a += tenor.floatAccrualUsd(i) * usdOis.df(tenor.time(i));
                    reprice = (1.0 - usdOis.df(tenor.time(m))) / a;
                    break;
                }
                case io::Instrument::UsdLois:
                    reprice = usd.liborOisSpreads.value(m - 1);
                    break;
            }
            residuals.push_back({io::toString(inst), t, quote, reprice});
        }
    }

    // emit files
    fs::create_directories(opt.outDir);
    const fs::path out(opt.outDir);
    io::writeFile((out / "dbar.json").string(), io::writeDiscountCurve(dbar));
    io::writeFile((out / "forwards.json").string(), io::writeForwardCurve(fwds));
    io::writeFile((out / "usd_ois.json").string(), io::writeDiscountCurve(usdOis));
    io::writeFile((out / "usd_lois.json").string(),
                  io::writeForwardCurve(usd.liborOisSpreads));
    io::CurveSetFiles manifest{opt.currency,  opt.route,      opt.fxSpot,
                               opt.grid,      opt.fixedDc,    opt.floatDc,
                               opt.usdFloatDc, "dbar.json",   "forwards.json",
                               "usd_ois.json", "usd_lois.json"};
    io::writeFile((out / "curveset.json").string(), io::writeCurveSetManifest(manifest));

    io::JsonWriter w;
    w.beginObject()
        .kv("schemaVersion", 1)
        .kv("command", "build-curves")
        .kv("currency", opt.currency)
        .kv("route", opt.route)
        .key("grid")
        .beginObject()
        .kv("spacing", opt.grid)
        .kv("periods", periods)
        .endObject()
        .key("pillars")
        .beginArray();
    for (int m = 1; m <= periods; ++m) {
        const double t = tenor.time(m);
        const double df = dbar.df(t);
        w.beginObject().kv("t", t).kv("df", df).kv("zeroRate", -std::log(df) / t).endObject();
    }
    w.endArray().key("residuals").beginArray();
    double maxAbsResidual = 0.0;
    for (const auto& r : residuals) {
        const double res = r.reprice - r.quote;
        maxAbsResidual = std::max(maxAbsResidual, std::abs(res));
        w.beginObject()
            .kv("instrument", r.instrument)
            .kv("maturityYears", r.maturity)
            .kv("quote", r.quote)
            .kv("reprice", r.reprice)
            .kv("residual", res)
            .kv("flagged", std::abs(res) > 1e-8)
            .endObject();
        if (std::abs(res) > 1e-8)
            logWarn("re-pricing residual " + io::fmt17(res) + " for " + r.instrument + " " +
                    io::fmt17(r.maturity) + "y");
    }
    w.endArray().kv("maxAbsResidual", maxAbsResidual).endObject();
    const std::string report = w.str() + "\n";
    io::writeFile((out / "build_report.json").string(), report);

    // human summary comes from the emitted JSON, not a second code path
    const auto j = io::parseJson(report, "build report");
    std::cout << "built " << j["currency"].get<std::string>() << " curves ("
              << j["route"].get<std::string>() << " route), "
              << j["grid"]["periods"].get<int>() << " pillars\n";
    std::cout << "  t         df          zeroRate\n";
    for (const auto& p : j["pillars"])
        std::cout << "  " << io::fmt6(p["t"].get<double>()) << "  "
                  << io::fmt6(p["df"].get<double>()) << "    "
                  << io::fmt6(p["zeroRate"].get<double>()) << "\n";
    std::cout << "max |re-pricing residual| = " << io::fmt17(j["maxAbsResidual"].get<double>())
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// price
// ---------------------------------------------------------------------------

int cmdPrice(const PriceOptions& opt) {
    LoadedCurveSet loaded = loadCurveSet(opt.curveSetPath, opt.extrapolate);
    if (!opt.curveSetKPath.empty()) attachCurrencyK(loaded, opt.curveSetKPath, opt.extrapolate);
    const auto trades = io::readTradesJson(io::readFile(opt.tradesPath));
    const CurveSet& cs = loaded.cs;
    const TenorStructure& tenor = loaded.tenor;

    io::JsonWriter w;
    w.beginObject()
        .kv("schemaVersion", 1)
        .kv("command", "price")
        .kv("currency", cs.currency)
        .key("trades")
        .beginArray();
    for (const auto& t : trades) {
        w.beginObject().kv("id", t.id).kv("type", t.type);
        try {
            if (t.type == "IRS" || t.type == "OIS" || t.type == "MTMCCS" ||
                t.type == "MTMCCOIS") {
                SwapSpec spec{tenor,
                              tenorIndexOf(tenor, t.start, "price"),
                              tenorIndexOf(tenor, t.end, "price"),
                              t.type == "IRS"      ? SwapSpec::Kind::Irs
                              : t.type == "OIS"    ? SwapSpec::Kind::Ois
                              : t.type == "MTMCCS" ? SwapSpec::Kind::MtmCcs
                                                   : SwapSpec::Kind::MtmCcois,
                              t.rateOrSpread,
                              t.payer,
                              t.notional};
                const SwapValuation v = valueSwap(cs, spec, loaded.dayCountRatio);
                w.kv("pv", v.pv).kv("par", v.par).kv("legFixed", v.legFixed).kv("legFloat",
                                                                                v.legFloat);
            } else if (t.type == "FXFORWARD") {
                if (t.pair == "CROSS") {
                    if (!cs.dbarK)
                        throw MissingCurveError("price: cross FX forward needs --curveset-k");
                    const double spotJPerK = *cs.fxSpotUsdPerK / cs.fxSpotUsdPerJ;
                    const double pv = (spotJPerK * cs.dbarK->df(t.end) -
                                       t.strike * cs.dbarJ.df(t.end)) *
                                      t.notional;
                    w.kv("pv", pv).kv("par", fxForwardCross(cs, t.end));
                } else {
                    w.kv("pv", fxForwardPv(cs, t.end, t.strike) * t.notional)
                        .kv("par", fxForwardUsd(cs, t.end));
                }
            } else if (t.type == "SWAPTION") {
                if (!cs.oisJ)
                    throw MissingCurveError(
                        "price: swaption needs OIS forwards (ois-route curve set)");
                SwaptionSpec sw{tenorIndexOf(tenor, t.start, "price"),
                                tenorIndexOf(tenor, t.end, "price"), t.strike,
                                swaptionKindFromString(t.swaptionKind)};
                w.kv("pv", swaptionIntrinsic(cs, tenor, sw) * t.notional)
                    .kv("par", sw.isBasis()
                                   ? mtmccoisParSpread(cs, tenor, sw.expiryIndex, sw.endIndex)
                                   : forwardOisRate(cs, tenor, sw.expiryIndex, sw.endIndex))
                    .kv("valuation", "intrinsic");
            } else {
                throw ParseError("price: unknown trade type '" + t.type + "'");
            }
        } catch (const std::exception& e) {
            // one bad trade must not abort the run
            w.kv("error", e.what());
            logWarn("trade " + t.id + ": " + e.what());
        }
        w.endObject();
    }
    w.endArray().endObject();
    const std::string report = w.str() + "\n";
    if (!opt.outPath.empty()) io::writeFile(opt.outPath, report);

    const auto j = io::parseJson(report, "price report");
    std::cout << "trade          type        pv              par\n";
    for (const auto& t : j["trades"]) {
        std::cout << "  " << t["id"].get<std::string>() << "  " << t["type"].get<std::string>();
        if (t.contains("error"))
            std::cout << "  ERROR: " << t["error"].get<std::string>() << "\n";
        else
            std::cout << "  " << io::fmt6(t["pv"].get<double>()) << "  "
                      << io::fmt6(t["par"].get<double>()) << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// overlay
// ---------------------------------------------------------------------------

int cmdOverlay(const OverlayOptions& opt) {
    const auto points = io::readOverlayCsv(io::readFile(opt.pointsPath));
    io::JsonWriter w;
    w.beginObject()
        .kv("schemaVersion", 1)
        .kv("command", "overlay")
        .kv("currency", opt.currency)
        .key("rows")
        .beginArray();
    for (const auto& p : points) {
        w.beginObject()
            .kv("t", p.t)
            .kv("spot", p.spot)
            .kv("point", p.point)
            .kv("usdRate", p.usdRate)
            .kv("accrual", p.accrual);
        try {
            w.kv("rate", overlayRateDomestic(p.spot, p.point, p.usdRate, p.accrual));
        } catch (const NonPositiveForwardError& e) {
            // bad rows are reported, the run continues
            w.kv("error", e.what());
            logWarn("overlay row t=" + io::fmt17(p.t) + ": " + e.what());
        }
        w.endObject();
    }
    w.endArray().endObject();
    const std::string report = w.str() + "\n";
    if (!opt.outPath.empty()) io::writeFile(opt.outPath, report);

    const auto j = io::parseJson(report, "overlay report");
    std::cout << "t           overlay rate (" << opt.currency << ")\n";
    for (const auto& r : j["rows"]) {
        std::cout << "  " << io::fmt6(r["t"].get<double>()) << "  ";
        if (r.contains("error"))
            std::cout << "ERROR: " << r["error"].get<std::string>() << "\n";
        else
            std::cout << io::fmt6(r["rate"].get<double>()) << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmdSimulate(const SimulateOptions& opt) {
    LoadedCurveSet loaded = loadCurveSet(opt.curveSetPath);
    const CurveSet& cs = loaded.cs;
    const TenorStructure& tenor = loaded.tenor;
    io::ModelConfig cfg = io::readModelJson(io::readFile(opt.modelPath));
    if (opt.pathsOverride > 0) cfg.paths = opt.pathsOverride;
    if (opt.seedSet) cfg.seed = opt.seedOverride;

    const int d = static_cast<int>(cfg.factors.size());
    auto defaulted = [&](std::vector<double> v) {
        if (v.empty()) v.assign(static_cast<std::size_t>(d), 0.0);
        if (static_cast<int>(v.size()) != d)
            throw ParseError("simulate: volatility vectors must have one entry per factor");
        return v;
    };
    HjmModelSpec model = HjmModelSpec::fromCurveSet(
        cs, tenor, cfg.factors, defaulted(cfg.oisSpreadVols), defaulted(cfg.liborVols),
        defaulted(cfg.sigmaFx), cfg.fmax);

    SimGrid grid = makeSimGrid(tenor, cfg.steps, cfg.paths, cfg.seed);
    HjmEngine engine(model, grid, EngineOptions{opt.corruptDrift});
    if (opt.corruptDrift) logWarn("running with corrupted (dropped) drift");

    SimRequest req;
    req.diagnostics = true;
    req.threads = opt.threads;
    std::vector<io::TradeRecord> swaptionTrades;
    if (!opt.tradesPath.empty()) {
        for (const auto& t : io::readTradesJson(io::readFile(opt.tradesPath))) {
            if (t.type != "SWAPTION") continue;
            if (!cs.oisJ)
                throw MissingCurveError(
                    "simulate: swaptions need OIS forwards (ois-route curve set)");
            swaptionTrades.push_back(t);
            req.swaptions.push_back({tenorIndexOf(tenor, t.start, "simulate"),
                                     tenorIndexOf(tenor, t.end, "simulate"), t.strike,
                                     swaptionKindFromString(t.swaptionKind)});
        }
    }

    const SimulationResult result = engine.run(req);
    const DiagnosticsReport& diag = result.diagnostics;
    const double maxZ = diag.maxAbsZ();
    const std::string status = maxZ >= 5.0 ? "fail" : maxZ >= 3.0 ? "warn" : "ok";

    io::JsonWriter w;
    w.beginObject()
        .kv("schemaVersion", 1)
        .kv("command", "simulate")
        .kv("currency", cs.currency)
        .key("grid")
        .beginObject()
        .kv("paths", result.paths)
        .kv("substeps", cfg.steps)
        .kv("seed", result.seed)
        .endObject()
        .key("swaptions")
        .beginArray();
    for (std::size_t i = 0; i < req.swaptions.size(); ++i) {
        const auto& sw = req.swaptions[i];
        const auto& est = result.swaptionPrices[i];
        w.beginObject()
            .kv("id", swaptionTrades[i].id)
            .kv("kind", toString(sw.kind))
            .kv("expiry", tenor.time(sw.expiryIndex))
            .kv("end", tenor.time(sw.endIndex))
            .kv("strike", sw.strike)
            .kv("price", est.value * swaptionTrades[i].notional)
            .kv("stdError", est.stdError * swaptionTrades[i].notional)
            .endObject();
    }
    auto writeChecks = [&w](const std::vector<PillarCheck>& checks) {
        for (const auto& c : checks)
            w.beginObject()
                .kv("t", c.t)
                .kv("mean", c.mean)
                .kv("target", c.target)
                .kv("stdError", c.stdError)
                .kv("z", c.z)
                .endObject();
    };
    w.endArray().key("diagnostics").beginObject().key("deflatedBonds").beginArray();
    writeChecks(diag.deflatedBonds);
    w.endArray().key("deflatedFx").beginArray();
    writeChecks(diag.deflatedFx);
    w.endArray();
    if (diag.hasAnnuityChecks) {
        w.key("annuityDrift").beginObject().key("sbar").beginObject();
        w.kv("t", diag.sbarDrift.t)
            .kv("mean", diag.sbarDrift.mean)
            .kv("stdError", diag.sbarDrift.stdError)
            .kv("z", diag.sbarDrift.z)
            .endObject()
            .key("sois")
            .beginObject()
            .kv("t", diag.soisDrift.t)
            .kv("mean", diag.soisDrift.mean)
            .kv("stdError", diag.soisDrift.stdError)
            .kv("z", diag.soisDrift.z)
            .endObject()
            .endObject();
    }
    w.kv("negativeSpreadPaths", diag.negativeSpreadPaths)
        .kv("maxAbsForward", diag.maxAbsForward)
        .kv("maxAbsZ", maxZ)
        .kv("status", status)
        .endObject()
        .endObject();
    const std::string report = w.str() + "\n";
    if (!opt.outPath.empty()) io::writeFile(opt.outPath, report);

    const auto j = io::parseJson(report, "simulate report");
    for (const auto& s : j["swaptions"])
        std::cout << s["id"].get<std::string>() << " (" << s["kind"].get<std::string>()
                  << "): price " << io::fmt6(s["price"].get<double>()) << " +/- "
                  << io::fmt6(s["stdError"].get<double>()) << "\n";
    std::cout << "diagnostics: max |z| = " << io::fmt6(maxZ) << " over "
              << j["diagnostics"]["deflatedBonds"].size() << " pillars, status " << status
              << "\n";
    if (status == "warn")
        logWarn("martingale diagnostics in the 3 <= |z| < 5 band");
    if (status == "fail") {
        logError("martingale diagnostics failed (|z| >= 5)");
        return kExitNumerical;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// selftest: condensed invariant suite on synthetic worlds
// ---------------------------------------------------------------------------

struct SyntheticWorld {
    TenorStructure tenor;
    CurveSet cs;
    double ratio;
};

SyntheticWorld makeSyntheticWorld(int periods = 40, double spacing = 0.25) {
    TenorStructure tenor = TenorStructure::regular(0.0, periods, spacing);
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
    return {std::move(tenor), std::move(cs), 1.0};
}

int cmdSelftest() {
    int failures = 0;
    auto check = [&](bool ok, const std::string& name) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
        if (!ok) ++failures;
    };

    SyntheticWorld world = makeSyntheticWorld();
    const TenorStructure& tenor = world.tenor;
    const CurveSet& cs = world.cs;

    {  // LIBOR-route bootstrap round-trip
        SiloQuotesLibor q{tenor, {}, {}, world.ratio};
        for (int m = 1; m <= tenor.size(); ++m) {
            q.irsParRates.push_back(irsParRate(cs, tenor, m));
            q.ccsBasis.push_back(mtmccsParSpread(cs, tenor, m, world.ratio));
        }
        const DiscountCurve rebuilt = bootstrapEffectiveDiscountLibor(q, cs.usd);
        double err = 0.0;
        for (int m = 1; m <= tenor.size(); ++m)
            err = std::max(err,
                           std::abs(rebuilt.df(tenor.time(m)) - cs.dbarJ.df(tenor.time(m))));
        check(err < 1e-10, "bootstrap round-trip, LIBOR route (max |ddf| = " +
                               io::fmt17(err) + ")");
    }
    {  // OIS-route bootstrap round-trip
        SiloQuotesOis q{tenor, {}, {}};
        for (int m = 1; m <= tenor.size(); ++m) {
            q.oisParRates.push_back(oisParRate(cs, tenor, m));
            q.ccoisBasis.push_back(mtmccoisParSpread(cs, tenor, 0, m));
        }
        const DiscountCurve rebuilt = bootstrapEffectiveDiscountOis(q);
        double err = 0.0;
        for (int m = 1; m <= tenor.size(); ++m)
            err = std::max(err,
                           std::abs(rebuilt.df(tenor.time(m)) - cs.dbarJ.df(tenor.time(m))));
        check(err < 1e-12, "bootstrap round-trip, OIS route (max |ddf| = " + io::fmt17(err) +
                               ")");
    }
    {  // degenerate CCS spread identities
        CurveSet flatUsd = cs;
        std::vector<double> zeros(static_cast<std::size_t>(tenor.size()), 0.0);
        flatUsd.usd.liborOisSpreads =
            ForwardCurve::onTenor(ForwardCurve::Kind::LiborOisSpread, tenor, zeros);
        double err = 0.0;
        for (int m = 1; m <= tenor.size(); ++m) {
            const double direct = mtmccsParSpread(flatUsd, tenor, m, 1.0);
            const double diff = effectiveSwapRate(cs.dbarJ, tenor, 0, m) -
                                irsParRate(cs, tenor, m);
            err = std::max(err, std::abs(direct - diff));
        }
        check(err < 1e-14, "MtMCCS par spread degenerates to swap-rate difference");
    }
    {  // currency triangle
        std::mt19937_64 gen(7);
        std::uniform_real_distribution<double> rate(-0.02, 0.08);
        std::uniform_real_distribution<double> fx(0.005, 2.0);
        double err = 0.0;
        for (int c = 0; c < 200; ++c) {
            CurveSet tri = cs;
            tri.dbarK = DiscountCurve::flat(rate(gen), tenor.pillars());
            tri.fxSpotUsdPerJ = fx(gen);
            tri.fxSpotUsdPerK = fx(gen);
            for (int m = 1; m <= tenor.size(); ++m) {
                const double T = tenor.time(m);
                const double viaJ = fxForwardUsd(tri, T) * fxForwardCross(tri, T);
                const double direct = fxForwardUsdK(tri, T);
                err = std::max(err, std::abs(viaJ - direct) / direct);
            }
        }
        check(err < 1e-13, "currency triangle identity (max rel err = " + io::fmt17(err) + ")");
    }
    {  // overlay compounding over 1y
        const int days = 360;
        double compounded = 1.0;
        for (int n = 0; n < days; ++n) {
            const double t0 = n / 360.0, t1 = (n + 1) / 360.0;
            const double spot = fxForwardUsd(cs, t0);
            const double fwd = fxForwardUsd(cs, t1);
            const double usdRate =
                (cs.usd.oisDiscount.df(t0) / cs.usd.oisDiscount.df(t1) - 1.0) * 360.0;
            compounded *=
                1.0 + overlayRateDomestic(spot, fwd - spot, usdRate, 1.0 / 360.0) / 360.0;
        }
        const double target = 1.0 / cs.dbarJ.df(1.0);
        check(std::abs(compounded - target) / target < 1e-6,
              "overlay rates compound back to the discount curve");
    }
    {  // zero-volatility swaption limit
        HjmModelSpec model = HjmModelSpec::fromCurveSet(cs, tenor, {{0.0, 0.0}}, {0.0}, {0.0},
                                                        {0.0});
        SimGrid grid = makeSimGrid(tenor, 1, 64, 1, 8);
        HjmEngine engine(model, grid);
        const SwaptionSpec sw{8, 20, forwardOisRate(cs, tenor, 8, 20) - 0.01,
                              SwaptionSpec::Kind::OisPayer};
        const McEstimate price = priceOisSwaption(engine, sw);
        check(price.value == swaptionIntrinsic(cs, tenor, sw) && price.stdError == 0.0,
              "zero-volatility swaption equals the deterministic intrinsic");
    }
    {  // quick martingale pass
        HjmModelSpec model = HjmModelSpec::fromCurveSet(
            cs, tenor, {{0.01, 0.1}, {0.005, 1.0}}, {0.003, 0.001}, {0.004, 0.001},
            {0.10, 0.05});
        SimGrid grid = makeSimGrid(tenor, 1, 4000, 20120127);
        HjmEngine engine(model, grid);
        const DiagnosticsReport diag = martingaleDiagnostics(engine);
        check(diag.maxAbsZ() < 4.0, "martingale diagnostics at 4k paths (max |z| = " +
                                        io::fmt6(diag.maxAbsZ()) + ")");
    }

    if (failures > 0) {
        logError(std::to_string(failures) + " selftest check(s) failed");
        return kExitNumerical;
    }
    std::cout << "all selftest checks passed\n";
    return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    warnHandler() = [](const std::string& m) { logWarn(m); };

    CLI::App app{"USD-silo curve construction, pricing and simulation"};
    app.require_subcommand(1);

    BuildOptions build;
    auto* cmdBuild = app.add_subcommand("build-curves",
                                        "bootstrap effective discount and forward curves");
    cmdBuild->add_option("--quotes", build.quotesPath, "quote CSV")->required();
    cmdBuild->add_option("--out", build.outDir, "output directory")->required();
    cmdBuild->add_option("--route", build.route, "bootstrap route")
        ->check(CLI::IsMember({"libor", "ois"}));
    cmdBuild->add_option("--currency", build.currency, "currency label");
    cmdBuild->add_option("--fx-spot", build.fxSpot, "FX spot, USD per unit of currency");
    cmdBuild->add_option("--grid", build.grid, "pillar spacing in years");
    cmdBuild->add_option("--fixed-dc", build.fixedDc, "fixed-leg day count")
        ->check(CLI::IsMember({"ACT360", "ACT365F"}));
    cmdBuild->add_option("--float-dc", build.floatDc, "floating-leg day count")
        ->check(CLI::IsMember({"ACT360", "ACT365F"}));
    cmdBuild->add_option("--usd-float-dc", build.usdFloatDc, "USD-leg day count")
        ->check(CLI::IsMember({"ACT360", "ACT365F"}));

    PriceOptions price;
    auto* cmdPriceApp = app.add_subcommand("price", "value trades against built curves");
    cmdPriceApp->add_option("--curveset", price.curveSetPath, "curve-set manifest")->required();
    cmdPriceApp->add_option("--curveset-k", price.curveSetKPath,
                            "second-currency curve-set manifest");
    cmdPriceApp->add_option("--trades", price.tradesPath, "trades JSON")->required();
    cmdPriceApp->add_option("--out", price.outPath, "report JSON path");
    cmdPriceApp->add_flag("--extrapolate", price.extrapolate,
                          "allow flat-forward extrapolation beyond the last pillar");

    OverlayOptions overlay;
    auto* cmdOverlayApp =
        app.add_subcommand("overlay", "collateral-rate overlays from FX swap points");
    cmdOverlayApp->add_option("--points", overlay.pointsPath, "points CSV")->required();
    cmdOverlayApp->add_option("--out", overlay.outPath, "report JSON path");
    cmdOverlayApp->add_option("--currency", overlay.currency, "poster currency label");

    SimulateOptions simulate;
    auto* cmdSimApp =
        app.add_subcommand("simulate", "HJM Monte-Carlo swaption pricing and diagnostics");
    cmdSimApp->add_option("--curveset", simulate.curveSetPath, "curve-set manifest")
        ->required();
    cmdSimApp->add_option("--model", simulate.modelPath, "model JSON")->required();
    cmdSimApp->add_option("--trades", simulate.tradesPath, "trades JSON (swaptions)");
    cmdSimApp->add_option("--out", simulate.outPath, "report JSON path");
    cmdSimApp->add_option("--paths", simulate.pathsOverride, "path count override");
    cmdSimApp->add_option("--seed", simulate.seedOverride, "seed override")
        ->each([&simulate](const std::string&) { simulate.seedSet = true; });
    cmdSimApp->add_option("--threads", simulate.threads, "worker threads");
    cmdSimApp->add_flag("--corrupt-drift", simulate.corruptDrift,
                        "negative control: drop the no-arbitrage drift")
        ->group("");  // hidden; used by the test suite

    auto* cmdSelftestApp =
        app.add_subcommand("selftest", "run the synthetic-world invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitIo;
    }

    try {
        if (cmdBuild->parsed()) return cmdBuildCurves(build);
        if (cmdPriceApp->parsed()) return cmdPrice(price);
        if (cmdOverlayApp->parsed()) return cmdOverlay(overlay);
        if (cmdSimApp->parsed()) return cmdSimulate(simulate);
        if (cmdSelftestApp->parsed()) return cmdSelftest();
    } catch (const ParseError& e) {
        logError(e.what());
        return kExitIo;
    } catch (const StateExplosionError& e) {
        logError(e.what());
        return kExitNumerical;
    } catch (const SiloError& e) {
        logError(e.what());
        return kExitData;
    } catch (const std::invalid_argument& e) {
        logError(e.what());
        return kExitData;
    } catch (const std::exception& e) {
        logError(e.what());
        return kExitIo;
    }
    return kExitOk;
}
