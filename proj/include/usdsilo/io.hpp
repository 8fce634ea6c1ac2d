#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "usdsilo/bootstrap.hpp"
#include "usdsilo/errors.hpp"
#include "usdsilo/hjm.hpp"
#include "usdsilo/pricing.hpp"
#include "usdsilo/termstructure.hpp"

namespace usdsilo::io {

// ---------------------------------------------------------------------------
// Number formatting: 17 significant digits round-trip doubles exactly and
// are locale-independent, so emitted files are byte-stable.
// ---------------------------------------------------------------------------

inline std::string fmt17(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    if (ec != std::errc()) return "0";
    return std::string(buf, ptr);
}

/// Six-decimal rendering for human-readable tables.
inline std::string fmt6(double x) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof(buf), "%.6f", x);
    return std::string(buf, buf + n);
}

// ---------------------------------------------------------------------------
// Streaming JSON writer with ordered keys and fmt17 numbers.
// ---------------------------------------------------------------------------

class JsonWriter {
public:
    JsonWriter& beginObject() { return open('{'); }
    JsonWriter& endObject() { return close('}'); }
    JsonWriter& beginArray() { return open('['); }
    JsonWriter& endArray() { return close(']'); }

    JsonWriter& key(const std::string& k) {
        separate();
        writeString(k);
        out_ += ':';
        pendingValue_ = true;
        return *this;
    }

    JsonWriter& value(double v) { return primitive(fmt17(v)); }
    JsonWriter& value(long v) { return primitive(std::to_string(v)); }
    JsonWriter& value(int v) { return primitive(std::to_string(v)); }
    JsonWriter& value(uint64_t v) { return primitive(std::to_string(v)); }
    JsonWriter& value(bool v) { return primitive(v ? "true" : "false"); }
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& value(const std::string& v) {
        separate();
        writeString(v);
        return *this;
    }

    JsonWriter& kv(const std::string& k, double v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, long v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, int v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, uint64_t v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, bool v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, const std::string& v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, const char* v) { return key(k).value(v); }

    const std::string& str() const { return out_; }

private:
    JsonWriter& open(char c) {
        separate();
        out_ += c;
        needComma_ = false;
        return *this;
    }
    JsonWriter& close(char c) {
        out_ += c;
        needComma_ = true;
        return *this;
    }
    JsonWriter& primitive(const std::string& text) {
        separate();
        out_ += text;
        return *this;
    }
    void separate() {
        if (pendingValue_) {
            pendingValue_ = false;
            return;
        }
        if (needComma_) out_ += ',';
        needComma_ = true;
    }
    void writeString(const std::string& s) {
        out_ += '"';
        for (char c : s) {
            switch (c) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\t': out_ += "\\t"; break;
                case '\r': out_ += "\\r"; break;
                default: out_ += c;
            }
        }
        out_ += '"';
    }

    std::string out_;
    bool needComma_ = false;
    bool pendingValue_ = false;
};

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void writeFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << content;
}

inline nlohmann::json parseJson(const std::string& text, const std::string& what) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError(what + ": malformed JSON");
    return j;
}

// ---------------------------------------------------------------------------
// Curve serialization
// ---------------------------------------------------------------------------

inline std::string writeDiscountCurve(const DiscountCurve& c) {
    JsonWriter w;
    w.beginObject().kv("anchor", c.anchor()).key("pillars").beginArray();
    for (std::size_t i = 0; i < c.pillarTimes().size(); ++i)
        w.beginObject().kv("t", c.pillarTimes()[i]).kv("df", c.pillarDfs()[i]).endObject();
    w.endArray().kv("interp", toString(c.interp())).endObject();
    return w.str() + "\n";
}

inline DiscountCurve readDiscountCurve(const std::string& text, const std::string& what) {
    const auto j = parseJson(text, what);
    try {
        std::vector<double> times, dfs;
        for (const auto& p : j.at("pillars")) {
            times.push_back(p.at("t").get<double>());
            dfs.push_back(p.at("df").get<double>());
        }
        return DiscountCurve(std::move(times), std::move(dfs),
                             interpFromString(j.at("interp").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(what + ": " + e.what());
    }
}

inline std::string writeForwardCurve(const ForwardCurve& c) {
    JsonWriter w;
    w.beginObject().kv("kind", toString(c.kind())).key("periods").beginArray();
    for (int i = 0; i < c.size(); ++i)
        w.beginObject()
            .kv("start", c.period(i).start)
            .kv("end", c.period(i).end)
            .kv("value", c.value(i))
            .endObject();
    w.endArray().endObject();
    return w.str() + "\n";
}

inline ForwardCurve readForwardCurve(const std::string& text, const std::string& what) {
    const auto j = parseJson(text, what);
    try {
        std::vector<ForwardCurve::Period> periods;
        std::vector<double> values;
        for (const auto& p : j.at("periods")) {
            periods.push_back({p.at("start").get<double>(), p.at("end").get<double>()});
            values.push_back(p.at("value").get<double>());
        }
        return ForwardCurve(forwardKindFromString(j.at("kind").get<std::string>()),
                            std::move(periods), std::move(values));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(what + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Quote CSV
// ---------------------------------------------------------------------------

enum class Instrument { Irs, MtmCcs, Ois, MtmCcois, UsdOis, UsdLois };

inline Instrument instrumentFromString(const std::string& s) {
    if (s == "IRS") return Instrument::Irs;
    if (s == "MTMCCS") return Instrument::MtmCcs;
    if (s == "OIS") return Instrument::Ois;
    if (s == "MTMCCOIS") return Instrument::MtmCcois;
    if (s == "USDOIS") return Instrument::UsdOis;
    if (s == "USDLOIS") return Instrument::UsdLois;
    throw ParseError("unknown instrument '" + s + "'");
}

inline const char* toString(Instrument i) {
    switch (i) {
        case Instrument::Irs: return "IRS";
        case Instrument::MtmCcs: return "MTMCCS";
        case Instrument::Ois: return "OIS";
        case Instrument::MtmCcois: return "MTMCCOIS";
        case Instrument::UsdOis: return "USDOIS";
        case Instrument::UsdLois: return "USDLOIS";
    }
    return "?";
}

/// Quotes parsed from CSV: (maturityYears, value) points per instrument.
using QuoteTable = std::map<Instrument, std::vector<std::pair<double, double>>>;

/// Parses `instrument,maturityYears,value` rows under a mandatory header.
inline QuoteTable readQuotesCsv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("quotes CSV: empty file");
    QuoteTable table;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line == "\r") continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream row(line);
        std::string instrument, maturity, value;
        if (!std::getline(row, instrument, ',') || !std::getline(row, maturity, ',') ||
            !std::getline(row, value))
            throw ParseError("quotes CSV: malformed row at line " + std::to_string(lineNo));
        try {
            table[instrumentFromString(instrument)].emplace_back(std::stod(maturity),
                                                                 std::stod(value));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("quotes CSV: bad number at line " + std::to_string(lineNo));
        }
    }
    if (table.empty()) throw ParseError("quotes CSV: no quote rows");
    return table;
}

inline std::string writeQuotesCsv(const QuoteTable& table) {
    std::string out = "instrument,maturityYears,value\n";
    for (const auto& [inst, rows] : table)
        for (const auto& [t, v] : rows)
            out += std::string(toString(inst)) + "," + fmt17(t) + "," + fmt17(v) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Model configuration JSON
// ---------------------------------------------------------------------------

struct ModelConfig {
    std::vector<HjmVolFactor> factors;
    std::vector<double> sigmaFx;
    std::vector<double> oisSpreadVols;
    std::vector<double> liborVols;
    long paths = 10000;
    int steps = 1;  // Euler substeps per tenor interval
    uint64_t seed = 42;
    double fmax = 10.0;
};

inline ModelConfig readModelJson(const std::string& text) {
    const auto j = parseJson(text, "model JSON");
    ModelConfig cfg;
    try {
        for (const auto& f : j.at("factors"))
            cfg.factors.push_back({f.at("a").get<double>(), f.at("lambda").get<double>()});
        const auto readVec = [&](const char* k) {
            std::vector<double> v;
            if (j.contains(k))
                for (const auto& x : j.at(k)) v.push_back(x.get<double>());
            return v;
        };
        cfg.sigmaFx = readVec("sigmaFx");
        cfg.oisSpreadVols = readVec("oisSpreadVols");
        cfg.liborVols = readVec("liborVols");
        if (j.contains("paths")) cfg.paths = j.at("paths").get<long>();
        if (j.contains("steps")) cfg.steps = j.at("steps").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
        if (j.contains("fmax")) cfg.fmax = j.at("fmax").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    }
    if (cfg.factors.empty()) throw ParseError("model JSON: needs at least one factor");
    return cfg;
}

// ---------------------------------------------------------------------------
// Trade file JSON
// ---------------------------------------------------------------------------

struct TradeRecord {
    std::string id;
    std::string type;  // IRS | OIS | MTMCCS | MTMCCOIS | FXFORWARD | SWAPTION
    double start = 0.0;
    double end = 0.0;
    double rateOrSpread = 0.0;  // fixed rate / basis spread / swaption strike
    bool payer = true;
    double notional = 1.0;
    std::string swaptionKind;  // SWAPTION only
    std::string pair = "USD";  // FXFORWARD: USD (j vs USD) or CROSS (j vs k)
    double strike = 0.0;       // FXFORWARD strike (USD per j, or j per k for CROSS)
};

inline std::vector<TradeRecord> readTradesJson(const std::string& text) {
    const auto j = parseJson(text, "trades JSON");
    std::vector<TradeRecord> out;
    try {
        for (const auto& t : j.at("trades")) {
            TradeRecord r;
            r.type = t.at("type").get<std::string>();
            r.id = t.contains("id") ? t.at("id").get<std::string>()
                                    : r.type + "-" + std::to_string(out.size() + 1);
            if (t.contains("start")) r.start = t.at("start").get<double>();
            if (t.contains("end")) r.end = t.at("end").get<double>();
            if (t.contains("maturity")) r.end = t.at("maturity").get<double>();
            if (t.contains("fixedRate")) r.rateOrSpread = t.at("fixedRate").get<double>();
            if (t.contains("spread")) r.rateOrSpread = t.at("spread").get<double>();
            if (t.contains("strike")) {
                r.strike = t.at("strike").get<double>();
                r.rateOrSpread = r.strike;
            }
            if (t.contains("payer")) r.payer = t.at("payer").get<bool>();
            if (t.contains("notional")) r.notional = t.at("notional").get<double>();
            if (t.contains("kind")) r.swaptionKind = t.at("kind").get<std::string>();
            if (t.contains("pair")) r.pair = t.at("pair").get<std::string>();
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("trades JSON: ") + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Curve-set manifest: one file bundling the outputs of a curve build.
// ---------------------------------------------------------------------------

struct CurveSetFiles {
    std::string currency;
    std::string route;  // "libor" or "ois"
    double fxSpotUsdPerJ = 1.0;
    double gridSpacing = 0.25;
    std::string fixedDc = "ACT365F";
    std::string floatDc = "ACT365F";
    std::string usdFloatDc = "ACT365F";
    std::string dbarFile;
    std::string forwardFile;  // LIBOR or OIS forwards depending on the route
    std::string usdOisFile;
    std::string usdLoisFile;

    double dayCountRatio() const {
        return accrualFromYears(dayCountFromString(fixedDc), 1.0) /
               accrualFromYears(dayCountFromString(floatDc), 1.0);
    }
};

inline std::string writeCurveSetManifest(const CurveSetFiles& m) {
    JsonWriter w;
    w.beginObject()
        .kv("schemaVersion", 1)
        .kv("currency", m.currency)
        .kv("route", m.route)
        .kv("fxSpotUsdPerJ", m.fxSpotUsdPerJ)
        .kv("gridSpacing", m.gridSpacing)
        .kv("fixedDayCount", m.fixedDc)
        .kv("floatDayCount", m.floatDc)
        .kv("usdFloatDayCount", m.usdFloatDc)
        .key("files")
        .beginObject()
        .kv("dbar", m.dbarFile)
        .kv("forwards", m.forwardFile)
        .kv("usdOis", m.usdOisFile)
        .kv("usdLois", m.usdLoisFile)
        .endObject()
        .endObject();
    return w.str() + "\n";
}

inline CurveSetFiles readCurveSetManifest(const std::string& text) {
    const auto j = parseJson(text, "curve-set manifest");
    CurveSetFiles m;
    try {
        m.currency = j.at("currency").get<std::string>();
        m.route = j.at("route").get<std::string>();
        m.fxSpotUsdPerJ = j.at("fxSpotUsdPerJ").get<double>();
        m.gridSpacing = j.at("gridSpacing").get<double>();
        m.fixedDc = j.at("fixedDayCount").get<std::string>();
        m.floatDc = j.at("floatDayCount").get<std::string>();
        m.usdFloatDc = j.at("usdFloatDayCount").get<std::string>();
        const auto& files = j.at("files");
        m.dbarFile = files.at("dbar").get<std::string>();
        m.forwardFile = files.at("forwards").get<std::string>();
        m.usdOisFile = files.at("usdOis").get<std::string>();
        m.usdLoisFile = files.at("usdLois").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("curve-set manifest: ") + e.what());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Overlay points CSV: t,spot,point,usdRate,accrual  (spot in USD per unit)
// ---------------------------------------------------------------------------

struct OverlayPoint {
    double t = 0.0;
    double spot = 0.0;
    double point = 0.0;
    double usdRate = 0.0;
    double accrual = 0.0;
};

inline std::vector<OverlayPoint> readOverlayCsv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("overlay CSV: empty file");
    std::vector<OverlayPoint> out;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line == "\r") continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream row(line);
        std::string f[5];
        for (int i = 0; i < 5; ++i)
            if (!std::getline(row, f[i], i == 4 ? '\n' : ','))
                throw ParseError("overlay CSV: malformed row at line " + std::to_string(lineNo));
        try {
            out.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
                           std::stod(f[4])});
        } catch (const std::exception&) {
            throw ParseError("overlay CSV: bad number at line " + std::to_string(lineNo));
        }
    }
    if (out.empty()) throw ParseError("overlay CSV: no data rows");
    return out;
}

}  // namespace usdsilo::io
