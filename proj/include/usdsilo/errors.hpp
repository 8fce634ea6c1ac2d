#pragma once

#include <stdexcept>
#include <string>

namespace usdsilo {

/// Base class for all domain errors thrown by the library.
class SiloError : public std::runtime_error {
public:
    explicit SiloError(const std::string& what) : std::runtime_error(what) {}
};

/// A curve query outside the pillar range with extrapolation disabled.
class ExtrapolationError : public SiloError {
public:
    explicit ExtrapolationError(const std::string& what) : SiloError(what) {}
};

/// A bootstrap step produced a non-positive discount factor.
class NonPositiveDiscountError : public SiloError {
public:
    NonPositiveDiscountError(const std::string& what, int pillar)
        : SiloError(what), pillarIndex(pillar) {}
    int pillarIndex;
};

/// A required quote (maturity index) is missing from a dense quote set.
class QuoteGapError : public SiloError {
public:
    explicit QuoteGapError(const std::string& what) : SiloError(what) {}
};

/// A fixed-leg annuity evaluated to zero (or an empty accrual range).
class EmptyAnnuityError : public SiloError {
public:
    explicit EmptyAnnuityError(const std::string& what) : SiloError(what) {}
};

/// An operation needed a curve that the curve set does not carry.
class MissingCurveError : public SiloError {
public:
    explicit MissingCurveError(const std::string& what) : SiloError(what) {}
};

/// An FX forward (spot + point) came out non-positive.
class NonPositiveForwardError : public SiloError {
public:
    explicit NonPositiveForwardError(const std::string& what) : SiloError(what) {}
};

/// A simulated forward rate left the configured sanity band.
class StateExplosionError : public SiloError {
public:
    StateExplosionError(const std::string& what, long path, int step)
        : SiloError(what), pathIndex(path), stepIndex(step) {}
    long pathIndex;
    int stepIndex;
};

/// Malformed input file (CSV/JSON).
class ParseError : public SiloError {
public:
    explicit ParseError(const std::string& what) : SiloError(what) {}
};

}  // namespace usdsilo
