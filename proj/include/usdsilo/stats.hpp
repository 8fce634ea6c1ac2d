#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace usdsilo {

/// Streaming mean/variance accumulator (Welford) with an exact pairwise merge
/// (Chan et al.). Merging chunk accumulators in a fixed chunk order yields
/// results independent of which thread filled which chunk.
class RunningStat {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    void merge(const RunningStat& other) {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double delta = other.mean_ - mean_;
        const long total = n_ + other.n_;
        mean_ += delta * static_cast<double>(other.n_) / static_cast<double>(total);
        m2_ += other.m2_ +
               delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) /
                   static_cast<double>(total);
        n_ = total;
    }

    long count() const { return n_; }
    double mean() const { return mean_; }

    double variance() const {
        if (n_ < 2) return 0.0;
        const double v = m2_ / static_cast<double>(n_ - 1);
        return v > 0.0 ? v : 0.0;
    }

    double stdError() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

private:
    long n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// z-score of a sample mean against a target. A zero standard error with a
/// zero deviation is an exact deterministic equality (z = 0); a nonzero
/// deviation with no dispersion is an unambiguous failure (infinite z).
inline double zScore(const RunningStat& stat, double target) {
    const double dev = stat.mean() - target;
    const double se = stat.stdError();
    if (se == 0.0) {
        if (dev == 0.0) return 0.0;
        return dev > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
    }
    return dev / se;
}

}  // namespace usdsilo
