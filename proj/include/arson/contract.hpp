#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace arson {

/// One linear piece of a piecewise-linear schedule. The piece covers
/// [x_start, x_end) and takes the value intercept + slope*(x - x_start).
struct Segment {
    double x_start = 0.0;
    double x_end = 0.0;
    double intercept = 0.0;  ///< value at x_start
    double slope = 0.0;

    double value_at(double x) const { return intercept + slope * (x - x_start); }

    /// Value approached as x -> x_end from the left.
    double left_limit() const { return intercept + slope * (x_end - x_start); }

    double length() const { return x_end - x_start; }
};

inline bool operator==(const Segment& a, const Segment& b) {
    return a.x_start == b.x_start && a.x_end == b.x_end &&
           a.intercept == b.intercept && a.slope == b.slope;
}

namespace detail {

inline double value_tol(double domain_max) {
    return 1e-9 * std::max(1.0, domain_max);
}

inline double jump_tol(double domain_max) {
    return 1e-9 * std::max(1.0, domain_max);
}

}  // namespace detail

/// A piecewise-linear function on [0, M] with right-continuous jump
/// convention: at a breakpoint shared by two pieces the function takes the
/// value of the right piece. The last piece also covers x = M. No shape
/// constraints beyond tiling [0, M]; use Contract for indemnity schedules.
class PiecewiseLinear {
public:
    PiecewiseLinear(double domain_max, std::vector<Segment> segments)
        : domain_max_(domain_max), segments_(std::move(segments)) {
        if (!(domain_max_ > 0.0)) {
            throw std::invalid_argument("PiecewiseLinear: domain_max must be > 0");
        }
        if (segments_.empty()) {
            throw std::invalid_argument("PiecewiseLinear: needs at least one segment");
        }
        if (segments_.front().x_start != 0.0) {
            throw std::invalid_argument("PiecewiseLinear: first segment must start at 0");
        }
        if (segments_.back().x_end != domain_max_) {
            throw std::invalid_argument("PiecewiseLinear: last segment must end at domain_max");
        }
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            if (!(segments_[i].x_end > segments_[i].x_start)) {
                throw std::invalid_argument("PiecewiseLinear: segment " + std::to_string(i) +
                                            " has non-positive length");
            }
            if (i + 1 < segments_.size() &&
                segments_[i + 1].x_start != segments_[i].x_end) {
                throw std::invalid_argument("PiecewiseLinear: gap or overlap after segment " +
                                            std::to_string(i));
            }
        }
    }

    double domain_max() const { return domain_max_; }
    const std::vector<Segment>& segments() const { return segments_; }

    /// Index of the segment owning x (right piece at shared breakpoints,
    /// last piece at x = M).
    std::size_t segment_index(double x) const {
        if (x < 0.0 || x > domain_max_) {
            throw std::domain_error("PiecewiseLinear: x = " + std::to_string(x) +
                                    " outside [0, " + std::to_string(domain_max_) + "]");
        }
        auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                                   [](double v, const Segment& s) { return v < s.x_start; });
        return static_cast<std::size_t>(it - segments_.begin()) - 1;
    }

    double operator()(double x) const { return segments_[segment_index(x)].value_at(x); }

    /// All segment start points plus domain_max, ascending.
    std::vector<double> breakpoints() const {
        std::vector<double> out;
        out.reserve(segments_.size() + 1);
        for (const Segment& s : segments_) out.push_back(s.x_start);
        out.push_back(domain_max_);
        return out;
    }

    /// Interior breakpoints only (excludes 0 and domain_max).
    std::vector<double> interior_breakpoints() const {
        std::vector<double> out;
        for (std::size_t i = 1; i < segments_.size(); ++i) out.push_back(segments_[i].x_start);
        return out;
    }

private:
    double domain_max_;
    std::vector<Segment> segments_;
};

/// An indemnity schedule Y on [0, M]: piecewise linear, non-decreasing,
/// upper semi-continuous (jumps take the right value), and 0 <= Y(x) <= x.
class Contract {
public:
    Contract(double domain_max, std::vector<Segment> segments)
        : f_(domain_max, std::move(segments)) {
        const double tol = detail::value_tol(domain_max);
        const auto& segs = f_.segments();
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const Segment& s = segs[i];
            if (s.slope < -1e-12) {
                throw std::invalid_argument("Contract: segment " + std::to_string(i) +
                                            " has negative slope (schedule must be non-decreasing)");
            }
            if (s.intercept < -tol || s.intercept > s.x_start + tol) {
                throw std::invalid_argument("Contract: value " + std::to_string(s.intercept) +
                                            " at x = " + std::to_string(s.x_start) +
                                            " violates 0 <= Y(x) <= x");
            }
            const double left = s.left_limit();
            if (left < -tol || left > s.x_end + tol) {
                throw std::invalid_argument("Contract: left limit " + std::to_string(left) +
                                            " at x = " + std::to_string(s.x_end) +
                                            " violates 0 <= Y(x) <= x");
            }
            if (i + 1 < segs.size() && segs[i + 1].intercept < left - tol) {
                throw std::invalid_argument("Contract: downward jump at x = " +
                                            std::to_string(s.x_end) +
                                            " (schedule must be non-decreasing)");
            }
        }
    }

    double domain_max() const { return f_.domain_max(); }
    const std::vector<Segment>& segments() const { return f_.segments(); }
    const PiecewiseLinear& pwl() const { return f_; }

    /// Y(x) under the right-value jump convention.
    double operator()(double x) const { return f_(x); }

    std::vector<double> breakpoints() const { return f_.breakpoints(); }
    std::vector<double> interior_breakpoints() const { return f_.interior_breakpoints(); }

private:
    PiecewiseLinear f_;
};

// ---------------------------------------------------------------------------
// Contract families
// ---------------------------------------------------------------------------

/// Y(x) = x.
struct FullInsurance {};

/// Y(x) = max{0, x - d}.
struct StraightDeductible {
    double d = 0.0;
};

/// Y(x) = alpha * x with alpha in (0, 1).
struct Coinsurance {
    double alpha = 0.5;
};

/// Y(x) = min{delta, max{0, alpha*x - d}}: deductible plus coinsurance with
/// an upper limit delta.
struct Mixed {
    double delta = 1.0;
    double alpha = 1.0;
    double d = 0.0;
};

/// Completely disappearing deductible: Y = 0 on [0, d], then linear with
/// slope M/(M-d) so that Y(M) = M.
struct DisappearingDeductible {
    double d = 0.0;
};

/// Constant-retention schedule: Y = 0 below the threshold t, Y(x) = x - j
/// from t on, with upward jump t - j >= 0 at t.
struct ConstantRetention {
    double t = 0.0;
    double j = 0.0;
};

using FamilySpec = std::variant<FullInsurance, StraightDeductible, Coinsurance, Mixed,
                                DisappearingDeductible, ConstantRetention>;

namespace detail {

inline Contract make_full_insurance(double m) {
    return Contract(m, {Segment{0.0, m, 0.0, 1.0}});
}

inline Contract make_straight_deductible(double d, double m) {
    if (d < 0.0 || d > m) {
        throw std::invalid_argument("StraightDeductible: need 0 <= d <= domain_max");
    }
    if (d == 0.0) return make_full_insurance(m);
    if (d == m) return Contract(m, {Segment{0.0, m, 0.0, 0.0}});
    return Contract(m, {Segment{0.0, d, 0.0, 0.0}, Segment{d, m, 0.0, 1.0}});
}

}  // namespace detail

/// Builds the schedule for a contract family on [0, domain_max].
/// Throws std::invalid_argument when the family parameters are invalid.
inline Contract construct(const FamilySpec& spec, double domain_max) {
    const double m = domain_max;
    if (!(m > 0.0)) throw std::invalid_argument("construct: domain_max must be > 0");

    struct Builder {
        double m;

        Contract operator()(const FullInsurance&) const { return detail::make_full_insurance(m); }

        Contract operator()(const StraightDeductible& s) const {
            return detail::make_straight_deductible(s.d, m);
        }

        Contract operator()(const Coinsurance& s) const {
            if (!(s.alpha > 0.0 && s.alpha < 1.0)) {
                throw std::invalid_argument("Coinsurance: alpha must lie in (0, 1)");
            }
            return Contract(m, {Segment{0.0, m, 0.0, s.alpha}});
        }

        Contract operator()(const Mixed& s) const {
            if (!(s.delta > 0.0)) throw std::invalid_argument("Mixed: delta must be > 0");
            if (s.d < 0.0 || s.d > m) throw std::invalid_argument("Mixed: need 0 <= d <= domain_max");
            if (!(s.alpha > 0.0 && s.alpha <= 1.0)) {
                throw std::invalid_argument("Mixed: alpha must lie in (0, 1]");
            }
            const double x0 = s.d / s.alpha;            // alpha*x - d crosses 0
            const double x1 = (s.d + s.delta) / s.alpha;  // alpha*x - d reaches delta
            if (x0 >= m) return Contract(m, {Segment{0.0, m, 0.0, 0.0}});
            std::vector<Segment> segs;
            double rise_start = 0.0;
            if (x0 > 0.0) {
                segs.push_back(Segment{0.0, x0, 0.0, 0.0});
                rise_start = x0;
            }
            if (x1 < m) {
                segs.push_back(Segment{rise_start, x1, 0.0, s.alpha});
                segs.push_back(Segment{x1, m, s.delta, 0.0});
            } else {
                segs.push_back(Segment{rise_start, m, 0.0, s.alpha});
            }
            return Contract(m, std::move(segs));
        }

        Contract operator()(const DisappearingDeductible& s) const {
            if (s.d < 0.0 || s.d >= m) {
                throw std::invalid_argument("DisappearingDeductible: need 0 <= d < domain_max");
            }
            if (s.d == 0.0) return detail::make_full_insurance(m);
            return Contract(m, {Segment{0.0, s.d, 0.0, 0.0},
                                Segment{s.d, m, 0.0, m / (m - s.d)}});
        }

        Contract operator()(const ConstantRetention& s) const {
            if (s.j < 0.0 || s.t < s.j) {
                throw std::invalid_argument("ConstantRetention: need t >= j >= 0");
            }
            if (s.t > m) throw std::invalid_argument("ConstantRetention: need t <= domain_max");
            if (s.t == s.j) return detail::make_straight_deductible(s.t, m);
            if (s.t == m) {
                // The jump would sit exactly at the closed right endpoint,
                // which the segment representation cannot carry.
                throw std::invalid_argument("ConstantRetention: t must be < domain_max when t > j");
            }
            if (s.t == 0.0) return detail::make_full_insurance(m);
            return Contract(m, {Segment{0.0, s.t, 0.0, 0.0},
                                Segment{s.t, m, s.t - s.j, 1.0}});
        }
    };

    return std::visit(Builder{m}, spec);
}

// ---------------------------------------------------------------------------
// Shape diagnostics
// ---------------------------------------------------------------------------

struct SlopeInfo {
    double sup_slope = 0.0;  ///< maximum segment slope
    bool has_jump = false;   ///< any breakpoint with right value > left limit
};

/// Largest slope of the schedule and whether it jumps anywhere. A jump
/// violates every finite Lipschitz bound, so it is reported separately
/// instead of folding it into the slope.
inline SlopeInfo max_slope(const Contract& y) {
    SlopeInfo info;
    const auto& segs = y.segments();
    const double jtol = detail::jump_tol(y.domain_max());
    for (std::size_t i = 0; i < segs.size(); ++i) {
        info.sup_slope = std::max(info.sup_slope, segs[i].slope);
        if (i + 1 < segs.size() &&
            segs[i + 1].intercept > segs[i].left_limit() + jtol) {
            info.has_jump = true;
        }
    }
    return info;
}

/// Retention R(x) = x - Y(x). Not a Contract: R may decrease or jump down
/// when Y is steeper than the loss itself.
inline PiecewiseLinear retention(const Contract& y) {
    std::vector<Segment> segs;
    segs.reserve(y.segments().size());
    for (const Segment& s : y.segments()) {
        segs.push_back(Segment{s.x_start, s.x_end, s.x_start - s.intercept, 1.0 - s.slope});
    }
    return PiecewiseLinear(y.domain_max(), std::move(segs));
}

struct NoSabotageReport {
    bool slope_ok = false;           ///< sup slope <= 1 and no jump
    bool retention_monotone = false; ///< x - Y(x) non-decreasing on the grid
    bool comonotone = false;         ///< Y and R both non-decreasing across grid pairs
    std::optional<double> witness_x; ///< a point where the first failing check breaks
};

/// Checks the no-sabotage condition on a uniform grid augmented with the
/// schedule's breakpoints.
inline NoSabotageReport check_no_sabotage(const Contract& y, int grid_n = 2001) {
    if (grid_n < 2) throw std::invalid_argument("check_no_sabotage: grid_n must be >= 2");
    const double m = y.domain_max();
    const double tol = detail::value_tol(m);

    NoSabotageReport report;
    const SlopeInfo info = max_slope(y);
    report.slope_ok = info.sup_slope <= 1.0 + 1e-12 && !info.has_jump;

    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(grid_n) + y.segments().size());
    for (int i = 0; i < grid_n; ++i) xs.push_back(m * i / (grid_n - 1));
    for (double b : y.interior_breakpoints()) xs.push_back(b);
    std::sort(xs.begin(), xs.end());

    const PiecewiseLinear r = retention(y);
    report.retention_monotone = true;
    report.comonotone = true;
    double prev_x = xs[0];
    double prev_y = y(prev_x);
    double prev_r = r(prev_x);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double xi = xs[i];
        if (xi == prev_x) continue;
        const double yi = y(xi);
        const double ri = r(xi);
        if (ri < prev_r - tol) {
            report.retention_monotone = false;
            if (!report.witness_x) report.witness_x = xi;
        }
        if (yi < prev_y - tol || ri < prev_r - tol) {
            report.comonotone = false;
            if (!report.witness_x) report.witness_x = xi;
        }
        prev_x = xi;
        prev_y = yi;
        prev_r = ri;
    }
    if (!report.slope_ok && !report.witness_x) {
        // Slope or jump violations are located at a breakpoint.
        for (std::size_t i = 0; i < y.segments().size(); ++i) {
            const Segment& s = y.segments()[i];
            if (s.slope > 1.0 + 1e-12) {
                report.witness_x = s.x_start;
                break;
            }
            if (i + 1 < y.segments().size() &&
                y.segments()[i + 1].intercept > s.left_limit() + detail::jump_tol(m)) {
                report.witness_x = s.x_end;
                break;
            }
        }
    }
    return report;
}

}  // namespace arson
