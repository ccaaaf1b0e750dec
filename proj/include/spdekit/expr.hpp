#pragma once

#include "spdekit/jet.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace spdekit {

/// Parsed expression over spatial variables x1..xd and time t.
///
/// Grammar (whitespace insignificant):
///   expr   := ('-')? term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := base ('^' int)?
///   base   := number | 'x'int | 't' | func '(' expr ')' | '(' expr ')'
///   func   := sin|cos|exp|tanh|sqrt
///
/// Standard precedence, left associativity. '^' takes an integer exponent
/// (possibly negative), which keeps every primitive smooth on its domain.
/// Trees are immutable after parse; evaluation is pure and thread-safe.
class ExprTree {
public:
    static ExprTree parse(const std::string& source, int dim);

    /// expression that is identically the given constant
    static ExprTree constant(int dim, double v);

    int dim() const { return dim_; }
    const std::string& source() const { return source_; }
    bool depends_on_time() const { return depends_on_time_; }

    double eval(double t, std::span<const double> x) const;

    /// Jet of order `order` in the spatial variables at (t, x); t enters as a
    /// parameter. Entry alpha is the exact derivative D^alpha, via truncated
    /// Taylor arithmetic (never numerical differencing).
    Jet eval_jet(double t, std::span<const double> x, int order) const;

    /// Kernel form: writes the jet coefficients into out (size = table size
    /// for (dim, order)). Uses a caller-independent thread-local workspace.
    void eval_jet_into(double t, const double* x, int order, double* out) const;

private:
    struct Op {
        enum Kind : std::uint8_t {
            kConst, kVarX, kVarT, kNeg, kAdd, kSub, kMul, kDiv,
            kSin, kCos, kExp, kTanh, kSqrt, kPowInt
        };
        Kind kind;
        std::int32_t arg = 0; // axis for kVarX, exponent for kPowInt
        double val = 0.0;     // kConst
    };

    int dim_ = 0;
    bool depends_on_time_ = false;
    int max_stack_ = 0;
    std::string source_;
    std::vector<Op> ops_; // postfix

    friend class ExprParser;
};

/// Expression segmented in time: list of (interval, expression) covering
/// [0, T]. Realizes coefficients that are merely measurable in t as
/// piecewise-smooth-in-t data.
class SegmentedExpr {
public:
    struct Segment {
        double t0, t1;
        ExprTree tree;
    };

    SegmentedExpr() = default;
    explicit SegmentedExpr(ExprTree whole) { segments_.push_back({0.0, 1e300, std::move(whole)}); }
    explicit SegmentedExpr(std::vector<Segment> segs) : segments_(std::move(segs)) {}

    bool empty() const { return segments_.empty(); }
    int dim() const { return segments_.empty() ? 0 : segments_.front().tree.dim(); }
    const std::vector<Segment>& segments() const { return segments_; }

    bool depends_on_time() const {
        if (segments_.size() > 1) return true;
        for (const auto& s : segments_)
            if (s.tree.depends_on_time()) return true;
        return false;
    }

    const ExprTree& at_time(double t) const {
        for (std::size_t i = 0; i + 1 < segments_.size(); ++i)
            if (t < segments_[i].t1) return segments_[i].tree;
        return segments_.back().tree;
    }

    double eval(double t, std::span<const double> x) const { return at_time(t).eval(t, x); }
    Jet eval_jet(double t, std::span<const double> x, int order) const {
        return at_time(t).eval_jet(t, x, order);
    }

private:
    std::vector<Segment> segments_;
};

} // namespace spdekit
