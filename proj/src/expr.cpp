#include "spdekit/expr.hpp"

#include "spdekit/errors.hpp"

#include <cctype>
#include <cstdlib>
#include <cstring>

namespace spdekit {

namespace {

thread_local std::vector<double> tl_jet_stack;
thread_local std::vector<double> tl_jet_scratch;

double pow_int_value(double b, int n) {
    if (n < 0) return 1.0 / pow_int_value(b, -n);
    double acc = 1.0, p = b;
    int e = n;
    while (e > 0) {
        if (e & 1) acc *= p;
        p *= p;
        e >>= 1;
    }
    return acc;
}

} // namespace

class ExprParser {
public:
    ExprParser(const std::string& src, int dim) : src_(src), dim_(dim) {}

    ExprTree run() {
        ExprTree tree;
        tree.dim_ = dim_;
        tree.source_ = src_;
        ops_ = &tree.ops_;
        depth_ = 0;
        max_depth_ = 0;
        parse_expr();
        skip_ws();
        if (pos_ < src_.size()) fail("unexpected trailing input");
        if (ops_->empty()) fail("empty expression");
        if (max_depth_ > 60) fail("expression too deeply nested");
        tree.max_stack_ = max_depth_;
        for (const auto& op : *ops_)
            if (op.kind == ExprTree::Op::kVarT) tree.depends_on_time_ = true;
        return tree;
    }

private:
    using Op = ExprTree::Op;

    void emit(Op op, int stack_delta) {
        ops_->push_back(op);
        depth_ += stack_delta;
        if (depth_ > max_depth_) max_depth_ = depth_;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ValidationError("expression syntax error at position " + std::to_string(pos_) +
                              ": " + msg + " in \"" + src_ + "\"");
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    void parse_expr() {
        if (eat('-')) {
            parse_term();
            emit({Op::kNeg}, 0);
        } else {
            parse_term();
        }
        for (;;) {
            if (eat('+')) {
                parse_term();
                emit({Op::kAdd}, -1);
            } else if (eat('-')) {
                parse_term();
                emit({Op::kSub}, -1);
            } else {
                break;
            }
        }
    }

    void parse_term() {
        parse_factor();
        for (;;) {
            if (eat('*')) {
                parse_factor();
                emit({Op::kMul}, -1);
            } else if (eat('/')) {
                parse_factor();
                emit({Op::kDiv}, -1);
            } else {
                break;
            }
        }
    }

    void parse_factor() {
        parse_base();
        if (eat('^')) {
            skip_ws();
            bool neg = false;
            if (pos_ < src_.size() && src_[pos_] == '-') {
                neg = true;
                ++pos_;
            }
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
                fail("integer exponent expected after '^'");
            long e = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                e = e * 10 + (src_[pos_] - '0');
                if (e > 64) fail("exponent magnitude limited to 64");
                ++pos_;
            }
            Op op{Op::kPowInt};
            op.arg = static_cast<std::int32_t>(neg ? -e : e);
            emit(op, 0);
        }
    }

    void parse_base() {
        skip_ws();
        if (pos_ >= src_.size()) fail("operand expected");
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = src_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            Op op{Op::kConst};
            op.val = v;
            emit(op, +1);
            return;
        }
        if (c == '(') {
            ++pos_;
            parse_expr();
            if (!eat(')')) fail("')' expected");
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            std::string name = src_.substr(start, pos_ - start);
            if (name == "t") {
                emit({Op::kVarT}, +1);
                return;
            }
            if (name.size() >= 2 && name[0] == 'x' &&
                std::isdigit(static_cast<unsigned char>(name[1]))) {
                long idx = std::strtol(name.c_str() + 1, nullptr, 10);
                if (idx < 1 || idx > dim_) {
                    pos_ = start;
                    fail("variable " + name + " out of range for dimension " +
                         std::to_string(dim_));
                }
                Op op{Op::kVarX};
                op.arg = static_cast<std::int32_t>(idx - 1);
                emit(op, +1);
                return;
            }
            Op::Kind k;
            if (name == "sin") k = Op::kSin;
            else if (name == "cos") k = Op::kCos;
            else if (name == "exp") k = Op::kExp;
            else if (name == "tanh") k = Op::kTanh;
            else if (name == "sqrt") k = Op::kSqrt;
            else {
                pos_ = start;
                fail("unknown identifier '" + name + "'");
            }
            if (!eat('(')) fail("'(' expected after function name");
            parse_expr();
            if (!eat(')')) fail("')' expected");
            emit({k}, 0);
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    const std::string& src_;
    int dim_;
    std::size_t pos_ = 0;
    std::vector<Op>* ops_ = nullptr;
    int depth_ = 0, max_depth_ = 0;
};

ExprTree ExprTree::parse(const std::string& source, int dim) {
    if (source.empty()) throw ValidationError("empty expression source");
    if (dim < 1 || dim > kMaxDim)
        throw ValidationError("expression dimension " + std::to_string(dim) + " outside [1, " +
                              std::to_string(kMaxDim) + "]");
    return ExprParser(source, dim).run();
}

ExprTree ExprTree::constant(int dim, double v) {
    ExprTree t;
    t.dim_ = dim;
    t.source_ = "<const>";
    Op op{Op::kConst};
    op.val = v;
    t.ops_.push_back(op);
    t.max_stack_ = 1;
    return t;
}

double ExprTree::eval(double t, std::span<const double> x) const {
    double stack[64];
    int sp = 0;
    for (const Op& op : ops_) {
        switch (op.kind) {
            case Op::kConst: stack[sp++] = op.val; break;
            case Op::kVarX: stack[sp++] = x[static_cast<std::size_t>(op.arg)]; break;
            case Op::kVarT: stack[sp++] = t; break;
            case Op::kNeg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::kAdd: stack[sp - 2] += stack[sp - 1]; --sp; break;
            case Op::kSub: stack[sp - 2] -= stack[sp - 1]; --sp; break;
            case Op::kMul: stack[sp - 2] *= stack[sp - 1]; --sp; break;
            case Op::kDiv:
                if (stack[sp - 1] == 0.0)
                    throw NumericalError("division by zero evaluating \"" + source_ + "\"");
                stack[sp - 2] /= stack[sp - 1];
                --sp;
                break;
            case Op::kSin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
            case Op::kCos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
            case Op::kExp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
            case Op::kTanh: stack[sp - 1] = std::tanh(stack[sp - 1]); break;
            case Op::kSqrt:
                if (!(stack[sp - 1] > 0.0) && stack[sp - 1] != 0.0)
                    throw NumericalError("sqrt of negative value evaluating \"" + source_ + "\"");
                stack[sp - 1] = std::sqrt(stack[sp - 1]);
                break;
            case Op::kPowInt:
                if (op.arg < 0 && stack[sp - 1] == 0.0)
                    throw NumericalError("zero base with negative exponent evaluating \"" +
                                         source_ + "\"");
                stack[sp - 1] = pow_int_value(stack[sp - 1], op.arg);
                break;
        }
    }
    return stack[0];
}

void ExprTree::eval_jet_into(double t, const double* x, int order, double* out) const {
    const MultiIndexTable& tab = MultiIndexTable::get(dim_, order);
    const int n = tab.size();
    auto& stack = tl_jet_stack;
    auto& scratch = tl_jet_scratch;
    if (stack.size() < static_cast<std::size_t>((max_stack_ + 1) * n))
        stack.resize(static_cast<std::size_t>((max_stack_ + 1) * n));
    if (scratch.size() < static_cast<std::size_t>(3 * n + order + 1))
        scratch.resize(static_cast<std::size_t>(3 * n + order + 1));
    double* coeff = scratch.data() + 3 * n;

    int sp = 0;
    auto slot = [&](int i) { return stack.data() + static_cast<std::size_t>(i) * n; };
    // scratch layout: [0,n) out, [n,2n) delta, [2n,3n) tmp, [3n,..) coeff
    auto unary = [&](void (*gen)(double, int, double*)) {
        double* a = slot(sp - 1);
        gen(a[0], order, coeff);
        jetk::compose(tab, a, coeff, scratch.data(), scratch.data() + n, scratch.data() + 2 * n);
        std::memcpy(a, scratch.data(), sizeof(double) * static_cast<std::size_t>(n));
    };

    for (const Op& op : ops_) {
        switch (op.kind) {
            case Op::kConst: {
                double* s = slot(sp++);
                std::memset(s, 0, sizeof(double) * static_cast<std::size_t>(n));
                s[0] = op.val;
                break;
            }
            case Op::kVarX: {
                double* s = slot(sp++);
                std::memset(s, 0, sizeof(double) * static_cast<std::size_t>(n));
                s[0] = x[op.arg];
                if (order >= 1) {
                    MultiIndex e{};
                    e[op.arg] = 1;
                    s[tab.index_of(e)] = 1.0;
                }
                break;
            }
            case Op::kVarT: {
                double* s = slot(sp++);
                std::memset(s, 0, sizeof(double) * static_cast<std::size_t>(n));
                s[0] = t;
                break;
            }
            case Op::kNeg: {
                double* a = slot(sp - 1);
                for (int i = 0; i < n; ++i) a[i] = -a[i];
                break;
            }
            case Op::kAdd: {
                double* a = slot(sp - 2);
                double* b = slot(sp - 1);
                for (int i = 0; i < n; ++i) a[i] += b[i];
                --sp;
                break;
            }
            case Op::kSub: {
                double* a = slot(sp - 2);
                double* b = slot(sp - 1);
                for (int i = 0; i < n; ++i) a[i] -= b[i];
                --sp;
                break;
            }
            case Op::kMul: {
                double* a = slot(sp - 2);
                double* b = slot(sp - 1);
                jetk::mul(tab, a, b, scratch.data());
                std::memcpy(a, scratch.data(), sizeof(double) * static_cast<std::size_t>(n));
                --sp;
                break;
            }
            case Op::kDiv: {
                double* b = slot(sp - 1);
                jetk::coeff_recip(b[0], order, coeff);
                jetk::compose(tab, b, coeff, scratch.data(), scratch.data() + n, scratch.data() + 2 * n);
                double* a = slot(sp - 2);
                jetk::mul(tab, a, scratch.data(), scratch.data() + n);
                std::memcpy(a, scratch.data() + n, sizeof(double) * static_cast<std::size_t>(n));
                --sp;
                break;
            }
            case Op::kSin: unary(jetk::coeff_sin); break;
            case Op::kCos: unary(jetk::coeff_cos); break;
            case Op::kExp: unary(jetk::coeff_exp); break;
            case Op::kTanh: unary(jetk::coeff_tanh); break;
            case Op::kSqrt: unary(jetk::coeff_sqrt); break;
            case Op::kPowInt: {
                double* a = slot(sp - 1);
                int e = op.arg;
                bool invert = e < 0;
                if (invert) e = -e;
                // acc, power chain, and product temporary in scratch
                double* acc = scratch.data();
                double* p = scratch.data() + n;
                double* tmp = scratch.data() + 2 * n;
                std::memset(acc, 0, sizeof(double) * static_cast<std::size_t>(n));
                acc[0] = 1.0;
                std::memcpy(p, a, sizeof(double) * static_cast<std::size_t>(n));
                while (e > 0) {
                    if (e & 1) {
                        jetk::mul(tab, acc, p, tmp);
                        std::memcpy(acc, tmp, sizeof(double) * static_cast<std::size_t>(n));
                    }
                    e >>= 1;
                    if (e) {
                        jetk::mul(tab, p, p, tmp);
                        std::memcpy(p, tmp, sizeof(double) * static_cast<std::size_t>(n));
                    }
                }
                std::memcpy(a, acc, sizeof(double) * static_cast<std::size_t>(n));
                if (invert) unary(jetk::coeff_recip);
                break;
            }
        }
    }
    std::memcpy(out, slot(0), sizeof(double) * static_cast<std::size_t>(n));
}

Jet ExprTree::eval_jet(double t, std::span<const double> x, int order) const {
    Jet out(dim_, order);
    eval_jet_into(t, x.data(), order, out.data());
    return out;
}

} // namespace spdekit
