#include "mlab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

enum Op {
    kConst,
    kVarX,
    kVarY,
    kVarZ,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kPow,
    kNeg,
    kFnBase  // kFnBase + function index
};

const char* kFnNames[] = {"sin",  "cos",  "tan",  "exp",   "log",   "sqrt",
                          "sinh", "cosh", "tanh", "abs",   "atan",  "asinh",
                          "acosh"};
constexpr int kFnCount = 13;

double apply_fn(int fn, double v) {
    switch (fn) {
        case 0: return std::sin(v);
        case 1: return std::cos(v);
        case 2: return std::tan(v);
        case 3: return std::exp(v);
        case 4: return std::log(v);
        case 5: return std::sqrt(v);
        case 6: return std::sinh(v);
        case 7: return std::cosh(v);
        case 8: return std::tanh(v);
        case 9: return std::abs(v);
        case 10: return std::atan(v);
        case 11: return std::asinh(v);
        case 12: return std::acosh(v);
    }
    throw internal_error("bad function index");
}

struct Parser {
    const char* p;
    std::vector<std::pair<int, double>> out;

    void skip_ws() {
        while (*p == ' ' || *p == '\t') ++p;
    }

    [[noreturn]] void fail(const std::string& why) {
        throw config_error("expression parse error: " + why + " near '" + std::string(p).substr(0, 16) + "'");
    }

    void emit(int op, double k = 0.0) { out.emplace_back(op, k); }

    // expr := term (('+'|'-') term)*
    void expr() {
        term();
        for (;;) {
            skip_ws();
            if (*p == '+') {
                ++p;
                term();
                emit(kAdd);
            } else if (*p == '-') {
                ++p;
                term();
                emit(kSub);
            } else {
                return;
            }
        }
    }

    // term := factor (('*'|'/') factor)*
    void term() {
        factor();
        for (;;) {
            skip_ws();
            if (*p == '*') {
                ++p;
                factor();
                emit(kMul);
            } else if (*p == '/') {
                ++p;
                factor();
                emit(kDiv);
            } else {
                return;
            }
        }
    }

    // factor := unary ('^' factor)?   (right associative)
    void factor() {
        unary();
        skip_ws();
        if (*p == '^') {
            ++p;
            factor();
            emit(kPow);
        }
    }

    void unary() {
        skip_ws();
        if (*p == '-') {
            ++p;
            unary();
            emit(kNeg);
            return;
        }
        if (*p == '+') {
            ++p;
            unary();
            return;
        }
        primary();
    }

    void primary() {
        skip_ws();
        if (*p == '(') {
            ++p;
            expr();
            skip_ws();
            if (*p != ')') fail("missing ')'");
            ++p;
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(*p)) || *p == '.') {
            char* end = nullptr;
            double v = std::strtod(p, &end);
            if (end == p) fail("bad number");
            p = end;
            emit(kConst, v);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(*p))) {
            const char* start = p;
            while (std::isalnum(static_cast<unsigned char>(*p)) || *p == '_') ++p;
            std::string name(start, p);
            if (name == "x") {
                emit(kVarX);
                return;
            }
            if (name == "y") {
                emit(kVarY);
                return;
            }
            if (name == "z") {
                emit(kVarZ);
                return;
            }
            if (name == "pi") {
                emit(kConst, 3.14159265358979323846);
                return;
            }
            if (name == "e") {
                emit(kConst, 2.71828182845904523536);
                return;
            }
            for (int i = 0; i < kFnCount; ++i) {
                if (name == kFnNames[i]) {
                    skip_ws();
                    if (*p != '(') fail("function needs '('");
                    ++p;
                    expr();
                    skip_ws();
                    if (*p != ')') fail("missing ')'");
                    ++p;
                    emit(kFnBase + i);
                    return;
                }
            }
            fail("unknown identifier '" + name + "'");
        }
        fail("unexpected character");
    }
};

}  // namespace

Expr Expr::parse(const std::string& src) {
    Parser ps{src.c_str(), {}};
    ps.expr();
    ps.skip_ws();
    if (*ps.p != '\0')
        throw config_error("expression parse error: trailing input '" + std::string(ps.p) + "'");
    Expr e;
    e.src_ = src;
    e.prog_.reserve(ps.out.size());
    for (auto& [op, k] : ps.out) e.prog_.push_back({op, k});
    if (e.prog_.empty()) throw config_error("empty expression");
    return e;
}

double Expr::eval(double x, double y, double z) const {
    double stack[64];
    int top = -1;
    for (const auto& ins : prog_) {
        switch (ins.op) {
            case kConst: stack[++top] = ins.k; break;
            case kVarX: stack[++top] = x; break;
            case kVarY: stack[++top] = y; break;
            case kVarZ: stack[++top] = z; break;
            case kAdd: --top; stack[top] += stack[top + 1]; break;
            case kSub: --top; stack[top] -= stack[top + 1]; break;
            case kMul: --top; stack[top] *= stack[top + 1]; break;
            case kDiv: --top; stack[top] /= stack[top + 1]; break;
            case kPow: --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
            case kNeg: stack[top] = -stack[top]; break;
            default: stack[top] = apply_fn(ins.op - kFnBase, stack[top]); break;
        }
        if (top >= 60) throw config_error("expression too deep");
    }
    if (top != 0) throw internal_error("expression program imbalance");
    return stack[0];
}

std::vector<std::array<Expr, 3>> parse_field_set(const std::string& spec) {
    std::vector<std::array<Expr, 3>> fields;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t semi = spec.find(';', pos);
        std::string group = spec.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos);
        // split on commas at top parenthesis level
        std::vector<std::string> comps;
        int depth = 0;
        std::string cur;
        for (char c : group) {
            if (c == '(') depth++;
            if (c == ')') depth--;
            if (c == ',' && depth == 0) {
                comps.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        comps.push_back(cur);
        if (comps.size() != 3)
            throw config_error("each field needs exactly 3 comma-separated components");
        fields.push_back({Expr::parse(comps[0]), Expr::parse(comps[1]), Expr::parse(comps[2])});
        if (semi == std::string::npos) break;
        pos = semi + 1;
    }
    if (fields.empty()) throw config_error("field set is empty");
    return fields;
}

}  // namespace mlab
