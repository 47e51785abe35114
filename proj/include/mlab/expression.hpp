#pragma once

#include <array>
#include <string>
#include <vector>

namespace mlab {

// Small arithmetic expression over variables x, y, z:
// numbers, + - * / ^, unary minus, parentheses, and the functions
// sin cos tan exp log sqrt sinh cosh tanh abs atan asinh acosh.
// Compiled once to a postfix program; eval is allocation-free.
class Expr {
  public:
    static Expr parse(const std::string& src);
    double eval(double x, double y, double z) const;
    const std::string& source() const { return src_; }

  private:
    struct Ins {
        int op;      // opcode
        double k;    // constant payload
    };
    std::vector<Ins> prog_;
    std::string src_;
};

// Parse a rank-set of coordinate vector fields:
//   "f1, f2, f3 ; g1, g2, g3"
// gives two fields with the listed components.
std::vector<std::array<Expr, 3>> parse_field_set(const std::string& spec);

}  // namespace mlab
