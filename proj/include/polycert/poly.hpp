#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Sparse multivariate polynomials over double coefficients, plus the
// perturbation polynomials used to regularize objectives.

namespace polycert::poly {

// Multi-index of a monomial x1^e1 * ... * xn^en. Total order is graded
// lexicographic: lower total degree first, and within one degree the
// lexicographically larger exponent vector first (x1 most significant),
// so the degree-2 block for two variables reads x1^2, x1*x2, x2^2.
struct ExponentVector {
    std::vector<std::uint32_t> exps;
    std::uint64_t degree = 0;

    ExponentVector() = default;
    explicit ExponentVector(std::vector<std::uint32_t> e);
    static ExponentVector zero(int nvars);

    int nvars() const { return static_cast<int>(exps.size()); }
    bool is_constant() const { return degree == 0; }
    ExponentVector operator+(const ExponentVector& o) const;

    bool operator==(const ExponentVector& o) const { return exps == o.exps; }
    bool operator<(const ExponentVector& o) const;
};

class Polynomial {
public:
    using TermMap = std::map<ExponentVector, double>;

    Polynomial() = default;
    explicit Polynomial(int nvars) : nvars_(nvars) { check_nvars(nvars); }
    Polynomial(int nvars, TermMap terms);

    static Polynomial constant(int nvars, double c);
    static Polynomial monomial(int nvars, const ExponentVector& e, double c);
    // x_index as a polynomial (0-based variable index)
    static Polynomial variable(int nvars, int index);

    int nvars() const { return nvars_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    // degree of the zero polynomial is 0
    std::uint64_t degree() const;
    double coefficient(const ExponentVector& e) const;

    // drops the term if the resulting coefficient is exactly zero
    void add_term(const ExponentVector& e, double c);

private:
    static void check_nvars(int nvars);
    int nvars_ = 0;
    TermMap terms_;
};

Polynomial operator+(const Polynomial& a, const Polynomial& b);
Polynomial operator-(const Polynomial& a, const Polynomial& b);
Polynomial operator-(const Polynomial& a);
Polynomial operator*(const Polynomial& a, const Polynomial& b);
Polynomial operator*(const Polynomial& a, double c);
Polynomial operator*(double c, const Polynomial& a);

double evaluate(const Polynomial& p, std::span<const double> point);
double l1_norm(const Polynomial& p);

// sum_{k=0..r} sum_i x_i^{2k} / k!  -- the truncated series of
// sum_i exp(x_i^2), applied to variables [first, first+count). The
// same construction serves the original variables and, after lifting,
// the slack variables.
Polynomial perturbation_poly(int nvars, int r, int first, int count);
Polynomial perturbation_poly(int nvars, int r);

// f + eps * perturbation_poly(f.nvars(), r)
Polynomial perturb(const Polynomial& f, double eps, int r);

// Deterministic printer; inverse of parse_polynomial for the same
// variable list. Highest-degree terms first.
std::string to_string(const Polynomial& p, std::span<const std::string> vars);

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// Grammar:  poly   := ['-'] term (('+'|'-') term)*
//           term   := [coef '*'] factor ('*' factor)* | coef
//           factor := ident ['^' uint]
// Identifiers must appear in `vars`; whitespace is insignificant.
Polynomial parse_polynomial(const std::string& text,
                            std::span<const std::string> vars);

struct ProblemInstance {
    Polynomial objective;
    std::vector<Polynomial> equalities;    // g_j = 0
    std::vector<Polynomial> inequalities;  // g_j >= 0
    std::vector<std::string> variables;

    int nvars() const { return objective.nvars(); }
    void validate() const;  // throws if member polynomials disagree on nvars
};

}  // namespace polycert::poly
