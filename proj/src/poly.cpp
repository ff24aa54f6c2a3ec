#include "polycert/poly.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

namespace polycert::poly {

ExponentVector::ExponentVector(std::vector<std::uint32_t> e)
    : exps(std::move(e)) {
    degree = std::accumulate(exps.begin(), exps.end(), std::uint64_t{0});
}

ExponentVector ExponentVector::zero(int nvars) {
    return ExponentVector(std::vector<std::uint32_t>(nvars, 0));
}

ExponentVector ExponentVector::operator+(const ExponentVector& o) const {
    if (exps.size() != o.exps.size())
        throw std::invalid_argument("exponent vectors of different length");
    std::vector<std::uint32_t> e(exps.size());
    for (std::size_t i = 0; i < exps.size(); ++i) e[i] = exps[i] + o.exps[i];
    return ExponentVector(std::move(e));
}

bool ExponentVector::operator<(const ExponentVector& o) const {
    if (degree != o.degree) return degree < o.degree;
    // within a degree class the lexicographically larger vector comes first
    return std::lexicographical_compare(o.exps.begin(), o.exps.end(),
                                        exps.begin(), exps.end());
}

void Polynomial::check_nvars(int nvars) {
    if (nvars < 0) throw std::invalid_argument("negative variable count");
}

Polynomial::Polynomial(int nvars, TermMap terms)
    : nvars_(nvars), terms_(std::move(terms)) {
    check_nvars(nvars);
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (it->first.nvars() != nvars_)
            throw std::invalid_argument("term with wrong variable count");
        if (it->second == 0.0)
            it = terms_.erase(it);
        else
            ++it;
    }
}

Polynomial Polynomial::constant(int nvars, double c) {
    Polynomial p(nvars);
    p.add_term(ExponentVector::zero(nvars), c);
    return p;
}

Polynomial Polynomial::monomial(int nvars, const ExponentVector& e, double c) {
    if (e.nvars() != nvars)
        throw std::invalid_argument("monomial with wrong variable count");
    Polynomial p(nvars);
    p.add_term(e, c);
    return p;
}

Polynomial Polynomial::variable(int nvars, int index) {
    if (index < 0 || index >= nvars)
        throw std::invalid_argument("variable index out of range");
    std::vector<std::uint32_t> e(nvars, 0);
    e[index] = 1;
    return monomial(nvars, ExponentVector(std::move(e)), 1.0);
}

std::uint64_t Polynomial::degree() const {
    if (terms_.empty()) return 0;
    return terms_.rbegin()->first.degree;
}

double Polynomial::coefficient(const ExponentVector& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const ExponentVector& e, double c) {
    if (e.nvars() != nvars_)
        throw std::invalid_argument("term with wrong variable count");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

namespace {

void require_same_nvars(const Polynomial& a, const Polynomial& b) {
    if (a.nvars() != b.nvars())
        throw std::invalid_argument("polynomials over different variable counts");
}

}  // namespace

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    require_same_nvars(a, b);
    Polynomial result(a.nvars());
    for (const auto& [e, c] : a.terms()) result.add_term(e, c);
    for (const auto& [e, c] : b.terms()) result.add_term(e, c);
    return result;
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    require_same_nvars(a, b);
    Polynomial result(a.nvars());
    for (const auto& [e, c] : a.terms()) result.add_term(e, c);
    for (const auto& [e, c] : b.terms()) result.add_term(e, -c);
    return result;
}

Polynomial operator-(const Polynomial& a) {
    Polynomial result(a.nvars());
    for (const auto& [e, c] : a.terms()) result.add_term(e, -c);
    return result;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    require_same_nvars(a, b);
    Polynomial result(a.nvars());
    for (const auto& [ea, ca] : a.terms())
        for (const auto& [eb, cb] : b.terms()) result.add_term(ea + eb, ca * cb);
    return result;
}

Polynomial operator*(const Polynomial& a, double c) {
    Polynomial result(a.nvars());
    for (const auto& [e, coef] : a.terms()) result.add_term(e, coef * c);
    return result;
}

Polynomial operator*(double c, const Polynomial& a) { return a * c; }

double evaluate(const Polynomial& p, std::span<const double> point) {
    if (static_cast<int>(point.size()) != p.nvars())
        throw std::invalid_argument("evaluation point has wrong dimension");
    double sum = 0.0;
    for (const auto& [e, c] : p.terms()) {
        double term = c;
        for (int i = 0; i < p.nvars(); ++i) {
            double base = point[i];
            std::uint32_t k = e.exps[i];
            // binary powering keeps evaluation deterministic
            double pw = 1.0;
            while (k != 0) {
                if (k & 1u) pw *= base;
                base *= base;
                k >>= 1u;
            }
            term *= pw;
        }
        sum += term;
    }
    return sum;
}

double l1_norm(const Polynomial& p) {
    double s = 0.0;
    for (const auto& [e, c] : p.terms()) s += std::abs(c);
    return s;
}

Polynomial perturbation_poly(int nvars, int r, int first, int count) {
    if (nvars < 1 || count < 1 || first < 0 || first + count > nvars)
        throw std::invalid_argument("perturbation_poly: bad variable range");
    if (r < 0) throw std::invalid_argument("perturbation_poly: negative order");
    if (r > 170)
        throw std::invalid_argument("perturbation_poly: k! overflows double for r > 170");
    Polynomial p(nvars);
    double kfact = 1.0;
    for (int k = 0; k <= r; ++k) {
        if (k > 0) kfact *= static_cast<double>(k);
        const double coef = 1.0 / kfact;
        for (int i = first; i < first + count; ++i) {
            std::vector<std::uint32_t> e(nvars, 0);
            e[i] = static_cast<std::uint32_t>(2 * k);
            p.add_term(ExponentVector(std::move(e)), coef);
        }
    }
    return p;
}

Polynomial perturbation_poly(int nvars, int r) {
    return perturbation_poly(nvars, r, 0, nvars);
}

Polynomial perturb(const Polynomial& f, double eps, int r) {
    if (eps < 0.0) throw std::invalid_argument("perturb: negative eps");
    if (f.nvars() < 1) throw std::invalid_argument("perturb: no variables");
    if (eps == 0.0) return f;
    return f + eps * perturbation_poly(f.nvars(), r);
}

namespace {

// shortest decimal string that parses back to exactly the same double
std::string format_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace

std::string to_string(const Polynomial& p, std::span<const std::string> vars) {
    if (static_cast<int>(vars.size()) != p.nvars())
        throw std::invalid_argument("variable name list has wrong length");
    if (p.is_zero()) return "0";
    std::ostringstream out;
    bool first = true;
    // highest-degree terms first
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [e, c] = *it;
        const double mag = std::abs(c);
        if (first) {
            if (c < 0.0) out << "-";
            first = false;
        } else {
            out << (c < 0.0 ? " - " : " + ");
        }
        bool printed_coef = false;
        if (e.is_constant() || mag != 1.0) {
            out << format_double(mag);
            printed_coef = true;
        }
        bool first_factor = !printed_coef;
        for (int i = 0; i < p.nvars(); ++i) {
            if (e.exps[i] == 0) continue;
            if (!first_factor) out << "*";
            first_factor = false;
            out << vars[i];
            if (e.exps[i] > 1) out << "^" << e.exps[i];
        }
    }
    return out.str();
}

namespace {

struct Token {
    enum Kind { Number, Ident, Plus, Minus, Star, Caret, End } kind;
    std::string text;
    std::size_t pos;
};

class Lexer {
public:
    explicit Lexer(const std::string& s) : s_(s) {}

    Token next() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
        const std::size_t start = i_;
        if (i_ >= s_.size()) return {Token::End, "", start};
        const char c = s_[i_];
        if (c == '+') { ++i_; return {Token::Plus, "+", start}; }
        if (c == '-') { ++i_; return {Token::Minus, "-", start}; }
        if (c == '*') { ++i_; return {Token::Star, "*", start}; }
        if (c == '^') { ++i_; return {Token::Caret, "^", start}; }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t j = i_;
            while (j < s_.size() &&
                   (std::isdigit(static_cast<unsigned char>(s_[j])) || s_[j] == '.'))
                ++j;
            if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
                if (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) {
                    while (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k])))
                        ++k;
                    j = k;
                }
            }
            Token t{Token::Number, s_.substr(i_, j - i_), start};
            i_ = j;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i_;
            while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) ||
                                     s_[j] == '_'))
                ++j;
            Token t{Token::Ident, s_.substr(i_, j - i_), start};
            i_ = j;
            return t;
        }
        throw ParseError(std::string("unexpected character '") + c + "' at position " +
                             std::to_string(start),
                         start);
    }

private:
    const std::string& s_;
    std::size_t i_ = 0;
};

class Parser {
public:
    Parser(const std::string& text, std::span<const std::string> vars)
        : lex_(text), vars_(vars) {
        tok_ = lex_.next();
    }

    Polynomial parse() {
        Polynomial p(static_cast<int>(vars_.size()));
        double sign = 1.0;
        if (tok_.kind == Token::Minus) {
            sign = -1.0;
            advance();
        } else if (tok_.kind == Token::Plus) {
            advance();
        }
        parse_term(p, sign);
        while (tok_.kind == Token::Plus || tok_.kind == Token::Minus) {
            sign = (tok_.kind == Token::Minus) ? -1.0 : 1.0;
            advance();
            // a sign directly attached to the coefficient is also accepted
            if (tok_.kind == Token::Minus) {
                sign = -sign;
                advance();
            }
            parse_term(p, sign);
        }
        if (tok_.kind != Token::End)
            throw ParseError("unexpected token '" + tok_.text + "' at position " +
                                 std::to_string(tok_.pos),
                             tok_.pos);
        return p;
    }

private:
    void advance() { tok_ = lex_.next(); }

    int variable_index(const Token& t) const {
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == t.text) return static_cast<int>(i);
        throw ParseError("unknown variable '" + t.text + "' at position " +
                             std::to_string(t.pos),
                         t.pos);
    }

    std::uint32_t parse_exponent() {
        if (tok_.kind != Token::Number || tok_.text.find_first_of(".eE") != std::string::npos)
            throw ParseError("expected integer exponent at position " +
                                 std::to_string(tok_.pos),
                             tok_.pos);
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(tok_.text.c_str(), &end, 10);
        if (errno == ERANGE || v > 0x7fffffffull)
            throw ParseError("exponent overflow at position " + std::to_string(tok_.pos),
                             tok_.pos);
        advance();
        return static_cast<std::uint32_t>(v);
    }

    void parse_factor(std::vector<std::uint32_t>& exps) {
        if (tok_.kind != Token::Ident)
            throw ParseError("expected variable at position " + std::to_string(tok_.pos),
                             tok_.pos);
        const int idx = variable_index(tok_);
        advance();
        std::uint32_t e = 1;
        if (tok_.kind == Token::Caret) {
            advance();
            e = parse_exponent();
        }
        const std::uint64_t sum =
            static_cast<std::uint64_t>(exps[idx]) + static_cast<std::uint64_t>(e);
        if (sum > 0x7fffffffull)
            throw ParseError("exponent overflow at position " + std::to_string(tok_.pos),
                             tok_.pos);
        exps[idx] = static_cast<std::uint32_t>(sum);
    }

    void parse_term(Polynomial& p, double sign) {
        double coef = sign;
        std::vector<std::uint32_t> exps(vars_.size(), 0);
        bool saw_factor = false;

        if (tok_.kind == Token::Number) {
            coef *= std::strtod(tok_.text.c_str(), nullptr);
            advance();
            if (tok_.kind == Token::Star) {
                advance();
                parse_factor(exps);
                saw_factor = true;
            } else {
                p.add_term(ExponentVector(std::move(exps)), coef);
                return;
            }
        } else {
            parse_factor(exps);
            saw_factor = true;
        }
        while (tok_.kind == Token::Star) {
            advance();
            parse_factor(exps);
        }
        if (!saw_factor)
            throw ParseError("empty term at position " + std::to_string(tok_.pos),
                             tok_.pos);
        p.add_term(ExponentVector(std::move(exps)), coef);
    }

    Lexer lex_;
    std::span<const std::string> vars_;
    Token tok_;
};

}  // namespace

Polynomial parse_polynomial(const std::string& text,
                            std::span<const std::string> vars) {
    Parser parser(text, vars);
    return parser.parse();
}

void ProblemInstance::validate() const {
    const int n = objective.nvars();
    if (n < 1) throw std::invalid_argument("instance has no variables");
    if (static_cast<int>(variables.size()) != n)
        throw std::invalid_argument("variable name list has wrong length");
    for (const auto& g : equalities)
        if (g.nvars() != n)
            throw std::invalid_argument("equality over wrong variable count");
    for (const auto& g : inequalities)
        if (g.nvars() != n)
            throw std::invalid_argument("inequality over wrong variable count");
}

}  // namespace polycert::poly
