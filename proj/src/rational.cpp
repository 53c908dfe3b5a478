#include "taut/rational.hpp"

#include <cctype>
#include <ostream>

namespace taut {

Rational::Rational(long num, long den) {
    if (den == 0) throw std::domain_error("Rational: zero denominator");
    q_ = mpq_class(num, den);
    q_.canonicalize();
}

Rational Rational::parse(std::string_view text) {
    std::string s(text);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    std::size_t start = s.find_first_not_of(" \t");
    if (start == std::string::npos) throw std::invalid_argument("empty rational");
    s = s.substr(start);
    if (s[0] == '+') s = s.substr(1);
    for (char c : s) {
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '/' || c == '-'))
            throw std::invalid_argument("malformed rational: " + std::string(text));
    }
    mpq_class q;
    if (q.set_str(s, 10) != 0) throw std::invalid_argument("malformed rational: " + std::string(text));
    if (q.get_den() == 0) throw std::invalid_argument("zero denominator: " + std::string(text));
    q.canonicalize();
    return Rational(q);
}

std::string Rational::str() const {
    if (q_.get_den() == 1) return q_.get_num().get_str();
    return q_.get_num().get_str() + "/" + q_.get_den().get_str();
}

Rational& Rational::operator/=(const Rational& o) {
    if (o.is_zero()) throw std::domain_error("Rational: division by zero");
    q_ /= o.q_;
    return *this;
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

Rational pow(const Rational& base, int exponent) {
    Rational result(1);
    Rational b = exponent < 0 ? Rational(1) / base : base;
    for (int i = 0; i < (exponent < 0 ? -exponent : exponent); ++i) result *= b;
    return result;
}

Rational factorial(int n) {
    mpz_class z;
    mpz_fac_ui(z.get_mpz_t(), static_cast<unsigned long>(n < 0 ? 0 : n));
    return Rational(z);
}

Rational double_factorial_odd(int n) {
    mpz_class z = 1;
    for (int k = 2 * n - 1; k > 1; k -= 2) z *= k;
    return Rational(z);
}

}  // namespace taut

std::size_t std::hash<taut::Rational>::operator()(const taut::Rational& r) const noexcept {
    return std::hash<std::string>{}(r.str());
}
