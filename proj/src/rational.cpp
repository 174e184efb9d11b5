#include "gbp/rational.hpp"

#include "gbp/error.hpp"

namespace gbp {

Rational::Rational(long n, long d) {
  if (d == 0) throw Error(Errc::ParseError, "zero denominator");
  v_ = mpq_class(n, d);
  v_.canonicalize();
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.is_zero()) throw Error(Errc::ParseError, "division by zero");
  v_ /= o.v_;
  return *this;
}

Rational Rational::parse(std::string_view text) {
  std::string s;
  for (char c : text)
    if (c != ' ' && c != '\t') s.push_back(c);
  if (s.empty()) throw Error(Errc::ParseError, "empty rational");
  auto slash = s.find('/');
  auto digits = [](const std::string& p) {
    if (p.empty()) return false;
    std::size_t i = (p[0] == '-') ? 1 : 0;
    if (i == p.size()) return false;
    for (; i < p.size(); ++i)
      if (p[i] < '0' || p[i] > '9') return false;
    return true;
  };
  mpq_class q;
  if (slash == std::string::npos) {
    if (!digits(s)) throw Error(Errc::ParseError, "bad rational '" + s + "'");
    q = mpq_class(mpz_class(s));
  } else {
    std::string n = s.substr(0, slash), d = s.substr(slash + 1);
    if (!digits(n) || !digits(d) || d[0] == '-')
      throw Error(Errc::ParseError, "bad rational '" + s + "'");
    mpz_class dz(d);
    if (dz == 0) throw Error(Errc::ParseError, "zero denominator in '" + s + "'");
    q = mpq_class(mpz_class(n), dz);
  }
  return Rational(q);
}

std::string Rational::str() const {
  if (v_.get_den() == 1) return v_.get_num().get_str();
  return v_.get_num().get_str() + "/" + v_.get_den().get_str();
}

mpz_class lcm(const mpz_class& a, const mpz_class& b) {
  mpz_class r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

}  // namespace gbp
