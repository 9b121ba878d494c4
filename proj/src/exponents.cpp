#include "nonuniq/exponents.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace nonuniq {

std::string ExtendedReal::to_string() const {
  if (infinite_) return "inf";
  std::ostringstream os;
  os << std::setprecision(17) << value_;
  return os.str();
}

namespace {

void require_dimension(double N) {
  if (!(N > 2)) throw DomainError("dim must be greater than 2");
}

nlohmann::json extended_json(ExtendedReal x) {
  if (x.is_infinite()) return "inf";
  return x.value();
}

}  // namespace

double sobolev_exponent(double N) {
  require_dimension(N);
  return (N + 2) / (N - 2);
}

ExtendedReal joseph_lundgren_exponent(double N) {
  require_dimension(N);
  if (N <= 10) return ExtendedReal::infinity();
  return 1 + 4 / (N - 4 - 2 * std::sqrt(N - 1));
}

ExponentTable exponent_table(double N) {
  require_dimension(N);
  ExponentTable t;
  t.N = N;
  t.p_S = sobolev_exponent(N);
  t.p_JL = joseph_lundgren_exponent(N);
  t.p_F = 1 + 2 / N;
  t.p_0 = N / (N - 2);
  t.q_S = (N + 2) / 4;
  t.q_JL = (N - 2 * std::sqrt(N - 1)) / 4;
  t.q_0 = N / 2;
  return t;
}

ExtendedReal gamma_star(double N, double qf) {
  require_dimension(N);
  if (qf < 1) throw DomainError("q_f must be at least 1");
  if (qf == 1) return ExtendedReal::infinity();
  return N / (2 * (qf - 1));
}

double gamma_c(double N, double p) { return N * (p - 1) / 2; }

ExtendedReal conjugate(ExtendedReal p) {
  if (p.is_infinite()) return 1.0;
  return p.value() / (p.value() - 1);
}

Regime classify_regime(double N, double qf) {
  const ExponentTable t = exponent_table(N);
  if (qf == 1) {
    // q_JL < 1 is the same statement as N < 10.
    return N < 10 ? Regime::supercritical_window : Regime::outside;
  }
  if (t.q_JL < qf && qf < t.q_S) return Regime::supercritical_window;
  if (t.q_S <= qf && qf < t.q_0) return Regime::critical_subcritical_window;
  return Regime::outside;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::supercritical_window:
      return "supercritical-window";
    case Regime::critical_subcritical_window:
      return "critical/subcritical-window";
    case Regime::outside:
      return "outside";
  }
  return "outside";
}

nlohmann::json ExponentTable::to_json() const {
  return {{"N", N},
          {"p_S", extended_json(p_S)},
          {"p_JL", extended_json(p_JL)},
          {"p_F", extended_json(p_F)},
          {"p_0", extended_json(p_0)},
          {"q_S", q_S},
          {"q_JL", q_JL},
          {"q_0", q_0}};
}

std::string ExponentTable::to_text() const {
  std::ostringstream os;
  os << std::setprecision(12);
  auto row = [&os](const char* name, const std::string& v) {
    os << std::left << std::setw(6) << name << ' ' << v << '\n';
  };
  auto num = [](double x) {
    std::ostringstream s;
    s << std::setprecision(12) << x;
    return s.str();
  };
  row("N", num(N));
  row("p_S", p_S.to_string());
  row("p_JL", p_JL.to_string());
  row("p_F", p_F.to_string());
  row("p_0", p_0.to_string());
  row("q_S", num(q_S));
  row("q_JL", num(q_JL));
  row("q_0", num(q_0));
  return os.str();
}

}  // namespace nonuniq
