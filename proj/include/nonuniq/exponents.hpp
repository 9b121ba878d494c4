#pragma once

#include "nonuniq/common.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace nonuniq {

/// Critical exponents of the semilinear heat equation in dimension N.
/// N is real so the formulas can be swept continuously; the CLI passes integers.
struct ExponentTable {
  double N = 0;
  ExtendedReal p_S, p_JL, p_F, p_0;
  double q_S = 0, q_JL = 0, q_0 = 0;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

ExponentTable exponent_table(double N);

/// Sobolev exponent (N+2)/(N-2).
double sobolev_exponent(double N);
/// Joseph-Lundgren exponent, infinite for N <= 10.
ExtendedReal joseph_lundgren_exponent(double N);

/// N / (2 (q_f - 1)), infinite for q_f = 1.
ExtendedReal gamma_star(double N, double qf);
/// N (p - 1) / 2.
double gamma_c(double N, double p);

enum class Regime { supercritical_window, critical_subcritical_window, outside };

Regime classify_regime(double N, double qf);
std::string to_string(Regime r);

/// Conjugate exponent p/(p-1); infinite input maps to 1.
ExtendedReal conjugate(ExtendedReal p);

}  // namespace nonuniq
