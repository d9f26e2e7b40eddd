#pragma once

#include <cmath>
#include <span>
#include <string>

#include "sep/error.hpp"

namespace sep {

/// gamma-law pressure P(rho) = K rho^gamma and its enthalpy Q, the primitive
/// of P'(rho)/rho. gamma == 1 selects the isothermal law with Q = K ln rho.
struct PressureLaw {
  double K = 1.0;
  double gamma = 2.0;

  static PressureLaw gamma_law(double K, double gamma) {
    if (!(K > 0.0)) throw domain_error("pressure law: K must be positive");
    if (!(gamma >= 1.0)) throw domain_error("pressure law: gamma must be >= 1");
    return PressureLaw{K, gamma};
  }

  double P(double rho) const {
    check(rho, "P");
    return K * std::pow(rho, gamma);
  }

  double Pprime(double rho) const {
    check(rho, "Pprime");
    return K * gamma * std::pow(rho, gamma - 1.0);
  }

  double Q(double rho) const {
    check(rho, "Q");
    if (isothermal()) return K * std::log(rho);
    return K * gamma / (gamma - 1.0) * std::pow(rho, gamma - 1.0);
  }

  double Qprime(double rho) const {
    check(rho, "Qprime");
    return K * gamma * std::pow(rho, gamma - 2.0);
  }

  double Qinverse(double q) const {
    if (isothermal()) return std::exp(q / K);
    if (!(q > 0.0))
      throw domain_error("Qinverse: enthalpy " + std::to_string(q) + " outside the range of Q");
    return std::pow(q * (gamma - 1.0) / (K * gamma), 1.0 / (gamma - 1.0));
  }

  /// Infimum of the range of Q; Qinverse is defined strictly above it.
  double Q_lower_bound() const { return isothermal() ? -HUGE_VAL : 0.0; }

  /// Strict: P'(rho) > |u|^2.
  bool is_subsonic(double rho, std::span<const double> u) const {
    double speed2 = 0.0;
    for (double c : u) speed2 += c * c;
    return Pprime(rho) > speed2;
  }

  bool isothermal() const { return gamma == 1.0; }

 private:
  static void check(double rho, const char* what) {
    if (!(rho > 0.0))
      throw domain_error(std::string(what) + ": density must be positive, got " +
                         std::to_string(rho));
  }
};

}  // namespace sep
