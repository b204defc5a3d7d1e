#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "qrate/normal.hpp"

namespace qrate {

enum class MarginalFamily { std_normal, uniform01, heavy_tail };

/// Continuous marginal law with exact cdf/pdf/quantile evaluators.
///
/// The heavy-tail family is the symmetric Lomax-type law
///   F(x) = 1 − (1+x)^{−ν}/2 (x ≥ 0),  F(x) = (1−x)^{−ν}/2 (x < 0),
/// whose tails decay like |x|^{−ν}; all three evaluators are closed-form.
class MarginalLaw {
 public:
  MarginalLaw() = default;  // standard normal

  static MarginalLaw std_normal() { return MarginalLaw(MarginalFamily::std_normal, 0.0); }
  static MarginalLaw uniform01() { return MarginalLaw(MarginalFamily::uniform01, 0.0); }
  static MarginalLaw heavy_tail(double nu) {
    if (!(nu > 0.0)) throw std::domain_error("MarginalLaw: tail exponent must be > 0");
    return MarginalLaw(MarginalFamily::heavy_tail, nu);
  }

  [[nodiscard]] MarginalFamily family() const { return family_; }
  [[nodiscard]] double tail_exponent() const { return nu_; }

  [[nodiscard]] double cdf(double x) const {
    switch (family_) {
      case MarginalFamily::std_normal:
        return std_normal_cdf(x);
      case MarginalFamily::uniform01:
        return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : x);
      case MarginalFamily::heavy_tail:
        return x >= 0.0 ? 1.0 - 0.5 * std::pow(1.0 + x, -nu_) : 0.5 * std::pow(1.0 - x, -nu_);
    }
    return 0.0;
  }

  [[nodiscard]] double pdf(double x) const {
    switch (family_) {
      case MarginalFamily::std_normal:
        return std_normal_pdf(x);
      case MarginalFamily::uniform01:
        return (x > 0.0 && x < 1.0) ? 1.0 : 0.0;
      case MarginalFamily::heavy_tail:
        return 0.5 * nu_ * std::pow(1.0 + std::fabs(x), -nu_ - 1.0);
    }
    return 0.0;
  }

  [[nodiscard]] double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("MarginalLaw: p must lie in (0,1)");
    switch (family_) {
      case MarginalFamily::std_normal:
        return std_normal_quantile(p);
      case MarginalFamily::uniform01:
        return p;
      case MarginalFamily::heavy_tail:
        return p >= 0.5 ? std::pow(2.0 * (1.0 - p), -1.0 / nu_) - 1.0
                        : 1.0 - std::pow(2.0 * p, -1.0 / nu_);
    }
    return 0.0;
  }

  /// quantile(Phi(w)) for a latent standard normal w; the Gaussian-copula
  /// transform. The standard-normal case is the identity and is passed
  /// through untouched.
  [[nodiscard]] double from_latent_normal(double w) const {
    if (family_ == MarginalFamily::std_normal) return w;
    return quantile(std_normal_cdf(w));
  }

  /// True when the law of X equals the law of −X.
  [[nodiscard]] bool symmetric_about_zero() const {
    return family_ == MarginalFamily::std_normal || family_ == MarginalFamily::heavy_tail;
  }

  [[nodiscard]] std::string name() const {
    switch (family_) {
      case MarginalFamily::std_normal:
        return "std_normal";
      case MarginalFamily::uniform01:
        return "uniform01";
      case MarginalFamily::heavy_tail:
        return "heavy_tail(" + std::to_string(nu_) + ")";
    }
    return "";
  }

 private:
  MarginalLaw(MarginalFamily family, double nu) : family_(family), nu_(nu) {}

  MarginalFamily family_ = MarginalFamily::std_normal;
  double nu_ = 0.0;
};

}  // namespace qrate
