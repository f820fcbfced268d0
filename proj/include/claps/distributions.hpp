#pragma once

namespace claps::dist {

/// Standard normal CDF via erfc, accurate in both tails.
double normal_cdf(double z);

/// min{Φ(z), 1 − Φ(z)} evaluated as Φ(−|z|) so the tail never cancels.
double normal_two_sided_tail(double z);

/// Φ⁻¹(p). Returns ∓∞ at p = 0 / 1. Rational initial guess refined with a
/// Halley step against the erfc-based CDF (~1e-15 relative).
double normal_quantile(double p);

/// Two-sided normal critical value z with P(|Z| ≤ z) = conf.
double normal_two_sided_critical(double conf);

/// Two-sided Student-t critical value with the given degrees of freedom.
double student_t_two_sided_critical(double conf, double dof);

/// P(|T| ≥ |t|) for Student-t with the given degrees of freedom.
double student_t_two_sided_p(double t, double dof);

}  // namespace claps::dist
