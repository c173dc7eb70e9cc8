#pragma once

namespace odp {

// Standard normal CDF.
double normal_cdf(double x);
// Inverse standard normal CDF (probit); p must lie in (0, 1).
double probit(double p);

}  // namespace odp
