#pragma once

// Feasibility of small systems of linear inequalities.

#include "stocheq/numlin.hpp"

namespace stocheq::detail {

/// Whether some s (unconstrained in sign) satisfies m s <= h, up to `slack`
/// per row. Dense phase-1 simplex with Bland's rule.
bool inequalities_feasible(const Matrix& m, const Vector& h,
                           double slack = 1e-9);

}  // namespace stocheq::detail
