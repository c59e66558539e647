#include "feasibility.hpp"

#include <cmath>
#include <limits>

#include "stocheq/errors.hpp"

namespace stocheq::detail {

bool inequalities_feasible(const Matrix& m, const Vector& h, double slack) {
  const Index rows = m.rows();
  const Index k = m.cols();
  if (rows == 0) return true;
  if (k == 0) return (h.array() >= -slack).all();

  // Columns: p (k), q (k), slack e (rows), artificial a (rows), rhs.
  const Index n_var = 2 * k + 2 * rows;
  Matrix tab = Matrix::Zero(rows + 1, n_var + 1);
  std::vector<Index> basis(static_cast<std::size_t>(rows));
  for (Index i = 0; i < rows; ++i) {
    const double rhs = h(i) + slack;
    const double sign = rhs >= 0.0 ? 1.0 : -1.0;
    tab.block(i, 0, 1, k) = sign * m.row(i);
    tab.block(i, k, 1, k) = -sign * m.row(i);
    tab(i, 2 * k + i) = sign;
    tab(i, n_var) = sign * rhs;
    if (sign > 0.0) {
      basis[static_cast<std::size_t>(i)] = 2 * k + i;
    } else {
      tab(i, 2 * k + rows + i) = 1.0;
      basis[static_cast<std::size_t>(i)] = 2 * k + rows + i;
    }
  }
  // Objective row: minimize the sum of artificials, expressed in reduced
  // costs over the non-basic columns.
  for (Index i = 0; i < rows; ++i) {
    if (basis[static_cast<std::size_t>(i)] >= 2 * k + rows) {
      tab.row(rows) -= tab.row(i);
      tab(rows, basis[static_cast<std::size_t>(i)]) = 0.0;
    }
  }

  const double scale = 1.0 + tab.cwiseAbs().maxCoeff();
  const double eps = 1e-12 * scale;
  const int max_iter = 50 * static_cast<int>(n_var + rows) + 100;
  for (int iter = 0; iter < max_iter; ++iter) {
    Index enter = -1;
    for (Index j = 0; j < n_var; ++j) {
      if (tab(rows, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < rows; ++i) {
      if (tab(i, enter) > eps) {
        const double ratio = tab(i, n_var) / tab(i, enter);
        if (ratio < best - eps ||
            (std::abs(ratio - best) <= eps && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] <
                 basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded in phase 1 cannot happen
    tab.row(leave) /= tab(leave, enter);
    for (Index i = 0; i <= rows; ++i) {
      if (i != leave && tab(i, enter) != 0.0) {
        tab.row(i) -= tab(i, enter) * tab.row(leave);
      }
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  // Remaining infeasibility is the sum of the artificials.
  return -tab(rows, n_var) <= 1e-9 * scale;
}

}  // namespace stocheq::detail
