#pragma once

#include <vector>

#include "cbm/core/matrix.hpp"

namespace cbm {

struct SymEig {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k pairs with values[k]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Each eigenvector is
// sign-normalized so that its first nonzero component is positive.
SymEig sym_eig(const Matrix& m);

}  // namespace cbm
