#pragma once

#include "mtrack/common.hpp"

namespace mtrack {

/// Cholesky factor of an SPD matrix G taken in reversed index order, so that every
/// trailing principal submatrix G[n-s:, n-s:] is factored by the leading s x s block
/// of the same factor. One O(n^3) factorization then serves a whole family of
/// shrinking systems.
class NestedCholesky {
public:
    /// Throws NumericalError (with an eigenvalue-based condition estimate) if G is not PD.
    explicit NestedCholesky(const Matrix& G, const std::string& what = "matrix");

    Index size() const { return L_.rows(); }

    /// Solves G[n-s:, n-s:] X = B, B having s rows.
    Matrix solve_trailing(Index s, const Matrix& B) const;

private:
    Matrix L_; // lower factor of J G J, J the reversal permutation
};

} // namespace mtrack
