#include "mtrack/nested_cholesky.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace mtrack {

NestedCholesky::NestedCholesky(const Matrix& G, const std::string& what) {
    if (G.rows() != G.cols()) throw DimensionError(what + " must be square, got " + shape_of(G));
    const Matrix reversed = G.reverse();
    Eigen::LLT<Matrix> llt(reversed);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        std::ostringstream msg;
        msg << what << " is not positive definite (eigenvalues in [" << lo << ", " << hi << "], condition estimate "
            << (lo > 0 ? hi / lo : std::numeric_limits<double>::infinity()) << ")";
        throw NumericalError(msg.str());
    }
    L_ = llt.matrixL();
}

Matrix NestedCholesky::solve_trailing(Index s, const Matrix& B) const {
    if (s < 0 || s > L_.rows()) throw DimensionError("solve_trailing: size " + std::to_string(s) + " out of range");
    if (B.rows() != s) throw DimensionError("solve_trailing: right-hand side has " + std::to_string(B.rows()) + " rows, expected " + std::to_string(s));
    Matrix X = B.colwise().reverse();
    const auto Ls = L_.topLeftCorner(s, s);
    Ls.triangularView<Eigen::Lower>().solveInPlace(X);
    Ls.transpose().triangularView<Eigen::Upper>().solveInPlace(X);
    return X.colwise().reverse();
}

} // namespace mtrack
