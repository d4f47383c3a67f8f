#ifndef TVREG_LDLT_GUARD_HPP
#define TVREG_LDLT_GUARD_HPP

#include <Eigen/Dense>
#include <cmath>

namespace tvreg {

// Eigen's LDLT::rcond() can report moderate values for exactly singular
// factorizations, so singularity is judged from the pivot spread instead:
// a factorization is rejected when any pivot is not finite or the smallest
// |pivot| falls below 1e-12 of the largest.
inline bool ldlt_singular(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
    if (ldlt.info() != Eigen::Success) return true;
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    if (!d.allFinite()) return true;
    const double dmax = d.maxCoeff();
    if (!(dmax > 0.0)) return true;
    return d.minCoeff() <= 1e-12 * dmax;
}

} // namespace tvreg

#endif
