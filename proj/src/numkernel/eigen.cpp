#include "smdmeta/numkernel.hpp"

#include <algorithm>
#include <functional>

#include <Eigen/Eigenvalues>

#include "smdmeta/errors.hpp"

namespace smdmeta {

std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw DomainError("symmetric_eigenvalues: matrix is not square");
    if (a.rows() == 0) return {};
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw DomainError("symmetric_eigenvalues: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NonConvergence("symmetric_eigenvalues: solver did not converge");
    }
    std::vector<double> values(solver.eigenvalues().data(),
                               solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(values.begin(), values.end(), std::greater<>());
    return values;
}

}  // namespace smdmeta
