#include "anisoflow/block_tridiag.hpp"

#include <cmath>

namespace anisoflow {

namespace {

using Block3 = Eigen::Matrix<double, 2, 3>;

bool well_conditioned(const Mat2& m) {
    const double scale = m.cwiseAbs().maxCoeff();
    return scale > 0.0 && std::abs(m.determinant()) > 1e-14 * scale * scale;
}

}  // namespace

CyclicBlockTridiag::CyclicBlockTridiag(std::size_t n)
    : lower_(n, Mat2::Zero()), diag_(n, Mat2::Zero()), upper_(n, Mat2::Zero()) {
    if (n < 3) throw Error("cyclic block-tridiagonal matrix needs at least 3 block rows");
}

std::vector<Vec2> CyclicBlockTridiag::multiply(const std::vector<Vec2>& x) const {
    const std::size_t n = size();
    std::vector<Vec2> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = i == 0 ? n - 1 : i - 1;
        const std::size_t u = i + 1 == n ? 0 : i + 1;
        y[i] = lower_[i] * x[l] + diag_[i] * x[i] + upper_[i] * x[u];
    }
    return y;
}

Eigen::MatrixXd CyclicBlockTridiag::to_dense() const {
    const std::size_t n = size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = i == 0 ? n - 1 : i - 1;
        const std::size_t u = i + 1 == n ? 0 : i + 1;
        m.block<2, 2>(2 * i, 2 * l) += lower_[i];
        m.block<2, 2>(2 * i, 2 * i) += diag_[i];
        m.block<2, 2>(2 * i, 2 * u) += upper_[i];
    }
    return m;
}

std::vector<Vec2> CyclicBlockTridiag::solve_dense(const std::vector<Vec2>& rhs) const {
    const std::size_t n = size();
    Eigen::VectorXd b(2 * n);
    for (std::size_t i = 0; i < n; ++i) b.segment<2>(2 * i) = rhs[i];
    const Eigen::VectorXd x = to_dense().partialPivLu().solve(b);
    std::vector<Vec2> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x.segment<2>(2 * i);
    return out;
}

std::vector<Vec2> CyclicBlockTridiag::solve(const std::vector<Vec2>& rhs) const {
    std::vector<Vec2> x;
    if (try_solve_cyclic(rhs, x)) return x;
    return solve_dense(rhs);
}

bool CyclicBlockTridiag::try_solve_cyclic(const std::vector<Vec2>& rhs, std::vector<Vec2>& x) const {
    const std::size_t n = size();
    const std::size_t last = n - 1;

    // M = T + U V^T with U = [G; 0; ...; C_{n-1}] and V^T = [I, 0, ..., G^{-1} A_0].
    Mat2 g = -diag_[0];
    if (!well_conditioned(g)) g = -std::max(1.0, diag_[0].cwiseAbs().maxCoeff()) * Mat2::Identity();
    const Mat2 g_inv = g.inverse();
    const Mat2 wrap = g_inv * lower_[0];

    std::vector<Block3> cols(n, Block3::Zero());
    for (std::size_t i = 0; i < n; ++i) cols[i].col(0) = rhs[i];
    cols[0].block<2, 2>(0, 1) = g;
    cols[last].block<2, 2>(0, 1) = upper_[last];

    std::vector<Mat2> c_prime(n);
    std::vector<Block3> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        Mat2 pivot = diag_[i];
        if (i == 0) pivot -= g;
        if (i == last) pivot -= upper_[last] * wrap;
        Block3 r = cols[i];
        if (i > 0) {
            pivot -= lower_[i] * c_prime[i - 1];
            r -= lower_[i] * y[i - 1];
        }
        if (!well_conditioned(pivot)) return false;
        const Mat2 inv = pivot.inverse();
        if (i < last) c_prime[i] = inv * upper_[i];
        y[i] = inv * r;
    }
    for (std::size_t i = last; i-- > 0;) y[i] -= c_prime[i] * y[i + 1];

    const Vec2 vty = y[0].col(0) + wrap * y[last].col(0);
    const Mat2 vtz = y[0].block<2, 2>(0, 1) + wrap * y[last].block<2, 2>(0, 1);
    const Mat2 capacitance = Mat2::Identity() + vtz;
    if (!well_conditioned(capacitance)) return false;
    const Vec2 correction = capacitance.inverse() * vty;

    x.resize(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i].col(0) - y[i].block<2, 2>(0, 1) * correction;
    return true;
}

}  // namespace anisoflow
