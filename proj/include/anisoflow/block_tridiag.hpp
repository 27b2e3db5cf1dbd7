#pragma once

#include <cstddef>
#include <vector>

#include "anisoflow/core.hpp"

namespace anisoflow {

/// Periodic block-tridiagonal matrix with 2x2 blocks.
/// Row i couples to columns prev(i) (lower), i (diag) and next(i) (upper), cyclically.
class CyclicBlockTridiag {
public:
    explicit CyclicBlockTridiag(std::size_t n);

    std::size_t size() const { return diag_.size(); }

    Mat2& lower(std::size_t i) { return lower_[i]; }
    Mat2& diag(std::size_t i) { return diag_[i]; }
    Mat2& upper(std::size_t i) { return upper_[i]; }
    const Mat2& lower(std::size_t i) const { return lower_[i]; }
    const Mat2& diag(std::size_t i) const { return diag_[i]; }
    const Mat2& upper(std::size_t i) const { return upper_[i]; }

    std::vector<Vec2> multiply(const std::vector<Vec2>& x) const;

    /// Block Thomas elimination on the open chain plus a Woodbury correction for
    /// the two wrap-around blocks. Falls back to solve_dense when a pivot block
    /// is numerically singular.
    std::vector<Vec2> solve(const std::vector<Vec2>& rhs) const;

    /// Dense LU with partial pivoting.
    std::vector<Vec2> solve_dense(const std::vector<Vec2>& rhs) const;

    Eigen::MatrixXd to_dense() const;

private:
    bool try_solve_cyclic(const std::vector<Vec2>& rhs, std::vector<Vec2>& x) const;

    std::vector<Mat2> lower_;
    std::vector<Mat2> diag_;
    std::vector<Mat2> upper_;
};

}  // namespace anisoflow
