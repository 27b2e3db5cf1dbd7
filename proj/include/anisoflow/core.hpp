#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace anisoflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Anti-clockwise rotation by a right angle: (p1, p2) -> (-p2, p1).
inline Vec2 perp(const Vec2& p) { return {-p.y(), p.x()}; }

/// 2D cross product a x b.
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration (density parameters, split, scenario files).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A direction-dependent quantity was requested at p = 0.
class DegenerateDirectionError : public Error {
public:
    using Error::Error;
};

/// An element of a polygonal curve has zero (or non-finite) length.
class DegenerateEdgeError : public Error {
public:
    DegenerateEdgeError(const std::string& what, std::size_t element)
        : Error(what), element_(element) {}

    std::size_t element() const noexcept { return element_; }

private:
    std::size_t element_;
};

}  // namespace anisoflow
