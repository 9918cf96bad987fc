#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <ostream>

namespace pcn {

inline constexpr int kMaxDim = 4;

/// A point (or vector) in 2, 3 or 4 dimensional Euclidean space.
class Point {
public:
    Point() = default;
    explicit Point(int dim) : dim_(dim) { assert(dim >= 1 && dim <= kMaxDim); }
    Point(std::initializer_list<double> xs) : dim_(static_cast<int>(xs.size())) {
        assert(dim_ >= 1 && dim_ <= kMaxDim);
        std::size_t i = 0;
        for (double x : xs) c_[i++] = x;
    }

    int dim() const noexcept { return dim_; }
    double& operator[](int i) noexcept { return c_[static_cast<std::size_t>(i)]; }
    double operator[](int i) const noexcept { return c_[static_cast<std::size_t>(i)]; }
    const double* data() const noexcept { return c_.data(); }

    Point& operator+=(const Point& o) noexcept {
        for (int i = 0; i < dim_; ++i) (*this)[i] += o[i];
        return *this;
    }
    Point& operator-=(const Point& o) noexcept {
        for (int i = 0; i < dim_; ++i) (*this)[i] -= o[i];
        return *this;
    }
    Point& operator*=(double s) noexcept {
        for (int i = 0; i < dim_; ++i) (*this)[i] *= s;
        return *this;
    }
    friend Point operator+(Point a, const Point& b) noexcept { return a += b; }
    friend Point operator-(Point a, const Point& b) noexcept { return a -= b; }
    friend Point operator*(Point a, double s) noexcept { return a *= s; }
    friend Point operator*(double s, Point a) noexcept { return a *= s; }

    friend bool operator==(const Point& a, const Point& b) noexcept {
        if (a.dim_ != b.dim_) return false;
        for (int i = 0; i < a.dim_; ++i)
            if (a[i] != b[i]) return false;
        return true;
    }

    bool finite() const noexcept {
        for (int i = 0; i < dim_; ++i)
            if (!std::isfinite((*this)[i])) return false;
        return true;
    }

    friend std::ostream& operator<<(std::ostream& os, const Point& p) {
        os << '(';
        for (int i = 0; i < p.dim_; ++i) os << (i ? "," : "") << p[i];
        return os << ')';
    }

private:
    std::array<double, kMaxDim> c_{};
    int dim_ = 0;
};

inline double dot(const Point& a, const Point& b) noexcept {
    double s = 0;
    for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}
inline double norm2(const Point& a) noexcept { return dot(a, a); }
inline double norm(const Point& a) noexcept { return std::sqrt(norm2(a)); }
inline double dist2(const Point& a, const Point& b) noexcept {
    double s = 0;
    for (int i = 0; i < a.dim(); ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}
inline double dist(const Point& a, const Point& b) noexcept { return std::sqrt(dist2(a, b)); }

}  // namespace pcn
