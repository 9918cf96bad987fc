#pragma once

// Exact orientation predicates on quantized coordinates, with a floating-point
// filter in front of a GMP fallback.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pcn/point.hpp"

namespace pcn::geo::detail {

class QuantizedPoints {
public:
    QuantizedPoints(std::span<const Point> points, std::span<const std::uint64_t> labels);

    int dim() const { return dim_; }
    std::size_t size() const { return q_.size(); }
    const std::array<std::int64_t, kMaxDim>& q(std::uint32_t i) const { return q_[i]; }
    std::uint64_t label(std::uint32_t i) const { return labels_[i]; }

    /// Sign of det[x_i, |x_i|², 1] over d+2 rows under simulation of
    /// simplicity. Every entry of the lift and coordinate columns gets its own
    /// infinitesimal; lift entries dominate coordinate entries, and within a
    /// column smaller labels dominate. Never returns 0.
    int orient_lifted(std::span<const std::uint32_t> rows) const;

    /// Sign of det[x_i, 1] over d+1 rows under the same perturbation. Never 0.
    int orient_perturbed(std::span<const std::uint32_t> rows) const;

    /// Exact sign of det[x_i, 1] over d+1 rows (no perturbation).
    int orient(std::span<const std::uint32_t> rows) const;

    /// Exact affine rank of the given rows (0 for a single point).
    int affine_rank(std::span<const std::uint32_t> rows) const;

private:
    int lifted_unperturbed(std::span<const std::uint32_t> rows) const;
    int perturbed_sign(std::span<const std::uint32_t> rows, bool lifted) const;

    int dim_;
    std::vector<std::array<std::int64_t, kMaxDim>> q_;
    std::vector<std::uint64_t> labels_;
};

}  // namespace pcn::geo::detail
