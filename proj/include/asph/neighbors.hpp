#pragma once

/**
 * @file neighbors.hpp
 * @brief Fixed-radius neighbor search on a uniform cell grid.
 */

#include "asph/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace asph {

/// Compressed per-particle neighbor lists.
///
/// `indices[offsets[i] .. offsets[i+1])` are the particles strictly closer than
/// `radius` to particle i. The immediate-neighbor sublist and r_d are filled
/// by the adaptivity module.
struct NeighborTable {
    std::vector<std::size_t> offsets{0};
    std::vector<std::uint32_t> indices;

    std::vector<std::size_t> immediate_offsets;
    std::vector<std::uint32_t> immediate_indices;
    std::vector<double> r_d;

    double radius = 0.0;
    double cell_size = 0.0;
    std::uint64_t stamp = 0;  ///< step counter of the configuration the table was built for

    std::size_t size() const { return offsets.size() - 1; }
    std::size_t pair_count() const { return indices.size(); }

    std::span<const std::uint32_t> neighbors(std::size_t i) const {
        return {indices.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
    std::span<const std::uint32_t> immediate(std::size_t i) const {
        return {immediate_indices.data() + immediate_offsets[i], immediate_offsets[i + 1] - immediate_offsets[i]};
    }
    bool has_immediate() const { return immediate_offsets.size() == offsets.size(); }
};

namespace detail {

template <int Dim>
std::array<std::int64_t, Dim> cell_of(const Vec<Dim>& x, const Vec<Dim>& origin, double inv_cell) {
    std::array<std::int64_t, Dim> c{};
    for (int d = 0; d < Dim; ++d) c[d] = static_cast<std::int64_t>(std::floor((x[d] - origin[d]) * inv_cell));
    return c;
}

template <int Dim>
std::uint64_t cell_key(const std::array<std::int64_t, Dim>& c, const std::array<std::int64_t, Dim>& extent) {
    std::uint64_t key = 0;
    for (int d = Dim - 1; d >= 0; --d) key = key * static_cast<std::uint64_t>(extent[d]) + static_cast<std::uint64_t>(c[d]);
    return key;
}

}  // namespace detail

/// Builds exact, symmetric neighbor lists for `radius` (strict inequality).
///
/// The grid origin is the bounding-box minimum and the cell size equals the
/// radius, so only the 3^Dim surrounding cells need to be visited. Occupied
/// cells are kept as a sorted key list, which keeps memory proportional to N
/// even when particles scatter far apart.
template <int Dim>
NeighborTable build_neighbor_table(std::span<const Vec<Dim>> positions, double radius, bool sorted = true) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ArgumentError("neighbor search: radius must be positive");
    const std::size_t n = positions.size();
    if (n > std::numeric_limits<std::uint32_t>::max()) throw ArgumentError("neighbor search: too many particles");

    NeighborTable table;
    table.radius = radius;
    table.cell_size = radius;
    table.offsets.assign(n + 1, 0);
    if (n == 0) return table;

    Vec<Dim> lo = positions[0], hi = positions[0];
    for (const auto& x : positions) {
        if (!all_finite(x)) throw ArgumentError("neighbor search: non-finite particle position");
        for (int d = 0; d < Dim; ++d) {
            lo[d] = std::min(lo[d], x[d]);
            hi[d] = std::max(hi[d], x[d]);
        }
    }
    const double inv_cell = 1.0 / radius;
    std::array<std::int64_t, Dim> extent{};
    for (int d = 0; d < Dim; ++d) extent[d] = static_cast<std::int64_t>(std::floor((hi[d] - lo[d]) * inv_cell)) + 3;

    // Shift by one so that neighbor cells of boundary cells stay non-negative.
    std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto c = detail::cell_of<Dim>(positions[i], lo, inv_cell);
        for (auto& ci : c) ci += 1;
        keyed[i] = {detail::cell_key<Dim>(c, extent), static_cast<std::uint32_t>(i)};
    }
    std::sort(keyed.begin(), keyed.end());

    const double r2 = radius * radius;
    std::vector<std::vector<std::uint32_t>> lists(n);
    constexpr int stencil = Dim == 1 ? 3 : (Dim == 2 ? 9 : 27);
    for (std::size_t i = 0; i < n; ++i) {
        auto c = detail::cell_of<Dim>(positions[i], lo, inv_cell);
        for (auto& ci : c) ci += 1;
        for (int s = 0; s < stencil; ++s) {
            auto cc = c;
            int rem = s;
            for (int d = 0; d < Dim; ++d) {
                cc[d] += rem % 3 - 1;
                rem /= 3;
            }
            const std::uint64_t key = detail::cell_key<Dim>(cc, extent);
            auto first = std::lower_bound(keyed.begin(), keyed.end(), std::make_pair(key, std::uint32_t{0}));
            for (auto it = first; it != keyed.end() && it->first == key; ++it) {
                const std::uint32_t j = it->second;
                if (j == i) continue;
                const Vec<Dim> dx = positions[i] - positions[j];
                if (dot(dx, dx) < r2) lists[i].push_back(j);
            }
        }
        if (sorted) std::sort(lists[i].begin(), lists[i].end());
    }

    for (std::size_t i = 0; i < n; ++i) table.offsets[i + 1] = table.offsets[i] + lists[i].size();
    table.indices.reserve(table.offsets[n]);
    for (auto& l : lists) table.indices.insert(table.indices.end(), l.begin(), l.end());
    return table;
}

}  // namespace asph
