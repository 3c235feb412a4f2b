#include "asph/neighbors.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace asph;

namespace {

template <int Dim>
std::vector<std::vector<std::uint32_t>> brute_force(const std::vector<Vec<Dim>>& x, double radius) {
    std::vector<std::vector<std::uint32_t>> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            if (i != j && dot(x[i] - x[j], x[i] - x[j]) < radius * radius) out[i].push_back(static_cast<std::uint32_t>(j));
    return out;
}

template <int Dim>
std::vector<Vec<Dim>> random_cloud(std::mt19937_64& rng, std::size_t n, double extent) {
    std::uniform_real_distribution<double> u(-extent, extent);
    std::vector<Vec<Dim>> x(n);
    for (auto& p : x)
        for (int d = 0; d < Dim; ++d) p[d] = u(rng);
    return x;
}

template <int Dim>
void expect_matches_brute_force(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 300;
        const double radius = 0.05 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
        auto x = random_cloud<Dim>(rng, n, 1.0);
        // Duplicate a point and place one exactly at the radius.
        if (n > 2) {
            x[1] = x[0];
            x[2] = x[0];
            x[2][0] += radius;
        }
        const auto table = build_neighbor_table<Dim>(std::span<const Vec<Dim>>(x), radius, true);
        const auto ref = brute_force<Dim>(x, radius);
        ASSERT_EQ(table.size(), n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto got = table.neighbors(i);
            ASSERT_EQ(std::vector<std::uint32_t>(got.begin(), got.end()), ref[i]) << "particle " << i;
        }
    }
}

}  // namespace

TEST(Neighbors, MatchesBruteForce1D) { expect_matches_brute_force<1>(1); }
TEST(Neighbors, MatchesBruteForce2D) { expect_matches_brute_force<2>(2); }
TEST(Neighbors, MatchesBruteForce3D) { expect_matches_brute_force<3>(3); }

TEST(Neighbors, ListsAreSymmetric) {
    std::mt19937_64 rng(9);
    const auto x = random_cloud<2>(rng, 500, 1.0);
    const auto t = build_neighbor_table<2>(std::span<const Vec<2>>(x), 0.2, false);
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::uint32_t j : t.neighbors(i)) {
            const auto back = t.neighbors(j);
            EXPECT_NE(std::find(back.begin(), back.end(), i), back.end());
            ++count;
        }
    EXPECT_EQ(count, t.pair_count());
}

TEST(Neighbors, WidelySeparatedClustersStayCompact) {
    std::vector<Vec<2>> x{{{0.0, 0.0}}, {{0.05, 0.0}}, {{1e6, 1e6}}, {{1e6 + 0.05, 1e6}}};
    const auto t = build_neighbor_table<2>(std::span<const Vec<2>>(x), 0.1);
    EXPECT_EQ(t.neighbors(0).size(), 1u);
    EXPECT_EQ(t.neighbors(2)[0], 3u);
}

TEST(Neighbors, EmptyAndInvalidInput) {
    std::vector<Vec<2>> none;
    EXPECT_EQ(build_neighbor_table<2>(std::span<const Vec<2>>(none), 1.0).size(), 0u);
    std::vector<Vec<2>> x{{{0.0, 0.0}}};
    EXPECT_THROW(build_neighbor_table<2>(std::span<const Vec<2>>(x), 0.0), ArgumentError);
    x[0][0] = std::nan("");
    EXPECT_THROW(build_neighbor_table<2>(std::span<const Vec<2>>(x), 1.0), ArgumentError);
}
