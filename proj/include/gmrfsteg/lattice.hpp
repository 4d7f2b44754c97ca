#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "gmrfsteg/grid.hpp"

namespace gmrfsteg::lattice {

constexpr double kDefaultBetaThreshold = 0.1;

enum class Sublattice { A, B };

struct SublatticePartition {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::size_t> a_indices;  // row-major order
    std::vector<std::size_t> b_indices;

    static Sublattice classify(std::size_t row, std::size_t col) { return (row + col) % 2 == 0 ? Sublattice::A : Sublattice::B; }
    const std::vector<std::size_t>& indices(Sublattice s) const { return s == Sublattice::A ? a_indices : b_indices; }
};

enum class Direction { Up, Down, Left, Right };

/// Clique (center, neighbour). Only the first `count` slots are meaningful.
struct CliqueTree {
    std::size_t center = 0;
    int count = 0;
    std::array<std::size_t, 4> neighbors{};
    std::array<Direction, 4> directions{};
    std::array<int, 4> thetas{};

    int active() const;
};

struct TreeSet {
    std::vector<CliqueTree> a;
    std::vector<CliqueTree> b;

    std::vector<CliqueTree>& trees(Sublattice s) { return s == Sublattice::A ? a : b; }
    const std::vector<CliqueTree>& trees(Sublattice s) const { return s == Sublattice::A ? a : b; }
};

/// Checkerboard split: (row + col) even -> A.
SublatticePartition tessellate(std::size_t width, std::size_t height);

/// One tree per pixel, neighbours in Up, Down, Left, Right order; all existing thetas = 1.
TreeSet build_trees(const SublatticePartition& partition);

/// theta = 1 iff both endpoints have beta >= beta_t.
void allocate_cliques(std::span<CliqueTree> trees, const FloatGrid& beta, double beta_t = kDefaultBetaThreshold);

/// Sets every existing theta to `value` (0 gives the independent-pixel model).
void set_all_cliques(std::span<CliqueTree> trees, int value);

/// Index of the pixel that stores a clique's rho (left pixel for horizontal, top for vertical).
std::size_t clique_anchor(const CliqueTree& tree, int slot, std::size_t width);
bool is_horizontal(Direction d);

}  // namespace gmrfsteg::lattice
