#include "gmrfsteg/lattice.hpp"

#include <string>

#include "gmrfsteg/error.hpp"

namespace gmrfsteg::lattice {

int CliqueTree::active() const
{
    int n = 0;
    for (int k = 0; k < count; ++k)
        n += thetas[k];
    return n;
}

SublatticePartition tessellate(std::size_t width, std::size_t height)
{
    if (width == 0 || height == 0)
        throw InvalidArgument("tessellate: degenerate dimensions " + std::to_string(width) + "x" + std::to_string(height));
    SublatticePartition p;
    p.width = width;
    p.height = height;
    p.a_indices.reserve((width * height + 1) / 2);
    p.b_indices.reserve(width * height / 2);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c)
            (SublatticePartition::classify(r, c) == Sublattice::A ? p.a_indices : p.b_indices).push_back(r * width + c);
    return p;
}

namespace {

CliqueTree make_tree(std::size_t index, std::size_t width, std::size_t height)
{
    const std::size_t r = index / width;
    const std::size_t c = index % width;
    CliqueTree t;
    t.center = index;
    auto add = [&](std::size_t n, Direction d) {
        t.neighbors[t.count] = n;
        t.directions[t.count] = d;
        t.thetas[t.count] = 1;
        ++t.count;
    };
    if (r > 0)
        add(index - width, Direction::Up);
    if (r + 1 < height)
        add(index + width, Direction::Down);
    if (c > 0)
        add(index - 1, Direction::Left);
    if (c + 1 < width)
        add(index + 1, Direction::Right);
    return t;
}

}  // namespace

TreeSet build_trees(const SublatticePartition& partition)
{
    TreeSet set;
    set.a.reserve(partition.a_indices.size());
    set.b.reserve(partition.b_indices.size());
    for (auto i : partition.a_indices)
        set.a.push_back(make_tree(i, partition.width, partition.height));
    for (auto i : partition.b_indices)
        set.b.push_back(make_tree(i, partition.width, partition.height));
    return set;
}

void allocate_cliques(std::span<CliqueTree> trees, const FloatGrid& beta, double beta_t)
{
    for (auto& t : trees) {
        const bool center_on = beta[t.center] >= beta_t;
        for (int k = 0; k < t.count; ++k)
            t.thetas[k] = center_on && beta[t.neighbors[k]] >= beta_t ? 1 : 0;
    }
}

void set_all_cliques(std::span<CliqueTree> trees, int value)
{
    for (auto& t : trees)
        for (int k = 0; k < t.count; ++k)
            t.thetas[k] = value;
}

bool is_horizontal(Direction d) { return d == Direction::Left || d == Direction::Right; }

std::size_t clique_anchor(const CliqueTree& tree, int slot, std::size_t width)
{
    switch (tree.directions[slot]) {
    case Direction::Up:
        return tree.center - width;
    case Direction::Left:
        return tree.center - 1;
    case Direction::Down:
    case Direction::Right:
        break;
    }
    return tree.center;
}

}  // namespace gmrfsteg::lattice
