#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "gmrfsteg/lattice.hpp"

using namespace gmrfsteg;
using namespace gmrfsteg::lattice;

namespace {

const CliqueTree& tree_of(const TreeSet& set, std::size_t center)
{
    for (const auto* half : {&set.a, &set.b})
        for (const auto& t : *half)
            if (t.center == center)
                return t;
    throw std::runtime_error("no tree");
}

int theta_of(const CliqueTree& t, std::size_t neighbor)
{
    for (int k = 0; k < t.count; ++k)
        if (t.neighbors[k] == neighbor)
            return t.thetas[k];
    throw std::runtime_error("not a neighbour");
}

}  // namespace

TEST_SUITE("lattice")
{
    TEST_CASE("2x2 parity")
    {
        const auto p = tessellate(2, 2);
        CHECK(p.a_indices == std::vector<std::size_t>{0, 3});
        CHECK(p.b_indices == std::vector<std::size_t>{1, 2});
    }

    TEST_CASE("counts")
    {
        const auto p = tessellate(512, 512);
        CHECK(p.a_indices.size() == 131072);
        CHECK(p.b_indices.size() == 131072);
        const auto q = tessellate(7, 5);
        CHECK(q.a_indices.size() + q.b_indices.size() == 35);
    }

    TEST_CASE("every neighbour pair crosses sublattices on 5x7")
    {
        const std::size_t w = 5, h = 7;
        const auto p = tessellate(w, h);
        std::set<std::size_t> a(p.a_indices.begin(), p.a_indices.end());
        std::set<std::size_t> b(p.b_indices.begin(), p.b_indices.end());
        for (std::size_t i = 0; i < w * h; ++i)
            CHECK(a.count(i) + b.count(i) == 1);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) {
                const auto i = r * w + c;
                if (c + 1 < w)
                    CHECK(a.count(i) != a.count(i + 1));
                if (r + 1 < h)
                    CHECK(a.count(i) != a.count(i + w));
            }
    }

    TEST_CASE("degenerate dimensions")
    {
        CHECK_THROWS(tessellate(0, 4));
    }

    TEST_CASE("tree geometry")
    {
        const auto set = build_trees(tessellate(3, 3));
        const auto& center = tree_of(set, 4);
        CHECK(center.count == 4);
        std::vector<std::size_t> nb(center.neighbors.begin(), center.neighbors.begin() + 4);
        std::sort(nb.begin(), nb.end());
        CHECK(nb == std::vector<std::size_t>{1, 3, 5, 7});
        CHECK(tree_of(set, 0).count == 2);
        CHECK(tree_of(set, 1).count == 3);
        CHECK(center.active() == 4);

        const auto big = build_trees(tessellate(6, 5));
        CHECK(tree_of(big, 2 * 6 + 3).count == 4);
        for (const auto* half : {&big.a, &big.b})
            for (const auto& t : *half)
                for (int k = 0; k < t.count; ++k)
                    CHECK(SublatticePartition::classify(t.center / 6, t.center % 6) !=
                          SublatticePartition::classify(t.neighbors[k] / 6, t.neighbors[k] % 6));
    }

    TEST_CASE("allocation rule")
    {
        auto set = build_trees(tessellate(4, 4));
        allocate_cliques(set.a, FloatGrid(4, 4, 0.2), 0.1);
        for (const auto& t : set.a)
            CHECK(t.active() == t.count);
        allocate_cliques(set.a, FloatGrid(4, 4, 0.0), 0.1);
        for (const auto& t : set.a)
            CHECK(t.active() == 0);

        FloatGrid beta(4, 4, 0.12);
        beta.at(1, 2) = 0.15;  // center
        beta.at(0, 2) = 0.05;  // its upper neighbour
        set = build_trees(tessellate(4, 4));
        allocate_cliques(set.b, beta, 0.1);
        const auto& t = tree_of(set, 1 * 4 + 2);
        CHECK(theta_of(t, 0 * 4 + 2) == 0);
        CHECK(theta_of(t, 2 * 4 + 2) == 1);
        CHECK(theta_of(t, 1 * 4 + 1) == 1);
        CHECK(theta_of(t, 1 * 4 + 3) == 1);
    }

    TEST_CASE("theta is symmetric and allocation is monotone")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0, 1.0 / 3);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t w = 3 + rng() % 8, h = 3 + rng() % 8;
            FloatGrid beta(w, h);
            for (auto& b : beta.values)
                b = u(rng);
            auto set = build_trees(tessellate(w, h));
            allocate_cliques(set.a, beta, 0.1);
            allocate_cliques(set.b, beta, 0.1);
            for (const auto& t : set.a)
                for (int k = 0; k < t.count; ++k)
                    CHECK(t.thetas[k] == theta_of(tree_of(set, t.neighbors[k]), t.center));

            FloatGrid raised = beta;
            for (auto& b : raised.values)
                b = std::min(1.0 / 3, b + (rng() % 2) * u(rng));
            auto more = build_trees(tessellate(w, h));
            allocate_cliques(more.a, raised, 0.1);
            for (std::size_t i = 0; i < set.a.size(); ++i)
                for (int k = 0; k < set.a[i].count; ++k)
                    CHECK(more.a[i].thetas[k] >= set.a[i].thetas[k]);
        }
    }
}
