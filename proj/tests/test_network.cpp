#include <cmath>
#include <cstdio>
#include <filesystem>
#include <unistd.h>

#include "doctest.h"
#include "netexp/network.hpp"

using namespace netexp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("netexp_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("graph construction validates invariants") {
    CHECK_THROWS(InterferenceGraph(3, {{0, 0, 1.0}}));               // self-edge
    CHECK_THROWS(InterferenceGraph(3, {{0, 3, 1.0}}));               // id out of range
    CHECK_THROWS(InterferenceGraph(3, {{-1, 0, 1.0}}));              // negative id
    CHECK_THROWS(InterferenceGraph(3, {{0, 1, 1.0}, {0, 1, 2.0}}));  // duplicate pair
    CHECK_THROWS(InterferenceGraph(3, {{0, 1, std::nan("")}}));      // non-finite weight
    CHECK_THROWS(InterferenceGraph(0, {}));

    InterferenceGraph g(3, {{1, 2, 4.0}, {0, 1, 2.0}});
    CHECK(g.edges()[0].src == 0);  // canonical order
    CHECK(g.edges()[1].src == 1);
}

TEST_CASE("erdos-renyi generator edge counts") {
    auto empty = generate_erdos_renyi(5, 0.0, DistSpec::constant(1), 7);
    CHECK(empty.edges().empty());

    auto complete = generate_erdos_renyi(3, 1.0, DistSpec::constant(2), 1);
    REQUIRE(complete.edges().size() == 6);
    for (const Edge& e : complete.edges()) CHECK(e.gamma == 2.0);

    CHECK_THROWS(generate_erdos_renyi(5, 1.5, DistSpec::constant(1), 1));
    CHECK_THROWS(generate_erdos_renyi(5, -0.1, DistSpec::constant(1), 1));
    CHECK_THROWS(generate_erdos_renyi(0, 0.5, DistSpec::constant(1), 1));
}

TEST_CASE("erdos-renyi is deterministic in the seed") {
    auto a = generate_erdos_renyi(40, 0.2, DistSpec::normal(0, 1), 99);
    auto b = generate_erdos_renyi(40, 0.2, DistSpec::normal(0, 1), 99);
    auto c = generate_erdos_renyi(40, 0.2, DistSpec::normal(0, 1), 100);
    CHECK(a == b);
    CHECK_FALSE(a == c);
}

TEST_CASE("erdos-renyi edge count concentrates at p n(n-1)") {
    // Single fixed-seed instance.
    auto g = generate_erdos_renyi(100, 0.1, DistSpec::normal(0, 1), 42);
    double expect = 990.0, band = 4.0 * std::sqrt(9900.0 * 0.1 * 0.9);
    CHECK(std::abs(static_cast<double>(g.edges().size()) - expect) <= band);

    // Mean over repeated seeds within five standard errors.
    const int runs = 40, n = 40;
    const double p = 0.2, pairs = n * (n - 1.0);
    double total = 0.0;
    for (int s = 0; s < runs; ++s)
        total +=
            static_cast<double>(generate_erdos_renyi(n, p, DistSpec::constant(1), s).edges().size());
    double mean = total / runs;
    double se = std::sqrt(pairs * p * (1 - p) / runs);
    CHECK(std::abs(mean - pairs * p) <= 5.0 * se);
}

TEST_CASE("clustered generator") {
    Partition one_cluster(std::vector<int>(6, 0), 1);
    CHECK(generate_clustered(one_cluster, 0.0, 0.9, DistSpec::constant(1), 3).edges().empty());

    Partition pairs({0, 0, 1, 1}, 2);
    auto g = generate_clustered(pairs, 1.0, 0.0, DistSpec::constant(1), 3);
    REQUIRE(g.edges().size() == 4);
    for (const Edge& e : g.edges()) CHECK(pairs.cluster_of(e.src) == pairs.cluster_of(e.dst));

    // Cross-cluster edge count vs its binomial mean.
    Partition six = Partition::equal_blocks(60, 6);
    auto big = generate_clustered(six, 0.5, 0.01, DistSpec::constant(1), 11);
    int cross = 0;
    for (const Edge& e : big.edges())
        if (six.cluster_of(e.src) != six.cluster_of(e.dst)) ++cross;
    double cross_pairs = 60.0 * 59.0 - 6.0 * 10.0 * 9.0;  // ordered pairs across clusters
    double mean = 0.01 * cross_pairs;
    double sd = std::sqrt(cross_pairs * 0.01 * 0.99);
    CHECK(std::abs(cross - mean) <= 5.0 * sd);

    CHECK_THROWS(generate_clustered(pairs, 1.2, 0.0, DistSpec::constant(1), 3));
}

TEST_CASE("degree stats") {
    DegreeStats empty = degree_stats(InterferenceGraph(4, {}));
    CHECK(empty.d_max == 0);
    for (int d : empty.out_degrees) CHECK(d == 0);
    for (double w : empty.weighted_out) CHECK(w == 0.0);

    InterferenceGraph cycle(3, {{0, 1, 2.0}, {1, 2, 4.0}, {2, 0, 6.0}});
    DegreeStats s = degree_stats(cycle);
    CHECK(s.out_degrees == std::vector<int>{1, 1, 1});
    CHECK(s.d_max == 1);
    CHECK(s.weighted_out == std::vector<double>{2.0, 4.0, 6.0});

    auto complete = generate_erdos_renyi(3, 1.0, DistSpec::constant(1), 5);
    DegreeStats c = degree_stats(complete);
    CHECK(c.d_max == 2);
    for (double w : c.weighted_out) CHECK(w == doctest::Approx(2.0));
}

TEST_CASE("graph save/load round trip") {
    TempDir dir;
    Rng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        int n = 2 + static_cast<int>(rng.next_below(10));
        auto g = generate_erdos_renyi(n, 0.4, DistSpec::normal(0, 2), rng.next_u64());
        std::string path = dir.file("g.csv");
        save_graph(g, path);
        InterferenceGraph loaded = load_graph(path, n);
        CHECK(loaded == g);
    }
}

TEST_CASE("graph load rejects malformed rows with line numbers") {
    TempDir dir;
    auto write = [&](const std::string& name, const std::string& body) {
        std::string path = dir.file(name);
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs(body.c_str(), f);
        std::fclose(f);
        return path;
    };

    std::string self_edge = write("a.csv", "src,dst,gamma\n2,2,1.0\n");
    CHECK_THROWS_WITH_AS(load_graph(self_edge, 3), doctest::Contains("self-edge"),
                         std::runtime_error);

    std::string bad_number = write("b.csv", "src,dst,gamma\n0,1,notanumber\n");
    CHECK_THROWS_WITH_AS(load_graph(bad_number, 3), doctest::Contains(":2:"), std::runtime_error);

    std::string dup = write("c.csv", "src,dst,gamma\n0,1,1.0\n0,1,2.0\n");
    CHECK_THROWS(load_graph(dup, 3));

    std::string out_of_range = write("d.csv", "src,dst,gamma\n0,9,1.0\n");
    CHECK_THROWS(load_graph(out_of_range, 3));

    std::string short_row = write("e.csv", "src,dst,gamma\n0,1\n");
    CHECK_THROWS_WITH_AS(load_graph(short_row, 3), doctest::Contains("3 fields"),
                         std::runtime_error);
}

TEST_CASE("partition invariants and file round trip") {
    CHECK_THROWS(Partition({0, 2, 2}, 3));  // cluster 1 empty
    CHECK_THROWS(Partition({0, 1, 3}, 3));  // id out of range
    CHECK_THROWS(Partition({}, 1));

    Partition p = Partition::equal_blocks(7, 3);
    CHECK(p.cluster_count() == 3);
    CHECK(p.cluster_size(0) + p.cluster_size(1) + p.cluster_size(2) == 7);
    CHECK_FALSE(p.uniform_sizes());
    CHECK(Partition::equal_blocks(6, 3).uniform_sizes());

    TempDir dir;
    std::string path = dir.file("p.csv");
    save_partition(p, path);
    Partition loaded = load_partition(path);
    CHECK(loaded.assignment() == p.assignment());
    CHECK(loaded.cluster_count() == p.cluster_count());
}

TEST_CASE("distribution specs parse and reject") {
    Rng rng(5);
    CHECK(DistSpec::parse("constant:2").sample(rng) == 2.0);
    DistSpec u = DistSpec::parse("uniform:-2,2");
    for (int i = 0; i < 100; ++i) {
        double x = u.sample(rng);
        CHECK(x >= -2.0);
        CHECK(x < 2.0);
    }
    CHECK_NOTHROW(DistSpec::parse("normal:0,1"));
    CHECK_THROWS(DistSpec::parse("poisson:3"));
    CHECK_THROWS(DistSpec::parse("normal:0"));
    CHECK_THROWS(DistSpec::parse("uniform:2,1"));
    CHECK_THROWS(DistSpec::parse("constant:abc"));
}
