#pragma once

#include <string>
#include <vector>

#include "netexp/rng.hpp"

namespace netexp {

/// Directed interference edge: treating `src` adds `gamma` to `dst`'s outcome.
/// One orientation convention is used everywhere in this codebase; every
/// formula is transcribed into it.
struct Edge {
    int src = 0;
    int dst = 0;
    double gamma = 0.0;

    bool operator==(const Edge&) const = default;
};

/// Immutable directed weighted graph over nodes 0..n-1. Edges are stored
/// sparsely: a missing ordered pair means weight zero. Self-edges and
/// duplicate ordered pairs are rejected at construction. Zero-weight edges
/// are allowed (a generator's law may produce them); they change nothing
/// numerically but stay part of the edge set.
class InterferenceGraph {
public:
    InterferenceGraph(int n, std::vector<Edge> edges);

    int node_count() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }

    /// Out-edges of node i as a contiguous range [begin, end) into edges().
    std::pair<std::size_t, std::size_t> out_range(int i) const {
        return {offsets_[i], offsets_[i + 1]};
    }

    bool operator==(const InterferenceGraph& other) const {
        return n_ == other.n_ && edges_ == other.edges_;
    }

private:
    int n_;
    std::vector<Edge> edges_;         // sorted by (src, dst); canonical form
    std::vector<std::size_t> offsets_;  // CSR offsets per src, length n+1
};

/// Partition of 0..n-1 into clusters 0..T-1, every cluster non-empty.
class Partition {
public:
    Partition(std::vector<int> assignment, int cluster_count);

    int node_count() const { return static_cast<int>(assignment_.size()); }
    int cluster_count() const { return cluster_count_; }
    int cluster_of(int node) const { return assignment_[node]; }
    int cluster_size(int tau) const { return static_cast<int>(members_[tau].size()); }
    const std::vector<int>& members(int tau) const { return members_[tau]; }
    const std::vector<int>& assignment() const { return assignment_; }
    bool uniform_sizes() const;

    /// Contiguous blocks of near-equal size (sizes differ by at most one).
    static Partition equal_blocks(int n, int cluster_count);

private:
    std::vector<int> assignment_;
    int cluster_count_;
    std::vector<std::vector<int>> members_;
};

struct DegreeStats {
    std::vector<int> out_degrees;
    int d_max = 0;
    std::vector<double> weighted_out;  // per node, sum of outgoing edge weights
};

InterferenceGraph generate_erdos_renyi(int n, double edge_prob, const DistSpec& gamma_law,
                                       std::uint64_t seed);

InterferenceGraph generate_clustered(const Partition& partition, double p_within,
                                     double p_between, const DistSpec& gamma_law,
                                     std::uint64_t seed);

DegreeStats degree_stats(const InterferenceGraph& g);

/// Edge-list file: UTF-8 CSV with header "src,dst,gamma". The node count is
/// not part of the file and is supplied by the caller on load.
void save_graph(const InterferenceGraph& g, const std::string& path);
InterferenceGraph load_graph(const std::string& path, int n);

/// Partition file: CSV with header "node,cluster".
void save_partition(const Partition& p, const std::string& path);
Partition load_partition(const std::string& path);

}  // namespace netexp
