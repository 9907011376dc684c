#include "netexp/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace netexp {

DistSpec DistSpec::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string name = text.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            std::size_t pos = 0;
            double v;
            try {
                v = std::stod(tok, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("DistSpec: bad number '" + tok + "' in '" + text + "'");
            }
            if (pos != tok.size())
                throw std::invalid_argument("DistSpec: bad number '" + tok + "' in '" + text + "'");
            args.push_back(v);
        }
    }
    if (name == "constant" && args.size() == 1) return constant(args[0]);
    if (name == "uniform" && args.size() == 2) return uniform(args[0], args[1]);
    if (name == "normal" && args.size() == 2) return normal(args[0], args[1]);
    throw std::invalid_argument("DistSpec: unknown spec '" + text +
                                "' (expected constant:c | uniform:a,b | normal:mu,sigma)");
}

std::string DistSpec::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Constant: os << "constant:" << a; break;
        case Kind::Uniform: os << "uniform:" << a << "," << b; break;
        case Kind::Normal: os << "normal:" << a << "," << b; break;
    }
    return os.str();
}

InterferenceGraph::InterferenceGraph(int n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)) {
    if (n_ < 1) throw std::invalid_argument("InterferenceGraph: n must be >= 1");
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const Edge& e = edges_[i];
        if (e.src < 0 || e.src >= n_ || e.dst < 0 || e.dst >= n_)
            throw std::invalid_argument("InterferenceGraph: node id out of range");
        if (e.src == e.dst)
            throw std::invalid_argument("InterferenceGraph: self-edges are not allowed");
        if (!std::isfinite(e.gamma))
            throw std::invalid_argument("InterferenceGraph: edge weight must be finite");
        if (i > 0 && edges_[i - 1].src == e.src && edges_[i - 1].dst == e.dst)
            throw std::invalid_argument("InterferenceGraph: duplicate edge (" +
                                        std::to_string(e.src) + "," + std::to_string(e.dst) + ")");
    }
    offsets_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (const Edge& e : edges_) offsets_[static_cast<std::size_t>(e.src) + 1]++;
    for (int i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];
}

Partition::Partition(std::vector<int> assignment, int cluster_count)
    : assignment_(std::move(assignment)), cluster_count_(cluster_count) {
    if (assignment_.empty()) throw std::invalid_argument("Partition: empty assignment");
    if (cluster_count_ < 1) throw std::invalid_argument("Partition: cluster count must be >= 1");
    members_.resize(cluster_count_);
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
        int c = assignment_[i];
        if (c < 0 || c >= cluster_count_)
            throw std::invalid_argument("Partition: cluster id out of range for node " +
                                        std::to_string(i));
        members_[c].push_back(static_cast<int>(i));
    }
    for (int t = 0; t < cluster_count_; ++t)
        if (members_[t].empty())
            throw std::invalid_argument("Partition: cluster " + std::to_string(t) + " is empty");
}

bool Partition::uniform_sizes() const {
    for (int t = 1; t < cluster_count_; ++t)
        if (cluster_size(t) != cluster_size(0)) return false;
    return true;
}

Partition Partition::equal_blocks(int n, int cluster_count) {
    if (cluster_count < 1 || cluster_count > n)
        throw std::invalid_argument("Partition: need 1 <= clusters <= n");
    std::vector<int> assignment(n);
    int base = n / cluster_count, extra = n % cluster_count;
    int node = 0;
    for (int t = 0; t < cluster_count; ++t) {
        int size = base + (t < extra ? 1 : 0);
        for (int k = 0; k < size; ++k) assignment[node++] = t;
    }
    return Partition(std::move(assignment), cluster_count);
}

InterferenceGraph generate_erdos_renyi(int n, double edge_prob, const DistSpec& gamma_law,
                                       std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_erdos_renyi: n must be >= 1");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0))
        throw std::invalid_argument("generate_erdos_renyi: edge_prob must lie in [0,1]");
    Rng rng(seed);
    std::vector<Edge> edges;
    for (int src = 0; src < n; ++src)
        for (int dst = 0; dst < n; ++dst) {
            if (src == dst) continue;
            if (rng.next_bernoulli(edge_prob)) edges.push_back({src, dst, gamma_law.sample(rng)});
        }
    return InterferenceGraph(n, std::move(edges));
}

InterferenceGraph generate_clustered(const Partition& partition, double p_within,
                                     double p_between, const DistSpec& gamma_law,
                                     std::uint64_t seed) {
    if (!(p_within >= 0.0 && p_within <= 1.0) || !(p_between >= 0.0 && p_between <= 1.0))
        throw std::invalid_argument("generate_clustered: probabilities must lie in [0,1]");
    const int n = partition.node_count();
    Rng rng(seed);
    std::vector<Edge> edges;
    for (int src = 0; src < n; ++src)
        for (int dst = 0; dst < n; ++dst) {
            if (src == dst) continue;
            double p = partition.cluster_of(src) == partition.cluster_of(dst) ? p_within : p_between;
            if (rng.next_bernoulli(p)) edges.push_back({src, dst, gamma_law.sample(rng)});
        }
    return InterferenceGraph(n, std::move(edges));
}

DegreeStats degree_stats(const InterferenceGraph& g) {
    DegreeStats s;
    s.out_degrees.assign(g.node_count(), 0);
    s.weighted_out.assign(g.node_count(), 0.0);
    for (const Edge& e : g.edges()) {
        s.out_degrees[e.src]++;
        s.weighted_out[e.src] += e.gamma;
    }
    for (int d : s.out_degrees) s.d_max = std::max(s.d_max, d);
    return s;
}

namespace {

double parse_double_field(const std::string& tok, const std::string& path, std::size_t line_no) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number '" + tok + "'");
    }
    if (pos != tok.size())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number '" + tok + "'");
    return v;
}

long parse_int_field(const std::string& tok, const std::string& path, std::size_t line_no) {
    std::size_t pos = 0;
    long v;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad integer '" + tok + "'");
    }
    if (pos != tok.size())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad integer '" + tok + "'");
    return v;
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

}  // namespace

void save_graph(const InterferenceGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_graph: cannot open '" + path + "'");
    out << "src,dst,gamma\n";
    out.precision(17);
    for (const Edge& e : g.edges()) out << e.src << "," << e.dst << "," << e.gamma << "\n";
    if (!out) throw std::runtime_error("save_graph: write failed for '" + path + "'");
}

InterferenceGraph load_graph(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_graph: cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    std::vector<Edge> edges;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == "src,dst,gamma") continue;
        auto fields = split_csv_row(line);
        if (fields.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 3 fields, got " + std::to_string(fields.size()));
        long src = parse_int_field(fields[0], path, line_no);
        long dst = parse_int_field(fields[1], path, line_no);
        double gamma = parse_double_field(fields[2], path, line_no);
        if (src < 0 || src >= n || dst < 0 || dst >= n)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": node id out of range");
        if (src == dst)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": self-edge rejected");
        edges.push_back({static_cast<int>(src), static_cast<int>(dst), gamma});
    }
    try {
        return InterferenceGraph(n, std::move(edges));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_partition(const Partition& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_partition: cannot open '" + path + "'");
    out << "node,cluster\n";
    for (int i = 0; i < p.node_count(); ++i) out << i << "," << p.cluster_of(i) << "\n";
    if (!out) throw std::runtime_error("save_partition: write failed for '" + path + "'");
}

Partition load_partition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_partition: cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::pair<long, long>> rows;
    long max_node = -1, max_cluster = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == "node,cluster") continue;
        auto fields = split_csv_row(line);
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 2 fields");
        long node = parse_int_field(fields[0], path, line_no);
        long cluster = parse_int_field(fields[1], path, line_no);
        if (node < 0 || cluster < 0)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": negative id");
        rows.emplace_back(node, cluster);
        max_node = std::max(max_node, node);
        max_cluster = std::max(max_cluster, cluster);
    }
    if (rows.empty()) throw std::runtime_error(path + ": empty partition file");
    std::vector<int> assignment(max_node + 1, -1);
    for (auto [node, cluster] : rows) {
        if (assignment[node] != -1)
            throw std::runtime_error(path + ": duplicate node " + std::to_string(node));
        assignment[node] = static_cast<int>(cluster);
    }
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == -1)
            throw std::runtime_error(path + ": missing node " + std::to_string(i));
    try {
        return Partition(std::move(assignment), static_cast<int>(max_cluster + 1));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace netexp
