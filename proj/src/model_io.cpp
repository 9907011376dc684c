#include "netexp/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace netexp {

using nlohmann::json;

void save_model(const HaneModel& model, const std::string& path) {
    json j;
    j["n"] = model.n();
    j["alpha"] = model.alpha();
    j["beta"] = model.beta();
    json edges = json::array();
    for (const Edge& e : model.graph().edges()) edges.push_back({e.src, e.dst, e.gamma});
    j["edges"] = std::move(edges);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot open '" + path + "'");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_model: write failed for '" + path + "'");
}

HaneModel load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model_json: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_model_json: " + path + ": " + e.what());
    }
    try {
        int n = j.at("n").get<int>();
        auto alpha = j.at("alpha").get<std::vector<double>>();
        auto beta = j.at("beta").get<std::vector<double>>();
        std::vector<Edge> edges;
        for (const auto& row : j.at("edges")) {
            if (!row.is_array() || row.size() != 3)
                throw std::runtime_error("edge rows must be [src,dst,gamma]");
            edges.push_back({row[0].get<int>(), row[1].get<int>(), row[2].get<double>()});
        }
        return HaneModel(InterferenceGraph(n, std::move(edges)), std::move(alpha), std::move(beta));
    } catch (const json::exception& e) {
        throw std::runtime_error("load_model_json: " + path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("load_model_json: " + path + ": " + e.what());
    }
}

HaneModel load_model_csv(const std::string& node_path, const std::string& edge_path) {
    std::ifstream in(node_path);
    if (!in) throw std::runtime_error("load_model_csv: cannot open '" + node_path + "'");
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> alpha, beta;
    std::vector<long> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == "id,alpha,beta") continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> fields;
        while (std::getline(ss, tok, ',')) fields.push_back(tok);
        if (fields.size() != 3)
            throw std::runtime_error(node_path + ":" + std::to_string(line_no) +
                                     ": expected id,alpha,beta");
        try {
            ids.push_back(std::stol(fields[0]));
            alpha.push_back(std::stod(fields[1]));
            beta.push_back(std::stod(fields[2]));
        } catch (const std::exception&) {
            throw std::runtime_error(node_path + ":" + std::to_string(line_no) + ": bad number");
        }
    }
    const int n = static_cast<int>(ids.size());
    std::vector<double> alpha_by_id(n), beta_by_id(n);
    std::vector<bool> seen(n, false);
    for (int row = 0; row < n; ++row) {
        long id = ids[row];
        if (id < 0 || id >= n || seen[id])
            throw std::runtime_error(node_path + ": node ids must be a permutation of 0..n-1");
        seen[id] = true;
        alpha_by_id[id] = alpha[row];
        beta_by_id[id] = beta[row];
    }
    InterferenceGraph graph = load_graph(edge_path, n);
    return HaneModel(std::move(graph), std::move(alpha_by_id), std::move(beta_by_id));
}

}  // namespace netexp
