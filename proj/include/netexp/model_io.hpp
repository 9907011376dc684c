#pragma once

#include <string>

#include "netexp/outcomes.hpp"

namespace netexp {

/// Model file: JSON object {n, alpha:[...], beta:[...], edges:[[src,dst,gamma],...]}.
void save_model(const HaneModel& model, const std::string& path);
HaneModel load_model_json(const std::string& path);

/// Split-CSV form: node file "id,alpha,beta" plus an edge-list file.
HaneModel load_model_csv(const std::string& node_path, const std::string& edge_path);

}  // namespace netexp
