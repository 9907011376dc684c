#include "netexp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace netexp {

ExactMoments exact_law_moments(const HaneModel& model, const WeightedLinearEstimator& e,
                               const ExactLaw& law, const BaselineInfo& baseline) {
    if (law.n() != model.n())
        throw std::invalid_argument("exact_law_moments: law/model size mismatch");
    Kahan mean_acc, second_acc;
    std::vector<double> y;
    for (std::size_t idx = 0; idx < law.size(); ++idx) {
        auto z = law.assignment(idx);
        evaluate_into(model, z, y);
        double est = estimate(e, z, y, baseline);
        double p = law.prob(idx);
        mean_acc.add(p * est);
        second_acc.add(p * est * est);
    }
    ExactMoments out;
    out.mean = mean_acc.value();
    out.variance = second_acc.value() - out.mean * out.mean;
    if (out.variance < 0.0) {
        if (out.variance < -1e-12)
            throw std::runtime_error("exact_law_moments: variance below the clamping band");
        out.variance = 0.0;
    }
    out.support_size = law.size();
    return out;
}

ExactMoments exact_estimator_moments(const HaneModel& model, const WeightedLinearEstimator& e,
                                     const Design& d, const BaselineInfo& baseline,
                                     std::size_t support_cap) {
    ExactLaw law = enumerate_design(d, support_cap);
    return exact_law_moments(model, e, law, baseline);
}

double exact_design_moment(const Design& d, std::span<const int> indices, MomentKind kind,
                           std::size_t support_cap) {
    if (indices.empty() || indices.size() > 4)
        throw std::invalid_argument("exact_design_moment: 1 to 4 indices supported");
    for (int i : indices)
        if (i < 0 || i >= d.n())
            throw std::invalid_argument("exact_design_moment: index out of range");
    ExactLaw law = enumerate_design(d, support_cap);

    auto raw = [&](std::span<const int> ids) {
        Kahan acc;
        for (std::size_t idx = 0; idx < law.size(); ++idx) {
            auto z = law.assignment(idx);
            bool all = true;
            for (int i : ids) all = all && z[i];
            if (all) acc.add(law.prob(idx));
        }
        return acc.value();
    };

    if (kind == MomentKind::Raw) return raw(indices);

    switch (indices.size()) {
        case 1: {  // Var[z_i]
            double p = raw(indices.subspan(0, 1));
            return p - p * p;
        }
        case 2: {  // Cov[z_i, z_j]
            return raw(indices) - raw(indices.subspan(0, 1)) * raw(indices.subspan(1, 1));
        }
        case 3: {  // Cov[z_i, z_j z_k]
            return raw(indices) - raw(indices.subspan(0, 1)) * raw(indices.subspan(1, 2));
        }
        case 4: {  // Cov[z_i z_j, z_k z_l]
            return raw(indices) - raw(indices.subspan(0, 2)) * raw(indices.subspan(2, 2));
        }
    }
    throw std::logic_error("exact_design_moment: unreachable");
}

}  // namespace netexp
