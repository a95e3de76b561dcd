#pragma once

// Shared helpers for the test suites.

#include <cmath>
#include <vector>

#include "ffmkit/model.hpp"
#include "ffmkit/rng.hpp"
#include "ffmkit/types.hpp"

namespace ffm::testing {

inline FeatureVector make_example(std::uint8_t label,
                                  std::vector<Slot> slots, double weight = 1.0) {
    FeatureVector x;
    x.label = label;
    x.weight = weight;
    x.slots = std::move(slots);
    return x;
}

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

// Independent pairwise score: walks every unordered field pair itself and
// sums dot products straight off the weight table.
inline double brute_force_score(const FfmModel& m, const FeatureVector& x) {
    const std::uint32_t k = m.config.latent_dim;
    double total = 0.0;
    for (std::size_t i = 0; i < x.slots.size(); ++i) {
        for (std::size_t j = i + 1; j < x.slots.size(); ++j) {
            if (m.config.kind == ModelKind::LrCross) {
                const std::uint64_t r =
                    phi_cross(x.slots[i].field, x.slots[i].value, x.slots[j].field,
                              x.slots[j].value, m.config.hash_space);
                total += m.weights[r];
                continue;
            }
            const std::uint64_t r1 = phi(x.slots[i].value, x.slots[i].field,
                                         x.slots[j].field, m.config.hash_space);
            const std::uint64_t r2 = phi(x.slots[j].value, x.slots[j].field,
                                         x.slots[i].field, m.config.hash_space);
            for (std::uint32_t t = 0; t < k; ++t)
                total += m.weights[r1 * k + t] * m.weights[r2 * k + t];
        }
    }
    return total;
}

// Regularized weighted loss matching sgd_step's gradient convention: the L2
// term is lambda/2 * ||w||^2 summed once per pair side.
inline double regularized_example_loss(const FfmModel& m, const FeatureVector& x) {
    const double p = predict_proba(m, x);
    double loss = x.weight * log_loss(p, x.label);
    const std::uint32_t k = m.config.latent_dim;
    const double lambda = m.config.l2_lambda;
    if (lambda == 0.0) return loss;
    for (std::size_t i = 0; i < x.slots.size(); ++i) {
        for (std::size_t j = i + 1; j < x.slots.size(); ++j) {
            std::vector<std::uint64_t> rows;
            if (m.config.kind == ModelKind::LrCross) {
                rows.push_back(phi_cross(x.slots[i].field, x.slots[i].value,
                                         x.slots[j].field, x.slots[j].value,
                                         m.config.hash_space));
            } else {
                rows.push_back(phi(x.slots[i].value, x.slots[i].field, x.slots[j].field,
                                   m.config.hash_space));
                rows.push_back(phi(x.slots[j].value, x.slots[j].field, x.slots[i].field,
                                   m.config.hash_space));
            }
            for (const std::uint64_t r : rows)
                for (std::uint32_t t = 0; t < k; ++t)
                    loss += 0.5 * lambda * m.weights[r * k + t] * m.weights[r * k + t];
        }
    }
    return loss;
}

} // namespace ffm::testing
