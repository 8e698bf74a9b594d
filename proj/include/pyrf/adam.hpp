// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "pyrf/autodiff.hpp"

#include <cstdint>
#include <vector>

namespace pyrf {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 1e-15;

    void validate() const;
    bool operator==(const AdamConfig &) const = default;
};

/// Adam with per-segment step counters, so a segment skipped in some steps
/// keeps its own bias correction.
template <class T>
class Adam {
public:
    Adam() = default;
    Adam(const ad::ParameterStore<T> &store, const AdamConfig &config);

    /// Updates every segment i with touched[i] (all when touched is null)
    /// using learning rate lr[i] and the store's gradients.
    void step(ad::ParameterStore<T> &store, const std::vector<double> &lr, const std::vector<bool> *touched);

    const AdamConfig &config() const { return config_; }
    std::vector<T> &first_moment() { return m_; }
    std::vector<T> &second_moment() { return v_; }
    std::vector<std::uint64_t> &steps() { return steps_; }
    const std::vector<T> &first_moment() const { return m_; }
    const std::vector<T> &second_moment() const { return v_; }
    const std::vector<std::uint64_t> &steps() const { return steps_; }

private:
    AdamConfig config_;
    std::vector<T> m_, v_;
    std::vector<std::uint64_t> steps_;
};

} // namespace pyrf
