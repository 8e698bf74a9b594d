// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/adam.hpp"

#include <cmath>

namespace pyrf {

void AdamConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ValidationError("adam: betas must be in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ValidationError("adam: epsilon must be > 0");
}

template <class T>
Adam<T>::Adam(const ad::ParameterStore<T> &store, const AdamConfig &config)
    : config_(config), m_(store.size(), T(0)), v_(store.size(), T(0)), steps_(store.segments().size(), 0) {
    config_.validate();
}

template <class T>
void Adam<T>::step(ad::ParameterStore<T> &store, const std::vector<double> &lr, const std::vector<bool> *touched) {
    const auto &segs = store.segments();
    if (lr.size() != segs.size() || (touched && touched->size() != segs.size())) {
        throw ValidationError("adam: per-segment vectors do not match the store");
    }
    auto vals = store.values();
    auto grads = store.grads();
    const T b1 = T(config_.beta1), b2 = T(config_.beta2), eps = T(config_.epsilon);
    for (std::size_t s = 0; s < segs.size(); ++s) {
        if (touched && !(*touched)[s]) continue;
        const std::uint64_t t = ++steps_[s];
        const T c1 = T(1.0 - std::pow(config_.beta1, double(t)));
        const T c2 = T(1.0 - std::pow(config_.beta2, double(t)));
        const T rate = T(lr[s]);
        const std::size_t end = segs[s].offset + segs[s].size;
        for (std::size_t i = segs[s].offset; i < end; ++i) {
            const T g = grads[i];
            m_[i] = b1 * m_[i] + (T(1) - b1) * g;
            v_[i] = b2 * v_[i] + (T(1) - b2) * g * g;
            const T mhat = m_[i] / c1;
            const T vhat = v_[i] / c2;
            vals[i] -= rate * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template class Adam<float>;
template class Adam<double>;

} // namespace pyrf
