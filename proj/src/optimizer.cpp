#include "scnet/optimizer.hpp"

#include <cmath>

#include "scnet/errors.hpp"

namespace scnet {

void SgdConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("train.learning_rate must be a finite value >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
        throw ConfigError("train.weight_decay must be a finite value >= 0");
}

template <typename T>
Sgd<T>::Sgd(SgdConfig config, const ParameterSet<T>& layout)
    : config_(config), velocity_(layout.zeros_like()) {
    config_.validate();
}

template <typename T>
void sgd_update(std::span<T> param, std::span<const T> grad, std::span<T> velocity,
                const SgdConfig& config) {
    if (grad.size() != param.size() || velocity.size() != param.size())
        throw ShapeError("sgd_update: array sizes differ");
    const T lr = static_cast<T>(config.learning_rate);
    const T mu = static_cast<T>(config.momentum);
    const T wd = static_cast<T>(config.weight_decay);
    for (std::size_t i = 0; i < param.size(); ++i) {
        velocity[i] = mu * velocity[i] + (grad[i] + wd * param[i]);
        param[i] -= lr * velocity[i];
    }
}

template <typename T>
void Sgd<T>::step(ParameterSet<T>& params, const ParameterSet<T>& grads) {
    if (!params.same_layout(velocity_) || !grads.same_layout(velocity_))
        throw ShapeError("Sgd::step: parameter layout differs from the optimizer's");
    for (std::size_t i = 0; i < params.size(); ++i) {
        sgd_update<T>(params.values(i), grads.values(i), velocity_.values(i), config_);
    }
}

template class Sgd<float>;
template class Sgd<double>;
template void sgd_update<float>(std::span<float>, std::span<const float>, std::span<float>,
                                const SgdConfig&);
template void sgd_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                 const SgdConfig&);

}  // namespace scnet
