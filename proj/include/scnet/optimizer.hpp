#pragma once

#include <span>

#include "scnet/params.hpp"

namespace scnet {

struct SgdConfig {
    double learning_rate = 1e-4;
    double momentum = 0.9;
    /// L2 coefficient added to the gradient (coupled decay).
    double weight_decay = 2e-4;

    void validate() const;
};

/// Stochastic gradient descent with heavy-ball momentum:
///   v <- momentum * v + (g + weight_decay * p)
///   p <- p - learning_rate * v
/// The velocity starts at zero.
template <typename T>
class Sgd {
public:
    Sgd(SgdConfig config, const ParameterSet<T>& layout);

    /// Throws ShapeError when `params` or `grads` differ in layout from the
    /// set the optimizer was built for.
    void step(ParameterSet<T>& params, const ParameterSet<T>& grads);

    [[nodiscard]] const SgdConfig& config() const noexcept { return config_; }
    [[nodiscard]] const ParameterSet<T>& velocity() const noexcept { return velocity_; }

private:
    SgdConfig config_;
    ParameterSet<T> velocity_;
};

/// One update on flat arrays; the building block of Sgd::step.
template <typename T>
void sgd_update(std::span<T> param, std::span<const T> grad, std::span<T> velocity,
                const SgdConfig& config);

}  // namespace scnet
