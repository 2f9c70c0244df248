#include "pfdiff/nn/adam.h"

#include <cmath>

#include "pfdiff/common/error.h"

namespace pfdiff::nn {

nlohmann::json AdamConfig::to_json() const {
    return {{"learning_rate", learning_rate}, {"beta1", beta1}, {"beta2", beta2}, {"epsilon", epsilon}};
}

AdamConfig AdamConfig::from_json(const nlohmann::json& j) {
    AdamConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    return c;
}

Adam::Adam(const ParamStore& params, AdamConfig config)
    : config_(config), m_(params.zeros_like()), v_(params.zeros_like()) {}

void Adam::step(ParamStore& params, const ParamStore& grads) {
    if (!params.same_shapes(grads) || !params.same_shapes(m_))
        throw DimensionError("optimizer state does not match parameters");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!grads[i].allFinite()) throw NumericError("non-finite gradient in " + grads.name(i));
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    const double lr = config_.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto m = m_[i].array();
        auto v = v_[i].array();
        const auto g = grads[i].array();
        m = config_.beta1 * m + (1.0 - config_.beta1) * g;
        v = config_.beta2 * v + (1.0 - config_.beta2) * g.square();
        params[i].array() -= lr * (m / c1) / ((v / c2).sqrt() + config_.epsilon);
    }
}

}  // namespace pfdiff::nn
