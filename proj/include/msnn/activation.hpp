#pragma once

#include <cmath>
#include <string>

#include "msnn/error.hpp"
#include "msnn/tensor.hpp"

namespace msnn {

enum class Activation { logistic, tanh, identity };

inline double activate(Activation f, double u) {
    switch (f) {
        case Activation::logistic: return 1.0 / (1.0 + std::exp(-u));
        case Activation::tanh: return std::tanh(u);
        case Activation::identity: return u;
    }
    return u;
}

/// Derivative at pre-activation u.
inline double activate_deriv(Activation f, double u) {
    switch (f) {
        case Activation::logistic: {
            double s = 1.0 / (1.0 + std::exp(-u));
            return s * (1.0 - s);
        }
        case Activation::tanh: {
            double t = std::tanh(u);
            return 1.0 - t * t;
        }
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

inline Vec activate(Activation f, const Vec& u) {
    Vec out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = activate(f, u[i]);
    return out;
}

inline Tensor2 activate(Activation f, const Tensor2& u) {
    return Tensor2(u.rows, u.cols, activate(f, u.v));
}

inline Activation parse_activation(const std::string& name) {
    if (name == "logistic") return Activation::logistic;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + name + "'");
}

inline const char* activation_name(Activation f) {
    switch (f) {
        case Activation::logistic: return "logistic";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "?";
}

} // namespace msnn
