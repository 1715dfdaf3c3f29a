#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "redpanda/tensor.hpp"

namespace redpanda::numerics {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction over a fixed list of parameter tensors.
// NaN/inf gradients abort the step: they signal training divergence and
// silently folding them into the moments would poison every later step.
template <typename T>
class Adam {
public:
    Adam(std::vector<Tensor<T>> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i].numel(), T(0));
            v_[i].assign(params_[i].numel(), T(0));
        }
    }

    std::size_t step_count() const { return t_; }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t p = 0; p < params_.size(); ++p) {
            auto& data = params_[p].data();
            const auto& grad = params_[p].grad();
            for (std::size_t i = 0; i < data.size(); ++i) {
                const double g = static_cast<double>(grad[i]);
                if (!std::isfinite(g))
                    throw std::runtime_error("adam: non-finite gradient in parameter " + std::to_string(p) +
                                             " at element " + std::to_string(i));
                const double m = cfg_.beta1 * m_[p][i] + (1.0 - cfg_.beta1) * g;
                const double v = cfg_.beta2 * v_[p][i] + (1.0 - cfg_.beta2) * g * g;
                m_[p][i] = static_cast<T>(m);
                v_[p][i] = static_cast<T>(v);
                const double mhat = m / bc1;
                const double vhat = v / bc2;
                data[i] = static_cast<T>(data[i] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
            }
        }
    }

private:
    std::vector<Tensor<T>> params_;
    AdamConfig cfg_;
    std::vector<std::vector<T>> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace redpanda::numerics
