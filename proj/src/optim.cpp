#include "spottune/optim.hpp"

#include <cmath>

namespace spottune {

double Schedule::at(std::size_t epoch) const {
    double lr = initial;
    for (std::size_t decay : decay_epochs) {
        if (decay <= epoch) lr *= decay_factor;
    }
    return lr;
}

SgdGroup::SgdGroup(std::vector<Param*> params, double momentum)
    : params_(std::move(params)), momentum_(momentum) {
    velocity_.reserve(params_.size());
    for (const Param* p : params_) velocity_.emplace_back(p->numel(), 0.0);
}

void SgdGroup::step(const Binding& binding, double lr) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i];
        const auto g = binding.tape().grad(binding.node(p));  // throws when missing
        std::vector<double>& v = velocity_[i];
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = momentum_ * v[j] + g[j];
            p.value.data[j] -= lr * v[j];
        }
    }
}

}  // namespace spottune
