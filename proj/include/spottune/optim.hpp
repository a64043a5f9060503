#pragma once

#include <cstddef>
#include <vector>

#include "spottune/model.hpp"

namespace spottune {

// Step decay: the learning rate is multiplied by `decay_factor` once per decay
// epoch passed, so lr(e) = initial * decay_factor^(#decay_epochs <= e).
struct Schedule {
    double initial = 1e-2;
    std::vector<std::size_t> decay_epochs;
    double decay_factor = 0.1;

    double at(std::size_t epoch) const;
};

// SGD with momentum over one parameter group:
//   v <- momentum * v + grad;  param <- param - lr * v
class SgdGroup {
public:
    SgdGroup() = default;
    SgdGroup(std::vector<Param*> params, double momentum);

    // Applies one update from the gradients on `binding`'s tape; throws if any
    // parameter in the group is missing its gradient.
    void step(const Binding& binding, double lr);

    const std::vector<Param*>& params() const { return params_; }
    bool empty() const { return params_.empty(); }

private:
    std::vector<Param*> params_;
    std::vector<std::vector<double>> velocity_;
    double momentum_ = 0.9;
};

}  // namespace spottune
