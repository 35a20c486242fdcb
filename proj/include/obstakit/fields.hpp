#pragma once

#include <Eigen/Core>

namespace obstakit {

// Interior-node vectors come in two flavours that must not be mixed:
// coefficient vectors (functions in H_0^1 or L^2, boundary values implicitly
// zero) and load vectors (functionals in H^{-1}, paired with coefficient
// vectors by the plain dot product). Turning an L^2 function v into a load
// always goes through the mass matrix, M v.

template <class Tag>
class InteriorVector {
public:
    InteriorVector() = default;
    explicit InteriorVector(Eigen::Index n) : values_(Eigen::VectorXd::Zero(n)) {}
    explicit InteriorVector(Eigen::VectorXd values) : values_(std::move(values)) {}

    static InteriorVector zero(Eigen::Index n) { return InteriorVector(n); }

    Eigen::Index size() const noexcept { return values_.size(); }
    const Eigen::VectorXd& values() const noexcept { return values_; }
    Eigen::VectorXd& values() noexcept { return values_; }
    double operator[](Eigen::Index i) const { return values_[i]; }
    double& operator[](Eigen::Index i) { return values_[i]; }

    InteriorVector& operator+=(const InteriorVector& o) {
        values_ += o.values_;
        return *this;
    }
    InteriorVector& operator-=(const InteriorVector& o) {
        values_ -= o.values_;
        return *this;
    }
    InteriorVector& operator*=(double s) {
        values_ *= s;
        return *this;
    }

    friend InteriorVector operator+(InteriorVector a, const InteriorVector& b) { return a += b; }
    friend InteriorVector operator-(InteriorVector a, const InteriorVector& b) { return a -= b; }
    friend InteriorVector operator*(double s, InteriorVector a) { return a *= s; }

private:
    Eigen::VectorXd values_;
};

struct NodalTag {};
struct DualTag {};

/// Coefficient vector over interior nodes.
using NodalField = InteriorVector<NodalTag>;
/// Load vector over interior nodes (an H^{-1} functional).
using DualVector = InteriorVector<DualTag>;

}  // namespace obstakit
