#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlh/point.hpp"

namespace nlh {

class FractionalOrder {
public:
    explicit FractionalOrder(double s);
    double value() const { return s_; }

private:
    double s_;
};

class EllipticityBounds {
public:
    EllipticityBounds(double lambda, double Lambda);
    double lambda() const { return lambda_; }
    double Lambda() const { return Lambda_; }

private:
    double lambda_;
    double Lambda_;
};

enum class KernelVariant { FractionalLaplacian, SymmetricMultiplier, XDependentMultiplier };

// Name and parameters of a multiplier, enough to rebuild it from a config.
struct MultiplierInfo {
    std::string name = "custom";
    nlohmann::json params = nlohmann::json::object();
};

// K(x, y) = a(x, y) / |y|^{n+2s}, with a(x, y) = a(x, -y) and λ ≤ a ≤ Λ.
class KernelSpec {
public:
    using SymmetricFn = std::function<double(Point y)>;
    using XDependentFn = std::function<double(Point x, Point y)>;

    static KernelSpec fractional_laplacian(int dim, FractionalOrder s,
                                           EllipticityBounds b = EllipticityBounds(1.0, 1.0));
    // Symmetric variant with a ≡ value.
    static KernelSpec constant(int dim, FractionalOrder s, EllipticityBounds b, double value);
    static KernelSpec symmetric(int dim, FractionalOrder s, EllipticityBounds b, SymmetricFn a,
                                MultiplierInfo info = {});
    static KernelSpec x_dependent(int dim, FractionalOrder s, EllipticityBounds b, XDependentFn a,
                                  MultiplierInfo info = {});

    int dim() const { return dim_; }
    double s() const { return s_.value(); }
    const EllipticityBounds& bounds() const { return bounds_; }
    KernelVariant variant() const { return variant_; }
    const MultiplierInfo& info() const { return info_; }

    bool translation_invariant() const { return variant_ != KernelVariant::XDependentMultiplier; }
    // True when a(x, y) is one number everywhere; the value is constant_value().
    bool constant_multiplier() const { return constant_; }
    double constant_value() const { return constant_value_; }

    // a(x, y); throws if a callable leaves [λ, Λ].
    double multiplier(Point x, Point y) const;

private:
    KernelSpec(int dim, FractionalOrder s, EllipticityBounds b, KernelVariant v);

    int dim_;
    FractionalOrder s_;
    EllipticityBounds bounds_;
    KernelVariant variant_;
    SymmetricFn sym_;
    XDependentFn xdep_;
    MultiplierInfo info_;
    bool constant_ = false;
    double constant_value_ = 1.0;
};

double kernel_density(const KernelSpec& k, Point x, Point y);

// Built-in multipliers. Each stays inside [λ, Λ] and is even in y.
namespace multipliers {
KernelSpec constant(int dim, FractionalOrder s, EllipticityBounds b, double value);
// λ for |y| ≤ radius, Λ beyond.
KernelSpec radial_step(int dim, FractionalOrder s, EllipticityBounds b, double radius);
// Alternates λ/Λ over `sectors` angular sectors of the direction of ±y.
KernelSpec angular_step(int dim, FractionalOrder s, EllipticityBounds b, int sectors);
// Λ or λ depending on the parity of the cell of x, swapped for |y| > 1.
KernelSpec checkerboard(int dim, FractionalOrder s, EllipticityBounds b, double cell);
// Smooth oscillating x-dependent multiplier with coefficients drawn from `seed`.
KernelSpec random_trig(int dim, FractionalOrder s, EllipticityBounds b, std::uint64_t seed);
}  // namespace multipliers

KernelSpec kernel_from_json(const nlohmann::json& j, int dim, FractionalOrder s, EllipticityBounds b);
nlohmann::json kernel_to_json(const KernelSpec& k);

struct DriftSpec {
    KernelSpec base;
    Point b;
    double beta = 0.0;
};

struct DriftReport {
    bool valid = true;
    std::vector<std::string> reasons;
};

DriftReport validate_drift(const DriftSpec& d);

}  // namespace nlh
