#include "nlh/kernel.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "nlh/error.hpp"

namespace nlh {

FractionalOrder::FractionalOrder(double s) : s_(s) {
    require(std::isfinite(s) && s > 0.0 && s < 1.0, "fractional order s must lie in (0, 1)");
}

EllipticityBounds::EllipticityBounds(double lambda, double Lambda) : lambda_(lambda), Lambda_(Lambda) {
    require(std::isfinite(lambda) && std::isfinite(Lambda) && lambda > 0.0 && lambda <= Lambda,
            "ellipticity bounds need 0 < lambda <= Lambda");
}

KernelSpec::KernelSpec(int dim, FractionalOrder s, EllipticityBounds b, KernelVariant v)
    : dim_(dim), s_(s), bounds_(b), variant_(v) {
    require(dim == 1 || dim == 2, "kernel dimension must be 1 or 2");
}

KernelSpec KernelSpec::fractional_laplacian(int dim, FractionalOrder s, EllipticityBounds b) {
    require(b.lambda() <= 1.0 && 1.0 <= b.Lambda(),
            "fractional Laplacian multiplier 1 lies outside [lambda, Lambda]");
    KernelSpec k(dim, s, b, KernelVariant::FractionalLaplacian);
    k.info_ = {"fractional_laplacian", nlohmann::json::object()};
    k.constant_ = true;
    k.constant_value_ = 1.0;
    return k;
}

KernelSpec KernelSpec::constant(int dim, FractionalOrder s, EllipticityBounds b, double value) {
    require(value >= b.lambda() && value <= b.Lambda(), "constant multiplier outside [lambda, Lambda]");
    KernelSpec k(dim, s, b, KernelVariant::SymmetricMultiplier);
    k.info_ = {"constant", {{"value", value}}};
    k.constant_ = true;
    k.constant_value_ = value;
    return k;
}

KernelSpec KernelSpec::symmetric(int dim, FractionalOrder s, EllipticityBounds b, SymmetricFn a,
                                 MultiplierInfo info) {
    require(static_cast<bool>(a), "symmetric multiplier callable is empty");
    KernelSpec k(dim, s, b, KernelVariant::SymmetricMultiplier);
    k.sym_ = std::move(a);
    k.info_ = std::move(info);
    return k;
}

KernelSpec KernelSpec::x_dependent(int dim, FractionalOrder s, EllipticityBounds b, XDependentFn a,
                                   MultiplierInfo info) {
    require(static_cast<bool>(a), "x-dependent multiplier callable is empty");
    KernelSpec k(dim, s, b, KernelVariant::XDependentMultiplier);
    k.xdep_ = std::move(a);
    k.info_ = std::move(info);
    return k;
}

double KernelSpec::multiplier(Point x, Point y) const {
    double a = constant_value_;
    if (!constant_) {
        a = variant_ == KernelVariant::XDependentMultiplier ? xdep_(x, y) : sym_(y);
        if (!(a >= bounds_.lambda() && a <= bounds_.Lambda())) {
            throw Error("multiplier " + info_.name + " returned " + std::to_string(a) +
                        " outside [lambda, Lambda]");
        }
    }
    return a;
}

double kernel_density(const KernelSpec& k, Point x, Point y) {
    const double r = norm(y);
    require(r > 0.0, "kernel_density: y = 0 is outside the kernel's domain");
    return k.multiplier(x, y) * std::pow(r, -(k.dim() + 2.0 * k.s()));
}

namespace multipliers {

KernelSpec constant(int dim, FractionalOrder s, EllipticityBounds b, double value) {
    return KernelSpec::constant(dim, s, b, value);
}

KernelSpec radial_step(int dim, FractionalOrder s, EllipticityBounds b, double radius) {
    require(radius > 0.0, "radial_step radius must be positive");
    const double lo = b.lambda(), hi = b.Lambda();
    return KernelSpec::symmetric(
        dim, s, b, [=](Point y) { return norm(y) <= radius ? lo : hi; },
        {"radial_step", {{"radius", radius}}});
}

KernelSpec angular_step(int dim, FractionalOrder s, EllipticityBounds b, int sectors) {
    require(sectors >= 1, "angular_step needs at least one sector");
    const double lo = b.lambda(), hi = b.Lambda();
    return KernelSpec::symmetric(
        dim, s, b,
        [=](Point y) {
            // Angle of the line through ±y, in [0, π).
            double t = std::atan2(y.y, y.x);
            if (t < 0.0) t += std::numbers::pi;
            if (t >= std::numbers::pi) t -= std::numbers::pi;
            const int k = static_cast<int>(t / std::numbers::pi * sectors) % sectors;
            return k % 2 == 0 ? lo : hi;
        },
        {"angular_step", {{"sectors", sectors}}});
}

KernelSpec checkerboard(int dim, FractionalOrder s, EllipticityBounds b, double cell) {
    require(cell > 0.0, "checkerboard cell must be positive");
    const double lo = b.lambda(), hi = b.Lambda();
    return KernelSpec::x_dependent(
        dim, s, b,
        [=](Point x, Point y) {
            const long long c = static_cast<long long>(std::floor(x.x / cell)) +
                                static_cast<long long>(std::floor(x.y / cell));
            const bool even = (c % 2 + 2) % 2 == 0;
            const bool near = norm(y) <= 1.0;
            return even == near ? hi : lo;
        },
        {"checkerboard", {{"cell", cell}}});
}

KernelSpec random_trig(int dim, FractionalOrder s, EllipticityBounds b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(0.5, 6.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double c1 = freq(rng), c2 = phase(rng), c3 = freq(rng), c4 = freq(rng), c5 = phase(rng);
    const double lo = b.lambda(), span = b.Lambda() - b.lambda();
    return KernelSpec::x_dependent(
        dim, s, b,
        [=](Point x, Point y) {
            const double sig =
                0.5 * (1.0 + std::sin(c1 * norm(y) + c2) * std::cos(c3 * x.x + c4 * x.y + c5));
            return std::fmin(lo + span, lo + span * sig);
        },
        {"random_trig", {{"seed", seed}}});
}

}  // namespace multipliers

KernelSpec kernel_from_json(const nlohmann::json& j, int dim, FractionalOrder s, EllipticityBounds b) {
    const std::string name = j.value("variant", std::string("fractional_laplacian"));
    if (name == "fractional_laplacian") return KernelSpec::fractional_laplacian(dim, s, b);
    if (name == "constant") return multipliers::constant(dim, s, b, j.at("value").get<double>());
    if (name == "radial_step") return multipliers::radial_step(dim, s, b, j.at("radius").get<double>());
    if (name == "angular_step") return multipliers::angular_step(dim, s, b, j.at("sectors").get<int>());
    if (name == "checkerboard") return multipliers::checkerboard(dim, s, b, j.at("cell").get<double>());
    if (name == "random_trig") return multipliers::random_trig(dim, s, b, j.at("seed").get<std::uint64_t>());
    throw Error("unknown kernel variant '" + name + "'");
}

nlohmann::json kernel_to_json(const KernelSpec& k) {
    nlohmann::json j = k.info().params;
    j["variant"] = k.info().name;
    return j;
}

DriftReport validate_drift(const DriftSpec& d) {
    DriftReport r;
    if (d.base.s() < 0.5) r.reasons.push_back("order below 1/2");
    if (!(d.beta >= 0.0) || !std::isfinite(d.beta)) r.reasons.push_back("beta must be finite and nonnegative");
    if (norm(d.b) > d.beta * (1.0 + 1e-12)) r.reasons.push_back("drift bound: |b| exceeds beta");
    if (d.base.variant() == KernelVariant::XDependentMultiplier) {
        r.reasons.push_back("base kernel depends on x; drift class needs a symmetric kernel K(y)");
    }
    r.valid = r.reasons.empty();
    return r;
}

}  // namespace nlh
