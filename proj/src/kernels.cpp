#include "tvreg/kernels.hpp"

#include <cmath>

#include "tvreg/common.hpp"

namespace tvreg {

Kernel Kernel::epanechnikov() {
    return Kernel(KernelKind::epanechnikov, "epanechnikov", nullptr);
}

Kernel Kernel::bartlett() {
    return Kernel(KernelKind::bartlett, "bartlett", nullptr);
}

Kernel Kernel::custom(std::function<double(double)> f, int validation_panels) {
    if (!f) throw config_error("custom kernel: null evaluator");
    Kernel k(KernelKind::custom, "custom", std::move(f));
    const int m = validation_panels < 64 ? 64 : validation_panels;
    double asym = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double v = -1.0 + 2.0 * i / m;
        asym = std::max(asym, std::fabs(k(v) - k(-v)));
    }
    if (asym > 1e-8) throw config_error("custom kernel: not symmetric");
    const double mass = simpson(-1.0, 1.0, m, [&](double v) { return k(v); });
    if (std::fabs(mass - 1.0) > 1e-8) throw config_error("custom kernel: mass != 1");
    return k;
}

Kernel Kernel::by_name(const std::string& name) {
    if (name == "epanechnikov") return epanechnikov();
    if (name == "bartlett") return bartlett();
    throw config_error("unknown kernel: " + name);
}

double kstar_eval(const Kernel& kernel, double x, int quad) {
    const double ax = std::fabs(x);
    if (ax > 1.0) throw config_error("kstar_eval: |x| must be <= 1");
    const double hi = 1.0 - 2.0 * ax;
    if (hi <= -1.0) return 0.0;
    return simpson(-1.0, hi, quad,
                   [&](double v) { return kernel(v) * kernel(v + 2.0 * ax); });
}

KernelConstants kernel_constants(const Kernel& kernel, int quad) {
    if (quad < 64) throw config_error("kernel_constants: quad must be >= 64");
    KernelConstants c{};
    c.quadrature_points = quad;
    c.kappa2 = simpson(-1.0, 1.0, quad, [&](double v) { return v * v * kernel(v); });
    c.K2 = simpson(-1.0, 1.0, quad, [&](double v) { return kernel(v) * kernel(v); });
    c.KstarAt0 = kstar_eval(kernel, 0.0, quad);
    c.Kstar2 = simpson(-1.0, 1.0, quad, [&](double v) {
        const double kv = kstar_eval(kernel, v, quad);
        return kv * kv;
    });
    return c;
}

} // namespace tvreg
