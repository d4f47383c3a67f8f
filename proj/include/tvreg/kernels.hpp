#ifndef TVREG_KERNELS_HPP
#define TVREG_KERNELS_HPP

#include <cmath>
#include <functional>
#include <string>

namespace tvreg {

enum class KernelKind { epanechnikov, bartlett, custom };

// Symmetric bounded kernel supported on [-1,1] with unit mass.
// Built-ins evaluate inline; custom kernels are validated at construction
// (symmetry and unit mass, both to 1e-8) and dispatch through std::function.
class Kernel {
  public:
    static Kernel epanechnikov();
    static Kernel bartlett();
    static Kernel custom(std::function<double(double)> f, int validation_panels = 2048);
    static Kernel by_name(const std::string& name);

    double operator()(double v) const {
        switch (kind_) {
            case KernelKind::epanechnikov: {
                const double u = 1.0 - v * v;
                return u > 0.0 ? 0.75 * u : 0.0;
            }
            case KernelKind::bartlett: {
                const double u = 1.0 - std::fabs(v);
                return u > 0.0 ? u : 0.0;
            }
            default:
                return (v < -1.0 || v > 1.0) ? 0.0 : fn_(v);
        }
    }

    KernelKind kind() const { return kind_; }
    const std::string& name() const { return name_; }

  private:
    Kernel(KernelKind kind, std::string name, std::function<double(double)> fn)
        : kind_(kind), name_(std::move(name)), fn_(std::move(fn)) {}

    KernelKind kind_;
    std::string name_;
    std::function<double(double)> fn_;
};

struct KernelConstants {
    double kappa2;    // int v^2 K(v) dv
    double K2;        // int K(v)^2 dv
    double KstarAt0;  // K*(0) = K2
    double Kstar2;    // int K*(v)^2 dv
    int quadrature_points;
};

// Composite Simpson on [a,b] with an even number of panels.
template <typename F>
double simpson(double a, double b, int panels, F&& f) {
    if (panels < 2) panels = 2;
    if (panels % 2 != 0) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) {
        s += f(a + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    return s * h / 3.0;
}

// K*(x) = int_{-1}^{1-2|x|} K(v) K(v+2|x|) dv, the kernel convolution
// functional from the variance of the quadratic form.
double kstar_eval(const Kernel& kernel, double x, int quad);

KernelConstants kernel_constants(const Kernel& kernel, int quad = 2048);

} // namespace tvreg

#endif
