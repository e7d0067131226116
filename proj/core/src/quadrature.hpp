#pragma once

#include <cmath>
#include <functional>

namespace circforest::detail {

// Adaptive Simpson integration with Richardson correction. Callers are
// expected to split at known kinks/peaks of the integrand; the recursion
// then converges quickly on each smooth piece.
class AdaptiveSimpson {
public:
    template <typename F>
    static double integrate(const F& f, double a, double b, double abs_tol,
                            int max_depth = 48) {
        if (a == b) return 0.0;
        const double m = 0.5 * (a + b);
        const double fa = f(a), fm = f(m), fb = f(b);
        const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        return recurse(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
    }

private:
    template <typename F>
    static double recurse(const F& f, double a, double b, double fa, double fm,
                          double fb, double whole, double tol, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
            return left + right + delta / 15.0;
        }
        return recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
               recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
};

}  // namespace circforest::detail
