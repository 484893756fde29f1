#include "rcsbp/laplace_inversion.hpp"

#include "rcsbp/errors.hpp"

#include <cmath>
#include <numbers>

namespace rcsbp {

EulerInverter::EulerInverter(int terms, double precision) : terms_(terms), precision_(precision) {
    if (terms_ < 2) throw DomainError("EulerInverter: at least 2 Euler terms required");
    if (!(precision_ > 0.0)) throw DomainError("EulerInverter: precision must be positive");
    binomial_.resize(terms_ + 1);
    long double c = 1.0L;
    const long double scale = std::ldexp(1.0L, -terms_);
    for (int j = 0; j <= terms_; ++j) {
        binomial_[j] = c * scale;
        c = c * static_cast<long double>(terms_ - j) / static_cast<long double>(j + 1);
    }
}

EulerInverter::Result EulerInverter::invert(const ComplexTransform& transform, double t) const {
    if (!(t > 0.0)) throw DomainError("EulerInverter: t must be > 0");
    const long double pi = std::numbers::pi_v<long double>;
    const long double lt = t;
    // A/2 with e^{-A} = 10^{-precision}
    const long double half_a = static_cast<long double>(precision_) * std::log(10.0L) / 2.0L;
    const long double prefactor = std::exp(half_a) / lt;

    const int n_terms = 2 * terms_ + 1;
    std::vector<long double> partial(n_terms);
    long double sum = 0.0L;
    for (int k = 0; k < n_terms; ++k) {
        const std::complex<long double> s(half_a / lt, pi * k / lt);
        long double term = std::real(transform(s));
        if (k == 0) term *= 0.5L;
        if (k % 2 == 1) term = -term;
        sum += term;
        partial[k] = sum;
    }

    auto euler = [&](int start) {
        long double acc = 0.0L;
        for (int j = 0; j <= terms_; ++j) acc += binomial_[j] * partial[start + j];
        return prefactor * acc;
    };
    const long double e_m = euler(terms_);
    const long double e_prev = euler(terms_ - 1);
    return {static_cast<double>(e_m), static_cast<double>(std::abs(e_m - e_prev))};
}

} // namespace rcsbp
