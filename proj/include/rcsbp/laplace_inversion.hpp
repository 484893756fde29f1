#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace rcsbp {

using ComplexTransform = std::function<std::complex<long double>(std::complex<long double>)>;

/// Fourier-series inversion of a Laplace transform along the Bromwich line
/// Re s = A / (2t), accelerated by Euler (binomial) averaging of the last
/// `terms` + 1 partial sums. Discretisation error is about 10^-precision for
/// bounded originals. Arithmetic is carried out in long double.
class EulerInverter {
public:
    struct Result {
        double value;
        double error_estimate;  ///< |E(M) - E(M-1)| of two Euler averages
    };

    explicit EulerInverter(int terms = 15, double precision = 10.0);

    int terms() const { return terms_; }
    double precision() const { return precision_; }

    /// f(t) for t > 0 given F(s) = int_0^inf e^{-st} f(t) dt.
    Result invert(const ComplexTransform& transform, double t) const;

private:
    int terms_;
    double precision_;
    std::vector<long double> binomial_;  // C(M, j) 2^-M
};

} // namespace rcsbp
