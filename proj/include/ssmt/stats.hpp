#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ssmt {

// Running mean/variance (Welford), mergeable.
class MeanAccumulator {
public:
    void add(double x);
    void merge(const MeanAccumulator& o);
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;
    double std_error() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// P(K > lambda) for the Kolmogorov distribution
double kolmogorov_q(double lambda);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double n_eff = 0.0;
};

// Asymptotic p-value with Stephens' small-sample correction
// lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) D.
KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
// Weighted empirical CDFs; n_eff per sample is (sum w)^2 / sum w^2 and the
// combined size is n1 n2 / (n1 + n2). Empty weight vectors mean unit weights.
KsResult ks_two_sample_weighted(const std::vector<double>& a, const std::vector<double>& wa,
                                const std::vector<double>& b, const std::vector<double>& wb);

struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};

double chi_square_sf(double stat, double dof);

// Goodness of fit: observed counts against expected probabilities. Cells
// with expected count below min_expected are pooled into their neighbour.
// When the probabilities are themselves estimated from an independent sample
// of size reference_size, each cell is scaled by 1 + n / reference_size.
ChiSquareResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probs,
                               std::size_t fitted_params = 0, double min_expected = 5.0, double reference_size = 0.0);

// Homogeneity of two count vectors (2 x k table), sparse cells pooled.
ChiSquareResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                      double min_expected = 5.0);

}  // namespace ssmt
