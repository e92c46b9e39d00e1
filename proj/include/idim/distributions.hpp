#pragma once

// Analytic distributions of normalized neighbor distances and of the FSA
// local estimate, plus the sampling distribution of the median of n i.i.d.
// local estimates. Densities are evaluated in log space internally so large
// k*D does not underflow.

namespace idim {

// ln B(a, b) for a, b > 0.
double log_beta(double a, double b);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation with
// the usual symmetry switch; absolute error ~1e-14. Throws ArgumentError on
// x outside [0,1] or non-positive parameters.
double reg_inc_beta(double x, double a, double b);

// Density of the normalized distance r = R_k / R_K of the k-th neighbor in
// a K-neighborhood (K = Km1 + 1 ranked points), intrinsic dimension D.
double pdf_normalized_distance(double r, int k, int Km1, double D);

// Density of the local FSA estimate for neighborhood order k at intrinsic
// dimension D, and its log.
double fsa_pdf(double d, int k, double D);
double fsa_log_pdf(double d, int k, double D);

// P(estimate <= d) = I_a(k, k) with a = 2^(-D/d); exactly 2^(-D/d) at k=1.
double fsa_cdf(double d, int k, double D);

// Inverse of fsa_cdf; closed form at k=1, monotone bisection otherwise.
double fsa_quantile(double p, int k, double D);

// Sampling density of the median of n i.i.d. local estimates (n odd),
// its log, and the corresponding distribution function.
double median_sampling_pdf(double m, int k, double D, int n);
double median_sampling_log_pdf(double m, int k, double D, int n);
double median_sampling_cdf(double m, int k, double D, int n);

} // namespace idim
