#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zetalab/determinant.hpp"
#include "zetalab/dynamics.hpp"

namespace zetalab {

/// Frequencies with |k|_inf <= K, by max-norm shell, lexicographic inside a
/// shell. The order is part of the matrix dump format.
std::vector<Frequency> frequency_basis(int K);

struct GalerkinOperator {
  int K = 0;
  int grid_m = 0;       // 0 for the exact construction
  bool exact = false;   // built from Fourier data without sampling
  std::vector<Frequency> basis;
  Eigen::MatrixXcd matrix;  // M_jk = <e_j, T_g e_k>
  /// Largest fraction of a column's sampled energy within m/16 of the
  /// Nyquist band; above 1e-6 sets aliasing_risk.
  double max_tail_ratio = 0.0;
  bool aliasing_risk = false;
};

/// Exact when eps = 0 and g is constant or a trig polynomial
/// (M_jk = c_{j - A^T k}); otherwise column k is the DFT of
/// g(x) e^{2 pi i k.T(x)} on an m x m grid. Requires m >= 4K + 4.
GalerkinOperator build_galerkin(const TorusMap& map, const WeightSpec& weight, int K, int grid_m = 256);

struct SpectrumEstimate {
  std::vector<cplx> eigenvalues;  // descending modulus
  std::vector<double> residuals;  // |Mv - lv| / |v|
  std::vector<double> k_spread;   // NaN until a convergence scan fills it
};

/// The `count` largest-modulus eigenvalues with residual certificates.
/// Throws EigenFailure when a residual exceeds 1e-8.
SpectrumEstimate eigen_solve(const Eigen::MatrixXcd& matrix, int count);
SpectrumEstimate eigen_solve(const GalerkinOperator& op, int count);

/// (sum_{|l| > sigma} l^n) for n = 1..n_max. Throws SigmaOnEigenvalue when
/// some | |l| - sigma | <= gap * sigma.
std::vector<cplx> projector_traces(const std::vector<cplx>& eigenvalues, double sigma, int n_max,
                                   double gap = 1e-2);

/// Greedy over all pairs in increasing |z l - 1|; pairs above tol are not
/// matched.
ResonanceMatching match_resonances(const std::vector<cplx>& zeros, const std::vector<cplx>& eigenvalues, double tol);

struct TrackedEigenvalue {
  cplx value;                 // at the largest K
  std::vector<cplx> history;  // one per K, in K_list order
  double spread = 0.0;
  bool converged = false;
};

/// Tracks the eigenvalues of the largest-K spectrum through the others,
/// largest modulus first, each taking the nearest unused eigenvalue.
std::vector<TrackedEigenvalue> convergence_scan(const std::vector<SpectrumEstimate>& spectra, double tol = 1e-6);
std::vector<TrackedEigenvalue> convergence_scan(const TorusMap& map, const WeightSpec& weight,
                                                const std::vector<int>& K_list, int count, int grid_m = 256,
                                                double tol = 1e-6);

/// Header line {"schema":"galerkin-v1",...} then one line per row of
/// re,im pairs.
std::string galerkin_dump(const GalerkinOperator& op);
/// CSV: rank,re_lambda,im_lambda,modulus,residual,k_spread.
std::string spectrum_csv(const SpectrumEstimate& spectrum);

}  // namespace zetalab
