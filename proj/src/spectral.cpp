#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "zetalab/error.hpp"
#include "zetalab/serialization.hpp"
#include "zetalab/spectral.hpp"

namespace zetalab {

std::vector<Frequency> frequency_basis(int K) {
  if (K < 0) throw Error(ErrorKind::InvalidArgument, "cutoff K must be >= 0");
  std::vector<Frequency> out{{0, 0}};
  for (int s = 1; s <= K; ++s)
    for (int a = -s; a <= s; ++a)
      for (int b = -s; b <= s; ++b)
        if (std::max(std::abs(a), std::abs(b)) == s) out.push_back({a, b});
  return out;
}

namespace {

/// Dense lookup from frequency to basis index, -1 outside the window.
class BasisIndex {
 public:
  BasisIndex(const std::vector<Frequency>& basis, int K) : K_(K), table_((2 * K + 1) * (2 * K + 1), -1) {
    for (std::size_t i = 0; i < basis.size(); ++i) table_[slot(basis[i][0], basis[i][1])] = static_cast<int>(i);
  }
  int operator()(long a, long b) const {
    if (std::abs(a) > K_ || std::abs(b) > K_) return -1;
    return table_[slot(static_cast<int>(a), static_cast<int>(b))];
  }

 private:
  std::size_t slot(int a, int b) const { return std::size_t(a + K_) * std::size_t(2 * K_ + 1) + std::size_t(b + K_); }
  int K_;
  std::vector<int> table_;
};

GalerkinOperator build_exact(const TorusMap& map, const WeightSpec& weight, int K) {
  GalerkinOperator op;
  op.K = K;
  op.exact = true;
  op.basis = frequency_basis(K);
  const long n = static_cast<long>(op.basis.size());
  op.matrix = Eigen::MatrixXcd::Zero(n, n);
  const BasisIndex index(op.basis, K);
  std::vector<TrigTerm> terms;
  if (weight.kind() == WeightKind::Constant)
    terms.push_back({Frequency{0, 0}, weight.constant_value()});
  else
    terms = weight.polynomial().terms();
  const IMat2& a = map.matrix();
  for (long col = 0; col < n; ++col) {
    const auto& k = op.basis[col];
    // A^T k
    const long s0 = a(0, 0) * k[0] + a(1, 0) * k[1];
    const long s1 = a(0, 1) * k[0] + a(1, 1) * k[1];
    for (const auto& t : terms) {
      const int row = index(s0 + t.frequency[0], s1 + t.frequency[1]);
      if (row >= 0) op.matrix(row, col) += t.coefficient;
    }
  }
  return op;
}

GalerkinOperator build_sampled(const TorusMap& map, const WeightSpec& weight, int K, int m) {
  GalerkinOperator op;
  op.K = K;
  op.grid_m = m;
  op.basis = frequency_basis(K);
  const long n = static_cast<long>(op.basis.size());
  op.matrix = Eigen::MatrixXcd::Zero(n, n);

  const std::size_t pts = std::size_t(m) * std::size_t(m);
  std::vector<Vec2> image(pts);
  std::vector<cplx> g(pts);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const Vec2 x(double(i) / m, double(j) / m);
      image[std::size_t(i) * m + j] = reduce_mod1(map.lift(x));
      g[std::size_t(i) * m + j] = weight(x);
    }

  fftw_complex* in = fftw_alloc_complex(pts);
  fftw_complex* out = fftw_alloc_complex(pts);
  const fftw_plan plan = fftw_plan_dft_2d(m, m, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  auto* cin = reinterpret_cast<cplx*>(in);
  auto* cout = reinterpret_cast<cplx*>(out);
  const double inv = 1.0 / double(pts);
  const int band = m / 2 - m / 16;
  auto wrap = [m](int j) { return j >= m / 2 ? j - m : j; };

  for (long col = 0; col < n; ++col) {
    const auto& k = op.basis[col];
    for (std::size_t p = 0; p < pts; ++p) {
      double phase = k[0] * image[p][0] + k[1] * image[p][1];
      phase -= std::nearbyint(phase);
      cin[p] = g[p] * std::polar(1.0, kTwoPi * phase);
    }
    fftw_execute(plan);
    double total = 0.0, tail = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double e = std::norm(cout[std::size_t(a) * m + b]);
        total += e;
        if (std::max(std::abs(wrap(a)), std::abs(wrap(b))) >= band) tail += e;
      }
    if (total > 0.0) op.max_tail_ratio = std::max(op.max_tail_ratio, tail / total);
    for (long row = 0; row < n; ++row) {
      const auto& j = op.basis[row];
      const int a = (j[0] + m) % m, b = (j[1] + m) % m;
      op.matrix(row, col) = cout[std::size_t(a) * m + b] * inv;
    }
  }
  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(out);
  op.aliasing_risk = op.max_tail_ratio > 1e-6;
  return op;
}

}  // namespace

GalerkinOperator build_galerkin(const TorusMap& map, const WeightSpec& weight, int K, int grid_m) {
  if (K < 0) throw Error(ErrorKind::InvalidArgument, "cutoff K must be >= 0");
  if (map.is_linear() && weight.kind() != WeightKind::ExpTrig) return build_exact(map, weight, K);
  if (grid_m < 4 * K + 4) {
    std::ostringstream os;
    os << "sampling grid m=" << grid_m << " below 4K+4=" << 4 * K + 4;
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  return build_sampled(map, weight, K, grid_m);
}

// ---------------------------------------------------------------------------

namespace {

void lapack_check(lapack_int info, const char* routine) {
  if (info != 0) {
    std::ostringstream os;
    os << routine << " returned info=" << info;
    throw Error(ErrorKind::EigenFailure, os.str());
  }
}

}  // namespace

SpectrumEstimate eigen_solve(const Eigen::MatrixXcd& matrix, int count) {
  const lapack_int n = static_cast<lapack_int>(matrix.rows());
  if (matrix.cols() != n) throw Error(ErrorKind::InvalidArgument, "matrix must be square");
  if (count < 1 || count > n) throw Error(ErrorKind::InvalidArgument, "eigenvalue count out of range");

  // Permutation-balanced Hessenberg form (diagonal scaling inflates the
  // back-transformed residuals); `work` keeps the reflectors below the
  // subdiagonal, which the inverse iteration never reads.
  Eigen::MatrixXcd work = matrix;
  lapack_int ilo = 1, ihi = n;
  std::vector<double> scale(static_cast<std::size_t>(n));
  lapack_check(LAPACKE_zgebal(LAPACK_COL_MAJOR, 'P', n, work.data(), n, &ilo, &ihi, scale.data()), "zgebal");
  std::vector<cplx> tau(static_cast<std::size_t>(std::max<lapack_int>(n - 1, 1)));
  lapack_check(LAPACKE_zgehrd(LAPACK_COL_MAJOR, n, ilo, ihi, work.data(), n, tau.data()), "zgehrd");

  std::vector<cplx> w(static_cast<std::size_t>(n));
  {
    Eigen::MatrixXcd h = work.triangularView<Eigen::Upper>();
    for (lapack_int i = 1; i < n; ++i) h(i, i - 1) = work(i, i - 1);
    cplx dummy;
    lapack_check(LAPACKE_zhseqr(LAPACK_COL_MAJOR, 'E', 'N', n, ilo, ihi, h.data(), n, w.data(), &dummy, 1),
                 "zhseqr");
  }

  std::vector<lapack_int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](lapack_int a, lapack_int b) {
    const double ma = std::abs(w[a]), mb = std::abs(w[b]);
    if (ma != mb) return ma > mb;
    if (w[a].real() != w[b].real()) return w[a].real() > w[b].real();
    return w[a].imag() > w[b].imag();
  });
  order.resize(static_cast<std::size_t>(count));

  std::vector<lapack_logical> select(static_cast<std::size_t>(n), 0);
  for (lapack_int i : order) select[i] = 1;
  std::vector<cplx> w_perturbed = w;
  Eigen::MatrixXcd vr = Eigen::MatrixXcd::Zero(n, count);  // LAPACKE NaN-checks this buffer
  cplx vl_dummy;
  lapack_int produced = 0;
  std::vector<lapack_int> ifaill(static_cast<std::size_t>(count)), ifailr(static_cast<std::size_t>(count));
  const lapack_int info = LAPACKE_zhsein(LAPACK_COL_MAJOR, 'R', 'Q', 'N', select.data(), n, work.data(), n,
                                        w_perturbed.data(), &vl_dummy, 1, vr.data(), n, count, &produced,
                                        ifaill.data(), ifailr.data());
  if (info < 0) lapack_check(info, "zhsein");
  lapack_check(LAPACKE_zunmhr(LAPACK_COL_MAJOR, 'L', 'N', n, count, ilo, ihi, work.data(), n, tau.data(), vr.data(),
                              n),
               "zunmhr");
  lapack_check(LAPACKE_zgebak(LAPACK_COL_MAJOR, 'P', 'R', n, ilo, ihi, scale.data(), count, vr.data(), n), "zgebak");

  // zhsein fills columns in increasing index order of the selected eigenvalues
  std::vector<lapack_int> by_index = order;
  std::sort(by_index.begin(), by_index.end());
  SpectrumEstimate est;
  std::vector<double> residual_of(static_cast<std::size_t>(n), 0.0);
  for (std::size_t c = 0; c < by_index.size(); ++c) {
    const lapack_int idx = by_index[c];
    const Eigen::VectorXcd v = vr.col(static_cast<long>(c));
    const double vn = v.norm();
    const double res = vn > 0.0 ? (matrix * v - w[idx] * v).norm() / vn : std::numeric_limits<double>::infinity();
    residual_of[idx] = res;
  }
  for (lapack_int idx : order) {
    est.eigenvalues.push_back(w[idx]);
    est.residuals.push_back(residual_of[idx]);
    est.k_spread.push_back(std::numeric_limits<double>::quiet_NaN());
    if (!(residual_of[idx] <= 1e-8)) {
      std::ostringstream os;
      os << "eigenpair residual " << residual_of[idx] << " above 1e-8 for lambda=" << w[idx];
      throw Error(ErrorKind::EigenFailure, os.str());
    }
  }
  return est;
}

SpectrumEstimate eigen_solve(const GalerkinOperator& op, int count) { return eigen_solve(op.matrix, count); }

std::vector<cplx> projector_traces(const std::vector<cplx>& eigenvalues, double sigma, int n_max, double gap) {
  std::vector<cplx> kept;
  for (const auto& e : eigenvalues) {
    if (std::abs(std::abs(e) - sigma) <= gap * sigma) {
      std::ostringstream os;
      os << "eigenvalue " << e << " within the gap of sigma=" << sigma;
      throw Error(ErrorKind::SigmaOnEigenvalue, os.str());
    }
    if (std::abs(e) > sigma) kept.push_back(e);
  }
  std::vector<cplx> out;
  for (int n = 1; n <= n_max; ++n) {
    cplx acc = 0.0;
    for (const auto& e : kept) acc += std::pow(e, n);
    out.push_back(acc);
  }
  return out;
}

ResonanceMatching match_resonances(const std::vector<cplx>& zeros, const std::vector<cplx>& eigenvalues, double tol) {
  struct Cand {
    double r;
    std::size_t i, j;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < zeros.size(); ++i)
    for (std::size_t j = 0; j < eigenvalues.size(); ++j)
      cands.push_back({std::abs(zeros[i] * eigenvalues[j] - 1.0), i, j});
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.r < b.r; });
  ResonanceMatching out;
  std::vector<char> zi(zeros.size(), 0), ej(eigenvalues.size(), 0);
  for (const auto& c : cands) {
    if (c.r > tol) break;
    if (zi[c.i] || ej[c.j]) continue;
    zi[c.i] = ej[c.j] = 1;
    out.pairs.push_back({c.i, c.j, c.r});
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const ResonancePair& a, const ResonancePair& b) { return a.zero < b.zero; });
  for (std::size_t i = 0; i < zeros.size(); ++i)
    if (!zi[i]) out.unmatched_zeros.push_back(i);
  for (std::size_t j = 0; j < eigenvalues.size(); ++j)
    if (!ej[j]) out.unmatched_eigenvalues.push_back(j);
  return out;
}

std::vector<TrackedEigenvalue> convergence_scan(const std::vector<SpectrumEstimate>& spectra, double tol) {
  if (spectra.size() < 2) throw Error(ErrorKind::InvalidArgument, "convergence scan needs at least two cutoffs");
  const SpectrumEstimate& ref = spectra.back();
  std::vector<TrackedEigenvalue> out;
  for (const auto& e : ref.eigenvalues) out.push_back({e, std::vector<cplx>(spectra.size()), 0.0, false});
  for (std::size_t s = 0; s < spectra.size(); ++s) {
    if (s + 1 == spectra.size()) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i].history[s] = ref.eigenvalues[i];
      continue;
    }
    std::vector<char> used(spectra[s].eigenvalues.size(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::size_t best = used.size();
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < used.size(); ++j) {
        const double d = std::abs(spectra[s].eigenvalues[j] - out[i].value);
        if (!used[j] && d < bd) {
          bd = d;
          best = j;
        }
      }
      if (best == used.size()) {
        out[i].history[s] = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
        continue;
      }
      used[best] = 1;
      out[i].history[s] = spectra[s].eigenvalues[best];
    }
  }
  for (auto& t : out) {
    double spread = 0.0;
    for (std::size_t a = 0; a < t.history.size(); ++a)
      for (std::size_t b = a + 1; b < t.history.size(); ++b) {
        const double d = std::abs(t.history[a] - t.history[b]);
        spread = std::isnan(d) ? std::numeric_limits<double>::infinity() : std::max(spread, d);
      }
    t.spread = spread;
    t.converged = spread <= tol;
  }
  return out;
}

std::vector<TrackedEigenvalue> convergence_scan(const TorusMap& map, const WeightSpec& weight,
                                                const std::vector<int>& K_list, int count, int grid_m, double tol) {
  if (!std::is_sorted(K_list.begin(), K_list.end()) ||
      std::adjacent_find(K_list.begin(), K_list.end()) != K_list.end())
    throw Error(ErrorKind::InvalidArgument, "K_list must be strictly increasing");
  std::vector<SpectrumEstimate> spectra;
  for (int K : K_list) {
    const GalerkinOperator op = build_galerkin(map, weight, K, grid_m);
    spectra.push_back(eigen_solve(op, std::min<int>(count, static_cast<int>(op.matrix.rows()))));
  }
  return convergence_scan(spectra, tol);
}

std::string galerkin_dump(const GalerkinOperator& op) {
  std::ostringstream os;
  const nlohmann::json header{{"schema", "galerkin-v1"}, {"K", op.K}, {"d", 2}, {"ordering", "maxnorm-lex"},
                              {"m", op.grid_m}};
  os << header.dump() << '\n';
  for (long r = 0; r < op.matrix.rows(); ++r) {
    for (long c = 0; c < op.matrix.cols(); ++c) {
      if (c) os << ',';
      os << format_double(op.matrix(r, c).real()) << ',' << format_double(op.matrix(r, c).imag());
    }
    os << '\n';
  }
  return os.str();
}

std::string spectrum_csv(const SpectrumEstimate& s) {
  CsvTable csv{{"rank", "re_lambda", "im_lambda", "modulus", "residual", "k_spread"}, {}};
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
    csv.rows.push_back({std::to_string(i + 1), format_double(s.eigenvalues[i].real()),
                        format_double(s.eigenvalues[i].imag()), format_double(std::abs(s.eigenvalues[i])),
                        format_double(s.residuals[i]), format_double(i < s.k_spread.size() ? s.k_spread[i] : NAN)});
  return to_csv(csv);
}

}  // namespace zetalab
