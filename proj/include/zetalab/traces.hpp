#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "zetalab/dynamics.hpp"
#include "zetalab/orbits.hpp"
#include "zetalab/serialization.hpp"

namespace zetalab {

/// tr_n = sum over Fix T^n of g_n(x) / |det(Id - DT^n(x))|, for n = 1..n_max.
struct TraceTable {
  std::string map_digest;
  std::string weight_digest;
  std::vector<cplx> entries;  // entries[n-1] = tr_n

  int n_max() const { return static_cast<int>(entries.size()); }
  cplx at(int n) const { return entries.at(static_cast<std::size_t>(n - 1)); }
};

/// g_n(x) = prod_{i<n} g(T^i x).
cplx weight_along_orbit(const TorusMap& map, const WeightSpec& weight, const Vec2& x, int n);

/// Weighted periodic-orbit sum over one orbit set, summed with compensation
/// in ascending-k order. Throws SingularMonodromy for a non-hyperbolic point.
cplx trace_from_orbits(const OrbitSet& set, const TorusMap& map, const WeightSpec& weight);

using OrbitSource = std::function<OrbitSet(int n)>;

TraceTable trace_table(const TorusMap& map, const WeightSpec& weight, int n_max, const OrbitSource& orbits);
/// Same, enumerating (and continuing) orbits on the fly.
TraceTable trace_table(const TorusMap& map, const WeightSpec& weight, int n_max);

/// Both sides of an operator identity evaluated by grid quadrature.
struct IdentityResidual {
  cplx lhs;
  cplx rhs;
  double abs_err = 0.0;
};

/// <conj(T_g h), f> against <conj(h), T_g^* f> on an m x m grid, where
/// <u, v> = integral of conj(u) v.
IdentityResidual duality_check(const TorusMap& map, const WeightSpec& weight, const TrigPolynomial& h,
                               const TrigPolynomial& f, int grid_m = 256);

/// integral (T_g^n h)(T_g^{*n} f) against integral (T_g^{2n} h) f.
IdentityResidual powers_identity_check(const TorusMap& map, const WeightSpec& weight, const TrigPolynomial& h,
                                       const TrigPolynomial& f, int n, int grid_m = 256);

/// CSV with header n,re_tr,im_tr.
std::string trace_table_csv(const TraceTable& table);
json trace_table_sidecar(const TraceTable& table, const json& tolerances);
TraceTable trace_table_from_csv(const std::string& csv, const json& sidecar);

}  // namespace zetalab
