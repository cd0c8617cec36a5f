#pragma once

#include <Eigen/Dense>

#include "warc/model.hpp"

namespace warc {

using Eigen::MatrixXcd;

enum class Sublattice : int { A = 0, B = 1 };

/// Direction along which the slab is cut open. `perp` keeps (k_par, k_z)
/// as good quantum numbers and stacks columns along x-y; `par` is the
/// quarter-turned cut (columns along x+y, momenta (k_perp, k_z)).
enum class SlabCut { perp, par };

/// Slab with N_s non-equivalent sites per extended unit cell. For odd N_s
/// both facets carry the `termination` sublattice; the facet at column 0
/// is the lower one (smaller x-y for the perp cut).
struct SlabSpec {
    int n_sites = 33;
    SlabCut cut = SlabCut::perp;
    Sublattice termination = Sublattice::A;
    ModelParams params;
};

/// Band index (0-based) of the single mid-gap band of an odd-N_s slab.
inline int edge_band_index(int n_sites) { return (n_sites - 1) / 2; }

namespace detail {

/// The par cut maps onto the perp cut under a relabelling of the bonds
/// that exchanges the roles of the two in-plane directions.
inline ModelParams par_cut_params(ModelParams p) {
    std::swap(p.t[2], p.t[3]);
    std::swap(p.phi[2], p.phi[3]);
    std::swap(p.t[6], p.t[7]);
    std::swap(p.phi[6], p.phi[7]);
    std::swap(p.t[8], p.t[9]);
    std::swap(p.phi[8], p.phi[9]);
    return p;
}

struct SlabTerms {
    // per-sublattice ingredients, index 0 = A, 1 = B
    complexd vert[2];   // t5 / t6
    complexd diag2[2];  // t7 / t9  (phase exp(i sqrt2 k_par))
    complexd step[2];   // t8 / t10 (column -> column+2, no phase)
    double onsite[2];
    complexd up[2];     // column c -> c+1 entry H(c, c+1), by sublattice of c
    complexd dup[2];    // d/dk_par of up[]
};

inline SlabTerms slab_terms(const ModelParams& p, double k_par, double k_z) {
    const complexd I(0.0, 1.0);
    const double s2 = std::numbers::sqrt2;
    SlabTerms s;
    s.vert[0] = p.hop(5) * std::exp(I * k_z);
    s.vert[1] = p.hop(6) * std::exp(I * k_z);
    s.diag2[0] = p.hop(7) * std::exp(I * s2 * k_par);
    s.diag2[1] = p.hop(9) * std::exp(I * s2 * k_par);
    s.step[0] = -p.hop(8);
    s.step[1] = -p.hop(10);
    s.onsite[0] = p.eps - p.m;
    s.onsite[1] = p.eps + p.m;
    const complexd e = std::exp(I * k_par / s2);
    // A(c) -> B(c+1): +x (t1) and -y (t4) bonds
    s.up[0] = -p.hop(1) * e - p.hop(4) / e;
    s.dup[0] = -(I / s2) * (p.hop(1) * e - p.hop(4) / e);
    // B(c) -> A(c+1): conjugate of the -x (t2) / +y (t3) bonds
    s.up[1] = -std::conj(p.hop(2)) * e - std::conj(p.hop(3)) / e;
    s.dup[1] = -(I / s2) * (std::conj(p.hop(2)) * e - std::conj(p.hop(3)) / e);
    return s;
}

}  // namespace detail

/// N_s x N_s Bloch Hamiltonian of the slab at (k_par, k_z), columns in
/// geometric order (index 0 at the lower facet, sublattices alternating
/// starting from `termination`).
inline MatrixXcd slab_bloch(const SlabSpec& spec, double k_par, double k_z) {
    if (spec.n_sites < 3 || spec.n_sites % 2 == 0)
        throw std::invalid_argument("slab_bloch: N_s must be odd and >= 3");
    const ModelParams p = (spec.cut == SlabCut::par)
                              ? detail::par_cut_params(spec.params)
                              : spec.params;
    const auto s = detail::slab_terms(p, k_par, k_z);
    const int n = spec.n_sites;
    const int first = static_cast<int>(spec.termination);

    MatrixXcd h = MatrixXcd::Zero(n, n);
    for (int c = 0; c < n; ++c) {
        const int sub = (first + c) % 2;
        h(c, c) = s.onsite[sub] - (s.vert[sub] + std::conj(s.vert[sub])) -
                  (s.diag2[sub] + std::conj(s.diag2[sub]));
        if (c + 1 < n) {
            h(c, c + 1) = s.up[sub];
            h(c + 1, c) = std::conj(s.up[sub]);
        }
        if (c + 2 < n) {
            h(c, c + 2) = s.step[sub];
            h(c + 2, c) = std::conj(s.step[sub]);
        }
    }
    return h;
}

/// Analytic derivatives of slab_bloch with respect to (k_par, k_z).
inline void slab_bloch_derivs(const SlabSpec& spec, double k_par, double k_z,
                              MatrixXcd& dh_par, MatrixXcd& dh_z) {
    const ModelParams p = (spec.cut == SlabCut::par)
                              ? detail::par_cut_params(spec.params)
                              : spec.params;
    const auto s = detail::slab_terms(p, k_par, k_z);
    const int n = spec.n_sites;
    const int first = static_cast<int>(spec.termination);
    const complexd I(0.0, 1.0);
    const double s2 = std::numbers::sqrt2;

    dh_par = MatrixXcd::Zero(n, n);
    dh_z = MatrixXcd::Zero(n, n);
    for (int c = 0; c < n; ++c) {
        const int sub = (first + c) % 2;
        dh_par(c, c) = -I * s2 * (s.diag2[sub] - std::conj(s.diag2[sub]));
        dh_z(c, c) = -I * (s.vert[sub] - std::conj(s.vert[sub]));
        if (c + 1 < n) {
            dh_par(c, c + 1) = s.dup[sub];
            dh_par(c + 1, c) = std::conj(s.dup[sub]);
        }
    }
}

}  // namespace warc
