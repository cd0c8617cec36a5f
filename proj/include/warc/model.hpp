#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace warc {

using complexd = std::complex<double>;
using Eigen::Matrix2cd;
using Eigen::Matrix3d;
using Eigen::Vector3d;

inline constexpr double pi = std::numbers::pi;

/// Wrap an angle into [0, 2pi).
inline double wrap_phase(double p) {
    p = std::fmod(p, 2.0 * pi);
    if (p < 0.0) p += 2.0 * pi;
    if (p == 2.0 * pi) p = 0.0;
    return p;
}

/// Hopping parameters of the two-sublattice cubic lattice bath.
///
/// Bonds 1..4 are the in-plane nearest neighbours leaving an A site along
/// +x, -x, +y, -y; bonds 5 (A) and 6 (B) are the vertical links; bonds
/// 7..10 are the in-plane diagonals (+x+y, +x-y) leaving A resp. B sites.
/// Amplitudes are in units of J, phases in [0, 2pi). a = 1 throughout.
struct ModelParams {
    std::array<double, 10> t{};    // |t_1| .. |t_10|, all >= 0
    std::array<double, 10> phi{};  // arg t_1 .. arg t_10
    double m = 0.0;                // staggered mass (A: -m, B: +m)
    double eps = 0.0;              // bare on-site energy; equals the Weyl
                                   // frequency when the type-I flag holds

    /// Single-knob family used throughout: nearest neighbours J with the
    /// phase pattern (phi, pi/2, 0, 0 | 0, pi | 0, pi, pi, 0) and diagonal
    /// amplitude Jp.
    static ModelParams simplified(double J, double Jp, double mass, double varphi) {
        if (J < 0.0 || Jp < 0.0)
            throw std::invalid_argument("simplified: amplitudes must be >= 0");
        ModelParams p;
        p.t = {J, J, J, J, J, J, Jp, Jp, Jp, Jp};
        p.phi = {wrap_phase(varphi), pi / 2, 0.0, 0.0, 0.0, pi, 0.0, pi, pi, 0.0};
        p.m = mass;
        return p;
    }

    complexd hop(int i) const {  // i = 1..10
        return t[i - 1] * std::exp(complexd(0.0, phi[i - 1]));
    }

    void normalize_phases() {
        for (auto& p : phi) p = wrap_phase(p);
    }

    /// True iff the vertical/diagonal phase-and-amplitude pairing that pins
    /// d0(k) = eps holds (untitled Weyl cones, eps == omega_W).
    bool type_one(double tol = 1e-12) const {
        auto anti = [&](int a, int b) {
            double d = std::fabs(wrap_phase(phi[a - 1] - phi[b - 1]) - pi);
            return d < tol && std::fabs(t[a - 1] - t[b - 1]) < tol;
        };
        return anti(5, 6) && anti(7, 9) && anti(8, 10);
    }

    void validate() const {
        for (double a : t)
            if (!(a >= 0.0)) throw std::invalid_argument("ModelParams: amplitudes must be >= 0");
        for (double p : phi)
            if (!(p >= 0.0 && p < 2.0 * pi))
                throw std::invalid_argument("ModelParams: phases must lie in [0, 2pi)");
    }
};

/// d0 and the Pauli vector of the 2x2 bulk Bloch Hamiltonian.
struct BlochData {
    double d0 = 0.0;
    Vector3d d = Vector3d::Zero();
};

// Reciprocal vectors of the two-site cell (a1 = x+y, a2 = x-y, a3 = z).
inline Vector3d recip_b1() { return {pi, pi, 0.0}; }
inline Vector3d recip_b2() { return {pi, -pi, 0.0}; }
inline Vector3d recip_b3() { return {0.0, 0.0, 2.0 * pi}; }

inline BlochData d_vector(const ModelParams& p, const Vector3d& k) {
    const double kx = k[0], ky = k[1], kz = k[2];
    const double kp = kx + ky, km = kx - ky;
    const auto& t = p.t;
    const auto& f = p.phi;

    BlochData b;
    b.d[0] = -(t[0] * std::cos(kx + f[0]) + t[1] * std::cos(kx - f[1]) +
               t[2] * std::cos(ky + f[2]) + t[3] * std::cos(ky - f[3]));
    b.d[1] = t[0] * std::sin(kx + f[0]) - t[1] * std::sin(kx - f[1]) +
             t[2] * std::sin(ky + f[2]) - t[3] * std::sin(ky - f[3]);
    b.d[2] = -p.m - (t[4] * std::cos(kz + f[4]) - t[5] * std::cos(kz + f[5])) -
             (t[6] * std::cos(kp + f[6]) + t[7] * std::cos(km + f[7]) -
              t[8] * std::cos(kp + f[8]) - t[9] * std::cos(km + f[9]));
    b.d0 = p.eps - (t[4] * std::cos(kz + f[4]) + t[5] * std::cos(kz + f[5])) -
           (t[6] * std::cos(kp + f[6]) + t[7] * std::cos(km + f[7]) +
            t[8] * std::cos(kp + f[8]) + t[9] * std::cos(km + f[9]));
    return b;
}

/// Jacobian J_{i,alpha} = d d_i / d k_alpha (analytic).
inline Matrix3d d_jacobian(const ModelParams& p, const Vector3d& k) {
    const double kx = k[0], ky = k[1], kz = k[2];
    const double kp = kx + ky, km = kx - ky;
    const auto& t = p.t;
    const auto& f = p.phi;

    Matrix3d J;
    J(0, 0) = t[0] * std::sin(kx + f[0]) + t[1] * std::sin(kx - f[1]);
    J(0, 1) = t[2] * std::sin(ky + f[2]) + t[3] * std::sin(ky - f[3]);
    J(0, 2) = 0.0;
    J(1, 0) = t[0] * std::cos(kx + f[0]) - t[1] * std::cos(kx - f[1]);
    J(1, 1) = t[2] * std::cos(ky + f[2]) - t[3] * std::cos(ky - f[3]);
    J(1, 2) = 0.0;
    const double sp = t[6] * std::sin(kp + f[6]) - t[8] * std::sin(kp + f[8]);
    const double sm = t[7] * std::sin(km + f[7]) - t[9] * std::sin(km + f[9]);
    J(2, 0) = sp + sm;
    J(2, 1) = sp - sm;
    J(2, 2) = t[4] * std::sin(kz + f[4]) - t[5] * std::sin(kz + f[5]);
    return J;
}

/// Gradient of d0 (zero for type-I parameters up to the diagonal terms).
inline Vector3d d0_gradient(const ModelParams& p, const Vector3d& k) {
    const double kp = k[0] + k[1], km = k[0] - k[1];
    const auto& t = p.t;
    const auto& f = p.phi;
    const double sp = t[6] * std::sin(kp + f[6]) + t[8] * std::sin(kp + f[8]);
    const double sm = t[7] * std::sin(km + f[7]) + t[9] * std::sin(km + f[9]);
    Vector3d g;
    g[0] = sp + sm;
    g[1] = sp - sm;
    g[2] = t[4] * std::sin(k[2] + f[4]) + t[5] * std::sin(k[2] + f[5]);
    return g;
}

/// 2x2 bulk Bloch Hamiltonian d0*Id + d.sigma (basis: A, B).
inline Matrix2cd bloch_bulk(const ModelParams& p, const Vector3d& k) {
    const BlochData b = d_vector(p, k);
    Matrix2cd h;
    h(0, 0) = complexd(b.d0 + b.d[2], 0.0);
    h(1, 1) = complexd(b.d0 - b.d[2], 0.0);
    h(0, 1) = complexd(b.d[0], -b.d[1]);
    h(1, 0) = complexd(b.d[0], b.d[1]);
    return h;
}

// --- Brillouin-zone folding ------------------------------------------------
//
// Canonical cell: |kx| + |ky| <= pi, |kz| <= pi. Boundary ties resolve
// toward non-negative kx, then non-negative ky, then non-negative kz, so
// nodes sitting exactly on the zone boundary deduplicate deterministically.

namespace detail {
inline double wrap_half(double s) {  // into [-1/2, 1/2)
    s -= std::floor(s + 0.5);
    if (s >= 0.5) s -= 1.0;  // guards the floor rounding edge
    return s;
}
}  // namespace detail

inline Vector3d fold_to_bz(const Vector3d& k, double boundary_tol = 1e-9) {
    double s1 = detail::wrap_half((k[0] + k[1]) / (2.0 * pi));
    double s2 = detail::wrap_half((k[0] - k[1]) / (2.0 * pi));
    double s3 = detail::wrap_half(k[2] / (2.0 * pi));

    const double bt = boundary_tol / (2.0 * pi);
    // Candidates differ only when a coordinate sits at the -1/2 edge.
    std::array<double, 2> c1{s1, s1}, c2{s2, s2}, c3{s3, s3};
    if (s1 < -0.5 + bt) c1[1] = s1 + 1.0;
    if (s2 < -0.5 + bt) c2[1] = s2 + 1.0;
    if (s3 < -0.5 + bt) c3[1] = s3 + 1.0;

    Vector3d best;
    bool have = false;
    for (double a : {c1[0], c1[1]})
        for (double b : {c2[0], c2[1]})
            for (double c : {c3[0], c3[1]}) {
                Vector3d cand(pi * (a + b), pi * (a - b), 2.0 * pi * c);
                if (!have) {
                    best = cand;
                    have = true;
                    continue;
                }
                // prefer kx >= 0, then ky >= 0, then kz >= 0
                for (int i = 0; i < 3; ++i) {
                    if (cand[i] > best[i] + bt * 2.0 * pi) {
                        best = cand;
                        break;
                    }
                    if (cand[i] < best[i] - bt * 2.0 * pi) break;
                }
            }
    return best;
}

/// Distance on the reciprocal-space torus.
inline double torus_distance(const Vector3d& k1, const Vector3d& k2) {
    const Vector3d dk = k1 - k2;
    const double s1 = detail::wrap_half((dk[0] + dk[1]) / (2.0 * pi));
    const double s2 = detail::wrap_half((dk[0] - dk[1]) / (2.0 * pi));
    const double s3 = detail::wrap_half(dk[2] / (2.0 * pi));
    return Vector3d(pi * (s1 + s2), pi * (s1 - s2), 2.0 * pi * s3).norm();
}

inline bool on_bz_boundary(const Vector3d& k, double tol) {
    return std::fabs(std::fabs(k[0]) + std::fabs(k[1]) - pi) < tol ||
           std::fabs(std::fabs(k[2]) - pi) < tol;
}

/// Surface momentum of the diagonal cut: k_par conjugate to sqrt(2) steps
/// along e_par = (x+y)/sqrt(2), k_z conjugate to unit steps along z.
struct SurfaceK {
    double par = 0.0;
    double z = 0.0;
};

inline constexpr double surface_bz_par() { return pi / std::numbers::sqrt2; }

/// Projection of a bulk momentum onto the surface Brillouin zone.
inline SurfaceK project_to_surface(const Vector3d& k) {
    double kpar = (k[0] + k[1]) / std::numbers::sqrt2;
    const double period = 2.0 * surface_bz_par();
    kpar -= period * std::floor(kpar / period + 0.5);
    double kz = detail::wrap_half(k[2] / (2.0 * pi)) * 2.0 * pi;
    return {kpar, kz};
}

}  // namespace warc
