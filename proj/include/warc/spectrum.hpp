#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "warc/model.hpp"
#include "warc/slab.hpp"

namespace warc {

using Eigen::MatrixXd;
using Eigen::MatrixXcd;
using Eigen::VectorXd;
using Eigen::VectorXcd;

struct NearDegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GaplessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OnBoundaryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rotate each eigenvector so its largest-magnitude component is real and
/// positive. Keeps repeated diagonalizations of identical input bitwise
/// comparable.
inline void gauge_fix(MatrixXcd& U) {
    for (int n = 0; n < U.cols(); ++n) {
        int imax = 0;
        double amax = -1.0;
        for (int i = 0; i < U.rows(); ++i) {
            const double a = std::norm(U(i, n));
            if (a > amax + 1e-15) {
                amax = a;
                imax = i;
            }
        }
        const complexd u = U(imax, n);
        const double mag = std::abs(u);
        if (mag > 0.0) U.col(n) *= std::conj(u) / mag;
    }
}

/// Energies (ascending) and gauge-fixed eigenvectors of a Hermitian matrix.
struct EigenDecomposition {
    VectorXd energies;
    MatrixXcd vectors;  // columns
};

inline EigenDecomposition eigh(const MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigh: diagonalization failed");
    EigenDecomposition d{es.eigenvalues(), es.eigenvectors()};
    gauge_fix(d.vectors);
    return d;
}

struct BandStructure {
    std::vector<Vector3d> bulk_ks;
    std::vector<SurfaceK> surface_ks;
    MatrixXd energies;  // row per k, ascending bands
    int bands() const { return static_cast<int>(energies.cols()); }
};

inline BandStructure bulk_band_structure(const ModelParams& p, const std::vector<Vector3d>& ks) {
    if (ks.empty()) throw std::invalid_argument("band_structure: empty grid");
    BandStructure bs;
    bs.bulk_ks = ks;
    bs.energies.resize(static_cast<Eigen::Index>(ks.size()), 2);
    for (size_t i = 0; i < ks.size(); ++i) {
        const BlochData b = d_vector(p, ks[i]);
        const double r = b.d.norm();
        bs.energies(static_cast<Eigen::Index>(i), 0) = b.d0 - r;
        bs.energies(static_cast<Eigen::Index>(i), 1) = b.d0 + r;
    }
    return bs;
}

inline BandStructure slab_band_structure(const SlabSpec& spec, const std::vector<SurfaceK>& ks) {
    if (ks.empty()) throw std::invalid_argument("band_structure: empty grid");
    BandStructure bs;
    bs.surface_ks = ks;
    bs.energies.resize(static_cast<Eigen::Index>(ks.size()), spec.n_sites);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es;
    for (size_t i = 0; i < ks.size(); ++i) {
        es.compute(slab_bloch(spec, ks[i].par, ks[i].z), Eigen::EigenvaluesOnly);
        bs.energies.row(static_cast<Eigen::Index>(i)) = es.eigenvalues().transpose();
    }
    return bs;
}

/// Uniform inclusive grid over the surface Brillouin zone.
inline std::vector<SurfaceK> surface_grid(int n_par, int n_z) {
    std::vector<SurfaceK> ks;
    ks.reserve(static_cast<size_t>(n_par) * n_z);
    const double kp = surface_bz_par();
    for (int i = 0; i < n_par; ++i)
        for (int j = 0; j < n_z; ++j)
            ks.push_back({-kp + 2.0 * kp * i / (n_par - 1), -pi + 2.0 * pi * j / (n_z - 1)});
    return ks;
}

}  // namespace warc
