#pragma once

#include <vector>

#include "warc/dynamics.hpp"
#include "warc/spectrum.hpp"

namespace warc {

// --- column view of the rotated-block lattices ----------------------------

/// Regular column decomposition of a rotated block: columns (fixed c) each
/// hold an n_par x n_z rectangle of sites.
struct ColumnGrid {
    int n_cols = 0, n_par = 0, n_z = 0;
    std::vector<int> d0;                 // smallest d per column
    std::vector<std::vector<int>> site;  // [col][j * n_z + l] -> site id
    int c_first = 0;
    Sublattice termination = Sublattice::A;
};

inline ColumnGrid column_grid(const FiniteLattice& lat) {
    ColumnGrid g;
    g.c_first = lat.cmin;
    g.n_cols = lat.cmax - lat.cmin + 1;
    g.n_z = lat.zmax - lat.zmin + 1;
    std::vector<std::vector<std::pair<int, int>>> cols(g.n_cols);  // (d, z) -> later
    g.d0.assign(g.n_cols, 1 << 28);
    for (int i = 0; i < lat.size(); ++i) {
        const Site& s = lat.sites[i];
        const int ci = s.c() - lat.cmin;
        g.d0[ci] = std::min(g.d0[ci], s.d());
    }
    g.n_par = 0;
    g.site.assign(g.n_cols, {});
    for (int ci = 0; ci < g.n_cols; ++ci) g.site[ci].clear();
    // count columns' pars
    std::vector<int> npar(g.n_cols, 0);
    for (const Site& s : lat.sites) {
        const int ci = s.c() - lat.cmin;
        npar[ci] = std::max(npar[ci], (s.d() - g.d0[ci]) / 2 + 1);
    }
    g.n_par = npar.empty() ? 0 : npar[0];
    for (int ci = 0; ci < g.n_cols; ++ci) {
        if (npar[ci] != g.n_par)
            throw std::invalid_argument("column_grid: lattice is not a regular rotated block");
        g.site[ci].assign(static_cast<size_t>(g.n_par) * g.n_z, -1);
    }
    for (int i = 0; i < lat.size(); ++i) {
        const Site& s = lat.sites[i];
        const int ci = s.c() - lat.cmin;
        const int j = (s.d() - g.d0[ci]) / 2;
        const int l = s.z - lat.zmin;
        if ((s.d() - g.d0[ci]) % 2 != 0 || j < 0 || j >= g.n_par || l < 0 || l >= g.n_z)
            throw std::invalid_argument("column_grid: lattice is not a regular rotated block");
        g.site[ci][static_cast<size_t>(j) * g.n_z + l] = i;
    }
    for (const auto& col : g.site)
        for (int id : col)
            if (id < 0) throw std::invalid_argument("column_grid: holes in the site grid");
    g.termination =
        ((lat.cmin % 2 + 2) % 2 == 0) ? Sublattice::A : Sublattice::B;
    return g;
}

/// Per-column discrete transform W_c(k_par, k_z) = sum_r C_r e^{-i k.r}
/// over the column's sites (full positions, z measured from the lattice
/// minimum). Separable in the two directions.
inline std::vector<MatrixXcd> column_transform(const FiniteLattice& lat, const ColumnGrid& g,
                                               Eigen::Ref<const VectorXcd> site_amps,
                                               const std::vector<double>& k_par,
                                               const std::vector<double>& k_z) {
    const int np = static_cast<int>(k_par.size());
    const int nz = static_cast<int>(k_z.size());
    const complexd mi(0.0, -1.0);
    const double s2 = std::numbers::sqrt2;
    std::vector<MatrixXcd> W(g.n_cols);
    MatrixXcd zpass(g.n_par, nz);
    for (int ci = 0; ci < g.n_cols; ++ci) {
        zpass.setZero();
        for (int j = 0; j < g.n_par; ++j)
            for (int l = 0; l < g.n_z; ++l) {
                const complexd a = site_amps[g.site[ci][static_cast<size_t>(j) * g.n_z + l]];
                if (a == complexd(0.0, 0.0)) continue;
                for (int q = 0; q < nz; ++q)
                    zpass(j, q) += a * std::exp(mi * k_z[q] * static_cast<double>(l + lat.zmin));
            }
        W[ci].setZero(np, nz);
        for (int p = 0; p < np; ++p)
            for (int j = 0; j < g.n_par; ++j) {
                const double rpar = (g.d0[ci] + 2.0 * j) / s2;
                const complexd ph = std::exp(mi * k_par[p] * rpar);
                W[ci].row(p) += ph * zpass.row(j);
            }
    }
    return W;
}

// --- Bloch-mode populations ------------------------------------------------

struct BlochPopulation {
    int n_par = 0, n_z = 0, bands = 0;
    std::vector<double> k_par, k_z;        // commensurate grid (one zone period)
    std::vector<Eigen::MatrixXd> pop;      // per band: |C_nk|^2, n_par x n_z
    std::vector<Eigen::MatrixXd> energy;   // E_n(k)
    double source_time = 0.0;

    double total() const {
        double s = 0.0;
        for (const auto& m : pop) s += m.sum();
        return s;
    }
};

/// Project a real-space photonic snapshot onto the Bloch modes of the
/// matching slab: C_nk = [U(k)^dag V(k)]_n on the commensurate momentum
/// grid of the block.
inline BlochPopulation bloch_map(const FiniteLattice& lat, Eigen::Ref<const VectorXcd> site_amps,
                                 double source_time = 0.0) {
    const ColumnGrid g = column_grid(lat);
    BlochPopulation out;
    out.n_par = g.n_par;
    out.n_z = g.n_z;
    out.bands = g.n_cols;
    out.source_time = source_time;
    const double s2 = std::numbers::sqrt2;
    for (int p = 0; p < g.n_par; ++p) out.k_par.push_back(2.0 * pi * p / (s2 * g.n_par));
    for (int q = 0; q < g.n_z; ++q) out.k_z.push_back(2.0 * pi * q / g.n_z);

    const auto W = column_transform(lat, g, site_amps, out.k_par, out.k_z);
    const double cell_norm = 1.0 / std::sqrt(static_cast<double>(g.n_par) * g.n_z);

    SlabSpec spec{g.n_cols, SlabCut::perp, g.termination, lat.params};
    out.pop.assign(out.bands, Eigen::MatrixXd::Zero(g.n_par, g.n_z));
    out.energy.assign(out.bands, Eigen::MatrixXd::Zero(g.n_par, g.n_z));

    VectorXcd V(g.n_cols);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es;
    for (int p = 0; p < g.n_par; ++p)
        for (int q = 0; q < g.n_z; ++q) {
            for (int ci = 0; ci < g.n_cols; ++ci) V[ci] = cell_norm * W[ci](p, q);
            es.compute(slab_bloch(spec, out.k_par[p], out.k_z[q]));
            const VectorXcd c = es.eigenvectors().adjoint() * V;
            for (int n = 0; n < out.bands; ++n) {
                out.pop[n](p, q) = std::norm(c[n]);
                out.energy[n](p, q) = es.eigenvalues()[n];
            }
        }
    return out;
}

// --- time-of-flight momentum distribution ----------------------------------

struct MomentumDistribution {
    std::vector<double> k_par, k_perp, k_z;
    std::vector<double> n;  // [par][perp][z], par-major
    double at(int p, int o, int q) const {
        return n[(static_cast<size_t>(p) * k_perp.size() + o) * k_z.size() + q];
    }
};

/// n(k) = |sum_r C_r e^{-i k.r}|^2 on a product grid in rotated momentum
/// coordinates (emitter amplitudes excluded by construction).
inline MomentumDistribution momentum_distribution(const FiniteLattice& lat,
                                                  Eigen::Ref<const VectorXcd> site_amps,
                                                  const std::vector<double>& k_par,
                                                  const std::vector<double>& k_perp,
                                                  const std::vector<double>& k_z) {
    MomentumDistribution md;
    md.k_par = k_par;
    md.k_perp = k_perp;
    md.k_z = k_z;
    md.n.assign(k_par.size() * k_perp.size() * k_z.size(), 0.0);
    const complexd mi(0.0, -1.0);
    const double s2 = std::numbers::sqrt2;

    const ColumnGrid g = column_grid(lat);
    const auto W = column_transform(lat, g, site_amps, k_par, k_z);
    for (size_t o = 0; o < k_perp.size(); ++o) {
        std::vector<complexd> ph(g.n_cols);
        for (int ci = 0; ci < g.n_cols; ++ci)
            ph[ci] = std::exp(mi * k_perp[o] * (g.c_first + ci) / s2);
        for (size_t p = 0; p < k_par.size(); ++p)
            for (size_t q = 0; q < k_z.size(); ++q) {
                complexd f = 0.0;
                for (int ci = 0; ci < g.n_cols; ++ci) f += ph[ci] * W[ci](p, q);
                md.n[(p * k_perp.size() + o) * k_z.size() + q] = std::norm(f);
            }
    }
    return md;
}

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

struct Map2D {
    std::vector<double> u, v;
    Eigen::MatrixXd val;
};

enum class KAxis { par, perp, z };

/// Trapezoidal integral of n(k) along one momentum axis. The remaining two
/// axes keep their (par, perp, z) order in the output (u, v).
inline Map2D column_integrate(const MomentumDistribution& md, KAxis axis) {
    const auto& ax = axis == KAxis::par ? md.k_par : (axis == KAxis::perp ? md.k_perp : md.k_z);
    if (ax.size() < 2) throw std::invalid_argument("column_integrate: axis too short");
    Map2D out;
    out.u = axis == KAxis::par ? md.k_perp : md.k_par;
    out.v = axis == KAxis::z ? md.k_perp : md.k_z;
    auto value = [&](size_t iu, size_t iv, size_t ia) {
        int p, o, q;
        switch (axis) {
            case KAxis::par: p = static_cast<int>(ia), o = static_cast<int>(iu),
                             q = static_cast<int>(iv); break;
            case KAxis::perp: p = static_cast<int>(iu), o = static_cast<int>(ia),
                              q = static_cast<int>(iv); break;
            default: p = static_cast<int>(iu), o = static_cast<int>(iv),
                     q = static_cast<int>(ia); break;
        }
        return md.at(p, o, q);
    };
    out.val = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.u.size()),
                                    static_cast<Eigen::Index>(out.v.size()));
    for (size_t iu = 0; iu < out.u.size(); ++iu)
        for (size_t iv = 0; iv < out.v.size(); ++iv) {
            double acc = 0.0;
            for (size_t ia = 0; ia + 1 < ax.size(); ++ia)
                acc += 0.5 * (value(iu, iv, ia) + value(iu, iv, ia + 1)) * (ax[ia + 1] - ax[ia]);
            out.val(static_cast<Eigen::Index>(iu), static_cast<Eigen::Index>(iv)) = acc;
        }
    return out;
}

/// Plancherel check of the discrete transform: mean of n(k) over the full
/// commensurate cubic grid vs the total photonic population. Returns
/// (mean n, sum |C_r|^2).
inline std::pair<double, double> tof_plancherel(const FiniteLattice& lat,
                                                Eigen::Ref<const VectorXcd> site_amps) {
    int xmin = 1 << 28, xmax = -(1 << 28), ymin = 1 << 28, ymax = -(1 << 28);
    for (const Site& s : lat.sites) {
        xmin = std::min(xmin, s.x);
        xmax = std::max(xmax, s.x);
        ymin = std::min(ymin, s.y);
        ymax = std::max(ymax, s.y);
    }
    const int Lx = xmax - xmin + 1, Ly = ymax - ymin + 1, Lz = lat.zmax - lat.zmin + 1;
    std::vector<complexd> box(static_cast<size_t>(Lx) * Ly * Lz, complexd(0.0, 0.0));
    for (int i = 0; i < lat.size(); ++i) {
        const Site& s = lat.sites[i];
        box[(static_cast<size_t>(s.x - xmin) * Ly + (s.y - ymin)) * Lz + (s.z - lat.zmin)] =
            site_amps[i];
    }
    const complexd mi(0.0, -1.0);
    // separable DFT passes along x, y, z
    auto pass = [&](int len, size_t stride, size_t count, size_t block) {
        std::vector<complexd> tmp(len);
        std::vector<complexd> w(static_cast<size_t>(len) * len);
        for (int p = 0; p < len; ++p)
            for (int x = 0; x < len; ++x)
                w[static_cast<size_t>(p) * len + x] = std::exp(mi * (2.0 * pi * p * x / len));
        for (size_t c = 0; c < count; ++c)
            for (size_t b = 0; b < block; ++b) {
                complexd* base = box.data() + c * stride * len + b;
                for (int p = 0; p < len; ++p) {
                    complexd acc = 0.0;
                    const complexd* wrow = w.data() + static_cast<size_t>(p) * len;
                    for (int x = 0; x < len; ++x) acc += wrow[x] * base[x * stride];
                    tmp[p] = acc;
                }
                for (int p = 0; p < len; ++p) base[p * stride] = tmp[p];
            }
    };
    pass(Lz, 1, static_cast<size_t>(Lx) * Ly, 1);
    pass(Ly, Lz, Lx, Lz);
    pass(Lx, static_cast<size_t>(Ly) * Lz, 1, static_cast<size_t>(Ly) * Lz);
    double mean = 0.0;
    for (const complexd& f : box) mean += std::norm(f);
    mean /= static_cast<double>(box.size());
    return {mean, site_amps.squaredNorm()};
}

// --- far field --------------------------------------------------------------

/// Dipole orientation and angular grid for the emitted far field. The
/// dipole is given in the (e_perp, e_par, e_z) frame.
struct FarFieldSpec {
    Vector3d dipole{0.0, 0.0, 1.0};
    double lambda0 = 1.0;
    int n_theta = 61;
    int n_phi = 121;
};

struct AngularMap {
    std::vector<double> theta, phi;
    Eigen::MatrixXd f;  // n_theta x n_phi
};

/// Normalized far-field form factor of the emitter array,
/// f = [1 - (R.d)^2] |sum_j C_j e^{-i k0 R.r_j}|^2 with
/// R = (cos t cos p, cos t sin p, sin t) in the (e_perp, e_par, e_z) frame.
inline AngularMap far_field(const std::vector<Site>& emitter_sites,
                            Eigen::Ref<const VectorXcd> emitter_amps, const FarFieldSpec& spec) {
    if (emitter_sites.empty()) throw std::invalid_argument("far_field: no emitters");
    if (emitter_sites.size() != static_cast<size_t>(emitter_amps.size()))
        throw std::invalid_argument("far_field: size mismatch");
    if (spec.lambda0 <= 0.0) throw std::invalid_argument("far_field: lambda0 must be > 0");
    const double k0 = 2.0 * pi / spec.lambda0;
    const Vector3d dip = spec.dipole.normalized();
    AngularMap out;
    out.theta = uniform_grid(-pi / 2.0, pi / 2.0, spec.n_theta);
    out.phi = uniform_grid(-pi, pi, spec.n_phi);
    out.f.resize(spec.n_theta, spec.n_phi);
    const complexd mi(0.0, -1.0);
    const double s2 = std::numbers::sqrt2;
    for (int it = 0; it < spec.n_theta; ++it)
        for (int ip = 0; ip < spec.n_phi; ++ip) {
            const double th = out.theta[it], ph = out.phi[ip];
            const Vector3d R(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph),
                             std::sin(th));
            complexd sum = 0.0;
            for (size_t j = 0; j < emitter_sites.size(); ++j) {
                const Site& s = emitter_sites[j];
                const double rr = R[0] * s.c() / s2 + R[1] * s.d() / s2 + R[2] * s.z;
                sum += emitter_amps[static_cast<Eigen::Index>(j)] * std::exp(mi * k0 * rr);
            }
            const double pol = 1.0 - std::pow(R.dot(dip), 2);
            out.f(it, ip) = pol * std::norm(sum);
        }
    return out;
}

// --- coherent-exchange frequency -------------------------------------------

struct J12Estimate {
    double j12 = 0.0;         // primary (peak-time) estimate
    double j12_peak = 0.0;    // pi / (2 t_max)
    double j12_fourier = 0.0; // half the dominant oscillation frequency of |C1|^2
    double t_max = 0.0;
    bool ambiguous = false;
};

/// Exchange frequency from a two-emitter trajectory: first maximum of the
/// smoothed |C2|^2, cross-checked against the Fourier peak of |C1|^2 - 1/2.
inline J12Estimate extract_j12(const std::vector<double>& times,
                               const std::vector<double>& pop1, const std::vector<double>& pop2,
                               double smooth_window = 3.0) {
    const size_t n = times.size();
    if (n < 8 || pop1.size() != n || pop2.size() != n)
        throw std::invalid_argument("extract_j12: need a sampled two-emitter trajectory");
    const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
    const int hw = std::max(0, static_cast<int>(std::lround(0.5 * smooth_window / dt)));
    std::vector<double> sm(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t lo = i > static_cast<size_t>(hw) ? i - hw : 0;
        const size_t hi = std::min(n - 1, i + hw);
        double acc = 0.0;
        for (size_t j = lo; j <= hi; ++j) acc += pop2[j];
        sm[i] = acc / static_cast<double>(hi - lo + 1);
    }
    const double peak_floor = 0.3 * *std::max_element(sm.begin(), sm.end());
    size_t imax = 0;
    for (size_t i = 1; i + 1 < n; ++i)
        if (sm[i] >= sm[i - 1] && sm[i] >= sm[i + 1] && sm[i] > sm[i + 1] + 0.0 &&
            sm[i] >= peak_floor) {
            imax = i;
            break;
        }
    if (imax == 0) {
        // fall back to a plateau-tolerant scan
        for (size_t i = 1; i + 1 < n; ++i)
            if (sm[i] >= peak_floor && sm[i] >= sm[i - 1] && sm[i] >= sm[i + 1]) {
                imax = i;
                break;
            }
    }
    if (imax == 0) throw std::runtime_error("extract_j12: no exchange maximum in the horizon");

    J12Estimate est;
    est.t_max = times[imax];
    est.j12_peak = pi / (2.0 * est.t_max);

    // discrete Fourier transform of pop1 - 1/2, dominant non-DC peak
    const double T = times.back() - times.front();
    const size_t nbins = n / 2;
    double best_mag = -1.0;
    size_t best_m = 1;
    std::vector<double> mag(nbins, 0.0);
    for (size_t m = 1; m < nbins; ++m) {
        complexd acc = 0.0;
        const double w = 2.0 * pi * static_cast<double>(m) / T;
        for (size_t i = 0; i < n; ++i)
            acc += (pop1[i] - 0.5) * std::exp(complexd(0.0, -w * times[i]));
        mag[m] = std::abs(acc);
        if (mag[m] > best_mag) {
            best_mag = mag[m];
            best_m = m;
        }
    }
    double m_refined = static_cast<double>(best_m);
    if (best_m + 1 < nbins && best_m >= 2) {
        const double a = mag[best_m - 1], b = mag[best_m], c = mag[best_m + 1];
        const double den = a - 2.0 * b + c;
        if (std::fabs(den) > 1e-300) m_refined += 0.5 * (a - c) / den;
    }
    est.j12_fourier = pi * m_refined / T;  // omega/2
    est.ambiguous =
        std::fabs(est.j12_peak - est.j12_fourier) > 0.05 * std::max(est.j12_peak, est.j12_fourier);
    est.j12 = est.j12_peak;
    return est;
}

}  // namespace warc
