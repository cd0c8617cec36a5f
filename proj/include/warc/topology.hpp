#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "warc/spectrum.hpp"

namespace warc {

enum class Band : int { lower = -1, upper = +1 };

inline constexpr double degeneracy_tol = 1e-8;

// --- Berry curvature ---------------------------------------------------

/// Two-band closed form: Omega^n_{mu nu} = -(sign) d.(d_mu d x d_nu d)/2|d|^3,
/// returned as the axial vector (Omega_yz, Omega_zx, Omega_xy).
inline Vector3d berry_curvature_bulk(const ModelParams& p, const Vector3d& k, Band band) {
    const BlochData b = d_vector(p, k);
    const double r = b.d.norm();
    if (r < degeneracy_tol)
        throw NearDegeneracyError("berry_curvature_bulk: |d| ~ 0 (Weyl node)");
    const Matrix3d J = d_jacobian(p, k);
    const double s = band == Band::upper ? -1.0 : 1.0;
    Vector3d omega;
    omega[0] = s * b.d.dot(J.col(1).cross(J.col(2))) / (2.0 * r * r * r);
    omega[1] = s * b.d.dot(J.col(2).cross(J.col(0))) / (2.0 * r * r * r);
    omega[2] = s * b.d.dot(J.col(0).cross(J.col(1))) / (2.0 * r * r * r);
    return omega;
}

/// Omega^n_{ab} from the sum over bands, given the eigensystem and the two
/// analytic derivative matrices.
inline double curvature_sum_over_bands(const EigenDecomposition& e, int n, const MatrixXcd& dHa,
                                       const MatrixXcd& dHb) {
    const int nb = static_cast<int>(e.energies.size());
    const VectorXcd va = dHa * e.vectors.col(n);
    const VectorXcd vb = dHb * e.vectors.col(n);
    const VectorXcd a = e.vectors.adjoint() * va;  // <n'|dHa|n>
    const VectorXcd b = e.vectors.adjoint() * vb;  // <n'|dHb|n>
    double omega = 0.0;
    for (int m = 0; m < nb; ++m) {
        if (m == n) continue;
        const double de = e.energies[n] - e.energies[m];
        if (std::fabs(de) < degeneracy_tol)
            throw NearDegeneracyError("berry curvature: degenerate bands");
        // A_{nm} B_{mn} = conj(a_m) b_m
        omega += -2.0 * std::imag(std::conj(a[m]) * b[m]) / (de * de);
    }
    return omega;
}

/// Bulk curvature vector via the general sum-over-bands route (cross-check
/// of the closed form).
inline Vector3d berry_curvature_bulk_general(const ModelParams& p, const Vector3d& k, Band band) {
    const Matrix3d J = d_jacobian(p, k);
    const Vector3d g0 = d0_gradient(p, k);
    auto dH = [&](int mu) {
        Matrix2cd h;
        h(0, 0) = complexd(g0[mu] + J(2, mu), 0.0);
        h(1, 1) = complexd(g0[mu] - J(2, mu), 0.0);
        h(0, 1) = complexd(J(0, mu), -J(1, mu));
        h(1, 0) = complexd(J(0, mu), J(1, mu));
        return h;
    };
    const EigenDecomposition e = eigh(bloch_bulk(p, k));
    const int n = band == Band::lower ? 0 : 1;
    const MatrixXcd hx = dH(0), hy = dH(1), hz = dH(2);
    return {curvature_sum_over_bands(e, n, hy, hz), curvature_sum_over_bands(e, n, hz, hx),
            curvature_sum_over_bands(e, n, hx, hy)};
}

/// Surface Berry curvature Omega^n_{par z} of slab band n.
inline double berry_curvature_surface(const SlabSpec& spec, double k_par, double k_z, int n) {
    if (n < 0 || n >= spec.n_sites)
        throw std::invalid_argument("berry_curvature_surface: band index out of range");
    MatrixXcd dpar, dz;
    slab_bloch_derivs(spec, k_par, k_z, dpar, dz);
    const EigenDecomposition e = eigh(slab_bloch(spec, k_par, k_z));
    return curvature_sum_over_bands(e, n, dpar, dz);
}

/// Flux of the band's curvature through the surface of an axis-aligned box
/// of half-width r (midpoint quadrature, n x n per face).
inline double berry_flux_box(const ModelParams& p, const Vector3d& center, double r, Band band,
                             int n = 32) {
    double flux = 0.0;
    const double h = 2.0 * r / n;
    for (int axis = 0; axis < 3; ++axis)
        for (int side = -1; side <= 1; side += 2) {
            const int u = (axis + 1) % 3, v = (axis + 2) % 3;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    Vector3d k = center;
                    k[axis] += side * r;
                    k[u] += -r + (i + 0.5) * h;
                    k[v] += -r + (j + 0.5) * h;
                    flux += side * berry_curvature_bulk(p, k, band)[axis] * h * h;
                }
        }
    return flux;
}

// --- Chern numbers (dimensional reduction) -------------------------------

/// Closed-form lower-band Chern number of the phi = 0 simplified model at
/// fixed k_z.
inline int chern_closed_form(double J, double Jp, double m, double k_z) {
    auto sgn = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
    const double a = -m - 2.0 * J * std::cos(k_z);
    return static_cast<int>(std::lround(
        0.5 * (sgn(a + 2.0 * std::numbers::sqrt2 * Jp) - sgn(a - 2.0 * std::numbers::sqrt2 * Jp))));
}

namespace detail {
/// Lower-band eigenvector of d.sigma, branch chosen away from the pole.
inline Eigen::Vector2cd lower_eigenvector(const Vector3d& d) {
    const double r = d.norm();
    Eigen::Vector2cd u;
    if (d[2] >= 0.0) {
        u << complexd(-d[0], d[1]), complexd(d[2] + r, 0.0);
    } else {
        u << complexd(d[2] - r, 0.0), complexd(d[0], d[1]);
    }
    u.normalize();
    return u;
}
}  // namespace detail

/// Integer lower-band Chern number at fixed k_z by plaquette (lattice
/// field-strength) integration over the 2D zone. Orientation follows
/// (k_x, k_y).
inline int chern_reduced(const ModelParams& p, double k_z, int grid = 101,
                         double gap_tol = 1e-6) {
    const int N = grid;
    std::vector<Eigen::Vector2cd> u(static_cast<size_t>(N) * N);
    double min_gap = 1e300;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const double s1 = static_cast<double>(i) / N, s2 = static_cast<double>(j) / N;
            const Vector3d k(pi * (s1 + s2), pi * (s1 - s2), k_z);
            const Vector3d d = d_vector(p, k).d;
            min_gap = std::min(min_gap, d.norm());
            u[static_cast<size_t>(i) * N + j] = detail::lower_eigenvector(d);
        }
    if (min_gap < gap_tol) throw GaplessError("chern_reduced: 2D spectrum gapless at this k_z");

    auto at = [&](int i, int j) -> const Eigen::Vector2cd& {
        return u[static_cast<size_t>((i % N + N) % N) * N + ((j % N + N) % N)];
    };
    double sum = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const complexd u1 = at(i, j).dot(at(i + 1, j));
            const complexd u2 = at(i + 1, j).dot(at(i + 1, j + 1));
            const complexd u3 = at(i + 1, j + 1).dot(at(i, j + 1));
            const complexd u4 = at(i, j + 1).dot(at(i, j));
            sum += std::arg(u1 * u2 * u3 * u4);
        }
    // (s1, s2) -> (k_x, k_y) reverses orientation
    const double c = -sum / (2.0 * pi);
    const int ci = static_cast<int>(std::lround(c));
    if (std::fabs(c - ci) > 1e-6)
        throw std::runtime_error("chern_reduced: field strength sum not integral");
    return ci;
}

// --- Weyl nodes ----------------------------------------------------------

struct WeylNode {
    Vector3d k = Vector3d::Zero();  // folded into the canonical zone
    int chirality = 0;              // lower-band Berry flux / 2pi
    double frequency = 0.0;         // d0 at the node
    Matrix3d quadratic_form = Matrix3d::Zero();  // Mbar of the local cone
};

struct WeylSearchResult {
    std::vector<WeylNode> nodes;
    std::vector<std::string> warnings;
};

/// Chirality of an isolated node by Berry-flux quadrature around it.
inline int weyl_charge(const ModelParams& p, const Vector3d& k_node, double radius = 0.08,
                       int quad = 32) {
    const double flux = berry_flux_box(p, k_node, radius, Band::lower, quad) / (2.0 * pi);
    const int q = static_cast<int>(std::lround(flux));
    if (std::fabs(flux - q) >= 0.1)
        throw std::runtime_error("weyl_charge: flux not quantized (radius too large?)");
    if (q == 0) throw std::runtime_error("weyl_charge: zero flux, not a Weyl node");
    return q;
}

namespace detail {

inline bool newton_refine_node(const ModelParams& p, Vector3d& k, double tol, int max_iter = 80) {
    double f = d_vector(p, k).d.norm();
    for (int it = 0; it < max_iter; ++it) {
        if (f < tol) return true;
        const Vector3d d = d_vector(p, k).d;
        const Matrix3d J = d_jacobian(p, k);
        Vector3d step;
        const double det = std::fabs(J.determinant());
        if (det > 1e-12) {
            step = J.partialPivLu().solve(d);
        } else {
            const Vector3d g = J.transpose() * d;  // grad |d|^2 / 2
            const double gn2 = g.squaredNorm();
            if (gn2 < 1e-30) return false;
            step = (d.squaredNorm() / gn2) * g;
        }
        double scale = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 12; ++bt) {
            const Vector3d kn = k - scale * step;
            const double fn = d_vector(p, kn).d.norm();
            if (fn < f) {
                k = kn;
                f = fn;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!moved) return f < tol;
    }
    return f < tol;
}

}  // namespace detail

/// All distinct roots of |d(k)| = 0 in the canonical zone, seeded from the
/// local minima of |d| on a uniform grid and refined by damped Newton.
inline WeylSearchResult find_weyl_points(const ModelParams& p, double tol = 1e-9,
                                         int seed_grid = 64) {
    if (!p.type_one(1e-9))
        throw std::invalid_argument("find_weyl_points: requires type-I parameters");
    WeylSearchResult res;
    const int N = seed_grid;
    std::vector<float> val(static_cast<size_t>(N) * N * N);
    auto idx = [N](int i, int j, int l) {
        return (static_cast<size_t>((i % N + N) % N) * N + ((j % N + N) % N)) * N +
               ((l % N + N) % N);
    };
    auto kof = [N](int i, int j, int l) {
        const double s1 = static_cast<double>(i) / N, s2 = static_cast<double>(j) / N,
                     s3 = static_cast<double>(l) / N;
        return Vector3d(pi * (s1 + s2), pi * (s1 - s2), 2.0 * pi * s3);
    };
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l)
                val[idx(i, j, l)] = static_cast<float>(d_vector(p, kof(i, j, l)).d.squaredNorm());

    std::vector<Vector3d> seeds;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l) {
                const float v = val[idx(i, j, l)];
                bool is_min = true;
                for (int di = -1; di <= 1 && is_min; ++di)
                    for (int dj = -1; dj <= 1 && is_min; ++dj)
                        for (int dl = -1; dl <= 1; ++dl) {
                            if (di == 0 && dj == 0 && dl == 0) continue;
                            if (val[idx(i + di, j + dj, l + dl)] < v) {
                                is_min = false;
                                break;
                            }
                        }
                if (is_min) seeds.push_back(kof(i, j, l));
            }

    std::vector<Vector3d> roots;
    double residual_floor = 1e300;
    for (Vector3d k : seeds) {
        if (!detail::newton_refine_node(p, k, tol)) {
            residual_floor = std::min(residual_floor, d_vector(p, k).d.norm());
            continue;
        }
        bool dup = false;
        for (const Vector3d& r : roots)
            if (torus_distance(r, k) < 1e-4) {
                dup = true;
                break;
            }
        if (!dup) roots.push_back(k);
    }

    double min_sep = 1e300;
    for (size_t a = 0; a < roots.size(); ++a)
        for (size_t b = a + 1; b < roots.size(); ++b)
            min_sep = std::min(min_sep, torus_distance(roots[a], roots[b]));
    const double radius = std::min(0.08, 0.35 * min_sep);

    for (const Vector3d& r : roots) {
        WeylNode node;
        node.k = fold_to_bz(r);
        node.frequency = d_vector(p, r).d0;
        const Matrix3d J = d_jacobian(p, r);
        node.quadratic_form = J.transpose() * J;
        node.chirality = weyl_charge(p, r, radius);
        const double bdist = std::min(pi - std::fabs(std::fabs(node.k[0]) + std::fabs(node.k[1])),
                                      pi - std::fabs(node.k[2]));
        if (std::fabs(bdist) < 10.0 * tol)
            res.warnings.push_back("node on zone boundary; folding-sensitive coordinates");
        res.nodes.push_back(node);
    }
    std::sort(res.nodes.begin(), res.nodes.end(), [](const WeylNode& a, const WeylNode& b) {
        if (a.k[0] != b.k[0]) return a.k[0] < b.k[0];
        if (a.k[1] != b.k[1]) return a.k[1] < b.k[1];
        return a.k[2] < b.k[2];
    });
    return res;
}

// --- 2D Dirac points and phase classification ----------------------------

struct DiracPoint2D {
    double kx = 0.0, ky = 0.0;
    int winding = 0;
};

/// In-plane band-touching points d_x = d_y = 0 with windings from the sign
/// of the linearized velocity determinant.
inline std::vector<DiracPoint2D> dirac_points_2d(const ModelParams& p) {
    std::vector<DiracPoint2D> out;
    const int N = 96;
    auto dxy = [&](double kx, double ky) {
        const Vector3d d = d_vector(p, Vector3d(kx, ky, 0.0)).d;
        return Eigen::Vector2d(d[0], d[1]);
    };
    std::vector<Eigen::Vector2d> roots;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const double s1 = static_cast<double>(i) / N, s2 = static_cast<double>(j) / N;
            Eigen::Vector2d k(pi * (s1 + s2), pi * (s1 - s2));
            // 2D damped Newton
            Eigen::Vector2d f = dxy(k[0], k[1]);
            bool ok = false;
            for (int it = 0; it < 40; ++it) {
                if (f.norm() < 1e-11) {
                    ok = true;
                    break;
                }
                const Matrix3d J3 = d_jacobian(p, Vector3d(k[0], k[1], 0.0));
                Eigen::Matrix2d J;
                J << J3(0, 0), J3(0, 1), J3(1, 0), J3(1, 1);
                if (std::fabs(J.determinant()) < 1e-12) break;
                const Eigen::Vector2d step = J.partialPivLu().solve(f);
                double scale = 1.0;
                bool moved = false;
                for (int bt = 0; bt < 10; ++bt) {
                    const Eigen::Vector2d kn = k - scale * step;
                    const Eigen::Vector2d fn = dxy(kn[0], kn[1]);
                    if (fn.norm() < f.norm()) {
                        k = kn;
                        f = fn;
                        moved = true;
                        break;
                    }
                    scale *= 0.5;
                }
                if (!moved) break;
            }
            if (!ok) continue;
            bool dup = false;
            for (const auto& r : roots)
                if (torus_distance(Vector3d(r[0], r[1], 0.0), Vector3d(k[0], k[1], 0.0)) < 1e-4) {
                    dup = true;
                    break;
                }
            if (!dup) roots.push_back(k);
        }
    for (const auto& r : roots) {
        const Vector3d folded = fold_to_bz(Vector3d(r[0], r[1], 0.0));
        const Matrix3d J3 = d_jacobian(p, folded);
        Eigen::Matrix2d v;
        v << J3(0, 0), J3(0, 1), J3(1, 0), J3(1, 1);
        const double det = v.determinant();
        out.push_back({folded[0], folded[1], det > 0.0 ? 1 : -1});
    }
    std::sort(out.begin(), out.end(), [](const DiracPoint2D& a, const DiracPoint2D& b) {
        return a.kx != b.kx ? a.kx < b.kx : a.ky < b.ky;
    });
    return out;
}

enum class PhaseLabel { BI, QHI, WSM1, WSM2 };

inline std::string to_string(PhaseLabel l) {
    switch (l) {
        case PhaseLabel::BI: return "BI";
        case PhaseLabel::QHI: return "QHI";
        case PhaseLabel::WSM1: return "WSM1";
        case PhaseLabel::WSM2: return "WSM2";
    }
    return "?";
}

/// Phase of a simplified-parameter model: count the in-plane families of
/// Weyl nodes; when gapped, fall back to the reduced Chern number at
/// k_z = pi/2. Near gap closings (merging or newly born node pairs) an
/// OnBoundaryError is raised instead of a guess.
inline PhaseLabel classify_phase(const ModelParams& p, int seed_grid = 48) {
    const WeylSearchResult ws = find_weyl_points(p, 1e-9, seed_grid);
    if (!ws.nodes.empty()) {
        for (const WeylNode& n : ws.nodes)
            if (std::fabs(std::sin(n.k[2])) < 0.02)
                throw OnBoundaryError("classify_phase: node pair at merging momentum");
        std::vector<Vector3d> families;
        for (const WeylNode& n : ws.nodes) {
            const Vector3d flat(n.k[0], n.k[1], 0.0);
            bool found = false;
            for (const Vector3d& f : families)
                if (torus_distance(f, flat) < 0.05) {
                    found = true;
                    break;
                }
            if (!found) families.push_back(flat);
        }
        return families.size() >= 2 ? PhaseLabel::WSM2 : PhaseLabel::WSM1;
    }
    // gapped: make sure we are not sitting right at a boundary
    double min_d = 1e300;
    const int N = seed_grid;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l) {
                const double s1 = static_cast<double>(i) / N, s2 = static_cast<double>(j) / N,
                             s3 = static_cast<double>(l) / N;
                min_d = std::min(
                    min_d,
                    d_vector(p, Vector3d(pi * (s1 + s2), pi * (s1 - s2), 2.0 * pi * s3)).d.norm());
            }
    if (min_d < 0.05) throw OnBoundaryError("classify_phase: gap too small to classify");
    const int c = chern_reduced(p, pi / 2.0);
    return c == 0 ? PhaseLabel::BI : PhaseLabel::QHI;
}

// --- group velocities -----------------------------------------------------

/// Central-difference gradient with a Richardson consistency check.
template <typename F>
Vector3d fd_gradient(F&& f, const Vector3d& k, double h = 1e-4, double check_tol = 1e-4) {
    auto grad = [&](double step) {
        Vector3d g;
        for (int a = 0; a < 3; ++a) {
            Vector3d kp = k, km = k;
            kp[a] += step;
            km[a] -= step;
            g[a] = (f(kp) - f(km)) / (2.0 * step);
        }
        return g;
    };
    const Vector3d g1 = grad(h), g2 = grad(h / 2.0);
    if ((g1 - g2).cwiseAbs().maxCoeff() > check_tol)
        throw std::runtime_error("group_velocity: finite differences did not converge");
    return g2;
}

inline Vector3d bulk_group_velocity(const ModelParams& p, const Vector3d& k, Band band) {
    if (d_vector(p, k).d.norm() < 1e-6)
        throw NearDegeneracyError("group_velocity: at a band degeneracy");
    const double s = band == Band::upper ? 1.0 : -1.0;
    return fd_gradient(
        [&](const Vector3d& q) {
            const BlochData b = d_vector(p, q);
            return b.d0 + s * b.d.norm();
        },
        k);
}

/// In-surface group velocity (d/dk_par, d/dk_z) of slab band n.
inline Eigen::Vector2d slab_group_velocity(const SlabSpec& spec, const SurfaceK& k, int n,
                                           double h = 1e-4) {
    auto energy = [&](double kp, double kz) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(slab_bloch(spec, kp, kz),
                                                    Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    };
    const VectorXd e0 = energy(k.par, k.z);
    const double gap = std::min(n > 0 ? e0[n] - e0[n - 1] : 1e300,
                                n + 1 < spec.n_sites ? e0[n + 1] - e0[n] : 1e300);
    if (gap < degeneracy_tol) throw NearDegeneracyError("group_velocity: degenerate slab band");
    auto g = [&](double step) {
        return Eigen::Vector2d((energy(k.par + step, k.z)[n] - energy(k.par - step, k.z)[n]) /
                                   (2.0 * step),
                               (energy(k.par, k.z + step)[n] - energy(k.par, k.z - step)[n]) /
                                   (2.0 * step));
    };
    const Eigen::Vector2d g1 = g(h), g2 = g(h / 2.0);
    if ((g1 - g2).cwiseAbs().maxCoeff() > 1e-4)
        throw std::runtime_error("group_velocity: finite differences did not converge");
    return g2;
}

}  // namespace warc
