#pragma once

#include <map>
#include <vector>

#include "warc/spectrum.hpp"
#include "warc/topology.hpp"

namespace warc {

struct ArcPoint {
    double k_par = 0.0;
    double k_z = 0.0;
    int facet = 0;  // 0 = column-0 side of the slab, 1 = far side
};

struct FermiArcs {
    std::vector<std::vector<ArcPoint>> arcs;    // ordered polylines
    std::vector<SurfaceK> node_projections;     // Weyl points over the surface zone
};

namespace detail {

struct EdgeKey {
    int i, j, dir;  // dir 0: edge (i,j)-(i+1,j); dir 1: edge (i,j)-(i,j+1)
    bool operator<(const EdgeKey& o) const {
        return std::tie(i, j, dir) < std::tie(o.i, o.j, o.dir);
    }
};

}  // namespace detail

/// Slab-facet attribution of the band-n state at k: compares the weight in
/// the first and last quarter of the unit cell.
inline int facet_of_state(const SlabSpec& spec, double k_par, double k_z, int n) {
    const EigenDecomposition e = eigh(slab_bloch(spec, k_par, k_z));
    const int q = std::max(1, spec.n_sites / 4);
    double lo = 0.0, hi = 0.0;
    for (int c = 0; c < q; ++c) lo += std::norm(e.vectors(c, n));
    for (int c = spec.n_sites - q; c < spec.n_sites; ++c) hi += std::norm(e.vectors(c, n));
    return lo >= hi ? 0 : 1;
}

/// Equifrequency contours E_n(k) = omega of the edge band on the surface
/// zone, as ordered polylines split by facet attribution. Marching squares
/// on an (n_par x n_z) inclusive grid.
inline FermiArcs fermi_arcs(const SlabSpec& spec, double omega, int n_par = 201, int n_z = 201,
                            int band = -1) {
    if (band < 0) band = edge_band_index(spec.n_sites);
    const double kp_max = surface_bz_par();
    auto kpar_of = [&](double i) { return -kp_max + 2.0 * kp_max * i / (n_par - 1); };
    auto kz_of = [&](double j) { return -pi + 2.0 * pi * j / (n_z - 1); };

    Eigen::MatrixXd f(n_par, n_z);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es;
    for (int i = 0; i < n_par; ++i)
        for (int j = 0; j < n_z; ++j) {
            es.compute(slab_bloch(spec, kpar_of(i), kz_of(j)), Eigen::EigenvaluesOnly);
            f(i, j) = es.eigenvalues()[band] - omega;
        }

    // crossing points on grid edges
    std::map<detail::EdgeKey, int> edge_point;  // -> index into pts
    std::vector<std::array<double, 2>> pts;     // fractional grid coords
    auto crossing = [&](int i, int j, int dir) -> int {
        detail::EdgeKey key{i, j, dir};
        auto it = edge_point.find(key);
        if (it != edge_point.end()) return it->second;
        const double a = f(i, j);
        const double b = dir == 0 ? f(i + 1, j) : f(i, j + 1);
        const double t = a / (a - b);
        pts.push_back(dir == 0 ? std::array<double, 2>{i + t, static_cast<double>(j)}
                               : std::array<double, 2>{static_cast<double>(i), j + t});
        edge_point[key] = static_cast<int>(pts.size()) - 1;
        return static_cast<int>(pts.size()) - 1;
    };

    // segments per cell
    std::vector<std::array<int, 2>> segs;
    for (int i = 0; i + 1 < n_par; ++i)
        for (int j = 0; j + 1 < n_z; ++j) {
            const double v00 = f(i, j), v10 = f(i + 1, j), v01 = f(i, j + 1),
                         v11 = f(i + 1, j + 1);
            auto neg = [](double v) { return v < 0.0; };
            int code = (neg(v00) ? 1 : 0) | (neg(v10) ? 2 : 0) | (neg(v11) ? 4 : 0) |
                       (neg(v01) ? 8 : 0);
            if (code == 0 || code == 15) continue;
            auto e_bottom = [&] { return crossing(i, j, 0); };
            auto e_top = [&] { return crossing(i, j + 1, 0); };
            auto e_left = [&] { return crossing(i, j, 1); };
            auto e_right = [&] { return crossing(i + 1, j, 1); };
            switch (code) {
                case 1: case 14: segs.push_back({e_bottom(), e_left()}); break;
                case 2: case 13: segs.push_back({e_bottom(), e_right()}); break;
                case 3: case 12: segs.push_back({e_left(), e_right()}); break;
                case 4: case 11: segs.push_back({e_top(), e_right()}); break;
                case 6: case 9: segs.push_back({e_bottom(), e_top()}); break;
                case 7: case 8: segs.push_back({e_top(), e_left()}); break;
                case 5: case 10: {
                    // saddle: split on the cell-center value
                    const double vc = 0.25 * (v00 + v10 + v01 + v11);
                    const bool c_neg = vc < 0.0;
                    if ((code == 5) == c_neg) {
                        segs.push_back({e_bottom(), e_right()});
                        segs.push_back({e_top(), e_left()});
                    } else {
                        segs.push_back({e_bottom(), e_left()});
                        segs.push_back({e_top(), e_right()});
                    }
                    break;
                }
            }
        }

    // stitch segments into polylines
    std::multimap<int, int> adj;  // point -> segment index
    for (size_t s = 0; s < segs.size(); ++s) {
        adj.insert({segs[s][0], static_cast<int>(s)});
        adj.insert({segs[s][1], static_cast<int>(s)});
    }
    std::vector<bool> used(segs.size(), false);
    std::vector<std::vector<int>> chains;
    auto walk = [&](int seg, int start_pt) {
        std::vector<int> chain{start_pt};
        int cur_seg = seg, cur_pt = start_pt;
        while (true) {
            used[cur_seg] = true;
            cur_pt = segs[cur_seg][0] == cur_pt ? segs[cur_seg][1] : segs[cur_seg][0];
            chain.push_back(cur_pt);
            int next = -1;
            auto [lo, hi] = adj.equal_range(cur_pt);
            for (auto it = lo; it != hi; ++it)
                if (!used[it->second]) {
                    next = it->second;
                    break;
                }
            if (next < 0) break;
            cur_seg = next;
        }
        return chain;
    };
    for (size_t s = 0; s < segs.size(); ++s) {
        if (used[s]) continue;
        // prefer starting from a degree-1 endpoint so open contours come out whole
        int start = segs[s][0];
        for (int pt : {segs[s][0], segs[s][1]}) {
            int deg = 0;
            auto [lo, hi] = adj.equal_range(pt);
            for (auto it = lo; it != hi; ++it)
                if (!used[it->second]) ++deg;
            if (deg == 1) start = pt;
        }
        chains.push_back(walk(static_cast<int>(s), start));
    }

    FermiArcs out;
    const ModelParams& mp = spec.params;
    if (mp.type_one(1e-9)) {
        try {
            for (const WeylNode& n : find_weyl_points(mp).nodes) {
                const double kpar = (spec.cut == SlabCut::perp)
                                        ? (n.k[0] + n.k[1]) / std::numbers::sqrt2
                                        : (n.k[0] - n.k[1]) / std::numbers::sqrt2;
                SurfaceK sk = project_to_surface(Vector3d(0, 0, n.k[2]));
                sk.par = kpar - 2.0 * kp_max * std::floor(kpar / (2.0 * kp_max) + 0.5);
                out.node_projections.push_back(sk);
            }
        } catch (const std::exception&) {
            // gapped parameters: no projections to report
        }
    }

    for (const auto& chain : chains) {
        std::vector<ArcPoint> poly;
        for (int pid : chain) {
            ArcPoint ap;
            ap.k_par = kpar_of(pts[pid][0]);
            ap.k_z = kz_of(pts[pid][1]);
            ap.facet = facet_of_state(spec, ap.k_par, ap.k_z, band);
            poly.push_back(ap);
        }
        // split the contour wherever the facet attribution flips
        size_t start = 0;
        for (size_t i = 1; i <= poly.size(); ++i) {
            if (i == poly.size() || poly[i].facet != poly[start].facet) {
                std::vector<ArcPoint> piece(poly.begin() + start, poly.begin() + i);
                if (piece.size() >= 2) out.arcs.push_back(std::move(piece));
                start = i;
            }
        }
    }
    return out;
}

}  // namespace warc
