#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "warc/model.hpp"
#include "warc/slab.hpp"

namespace warc {

using SparseCd = Eigen::SparseMatrix<complexd, Eigen::RowMajor>;

struct Site {
    int x = 0, y = 0, z = 0;
    Sublattice sub = Sublattice::A;
    int c() const { return x - y; }  // perp coordinate (units a/sqrt2)
    int d() const { return x + y; }  // par coordinate (units a/sqrt2)
};

/// Facets of the diagonally-cut geometries. perp_max is the "(0-10)" face
/// (outward normal (x-y)/sqrt2), perp_min the "(010)" face, par_min the
/// "(-100)" face and par_max the "(100)" face.
enum class Facet { perp_min, perp_max, par_min, par_max, z_min, z_max };

/// Finite lattice: site table plus sparse (optionally lossy) Hamiltonian.
class FiniteLattice {
public:
    struct Bond {
        int from = 0, to = 0;
        int type = 0;  // 1..10, bond index of the parameter table
        complexd amplitude;  // matrix element H(from,to) = amplitude
    };

    std::string builder;
    ModelParams params;
    std::vector<Site> sites;
    std::vector<Bond> bonds;
    Eigen::VectorXcd onsite;
    int cmin = 0, cmax = 0, dmin = 0, dmax = 0, zmin = 0, zmax = 0;

    int size() const { return static_cast<int>(sites.size()); }

    int site_at(int x, int y, int z) const {
        auto it = index_.find(pack(x, y, z));
        return it == index_.end() ? -1 : it->second;
    }

    bool on_facet(int id, Facet f, int depth = 0) const {
        const Site& s = sites[id];
        switch (f) {
            case Facet::perp_min: return s.c() == cmin + depth;
            case Facet::perp_max: return s.c() == cmax - depth;
            case Facet::par_min: return s.d() == dmin + depth;
            case Facet::par_max: return s.d() == dmax - depth;
            case Facet::z_min: return s.z == zmin + depth;
            case Facet::z_max: return s.z == zmax - depth;
        }
        return false;
    }

    std::vector<int> facet_sites(Facet f, int depth = 0) const {
        std::vector<int> ids;
        for (int i = 0; i < size(); ++i)
            if (on_facet(i, f, depth)) ids.push_back(i);
        return ids;
    }

    /// Deterministic central site of a facet: median position along both
    /// in-facet coordinates (lower median for even extents).
    int facet_center_site(Facet f) const;

    int z_mirror(int id) const {
        const Site& s = sites[id];
        return site_at(s.x, s.y, zmin + zmax - s.z);
    }

    const SparseCd& hamiltonian() const { return h_; }

    void add_site(int x, int y, int z) {
        Site s{x, y, z, ((x + y) % 2 + 2) % 2 == 0 ? Sublattice::A : Sublattice::B};
        index_[pack(x, y, z)] = size();
        sites.push_back(s);
    }

    void finalize();  // derive bounds, bonds and the sparse matrix

    /// Add -i*gamma/2 to the on-site energy of the selected facet layers
    /// (linear ramp over `layers`, strongest at the surface) and return the
    /// modified lattice.
    friend FiniteLattice apply_absorbers(FiniteLattice lat, const std::vector<Facet>& facets,
                                         double gamma, int layers);

private:
    static std::int64_t pack(int x, int y, int z) {
        auto u = [](int v) { return static_cast<std::int64_t>(v + (1 << 20)); };
        return (u(x) << 42) | (u(y) << 21) | u(z);
    }

    void rebuild_matrix();

    std::unordered_map<std::int64_t, int> index_;
    SparseCd h_;
};

inline int FiniteLattice::facet_center_site(Facet f) const {
    auto ids = facet_sites(f);
    if (ids.empty()) throw std::runtime_error("facet_center_site: empty facet");
    // in-facet coordinates: (d, z) for perp facets, (c, z) for par facets,
    // (c, d) for z facets
    auto coords = [&](int id) -> std::pair<int, int> {
        const Site& s = sites[id];
        switch (f) {
            case Facet::perp_min:
            case Facet::perp_max: return {s.d(), s.z};
            case Facet::par_min:
            case Facet::par_max: return {s.c(), s.z};
            default: return {s.c(), s.d()};
        }
    };
    std::vector<int> us, vs;
    for (int id : ids) {
        auto [u, v] = coords(id);
        us.push_back(u);
        vs.push_back(v);
    }
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end()), us.end());
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    const int uc = us[(us.size() - 1) / 2];
    const int vc = vs[(vs.size() - 1) / 2];
    int best = ids[0];
    long best_d2 = -1;
    for (int id : ids) {
        auto [u, v] = coords(id);
        const long d2 = static_cast<long>(u - uc) * (u - uc) + static_cast<long>(v - vc) * (v - vc);
        if (best_d2 < 0 || d2 < best_d2 || (d2 == best_d2 && id < best)) {
            best = id;
            best_d2 = d2;
        }
    }
    return best;
}

inline void FiniteLattice::finalize() {
    if (sites.empty()) throw std::runtime_error("FiniteLattice: no sites");
    cmin = dmin = zmin = 1 << 28;
    cmax = dmax = zmax = -(1 << 28);
    for (const Site& s : sites) {
        cmin = std::min(cmin, s.c());
        cmax = std::max(cmax, s.c());
        dmin = std::min(dmin, s.d());
        dmax = std::max(dmax, s.d());
        zmin = std::min(zmin, s.z);
        zmax = std::max(zmax, s.z);
    }

    onsite.resize(size());
    for (int i = 0; i < size(); ++i)
        onsite[i] = params.eps + (sites[i].sub == Sublattice::A ? -params.m : params.m);

    // outgoing bonds by sublattice: {type, dx, dy, dz}
    static constexpr int a_bonds[7][4] = {{1, 1, 0, 0},  {2, -1, 0, 0}, {3, 0, 1, 0},
                                          {4, 0, -1, 0}, {5, 0, 0, 1},  {7, 1, 1, 0},
                                          {8, 1, -1, 0}};
    static constexpr int b_bonds[3][4] = {{6, 0, 0, 1}, {9, 1, 1, 0}, {10, 1, -1, 0}};

    bonds.clear();
    for (int i = 0; i < size(); ++i) {
        const Site& s = sites[i];
        const bool isA = s.sub == Sublattice::A;
        const auto* list = isA ? &a_bonds[0] : &b_bonds[0];
        const int nb = isA ? 7 : 3;
        for (int b = 0; b < nb; ++b) {
            const int type = list[b][0];
            const int j = site_at(s.x + list[b][1], s.y + list[b][2], s.z + list[b][3]);
            if (j < 0) continue;
            bonds.push_back({i, j, type, -params.hop(type)});
        }
    }
    rebuild_matrix();
}

inline void FiniteLattice::rebuild_matrix() {
    std::vector<Eigen::Triplet<complexd>> trip;
    trip.reserve(sites.size() + 2 * bonds.size());
    for (int i = 0; i < size(); ++i) trip.emplace_back(i, i, onsite[i]);
    for (const Bond& b : bonds) {
        if (b.amplitude == complexd(0.0, 0.0)) continue;
        trip.emplace_back(b.from, b.to, b.amplitude);
        trip.emplace_back(b.to, b.from, std::conj(b.amplitude));
    }
    h_.resize(size(), size());
    h_.setFromTriplets(trip.begin(), trip.end());
    h_.makeCompressed();
}

inline FiniteLattice apply_absorbers(FiniteLattice lat, const std::vector<Facet>& facets,
                                     double gamma, int layers = 1) {
    if (gamma < 0.0) throw std::invalid_argument("apply_absorbers: gamma must be >= 0");
    if (layers < 1) throw std::invalid_argument("apply_absorbers: layers must be >= 1");
    if (gamma == 0.0) return lat;
    for (Facet f : facets)
        for (int l = 0; l < layers; ++l) {
            const double g = gamma * static_cast<double>(layers - l) / layers;
            for (int id : lat.facet_sites(f, l)) lat.onsite[id] -= complexd(0.0, 0.5 * g);
        }
    lat.rebuild_matrix();
    return lat;
}

// --- geometry builders -------------------------------------------------

/// Plain box in cubic coordinates, x in [0,nx), y in [0,ny), z in [0,nz).
inline FiniteLattice cubic_block(const ModelParams& p, int nx, int ny, int nz) {
    if (nx < 2 || ny < 2 || nz < 1)
        throw std::invalid_argument("cubic_block: extents too small");
    FiniteLattice lat;
    lat.builder = "cubic_block";
    lat.params = p;
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y)
            for (int z = 0; z < nz; ++z) lat.add_site(x, y, z);
    lat.finalize();
    return lat;
}

/// Finite slab-like block: n_perp columns stacked along (x-y), each column
/// holding n_par sites (spacing sqrt2 a) per z layer. Both perp facets
/// carry `termination`; requires an odd n_perp.
inline FiniteLattice rotated_block(const ModelParams& p, int n_par, int n_perp, int n_z,
                                   Sublattice termination = Sublattice::A) {
    if (n_par < 2 || n_perp < 2 || n_z < 1)
        throw std::invalid_argument("rotated_block: extents too small");
    if (n_perp % 2 == 0)
        throw std::invalid_argument(
            "rotated_block: equal terminations need an odd number of columns");
    const int c0 = termination == Sublattice::A ? 0 : 1;
    FiniteLattice lat;
    lat.builder = "rotated_block";
    lat.params = p;
    for (int ci = 0; ci < n_perp; ++ci) {
        const int c = c0 + ci;
        for (int j = 0; j < n_par; ++j) {
            const int d = ((c % 2) + 2) % 2 + 2 * j;
            const int x = (d + c) / 2, y = (d - c) / 2;
            for (int z = 0; z < n_z; ++z) lat.add_site(x, y, z);
        }
    }
    lat.finalize();
    return lat;
}

/// Fig.-2-style slab block (defaults reproduce the 33 x 64 x 64 geometry).
inline FiniteLattice slab_block(const ModelParams& p, int n_par = 64, int n_perp = 33,
                                int n_z = 64) {
    FiniteLattice lat = rotated_block(p, n_par, n_perp, n_z);
    lat.builder = "slab_block";
    return lat;
}

/// Fig.-3-style block for time-of-flight runs (31 x 31 x 61 by default).
inline FiniteLattice rect_block(const ModelParams& p, int n_par = 31, int n_perp = 31,
                                int n_z = 61) {
    FiniteLattice lat = rotated_block(p, n_par, n_perp, n_z);
    lat.builder = "rect_block";
    return lat;
}

/// Equal-face box with alternating facet sublattices: perp facets A, par
/// facets B. `span` (even) is the extent in units of a/sqrt2; the facet
/// side is span/sqrt2 in units of a.
inline FiniteLattice braid_box(const ModelParams& p, int span, int n_z) {
    if (span < 4 || span % 2 != 0)
        throw std::invalid_argument("braid_box: span must be even and >= 4");
    if (n_z < 1) throw std::invalid_argument("braid_box: n_z must be >= 1");
    FiniteLattice lat;
    lat.builder = "braid_box";
    lat.params = p;
    for (int c = 0; c <= span; ++c)
        for (int d = -1; d <= span - 1; ++d) {
            if (((c - d) % 2 + 2) % 2 != 0) continue;
            const int x = (d + c) / 2, y = (d - c) / 2;
            for (int z = 0; z < n_z; ++z) lat.add_site(x, y, z);
        }
    lat.finalize();
    return lat;
}

}  // namespace warc
