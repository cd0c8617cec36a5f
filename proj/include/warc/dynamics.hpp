#pragma once

#include <memory>
#include <vector>

#include "warc/lattice.hpp"

namespace warc {

using Eigen::VectorXcd;

struct EmitterSpec {
    int site = -1;        // coupling site in the host lattice
    double omega = 0.0;   // transition frequency (units of J)
    double g = 0.0;       // light-matter coupling
    double gamma0 = 0.0;  // optional free-space decay
};

/// Emitters + bath in the single-excitation sector. Basis ordering:
/// emitters 0..N-1 first, then the lattice sites shifted by N.
class CoupledSystem {
public:
    CoupledSystem(std::shared_ptr<const FiniteLattice> lattice, std::vector<EmitterSpec> emitters)
        : lattice_(std::move(lattice)), emitters_(std::move(emitters)) {
        const int n = static_cast<int>(emitters_.size());
        const int ns = lattice_->size();
        for (int j = 0; j < n; ++j) {
            const auto& e = emitters_[j];
            if (e.site < 0 || e.site >= ns)
                throw std::invalid_argument("CoupledSystem: invalid emitter site id");
            if (e.g < 0.0 || e.gamma0 < 0.0)
                throw std::invalid_argument("CoupledSystem: g and gamma0 must be >= 0");
            for (int l = 0; l < j; ++l)
                if (emitters_[l].site == e.site)
                    throw std::invalid_argument("CoupledSystem: two emitters on one site");
        }
        std::vector<Eigen::Triplet<complexd>> trip;
        const SparseCd& hb = lattice_->hamiltonian();
        trip.reserve(hb.nonZeros() + 3 * n);
        for (int j = 0; j < n; ++j) {
            trip.emplace_back(j, j, complexd(emitters_[j].omega, -0.5 * emitters_[j].gamma0));
            if (emitters_[j].g != 0.0) {
                trip.emplace_back(j, n + emitters_[j].site, complexd(emitters_[j].g, 0.0));
                trip.emplace_back(n + emitters_[j].site, j, complexd(emitters_[j].g, 0.0));
            }
        }
        for (int r = 0; r < hb.outerSize(); ++r)
            for (SparseCd::InnerIterator it(hb, r); it; ++it)
                trip.emplace_back(n + static_cast<int>(it.row()), n + static_cast<int>(it.col()),
                                  it.value());
        op_.resize(n + ns, n + ns);
        op_.setFromTriplets(trip.begin(), trip.end());
        op_.makeCompressed();
    }

    const SparseCd& op() const { return op_; }
    int n_emitters() const { return static_cast<int>(emitters_.size()); }
    int dim() const { return static_cast<int>(op_.rows()); }
    const FiniteLattice& lattice() const { return *lattice_; }
    const std::vector<EmitterSpec>& emitters() const { return emitters_; }

    /// State with emitter j excited and the bath empty.
    VectorXcd single_excited(int j) const {
        if (j < 0 || j >= n_emitters()) throw std::invalid_argument("single_excited: bad index");
        VectorXcd psi = VectorXcd::Zero(dim());
        psi[j] = 1.0;
        return psi;
    }

    /// State with one photon on lattice site r.
    VectorXcd vacuum_photon(int site) const {
        if (site < 0 || site >= lattice_->size())
            throw std::invalid_argument("vacuum_photon: bad site");
        VectorXcd psi = VectorXcd::Zero(dim());
        psi[n_emitters() + site] = 1.0;
        return psi;
    }

    Eigen::Map<const VectorXcd> site_amplitudes(const VectorXcd& psi) const {
        return {psi.data() + n_emitters(), lattice_->size()};
    }

private:
    std::shared_ptr<const FiniteLattice> lattice_;
    std::vector<EmitterSpec> emitters_;
    SparseCd op_;
};

/// Two-emitter concurrence 2|C1 C2*| of a single-excitation state.
inline double concurrence(const CoupledSystem& sys, const VectorXcd& psi) {
    if (sys.n_emitters() != 2)
        throw std::invalid_argument("concurrence: defined for exactly two emitters");
    return 2.0 * std::abs(psi[0] * std::conj(psi[1]));
}

struct Snapshot {
    double time = 0.0;
    VectorXcd state;
};

struct Trajectory {
    std::vector<double> times;
    Eigen::MatrixXd emitter_pop;       // sample x emitter
    std::vector<double> photon_pop;    // total photonic population
    std::vector<double> norm2;         // |psi|^2
    std::vector<double> energy;        // Re <psi|H|psi> when requested
    std::vector<double> concurrence;   // filled for two emitters
    std::vector<Snapshot> snapshots;
};

struct EvolveOptions {
    double dt = 0.02;
    int samples = 200;
    std::vector<double> snapshot_times;
    bool record_energy = false;
};

/// Fixed-step RK4 integration of i dpsi/dt = H psi.
inline Trajectory evolve(const CoupledSystem& sys, const VectorXcd& psi0, double t_final,
                         const EvolveOptions& opt = {}) {
    if (t_final <= 0.0) throw std::invalid_argument("evolve: t_final must be > 0");
    if (std::fabs(psi0.norm() - 1.0) > 1e-8)
        throw std::invalid_argument("evolve: initial state must be normalized");
    const SparseCd& H = sys.op();
    const long n_steps = std::max<long>(1, std::lround(std::ceil(t_final / opt.dt - 1e-12)));
    const double dt = t_final / static_cast<double>(n_steps);

    // sample step indices (uniform grid, snapped to steps)
    std::vector<long> sample_steps(opt.samples);
    for (int s = 0; s < opt.samples; ++s)
        sample_steps[s] = std::lround(static_cast<double>(s) * n_steps / (opt.samples - 1));
    std::vector<long> snap_steps;
    for (double ts : opt.snapshot_times)
        snap_steps.push_back(std::clamp<long>(std::lround(ts / dt), 0, n_steps));

    Trajectory traj;
    traj.emitter_pop.resize(opt.samples, sys.n_emitters());

    VectorXcd psi = psi0;
    VectorXcd k1(psi.size()), k2(psi.size()), k3(psi.size()), k4(psi.size()), tmp(psi.size());
    const complexd mi(0.0, -1.0);

    auto record = [&](long step) {
        const double t = step * dt;
        const int s = static_cast<int>(traj.times.size());
        traj.times.push_back(t);
        for (int j = 0; j < sys.n_emitters(); ++j)
            traj.emitter_pop(s, j) = std::norm(psi[j]);
        traj.photon_pop.push_back(sys.site_amplitudes(psi).squaredNorm());
        traj.norm2.push_back(psi.squaredNorm());
        if (opt.record_energy) {
            tmp.noalias() = H * psi;
            traj.energy.push_back(psi.dot(tmp).real());
        }
        if (sys.n_emitters() == 2) traj.concurrence.push_back(concurrence(sys, psi));
    };

    size_t next_sample = 0, next_snap = 0;
    std::vector<long> snaps_sorted = snap_steps;
    std::sort(snaps_sorted.begin(), snaps_sorted.end());
    for (long step = 0; step <= n_steps; ++step) {
        while (next_sample < sample_steps.size() && sample_steps[next_sample] == step) {
            record(step);
            ++next_sample;
        }
        while (next_snap < snaps_sorted.size() && snaps_sorted[next_snap] == step) {
            traj.snapshots.push_back({step * dt, psi});
            ++next_snap;
        }
        if (step == n_steps) break;

        k1.noalias() = H * psi;
        k1 *= mi;
        tmp = psi + (0.5 * dt) * k1;
        k2.noalias() = H * tmp;
        k2 *= mi;
        tmp = psi + (0.5 * dt) * k2;
        k3.noalias() = H * tmp;
        k3 *= mi;
        tmp = psi + dt * k3;
        k4.noalias() = H * tmp;
        k4 *= mi;
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (step % 64 == 0 && !std::isfinite(psi.squaredNorm()))
            throw std::runtime_error("evolve: non-finite amplitudes (step too large?)");
    }
    if (!std::isfinite(psi.squaredNorm()))
        throw std::runtime_error("evolve: non-finite amplitudes (step too large?)");
    return traj;
}

/// Angular distribution of the photonic population over an annulus of a
/// facet, binned by the polar angle in the facet plane.
inline std::vector<double> angular_profile(const CoupledSystem& sys, const VectorXcd& psi,
                                           int center_site, Facet facet, double radius,
                                           double width, int n_bins) {
    if (n_bins < 1) throw std::invalid_argument("angular_profile: n_bins must be >= 1");
    const FiniteLattice& lat = sys.lattice();
    const Site& c0 = lat.sites[center_site];
    const auto ids = lat.facet_sites(facet);
    std::vector<double> bins(n_bins, 0.0);
    auto amps = sys.site_amplitudes(psi);
    int hits = 0;
    const double s2 = std::numbers::sqrt2;
    for (int id : ids) {
        const Site& s = lat.sites[id];
        double u, v;  // in-facet coordinates in units of a
        if (facet == Facet::perp_min || facet == Facet::perp_max) {
            u = (s.d() - c0.d()) / s2;
            v = static_cast<double>(s.z - c0.z);
        } else if (facet == Facet::par_min || facet == Facet::par_max) {
            u = (s.c() - c0.c()) / s2;
            v = static_cast<double>(s.z - c0.z);
        } else {
            u = (s.c() - c0.c()) / s2;
            v = (s.d() - c0.d()) / s2;
        }
        const double r = std::hypot(u, v);
        if (r < radius - 0.5 * width || r > radius + 0.5 * width) continue;
        ++hits;
        double alpha = std::atan2(v, u);
        if (alpha < 0.0) alpha += 2.0 * pi;
        int b = std::min(n_bins - 1, static_cast<int>(alpha / (2.0 * pi) * n_bins));
        bins[b] += std::norm(amps[id]);
    }
    if (hits == 0) throw std::runtime_error("angular_profile: empty annulus");
    return bins;
}

/// Order-of-magnitude (decay time, round-trip time) pair used to pick the
/// dissipative vs cavity regime.
inline std::pair<double, double> timescales(double g, double path_length, double J = 1.0) {
    const double tau = g > 0.0 ? J / (g * g) : std::numeric_limits<double>::infinity();
    return {tau, path_length / J};
}

}  // namespace warc
