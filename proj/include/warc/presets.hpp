#pragma once

#include <memory>

#include "warc/config.hpp"
#include "warc/dynamics.hpp"

namespace warc {

/// Named bath configurations used by the command presets. I/II/III are the
/// phi = 0 phase-diagram working points; NR is the phi = pi/2 configuration
/// tuned for negative refraction at the hinges.
inline std::optional<ModelParams> named_model(const std::string& name) {
    if (name == "I") return ModelParams::simplified(1.0, 0.0, 0.0, 0.0);
    if (name == "II") return ModelParams::simplified(1.0, 0.4, 0.0, 0.0);
    if (name == "III") return ModelParams::simplified(1.0, 0.5, 1.2, 0.0);
    if (name == "NR") return ModelParams::simplified(1.0, 0.4, 0.0, pi / 2.0);
    return std::nullopt;
}

/// [model] section with an optional `preset` key, then knob overrides.
inline ModelParams resolve_model(const RawConfig& cfg, std::vector<std::string>& errors,
                                 ModelParams fallback) {
    if (cfg.has("model", "preset")) {
        const std::string name = cfg.sections.at("model").at("preset");
        const auto named = named_model(name);
        if (!named) {
            errors.push_back("[model] preset: unknown configuration '" + name + "'");
        } else {
            fallback = *named;
        }
    }
    RawConfig stripped = cfg;
    if (stripped.sections.count("model")) stripped.sections["model"].erase("preset");
    return model_from_config(stripped, errors, fallback);
}

inline std::optional<Facet> facet_from_string(const std::string& s) {
    if (s == "perp_min" || s == "010") return Facet::perp_min;
    if (s == "perp_max" || s == "0-10") return Facet::perp_max;
    if (s == "par_min" || s == "-100") return Facet::par_min;
    if (s == "par_max" || s == "100") return Facet::par_max;
    if (s == "z_min") return Facet::z_min;
    if (s == "z_max") return Facet::z_max;
    return std::nullopt;
}

inline std::string facet_name(Facet f) {
    switch (f) {
        case Facet::perp_min: return "perp_min";
        case Facet::perp_max: return "perp_max";
        case Facet::par_min: return "par_min";
        case Facet::par_max: return "par_max";
        case Facet::z_min: return "z_min";
        case Facet::z_max: return "z_max";
    }
    return "?";
}

struct GeometryDefaults {
    std::string builder = "slab_block";
    int n_par = 64, n_perp = 33, n_z = 64;
    int span = 40;
    std::vector<std::string> absorb;
    double absorb_gamma = 1.0;
    int absorb_layers = 1;
};

/// [geometry] section: builder + extents + absorbers.
inline std::shared_ptr<FiniteLattice> build_geometry(const RawConfig& cfg,
                                                     std::vector<std::string>& errors,
                                                     const ModelParams& p,
                                                     const GeometryDefaults& def) {
    KeyTable kt(cfg, "geometry", errors);
    const std::string builder = kt.get_string("builder", def.builder);
    const int n_par = kt.get_int("n_par", def.n_par);
    const int n_perp = kt.get_int("n_perp", def.n_perp);
    const int n_z = kt.get_int("n_z", def.n_z);
    const int span = kt.get_int("span", def.span);
    const auto absorb = kt.get_string_list("absorb_facets", def.absorb);
    const double gamma = kt.get_double("absorb_gamma_over_J", def.absorb_gamma);
    const int layers = kt.get_int("absorb_layers", def.absorb_layers);
    const std::string term = kt.get_string("termination", "A");
    kt.finish();
    if (!errors.empty()) return nullptr;

    FiniteLattice lat;
    try {
        if (builder == "slab_block") {
            lat = slab_block(p, n_par, n_perp, n_z);
        } else if (builder == "rect_block") {
            lat = rect_block(p, n_par, n_perp, n_z);
        } else if (builder == "braid_box") {
            lat = braid_box(p, span, n_z);
        } else if (builder == "cubic_block") {
            lat = cubic_block(p, n_par, n_perp, n_z);
        } else if (builder == "rotated_block") {
            const Sublattice t = term == "B" ? Sublattice::B : Sublattice::A;
            lat = rotated_block(p, n_par, n_perp, n_z, t);
        } else {
            errors.push_back("[geometry] builder: unknown builder '" + builder + "'");
            return nullptr;
        }
    } catch (const std::invalid_argument& e) {
        errors.push_back(std::string("[geometry] ") + e.what());
        return nullptr;
    }

    std::vector<Facet> facets;
    for (const auto& name : absorb) {
        const auto f = facet_from_string(name);
        if (!f) {
            errors.push_back("[geometry] absorb_facets: unknown facet '" + name + "'");
            return nullptr;
        }
        facets.push_back(*f);
    }
    if (gamma < 0.0) {
        errors.push_back("[geometry] absorb_gamma_over_J: must be >= 0");
        return nullptr;
    }
    if (!facets.empty() && gamma > 0.0) lat = apply_absorbers(std::move(lat), facets, gamma, layers);
    return std::make_shared<FiniteLattice>(std::move(lat));
}

struct EmitterDefaults {
    std::string placement = "facet_center";
    std::string facet = "perp_max";
    double g = 0.5;
    double omega = 0.0;
    double gamma0 = 0.0;
    int d_sites = 6;
};

struct EmitterSetup {
    std::vector<EmitterSpec> emitters;
    int excited = 0;
};

/// [emitters] section: coupling strengths and one of the named placements
/// (facet_center, hinge_pair, facet_array, site_ids).
inline EmitterSetup place_emitters(const RawConfig& cfg, std::vector<std::string>& errors,
                                   const FiniteLattice& lat, const EmitterDefaults& def) {
    KeyTable kt(cfg, "emitters", errors);
    EmitterSetup setup;
    const std::string placement = kt.get_string("placement", def.placement);
    const std::string facet_s = kt.get_string("facet", def.facet);
    const double g = kt.get_double("g_over_J", def.g);
    const double omega = kt.get_double("omega_over_J", def.omega);
    const double gamma0 = kt.get_double("gamma0_over_J", def.gamma0);
    const int d_sites = kt.get_int("d_sites", def.d_sites);
    const int d_sites2 = kt.get_int("d_sites_2", d_sites);
    const auto ids = kt.get_list("site_ids", {});
    kt.finish();
    if (g < 0.0) errors.push_back("[emitters] g_over_J: must be >= 0");
    if (gamma0 < 0.0) errors.push_back("[emitters] gamma0_over_J: must be >= 0");
    const auto facet = facet_from_string(facet_s);
    if (!facet) errors.push_back("[emitters] facet: unknown facet '" + facet_s + "'");
    if (!errors.empty()) return setup;

    auto make = [&](int site) { return EmitterSpec{site, omega, g, gamma0}; };
    if (placement == "facet_center") {
        setup.emitters.push_back(make(lat.facet_center_site(*facet)));
    } else if (placement == "facet_array") {
        const auto sites = lat.facet_sites(*facet);
        for (int s : sites) setup.emitters.push_back(make(s));
        const int center = lat.facet_center_site(*facet);
        for (size_t j = 0; j < sites.size(); ++j)
            if (sites[j] == center) setup.excited = static_cast<int>(j);
    } else if (placement == "hinge_pair") {
        // emitter 1 on the perp_max facet, emitter 2 on par_min, both
        // d_sites lattice sites away from the common hinge, mid-height
        if (d_sites < 1 || d_sites2 < 1) {
            errors.push_back("[emitters] d_sites: must be >= 1");
            return setup;
        }
        const int zc = lat.zmin + (lat.zmax - lat.zmin) / 2;
        const int d1 = lat.dmin + 1 + 2 * (d_sites - 1);
        const int c1 = lat.cmax;
        const int s1 = lat.site_at((d1 + c1) / 2, (d1 - c1) / 2, zc);
        const int c2 = lat.cmax - (2 * d_sites2 - 1);
        const int d2 = lat.dmin;
        const int s2 = lat.site_at((d2 + c2) / 2, (d2 - c2) / 2, zc);
        if (s1 < 0 || s2 < 0) {
            errors.push_back("[emitters] d_sites: placement outside the lattice");
            return setup;
        }
        setup.emitters.push_back(make(s1));
        setup.emitters.push_back(make(s2));
    } else if (placement == "site_ids") {
        for (double v : ids) {
            const int s = static_cast<int>(v);
            if (s < 0 || s >= lat.size()) {
                errors.push_back("[emitters] site_ids: invalid site id");
                return setup;
            }
            setup.emitters.push_back(make(s));
        }
        if (setup.emitters.empty())
            errors.push_back("[emitters] site_ids: empty placement");
    } else {
        errors.push_back("[emitters] placement: unknown placement '" + placement + "'");
    }
    return setup;
}

}  // namespace warc
