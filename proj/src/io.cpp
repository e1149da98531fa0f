#include "pspin/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>

namespace pspin {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string opt_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : "nan";
}

Json opt_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

Json number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& rec) {
    std::ofstream out = open_out(path);
    out << "t,u,v,w,g1\n";
    for (std::size_t i = 0; i < rec.size(); ++i) {
        out << format_double(rec.t[i]) << ',' << format_double(rec.u[i]) << ','
            << format_double(rec.v[i]) << ','
            << (i < rec.w.size() ? format_double(rec.w[i]) : "nan") << ','
            << (i < rec.g1.size() ? format_double(rec.g1[i]) : "nan") << '\n';
    }
}

void write_plane_csv(const fs::path& path, const PlaneTrajectory& tr) {
    std::ofstream out = open_out(path);
    out << "t,u,v\n";
    for (std::size_t i = 0; i < tr.size(); ++i)
        out << format_double(tr.t[i]) << ',' << format_double(tr.u[i]) << ','
            << format_double(tr.v[i]) << '\n';
}

void write_curves_csv(const fs::path& path, const FlowParams& fp, const std::vector<double>& u_grid) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto safe = [nan](auto f) {
        try {
            return f();
        } catch (const std::domain_error&) {
            return nan;
        }
    };
    std::ofstream out = open_out(path);
    out << "u,f_L,f_U,ell1\n";
    for (double u : u_grid)
        out << format_double(u) << ',' << format_double(safe([&] { return f_L(fp, u); })) << ','
            << format_double(safe([&] { return f_U(fp, u); })) << ','
            << format_double(ell_1(fp, u)) << '\n';
}

void write_boundaries_csv(const fs::path& path, const PhaseGeometry& g, const AbsorbingSet& a) {
    const FlowParams& fp = g.params();
    const Window& w = g.window();
    const double res = g.options().resolution;
    std::ofstream out = open_out(path);
    out << "u,ell1,f_L,A0_lower,A0_upper,absorbing_upper\n";
    const long k0 = static_cast<long>(std::ceil(w.u_min / res));
    const long k1 = static_cast<long>(std::floor(w.u_max / res));
    for (long k = k0; k <= k1; ++k) {
        const double u = static_cast<double>(k) * res;
        double fl = std::numeric_limits<double>::quiet_NaN();
        if (fp.p - 1.0 + fp.p * fp.beta * u + fp.beta * fp.lambda_p > 0.0) fl = f_L(fp, u);
        out << format_double(u) << ',' << format_double(ell_1(fp, u)) << ',' << format_double(fl)
            << ',' << opt_cell(g.lower_at(u)) << ',' << opt_cell(g.upper_at(u)) << ','
            << opt_cell(a.upper().at(u)) << '\n';
    }
}

void write_json(const fs::path& path, const Json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return Json::parse(in);
}

Json to_json(const LangevinConfig& c) {
    return {{"beta", c.beta},         {"step", c.step},
            {"horizon", c.horizon},   {"record_stride", c.record_stride},
            {"seed", c.seed},         {"noise_scale", c.noise_scale},
            {"noise_substeps", c.noise_substeps}};
}

Json record_metadata(const TrajectoryRecord& rec) {
    return {{"order", rec.order},
            {"dim", rec.dim},
            {"model_fingerprint", rec.model_fingerprint},
            {"samples", rec.size()},
            {"max_constraint_error", rec.max_constraint_error},
            {"config", to_json(rec.config)}};
}

Json to_json(const PortraitReport& r) {
    Json j;
    j["transitions"] = Json::array();
    for (const auto& t : r.transitions) j["transitions"].push_back({{"t", t.t}, {"region", t.region}});
    j["tau_A0delta"] = opt_number(r.tau_A0delta);
    j["tau_absorbing"] = opt_number(r.tau_absorbing);
    j["violations"] = Json::array();
    for (const auto& v : r.violations)
        j["violations"].push_back({{"t", v.t}, {"from", v.from}, {"to", v.to}, {"rule", v.rule}});
    j["left_window"] = r.left_window;
    return j;
}

Json to_json(const ConditionIReport& r, bool with_windows) {
    Json j{{"fraction_ok", r.fraction_ok},
           {"worst_excursion", r.worst_excursion},
           {"k_sigma", r.k_sigma},
           {"abs_tol", r.abs_tol},
           {"discretization_tol", r.discretization_tol},
           {"window_count", r.windows.size()}};
    if (with_windows) {
        j["windows"] = Json::array();
        for (const auto& w : r.windows)
            j["windows"].push_back({{"t_begin", w.t_begin},
                                    {"t_end", w.t_end},
                                    {"du_dt", w.du_dt},
                                    {"dv_dt", w.dv_dt},
                                    {"se_u", w.se_u},
                                    {"se_v", w.se_v},
                                    {"F1", w.F1},
                                    {"F2L", w.F2L},
                                    {"F2U", w.F2U},
                                    {"tol_u", w.tol_u},
                                    {"tol_v", w.tol_v},
                                    {"ok", w.ok}});
    }
    return j;
}

Json to_json(const ConfinementReport& r) {
    auto dom = [](const Domain& d) { return Json{number(d.lo), number(d.hi)}; };
    Json j{{"side", r.side},
           {"tol", r.tol},
           {"checked", r.checked},
           {"violations", r.violations},
           {"violation_fraction", r.violation_fraction()},
           {"max_violation", r.max_violation},
           {"worst_u", opt_number(r.worst_u)},
           {"domain_lower", dom(r.lower)},
           {"domain_subject", dom(r.subject)},
           {"domain_upper", dom(r.upper)}};
    j["chain_holds"] = r.chain_holds ? Json(*r.chain_holds) : Json(nullptr);
    return j;
}

Json to_json(const RectangleReport& r) {
    return {{"tol", r.tol},
            {"tau_box", opt_number(r.tau_box)},
            {"checked", r.checked},
            {"max_violation", r.max_violation},
            {"first_violation_t", opt_number(r.first_violation_t)}};
}

Json to_json(const StatReport& r) {
    Json j{{"name", r.name},
           {"N", r.N},
           {"p", r.p},
           {"samples", r.values.size()},
           {"statistic", number(r.statistic)},
           {"threshold", number(r.threshold)}};
    j["pass"] = r.pass ? Json(*r.pass) : Json(nullptr);
    j["provenance"] = r.provenance;
    j["note"] = r.note;
    j["values"] = Json::array();
    for (double v : r.values) j["values"].push_back(number(v));
    return j;
}

Json to_json(const OpNormResult& r) {
    return {{"value", r.value}, {"iterations", r.iterations}, {"converged", r.converged}};
}

}  // namespace pspin
