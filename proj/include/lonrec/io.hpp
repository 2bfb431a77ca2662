#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lonrec/harness.hpp"
#include "lonrec/loss.hpp"
#include "lonrec/net.hpp"
#include "lonrec/probes.hpp"
#include "lonrec/recon.hpp"

namespace lonrec {

// Writers format every float with %.17g themselves: 17 significant digits
// round-trip doubles exactly and the bytes never depend on a JSON library's
// shortest-representation algorithm. Readers go through nlohmann::json.
// Mode indices are 1-based in every file to match the matrix subscripts.

namespace io {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Shorter form for CSV axes (sigma, eps) where grid values are human-chosen.
inline std::string fmt_axis(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << content;
    if (!out) throw Error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw FormatError("malformed JSON in " + what);
    return j;
}

// -- matrices ---------------------------------------------------------------

inline std::string matrix_to_json(const Mat& m) {
    std::ostringstream s;
    s << "{\n  \"m\": " << m.rows() << ",\n";
    auto part = [&](const char* name, auto get) {
        s << "  \"" << name << "\": [";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            s << (r ? ",\n          [" : "[");
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                s << (c ? ", " : "") << fmt(get(m(r, c)));
            s << "]";
        }
        s << "]";
    };
    part("re", [](Complex z) { return z.real(); });
    s << ",\n";
    part("im", [](Complex z) { return z.imag(); });
    s << "\n}\n";
    return s.str();
}

inline Mat matrix_from_json(const nlohmann::json& j) {
    try {
        const int m = j.at("m").get<int>();
        if (m < 1) throw FormatError("matrix: bad dimension");
        const auto& re = j.at("re");
        const auto& im = j.at("im");
        Mat out(m, m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                out(r, c) = Complex(re.at(r).at(c).get<double>(), im.at(r).at(c).get<double>());
        if (!is_finite(out)) throw FormatError("matrix: non-finite entries");
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("matrix JSON: ") + e.what());
    }
}

inline void save_matrix(const std::string& path, const Mat& m) {
    write_file(path, matrix_to_json(m));
}

inline Mat load_matrix(const std::string& path) {
    return matrix_from_json(parse_json(read_file(path), path));
}

// -- mesh parameters ----------------------------------------------------------

inline std::string reck_to_json(const ReckParameters& p) {
    std::ostringstream s;
    s << "{\n  \"m\": " << p.m << ",\n  \"cells\": [\n";
    for (std::size_t i = 0; i < p.cells.size(); ++i) {
        const auto& c = p.cells[i];
        s << "    {\"a\": " << (c.a + 1) << ", \"lambda\": " << fmt(c.lambda)
          << ", \"phi\": " << fmt(c.phi) << "}" << (i + 1 < p.cells.size() ? "," : "") << "\n";
    }
    s << "  ]\n}\n";
    return s.str();
}

inline ReckParameters reck_from_json(const nlohmann::json& j) {
    try {
        ReckParameters p;
        p.m = j.at("m").get<int>();
        for (const auto& c : j.at("cells"))
            p.cells.push_back(
                {c.at("a").get<int>() - 1, c.at("lambda").get<double>(), c.at("phi").get<double>()});
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("mesh JSON: ") + e.what());
    }
}

inline void save_reck(const std::string& path, const ReckParameters& p) {
    write_file(path, reck_to_json(p));
}

inline ReckParameters load_reck(const std::string& path) {
    return reck_from_json(parse_json(read_file(path), path));
}

// -- lossy networks -----------------------------------------------------------

inline std::string lossy_network_to_json(const LossyNetwork& net) {
    std::ostringstream s;
    s << "{\n  \"m\": " << net.m << ",\n  \"cells\": [\n";
    for (std::size_t i = 0; i < net.core.cells.size(); ++i) {
        const auto& c = net.core.cells[i];
        s << "    {\"a\": " << (c.a + 1) << ", \"lambda\": " << fmt(c.lambda)
          << ", \"phi\": " << fmt(c.phi) << "}" << (i + 1 < net.core.cells.size() ? "," : "") << "\n";
    }
    s << "  ],\n";
    auto vec = [&](const char* name, const RealVec& v) {
        s << "  \"" << name << "\": [";
        for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << fmt(v(i));
        s << "]";
    };
    vec("alpha_in", net.alpha_in);
    s << ",\n";
    vec("alpha_out", net.alpha_out);
    s << ",\n";
    vec("beta", net.beta);
    s << "\n}\n";
    return s.str();
}

inline LossyNetwork lossy_network_from_json(const nlohmann::json& j) {
    try {
        LossyNetwork net;
        net.m = j.at("m").get<int>();
        net.core.m = net.m;
        for (const auto& c : j.at("cells"))
            net.core.cells.push_back(
                {c.at("a").get<int>() - 1, c.at("lambda").get<double>(), c.at("phi").get<double>()});
        auto vec = [&](const char* name) {
            const auto& arr = j.at(name);
            RealVec v(arr.size());
            for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
            return v;
        };
        net.alpha_in = vec("alpha_in");
        net.alpha_out = vec("alpha_out");
        net.beta = vec("beta");
        net.validate();
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("lossy network JSON: ") + e.what());
    }
}

inline void save_lossy_network(const std::string& path, const LossyNetwork& net) {
    write_file(path, lossy_network_to_json(net));
}

inline LossyNetwork load_lossy_network(const std::string& path) {
    return lossy_network_from_json(parse_json(read_file(path), path));
}

// -- primary data -------------------------------------------------------------

inline std::string primary_data_to_json(const PrimaryData& d) {
    std::ostringstream s;
    s << "{\n  \"m\": " << d.m << ",\n  \"selection\": \"" << to_string(d.vis.selection)
      << "\",\n  \"sigma\": " << fmt(d.sigma) << ",\n  \"seed\": " << d.seed
      << ",\n  \"visibilities\": [\n";
    for (std::size_t i = 0; i < d.vis.records.size(); ++i) {
        const auto& r = d.vis.records[i];
        s << "    {\"k\": " << (r.k + 1) << ", \"l\": " << (r.l + 1) << ", \"i\": " << (r.i + 1)
          << ", \"j\": " << (r.j + 1) << ", \"v\": " << fmt(r.value) << "}"
          << (i + 1 < d.vis.records.size() ? "," : "") << "\n";
    }
    s << "  ],\n";
    auto matrix = [&](const char* name, const RealMat& m) {
        s << "  \"" << name << "\": [";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            s << (r ? ",\n           [" : "[");
            for (Eigen::Index c = 0; c < m.cols(); ++c) s << (c ? ", " : "") << fmt(m(r, c));
            s << "]";
        }
        s << "]";
    };
    matrix("tau", d.tau.tau);
    s << ",\n";
    matrix("theta", d.theta.theta);
    s << "\n}\n";
    return s.str();
}

inline PrimaryData primary_data_from_json(const nlohmann::json& j) {
    try {
        PrimaryData d;
        d.m = j.at("m").get<int>();
        const std::string sel = j.at("selection").get<std::string>();
        d.vis.m = d.m;
        d.vis.selection = sel == "full"      ? Selection::full
                          : sel == "reduced" ? Selection::reduced
                                             : Selection::bristol_sufficient;
        d.sigma = j.at("sigma").get<double>();
        d.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& r : j.at("visibilities"))
            d.vis.records.push_back({r.at("k").get<int>() - 1, r.at("l").get<int>() - 1,
                                     r.at("i").get<int>() - 1, r.at("j").get<int>() - 1,
                                     r.at("v").get<double>()});
        auto matrix = [&](const char* name) {
            const auto& arr = j.at(name);
            RealMat m(d.m, d.m);
            for (int r = 0; r < d.m; ++r)
                for (int c = 0; c < d.m; ++c) m(r, c) = arr.at(r).at(c).get<double>();
            return m;
        };
        d.tau.m = d.m;
        d.tau.tau = matrix("tau");
        d.theta.m = d.m;
        d.theta.theta = matrix("theta");
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("primary data JSON: ") + e.what());
    }
}

inline void save_primary_data(const std::string& path, const PrimaryData& d) {
    write_file(path, primary_data_to_json(d));
}

inline PrimaryData load_primary_data(const std::string& path) {
    return primary_data_from_json(parse_json(read_file(path), path));
}

inline std::string visibility_csv(const VisibilitySet& set) {
    std::ostringstream s;
    s << "k,l,i,j,v\n";
    for (const auto& r : set.records)
        s << (r.k + 1) << "," << (r.l + 1) << "," << (r.i + 1) << "," << (r.j + 1) << ","
          << fmt(r.value) << "\n";
    return s.str();
}

// -- reconstruction results -----------------------------------------------------

inline std::string result_to_json(const ReconstructionResult& res) {
    std::ostringstream s;
    s << "{\n  \"method\": \"" << to_string(res.method) << "\",\n  \"u_hat\": ";
    std::string u = matrix_to_json(res.u_hat.mat());
    // indent the nested object by two spaces
    std::string indented;
    for (char ch : u) {
        indented += ch;
        if (ch == '\n') indented += "  ";
    }
    while (!indented.empty() && (indented.back() == ' ' || indented.back() == '\n'))
        indented.pop_back();
    s << indented;
    if (res.params) {
        s << ",\n  \"params\": {\"m\": " << res.params->m << ", \"cells\": [";
        for (std::size_t i = 0; i < res.params->cells.size(); ++i) {
            const auto& c = res.params->cells[i];
            s << (i ? ", " : "") << "{\"a\": " << (c.a + 1) << ", \"lambda\": " << fmt(c.lambda)
              << ", \"phi\": " << fmt(c.phi) << "}";
        }
        s << "]}";
    }
    if (res.residual) s << ",\n  \"residual\": " << fmt(*res.residual);
    s << ",\n  \"diagnostics\": {\"iterations\": " << res.diagnostics.iterations
      << ", \"converged\": " << (res.diagnostics.converged ? "true" : "false")
      << ", \"clamped_cosines\": " << res.diagnostics.clamped_cosines
      << ", \"skipped_records\": " << res.diagnostics.skipped_records
      << ", \"records_used\": " << res.diagnostics.records_used << "}\n}\n";
    return s.str();
}

inline void save_result(const std::string& path, const ReconstructionResult& res) {
    write_file(path, result_to_json(res));
}

// -- sweep CSV ------------------------------------------------------------------

inline std::string trials_csv(const std::vector<TrialRecord>& trials) {
    std::ostringstream s;
    s << "m,j,sigma,method,fidelity,residual,skipped,runtime_ms\n";
    for (const auto& t : trials)
        s << t.m << "," << t.j << "," << fmt_axis(t.sigma) << "," << to_string(t.method) << ","
          << fmt(t.fidelity) << "," << fmt(t.residual) << "," << t.skipped << ","
          << fmt(t.runtime_ms) << "\n";
    return s.str();
}

inline std::string summaries_csv(const std::vector<CellSummary>& summaries) {
    std::ostringstream s;
    s << "m,sigma,method,f_mode,err_left,err_right,family,p1,p2,p3,n\n";
    for (const auto& c : summaries)
        s << c.m << "," << fmt_axis(c.sigma) << "," << to_string(c.method) << "," << fmt(c.fit.mode)
          << "," << fmt(c.fit.err_left) << "," << fmt(c.fit.err_right) << ","
          << to_string(c.fit.family) << "," << fmt(c.fit.p1) << "," << fmt(c.fit.p2) << ","
          << fmt(c.fit.p3) << "," << c.fit.n << "\n";
    return s.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw FormatError(std::string("trailing characters in ") + what);
        return v;
    } catch (const std::exception&) {
        throw FormatError(std::string("bad number in CSV field ") + what + ": '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const char* what) {
    const double v = parse_double(s, what);
    if (v != static_cast<int>(v)) throw FormatError(std::string("expected integer in ") + what);
    return static_cast<int>(v);
}

} // namespace detail

inline std::vector<TrialRecord> trials_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line) !=
                                       std::vector<std::string>{"m", "j", "sigma", "method",
                                                                "fidelity", "residual", "skipped",
                                                                "runtime_ms"})
        throw FormatError("trials CSV: bad header");
    std::vector<TrialRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 8) throw FormatError("trials CSV: wrong field count");
        TrialRecord t;
        t.m = detail::parse_int(f[0], "m");
        t.j = detail::parse_int(f[1], "j");
        t.sigma = detail::parse_double(f[2], "sigma");
        t.method = method_from_string(f[3]);
        t.fidelity = detail::parse_double(f[4], "fidelity");
        t.residual = detail::parse_double(f[5], "residual");
        t.skipped = detail::parse_int(f[6], "skipped");
        t.runtime_ms = detail::parse_double(f[7], "runtime_ms");
        out.push_back(t);
    }
    return out;
}

inline std::vector<CellSummary> summaries_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        detail::split_csv_line(line) != std::vector<std::string>{"m", "sigma", "method", "f_mode",
                                                                 "err_left", "err_right", "family",
                                                                 "p1", "p2", "p3", "n"})
        throw FormatError("summary CSV: bad header");
    std::vector<CellSummary> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 11) throw FormatError("summary CSV: wrong field count");
        CellSummary c;
        c.m = detail::parse_int(f[0], "m");
        c.sigma = detail::parse_double(f[1], "sigma");
        c.method = method_from_string(f[2]);
        c.fit.mode = detail::parse_double(f[3], "f_mode");
        c.fit.err_left = detail::parse_double(f[4], "err_left");
        c.fit.err_right = detail::parse_double(f[5], "err_right");
        c.fit.family = fit_family_from_string(f[6]);
        c.fit.p1 = detail::parse_double(f[7], "p1");
        c.fit.p2 = detail::parse_double(f[8], "p2");
        c.fit.p3 = detail::parse_double(f[9], "p3");
        c.fit.n = detail::parse_int(f[10], "n");
        out.push_back(c);
    }
    return out;
}

// -- lossy experiment CSV ---------------------------------------------------------

inline std::string lossy_trials_csv(const std::vector<LossyTrialRecord>& trials) {
    std::ostringstream s;
    s << "eps,n,method,q_t,q_vis,fid_embedded\n";
    for (const auto& t : trials) {
        s << fmt_axis(t.eps) << "," << t.n << "," << to_string(t.method) << "," << fmt(t.q_t) << ","
          << fmt(t.q_vis) << ",";
        if (std::isfinite(t.fidelity_embedded)) s << fmt(t.fidelity_embedded);
        s << "\n";
    }
    return s.str();
}

inline std::string lossy_summaries_csv(const std::vector<LossySummary>& summaries) {
    std::ostringstream s;
    s << "eps,method,measure,mode,err_left,err_right,family,p1,p2,p3,n\n";
    for (const auto& c : summaries)
        s << fmt_axis(c.eps) << "," << to_string(c.method) << "," << c.measure << ","
          << fmt(c.fit.mode) << "," << fmt(c.fit.err_left) << "," << fmt(c.fit.err_right) << ","
          << to_string(c.fit.family) << "," << fmt(c.fit.p1) << "," << fmt(c.fit.p2) << ","
          << fmt(c.fit.p3) << "," << c.fit.n << "\n";
    return s.str();
}

} // namespace io
} // namespace lonrec
