#pragma once

// CSV / JSON emitters and readers for the experiment artifacts.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include <json.hpp>

#include "iscat/dnl.hpp"
#include "iscat/domain.hpp"
#include "iscat/forward.hpp"
#include "iscat/virtexp.hpp"

namespace iscat::io {

using nlohmann::json;

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw IngestError("io: cannot open '" + path.string() + "' for writing");
    out << std::setprecision(17);
    return out;
}

/// Multistatic data: header (N_R, N_T, frequency, ring radius), then one
/// row (m, t, Re, Im) per sample.
inline void write_multistatic_csv(const std::filesystem::path& path, const MultistaticData& d) {
    auto out = open_out(path);
    out << "# n_rx,n_tx,frequency_hz,ring_radius_m\n"
        << d.n_rx() << ',' << d.n_tx() << ',' << d.frequency << ',' << d.probes.radius << '\n'
        << "m,t,re,im\n";
    for (int m = 0; m < d.n_rx(); ++m)
        for (int t = 0; t < d.n_tx(); ++t)
            out << m << ',' << t << ',' << d.values(m, t).real() << ',' << d.values(m, t).imag() << '\n';
}

inline MultistaticData read_multistatic_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("io: cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);  // comment header
    std::getline(in, line);
    int n_rx = 0, n_tx = 0;
    double freq = 0.0, radius = 0.0;
    {
        char c;
        std::stringstream ss(line);
        ss >> n_rx >> c >> n_tx >> c >> freq >> c >> radius;
    }
    if (n_rx <= 0 || n_tx <= 0) throw IngestError("io: bad multistatic header");
    MultistaticData d;
    d.frequency = freq;
    d.probes = make_probe_ring(radius, n_tx, n_rx);
    d.values.resize(n_rx, n_tx);
    std::getline(in, line);  // column names
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        int m, t;
        double re, im;
        char c;
        ss >> m >> c >> t >> c >> re >> c >> im;
        d.values(m, t) = {re, im};
    }
    return d;
}

/// Norm curve rows: r_over_lambda, norm, model, parameter.
inline void write_norm_curve_csv(const std::filesystem::path& path, const NormCurve& curve,
                                 const std::string& param_label) {
    auto out = open_out(path);
    out << "r_over_lambda,norm,model,parameter\n";
    for (std::size_t i = 0; i < curve.radii.size(); ++i)
        out << curve.radii[i] << ',' << curve.norms[i] << ',' << curve.kind.name() << ','
            << param_label << '\n';
}

inline NormCurve read_norm_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("io: cannot open '" + path.string() + "'");
    NormCurve c;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        c.radii.push_back(std::stod(field));
        std::getline(ss, field, ',');
        c.norms.push_back(std::stod(field));
    }
    return c;
}

/// Complex cell map, row-major: cell, re, im.
inline void write_field_csv(const std::filesystem::path& path, const VectorXcd& v) {
    auto out = open_out(path);
    out << "cell,re,im\n";
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out << i << ',' << v[i].real() << ',' << v[i].imag() << '\n';
}

inline void write_cost_history_csv(const std::filesystem::path& path, const std::vector<double>& h) {
    auto out = open_out(path);
    out << "iteration,cost\n";
    for (std::size_t i = 0; i < h.size(); ++i) out << i << ',' << h[i] << '\n';
}

/// Debug dump of a discrete operator (row-major complex pairs).
inline void write_operator_csv(const std::filesystem::path& path, const DiscreteOperator& op) {
    auto out = open_out(path);
    out << "# rows=" << op.entries.rows() << " cols=" << op.entries.cols() << '\n';
    for (Eigen::Index i = 0; i < op.entries.rows(); ++i) {
        for (Eigen::Index j = 0; j < op.entries.cols(); ++j) {
            if (j) out << ',';
            out << op.entries(i, j).real() << ',' << op.entries(i, j).imag();
        }
        out << '\n';
    }
}

inline json probes_to_json(const ProbeRing& probes) {
    json j;
    j["radius_m"] = probes.radius;
    j["tx_angles_rad"] = std::vector<double>(probes.tx_angles.begin(), probes.tx_angles.end());
    j["rx_angles_rad"] = std::vector<double>(probes.rx_angles.begin(), probes.rx_angles.end());
    return j;
}

inline ProbeRing probes_from_json(const json& j) {
    ProbeRing p;
    p.radius = j.at("radius_m").get<double>();
    const auto tx = j.at("tx_angles_rad").get<std::vector<double>>();
    const auto rx = j.at("rx_angles_rad").get<std::vector<double>>();
    p.tx_angles = Eigen::Map<const VectorXd>(tx.data(), static_cast<Eigen::Index>(tx.size()));
    p.rx_angles = Eigen::Map<const VectorXd>(rx.data(), static_cast<Eigen::Index>(rx.size()));
    return p;
}

/// VE coefficient rows: pivot_x, pivot_y, then alpha re/im per transmitter.
inline void write_ve_csv(const std::filesystem::path& path, const std::vector<VirtualExperiment>& ves) {
    auto out = open_out(path);
    out << "pivot_x,pivot_y,alpha_re_im...\n";
    for (const auto& ve : ves) {
        out << ve.pivot.x() << ',' << ve.pivot.y();
        for (Eigen::Index t = 0; t < ve.alpha.size(); ++t)
            out << ',' << ve.alpha[t].real() << ',' << ve.alpha[t].imag();
        out << '\n';
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

} // namespace iscat::io
