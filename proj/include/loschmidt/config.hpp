// Experiment configuration: flat `block.key = value` text files, overridable
// from the command line.  Angles are given in units of pi to match the
// figure captions.  The resolved configuration is echoed into every output
// file header, so a run can be reproduced from its data file alone.
#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "loschmidt/classical.hpp"
#include "loschmidt/common.hpp"
#include "loschmidt/csv.hpp"
#include "loschmidt/model.hpp"

namespace loschmidt {

struct ExperimentConfig {
    // model
    double k = 0.0;
    int n_dim = 0;
    double sigma = 0.0;
    // packet
    double r0_over_pi = 0.0;
    double p0_over_pi = 0.0;
    double xi_sq_fraction = 20.0;
    // run
    std::size_t t_max = 1000;
    double p0_grid_span_in_wp = 5.0;
    std::string output = "run";
    std::size_t estimator_steps = 100000;
    double fd_step = 0.0;  // 0 selects the default w_p/100 (clamped at 1e-6)
    std::size_t quad_budget = 400000;
    double msc2_c = 1.0;
    // optional sweep / scan / fit blocks
    std::vector<double> sweep_sigma;
    std::vector<double> scan_p0_over_pi;
    std::size_t fit_t_lo = 0;
    std::size_t fit_t_hi = 0;
    std::size_t fit_smooth = 0;  // 0 selects one S_f period

    RotorParams rotor() const { return make_rotor_params(k, n_dim, sigma); }
    PacketSpec packet(const RotorParams& params) const {
        return make_packet(r0_over_pi * std::numbers::pi_v<double>,
                           p0_over_pi * std::numbers::pi_v<double>, xi_sq_fraction, params);
    }
    double resolved_fd_step(const PacketSpec& pk) const {
        return fd_step > 0.0 ? fd_step : default_fd_step(pk);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<double> parse_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw validation_error("config: bad number '" + item + "' in " + key);
        }
    }
    if (out.empty()) throw validation_error("config: empty list for " + key);
    return out;
}

}  // namespace detail

// Applies one `block.key = value` entry; unknown keys are rejected so typos
// fail loudly instead of silently running defaults.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
    auto as_double = [&](const char* name) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw validation_error(std::string("config: bad number '") + value + "' for " + name);
        }
    };
    auto as_size = [&](const char* name) {
        const double v = as_double(name);
        if (v < 0 || v != std::floor(v))
            throw validation_error(std::string("config: ") + name +
                                   " must be a nonnegative integer");
        return static_cast<std::size_t>(v);
    };

    if (key == "model.k") cfg.k = as_double("model.k");
    else if (key == "model.n_dim") cfg.n_dim = static_cast<int>(as_size("model.n_dim"));
    else if (key == "model.sigma") cfg.sigma = as_double("model.sigma");
    else if (key == "packet.r0_over_pi") cfg.r0_over_pi = as_double("packet.r0_over_pi");
    else if (key == "packet.p0_over_pi") cfg.p0_over_pi = as_double("packet.p0_over_pi");
    else if (key == "packet.xi_sq_fraction") cfg.xi_sq_fraction = as_double("packet.xi_sq_fraction");
    else if (key == "run.t_max") cfg.t_max = as_size("run.t_max");
    else if (key == "run.p0_grid_span_in_wp") cfg.p0_grid_span_in_wp = as_double("run.p0_grid_span_in_wp");
    else if (key == "run.output") cfg.output = value;
    else if (key == "run.estimator_steps") cfg.estimator_steps = as_size("run.estimator_steps");
    else if (key == "run.fd_step") cfg.fd_step = as_double("run.fd_step");
    else if (key == "run.quad_budget") cfg.quad_budget = as_size("run.quad_budget");
    else if (key == "run.msc2_c") cfg.msc2_c = as_double("run.msc2_c");
    else if (key == "sweep.sigma") cfg.sweep_sigma = detail::parse_list(value, key);
    else if (key == "scan.p0_over_pi") cfg.scan_p0_over_pi = detail::parse_list(value, key);
    else if (key == "fit.t_lo") cfg.fit_t_lo = as_size("fit.t_lo");
    else if (key == "fit.t_hi") cfg.fit_t_hi = as_size("fit.t_hi");
    else if (key == "fit.smooth") cfg.fit_smooth = as_size("fit.smooth");
    else throw validation_error("config: unknown key '" + key + "'");
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("config: line " + std::to_string(line_no) +
                                   " is not 'key = value'");
        apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// `--set key=value` overrides, applied after the file.
inline void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& sets) {
    for (const std::string& s : sets) {
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw validation_error("--set expects key=value, got '" + s + "'");
        apply_config_entry(cfg, detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
    }
}

// Canonical echo of the resolved configuration, one `key = value` per line.
inline std::vector<std::string> config_echo(const ExperimentConfig& cfg) {
    auto fmt = [](const char* key, double v) {
        return std::string(key) + " = " + format_shortest(v);
    };
    std::vector<std::string> lines;
    lines.push_back(fmt("model.k", cfg.k));
    lines.push_back("model.n_dim = " + std::to_string(cfg.n_dim));
    lines.push_back(fmt("model.sigma", cfg.sigma));
    lines.push_back(fmt("packet.r0_over_pi", cfg.r0_over_pi));
    lines.push_back(fmt("packet.p0_over_pi", cfg.p0_over_pi));
    lines.push_back(fmt("packet.xi_sq_fraction", cfg.xi_sq_fraction));
    lines.push_back("run.t_max = " + std::to_string(cfg.t_max));
    lines.push_back(fmt("run.p0_grid_span_in_wp", cfg.p0_grid_span_in_wp));
    lines.push_back("run.output = " + cfg.output);
    lines.push_back("run.estimator_steps = " + std::to_string(cfg.estimator_steps));
    lines.push_back(fmt("run.fd_step", cfg.fd_step));
    lines.push_back("run.quad_budget = " + std::to_string(cfg.quad_budget));
    lines.push_back(fmt("run.msc2_c", cfg.msc2_c));
    auto list_line = [](const char* key, const std::vector<double>& v) {
        std::string s = std::string(key) + " =";
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? ", " : " ") + format_shortest(v[i]);
        return s;
    };
    if (!cfg.sweep_sigma.empty()) lines.push_back(list_line("sweep.sigma", cfg.sweep_sigma));
    if (!cfg.scan_p0_over_pi.empty())
        lines.push_back(list_line("scan.p0_over_pi", cfg.scan_p0_over_pi));
    if (cfg.fit_t_lo || cfg.fit_t_hi) {
        lines.push_back("fit.t_lo = " + std::to_string(cfg.fit_t_lo));
        lines.push_back("fit.t_hi = " + std::to_string(cfg.fit_t_hi));
        lines.push_back("fit.smooth = " + std::to_string(cfg.fit_smooth));
    }
    return lines;
}

}  // namespace loschmidt
