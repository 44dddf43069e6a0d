#pragma once

/// Shared fixtures for the test suite: the two reference dispatches and a
/// scratch-directory helper for tests that write files.

#include <atomic>
#include <filesystem>
#include <string>

#include "dcgrid/model.hpp"

namespace testsupport {

/// Heavy dispatch: two battery branches, three fuel cells at 0.65 p.u.,
/// 2.95 p.u. load.  (C, L, D, tau) default to a comfortably stable triple.
inline dcgrid::MicrogridParams op1_params(double c_farad = 50e-3, double l_henry = 0.5e-3,
                                          double d = 0.4, double tau = 0.9e-3) {
    dcgrid::MicrogridParams p;
    p.ess = {{0.924, 0.0177, l_henry}, {0.924, 0.0177, l_henry}};
    p.control = {2.0, 1.0, d, 1.0, 0.5, tau};
    p.p_fc = {0.65, 0.65, 0.65};
    p.p_load = 2.95;
    p.c_farad = c_farad;
    return p;
}

/// Light dispatch: same branches at a higher battery voltage, two fuel
/// cells at 0.35 p.u., 1.20 p.u. load, droop set point 0.25 p.u.
inline dcgrid::MicrogridParams op2_params(double c_farad = 50e-3, double l_henry = 0.5e-3,
                                          double d = 0.4, double tau = 0.9e-3) {
    dcgrid::MicrogridParams p;
    p.ess = {{0.935, 0.0177, l_henry}, {0.935, 0.0177, l_henry}};
    p.control = {2.0, 1.0, d, 1.0, 0.25, tau};
    p.p_fc = {0.35, 0.35};
    p.p_load = 1.20;
    p.c_farad = c_farad;
    return p;
}

/// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& stem) {
    static std::atomic<unsigned> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("dcgrid_test_" + stem + "_" + std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

/// Path of a config file shipped with the repository.
inline std::string config_path(const char* name) {
    return std::string(DCGRID_CONFIG_DIR) + "/" + name;
}

} // namespace testsupport
