#include <catch2/catch_amalgamated.hpp>

#include "dcgrid/integrate.hpp"

#include <cmath>

using namespace dcgrid;
using Catch::Approx;

namespace {

/// dx/dt = -x, solution x0 * exp(-t).
bool decay(double, const Vec& x, Vec& dx) {
    dx = -x;
    return true;
}

/// Unit harmonic oscillator; conserves E = x1^2 + x2^2.
bool oscillator(double, const Vec& x, Vec& dx) {
    dx.resize(2);
    dx[0] = x[1];
    dx[1] = -x[0];
    return true;
}

} // namespace

TEST_CASE("adaptive integrator reproduces exponential decay", "[integrate]") {
    Vec x0(1);
    x0[0] = 1.0;
    IntegratorControls ctl;
    ctl.rel_tol = 1e-10;
    ctl.abs_tol = 1e-12;
    ctl.max_step = 0.05;
    ctl.sample_dt = 0.25;
    const OdeSolution sol = integrate_dopri5(decay, x0, 0.0, 1.0, ctl);
    REQUIRE_FALSE(sol.diverged);
    REQUIRE(sol.times.back() == Approx(1.0));
    REQUIRE(sol.states.back()[0] == Approx(std::exp(-1.0)).epsilon(1e-9));
    REQUIRE(sol.accepted_steps > 0);
    REQUIRE(sol.max_step_used <= ctl.max_step + 1e-15);
}

TEST_CASE("oscillator energy drifts below 1e-6 over 100 seconds", "[integrate][property]") {
    Vec x0(2);
    x0 << 1.0, 0.0;
    IntegratorControls ctl;
    ctl.rel_tol = 1e-10;
    ctl.abs_tol = 1e-12;
    ctl.max_step = 0.05;
    ctl.sample_dt = 1.0;
    const OdeSolution sol = integrate_dopri5(oscillator, x0, 0.0, 100.0, ctl);
    REQUIRE_FALSE(sol.diverged);
    for (const Vec& s : sol.states) {
        const double energy = s[0] * s[0] + s[1] * s[1];
        REQUIRE(std::abs(energy - 1.0) < 1e-6);
    }
}

TEST_CASE("dense output lands on the sample lattice", "[integrate]") {
    Vec x0(1);
    x0[0] = 1.0;
    IntegratorControls ctl;
    ctl.sample_dt = 0.01;
    ctl.max_step = 1e-4; // many steps per sample: interpolation, not step ends
    const OdeSolution sol = integrate_dopri5(decay, x0, 0.0, 0.1, ctl);
    REQUIRE_FALSE(sol.diverged);
    REQUIRE(sol.times.front() == 0.0);
    REQUIRE(sol.times.back() == Approx(0.1).margin(1e-12));
    REQUIRE(sol.times.size() == 11);
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        if (k > 0) REQUIRE(sol.times[k] > sol.times[k - 1]);
        REQUIRE(sol.times[k] == Approx(0.01 * static_cast<double>(k)).margin(1e-12));
        REQUIRE(sol.states[k][0] == Approx(std::exp(-sol.times[k])).epsilon(1e-8));
    }
}

TEST_CASE("rk4 halving the step cuts the error by about sixteen",
          "[integrate][property]") {
    Vec x0(1);
    x0[0] = 1.0;
    const double exact = std::exp(-1.0);
    const OdeSolution coarse = integrate_rk4(decay, x0, 0.0, 1.0, 0.1);
    const OdeSolution fine = integrate_rk4(decay, x0, 0.0, 1.0, 0.05);
    REQUIRE_FALSE(coarse.diverged);
    REQUIRE_FALSE(fine.diverged);
    const double err_coarse = std::abs(coarse.states.back()[0] - exact);
    const double err_fine = std::abs(fine.states.back()[0] - exact);
    REQUIRE(err_fine > 0.0);
    const double ratio = err_coarse / err_fine;
    REQUIRE(ratio > 12.0); // fourth order: ratio ~ 2^4
    REQUIRE(ratio < 22.0);
}

TEST_CASE("rk4 samples every step on the fixed lattice", "[integrate]") {
    Vec x0(1);
    x0[0] = 1.0;
    const OdeSolution sol = integrate_rk4(decay, x0, 0.0, 1.0, 0.25);
    REQUIRE(sol.times.size() == 5);
    for (std::size_t k = 0; k < sol.times.size(); ++k)
        REQUIRE(sol.times[k] == Approx(0.25 * static_cast<double>(k)).margin(1e-12));
}

TEST_CASE("domain violations truncate instead of throwing", "[integrate]") {
    // Constant descent that leaves the admissible region x > 0.5 at t = 0.5.
    auto guarded = [](double, const Vec& x, Vec& dx) {
        if (x[0] <= 0.5) return false;
        dx.setConstant(x.size(), -1.0);
        return true;
    };
    Vec x0(1);
    x0[0] = 1.0;
    IntegratorControls ctl;
    ctl.sample_dt = 0.05;
    ctl.max_step = 0.05;
    const OdeSolution sol = integrate_dopri5(guarded, x0, 0.0, 10.0, ctl);
    REQUIRE(sol.diverged);
    REQUIRE(sol.times.back() < 10.0);
    REQUIRE(sol.times.back() == Approx(0.5).margin(0.06));
    REQUIRE(sol.states.back()[0] >= 0.5 - 1e-9); // never stepped past the wall
}

TEST_CASE("blowup bound flags runaway growth", "[integrate]") {
    auto runaway = [](double, const Vec& x, Vec& dx) {
        dx = 10.0 * x;
        return true;
    };
    Vec x0(1);
    x0[0] = 1.0;
    IntegratorControls ctl;
    ctl.blowup_abs = 1e3;
    ctl.max_step = 0.01;
    ctl.sample_dt = 0.1;
    const OdeSolution sol = integrate_dopri5(runaway, x0, 0.0, 2.0, ctl);
    REQUIRE(sol.diverged);
    REQUIRE(sol.times.back() < 2.0);
    REQUIRE(sol.times.back() == Approx(std::log(1e3) / 10.0).margin(0.05));
    REQUIRE(sol.states.back()[0] > 1e3);
}

TEST_CASE("integration is bitwise repeatable", "[integrate][property]") {
    Vec x0(2);
    x0 << 1.0, 0.0;
    const OdeSolution a = integrate_dopri5(oscillator, x0, 0.0, 5.0, {});
    const OdeSolution b = integrate_dopri5(oscillator, x0, 0.0, 5.0, {});
    REQUIRE(a.times == b.times);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k)
        REQUIRE((a.states[k].array() == b.states[k].array()).all());
}
