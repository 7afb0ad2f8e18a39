#ifndef POLSYNTH_SERVO_HPP
#define POLSYNTH_SERVO_HPP

// Closed-loop servo simulation: PI^2D controller, actuator low-pass, and a
// transport dead time, with step/impulse/frequency-response extraction.
//
// Config JSON:
//   { "plant":      {"dead_time_s", "actuator_pole_hz", "gain"},
//     "controller": {"kp", "ki", "kii", "kd", "derivative_rolloff_hz"},
//     "sim":        {"dt_s", "t_end_s"} }
// Responses as CSV: "t_s,value" and "freq_hz,mag_db".

#include <cmath>
#include <complex>
#include <cstdio>
#include <deque>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsynth/constants.hpp"

namespace polsynth {

struct PlantModel {
    double dead_time = 300e-9;      // s
    double actuator_pole = 5e5;     // Hz; first-order low-pass of the actuator
    double gain = 1.0;

    void validate() const {
        if (dead_time < 0.0) throw std::invalid_argument("PlantModel: dead_time < 0");
        if (!(actuator_pole > 0.0)) throw std::invalid_argument("PlantModel: pole must be > 0");
    }
};

struct ControllerParams {
    double kp = 0.0;
    double ki = 0.0;   // 1/s
    double kii = 0.0;  // 1/s^2
    double kd = 0.0;   // s
    double derivative_rolloff = 1e7;  // Hz

    void validate() const {
        if (kp < 0.0 || ki < 0.0 || kii < 0.0 || kd < 0.0)
            throw std::invalid_argument("ControllerParams: negative gain");
        if (!(derivative_rolloff > 0.0))
            throw std::invalid_argument("ControllerParams: rolloff must be > 0");
    }
};

// Time- or frequency-domain record; step/impulse fill (times, values),
// freq_response fills (freqs, magnitude_db).
struct ResponseRecord {
    std::vector<double> times;         // s
    std::vector<double> values;        // setpoint-normalized
    std::vector<double> freqs;         // Hz
    std::vector<double> magnitude_db;  // dB relative to DC
};

// Discrete-time unity-feedback simulation of the setpoint step response.
// Controller terms are bilinear-transform discretizations; the actuator pole
// uses the exact zero-order-hold update; the dead time is an integer-sample
// delay line (dead_time/dt must be an integer).
inline ResponseRecord simulate_step(const PlantModel& plant, const ControllerParams& ctrl,
                                    double dt, double t_end) {
    plant.validate();
    ctrl.validate();
    if (dt <= 0.0 || t_end <= dt) throw std::invalid_argument("simulate_step: bad dt or t_end");
    if (plant.dead_time > 0.0) {
        if (dt > plant.dead_time / 10.0 + 1e-18)
            throw std::invalid_argument("simulate_step: need dt <= dead_time/10");
        const double ratio = plant.dead_time / dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-6)
            throw std::invalid_argument("simulate_step: dead_time/dt must be an integer");
    }
    if (std::isfinite(plant.actuator_pole) && dt > 1.0 / (20.0 * plant.actuator_pole))
        throw std::invalid_argument("simulate_step: need dt <= 1/(20 actuator_pole)");

    const std::size_t n = std::size_t(std::llround(t_end / dt));
    const std::size_t m = std::size_t(std::llround(plant.dead_time / dt));
    const double wr = 2.0 * constants::pi * ctrl.derivative_rolloff;
    const double c0 = 1.0 + 2.0 / (dt * wr);
    const double c1 = 1.0 - 2.0 / (dt * wr);
    const double alpha = std::exp(-2.0 * constants::pi * plant.actuator_pole * dt);

    ResponseRecord rec;
    rec.times.resize(n + 1);
    rec.values.resize(n + 1);
    rec.times[0] = 0.0;
    rec.values[0] = 0.0;

    double y = 0.0, i1 = 0.0, i2 = 0.0, e_prev = 0.0, d_prev = 0.0;
    std::deque<double> delay(m + 1, 0.0);
    const double setpoint = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = setpoint - y;
        const double i1_prev = i1;
        i1 += dt / 2.0 * (e + e_prev);
        i2 += dt / 2.0 * (i1 + i1_prev);
        const double d = (ctrl.kd * (2.0 / dt) * (e - e_prev) - c1 * d_prev) / c0;
        const double u = ctrl.kp * e + ctrl.ki * i1 + ctrl.kii * i2 + d;
        delay.push_back(u);
        const double u_delayed = delay.front();
        delay.pop_front();
        y = alpha * y + (1.0 - alpha) * plant.gain * u_delayed;
        rec.times[k + 1] = double(k + 1) * dt;
        rec.values[k + 1] = y;
        e_prev = e;
        d_prev = d;
        if (std::abs(y) > 10.0 * setpoint)
            throw std::runtime_error("simulate_step: loop unstable (output exceeded 10x setpoint)");
    }
    return rec;
}

// Central-difference time derivative of a step record (one-sided endpoints).
inline ResponseRecord impulse_from_step(const ResponseRecord& step) {
    const std::size_t n = step.times.size();
    if (n < 3 || step.values.size() != n)
        throw std::invalid_argument("impulse_from_step: record too short");
    const double dt = step.times[1] - step.times[0];
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (std::abs((step.times[i + 1] - step.times[i]) - dt) > 1e-9 * dt)
            throw std::invalid_argument("impulse_from_step: non-uniform time grid");
    ResponseRecord imp;
    imp.times = step.times;
    imp.values.resize(n);
    imp.values[0] = (step.values[1] - step.values[0]) / dt;
    imp.values[n - 1] = (step.values[n - 1] - step.values[n - 2]) / dt;
    for (std::size_t i = 1; i + 1 < n; ++i)
        imp.values[i] = (step.values[i + 1] - step.values[i - 1]) / (2.0 * dt);
    return imp;
}

// Discrete Fourier transform of the impulse response times dt, evaluated on a
// log-spaced frequency grid; magnitude in dB relative to DC.
inline ResponseRecord freq_response(const ResponseRecord& impulse, double f_lo = 0.0,
                                    double f_hi = 0.0, int points_per_decade = 48) {
    const std::size_t n = impulse.times.size();
    if (n < 3 || impulse.values.size() != n)
        throw std::invalid_argument("freq_response: record too short");
    const double dt = impulse.times[1] - impulse.times[0];

    double peak = 0.0, tail = 0.0;
    for (double v : impulse.values) peak = std::max(peak, std::abs(v));
    for (std::size_t i = n - std::min<std::size_t>(n, 16); i < n; ++i)
        tail = std::max(tail, std::abs(impulse.values[i]));
    if (peak > 0.0 && tail > 1e-4 * peak)
        throw std::invalid_argument(
            "freq_response: impulse has not decayed below 1e-4 of its peak (windowing bias)");

    const double t_end = impulse.times.back();
    if (f_lo <= 0.0) f_lo = 2.0 / t_end;
    if (f_hi <= 0.0) f_hi = 0.25 / dt;

    double dc = 0.0;
    for (double v : impulse.values) dc += v;
    dc *= dt;
    if (dc == 0.0) throw std::invalid_argument("freq_response: zero DC gain");

    ResponseRecord out;
    const int decades_pts =
        int(std::ceil(std::log10(f_hi / f_lo) * points_per_decade)) + 1;
    out.freqs.reserve(std::size_t(decades_pts));
    out.magnitude_db.reserve(std::size_t(decades_pts));
    for (int i = 0; i < decades_pts; ++i) {
        const double f = f_lo * std::pow(10.0, double(i) / points_per_decade);
        if (f > f_hi * (1.0 + 1e-12)) break;
        std::complex<double> h(0.0, 0.0);
        const double w = 2.0 * constants::pi * f;
        for (std::size_t k = 0; k < n; ++k)
            h += impulse.values[k] * std::polar(1.0, -w * impulse.times[k]);
        h *= dt;
        out.freqs.push_back(f);
        out.magnitude_db.push_back(20.0 * std::log10(std::abs(h) / std::abs(dc)));
    }
    return out;
}

// First -3 dB crossing, interpolated on the log-frequency axis.
inline double bandwidth_3db(const ResponseRecord& freq) {
    if (freq.freqs.size() != freq.magnitude_db.size() || freq.freqs.size() < 2)
        throw std::invalid_argument("bandwidth_3db: malformed record");
    for (std::size_t i = 0; i < freq.freqs.size(); ++i) {
        if (freq.magnitude_db[i] <= -3.0) {
            if (i == 0) return freq.freqs[0];
            const double m0 = freq.magnitude_db[i - 1], m1 = freq.magnitude_db[i];
            const double l0 = std::log(freq.freqs[i - 1]), l1 = std::log(freq.freqs[i]);
            return std::exp(l0 + (-3.0 - m0) * (l1 - l0) / (m1 - m0));
        }
    }
    throw std::invalid_argument("bandwidth_3db: magnitude never crosses -3 dB within the grid");
}

// ---------------------------------------------------------------------------
// Config and response I/O

struct ServoConfig {
    PlantModel plant;
    ControllerParams controller;
    double dt = 5e-9;
    double t_end = 50e-6;
};

inline ServoConfig servo_config_from_json(const nlohmann::json& j) {
    ServoConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "plant") {
            for (auto p = it.value().begin(); p != it.value().end(); ++p) {
                if (p.key() == "dead_time_s") cfg.plant.dead_time = p.value().get<double>();
                else if (p.key() == "actuator_pole_hz")
                    cfg.plant.actuator_pole = p.value().get<double>();
                else if (p.key() == "gain") cfg.plant.gain = p.value().get<double>();
                else throw std::invalid_argument("ServoConfig: unknown plant key '" + p.key() + "'");
            }
        } else if (key == "controller") {
            for (auto p = it.value().begin(); p != it.value().end(); ++p) {
                if (p.key() == "kp") cfg.controller.kp = p.value().get<double>();
                else if (p.key() == "ki") cfg.controller.ki = p.value().get<double>();
                else if (p.key() == "kii") cfg.controller.kii = p.value().get<double>();
                else if (p.key() == "kd") cfg.controller.kd = p.value().get<double>();
                else if (p.key() == "derivative_rolloff_hz")
                    cfg.controller.derivative_rolloff = p.value().get<double>();
                else
                    throw std::invalid_argument("ServoConfig: unknown controller key '" + p.key() +
                                                "'");
            }
        } else if (key == "sim") {
            for (auto p = it.value().begin(); p != it.value().end(); ++p) {
                if (p.key() == "dt_s") cfg.dt = p.value().get<double>();
                else if (p.key() == "t_end_s") cfg.t_end = p.value().get<double>();
                else throw std::invalid_argument("ServoConfig: unknown sim key '" + p.key() + "'");
            }
        } else {
            throw std::invalid_argument("ServoConfig: unknown key '" + key + "'");
        }
    }
    cfg.plant.validate();
    cfg.controller.validate();
    return cfg;
}

inline nlohmann::json servo_config_to_json(const ServoConfig& cfg) {
    return nlohmann::json{
        {"plant",
         {{"dead_time_s", cfg.plant.dead_time},
          {"actuator_pole_hz", cfg.plant.actuator_pole},
          {"gain", cfg.plant.gain}}},
        {"controller",
         {{"kp", cfg.controller.kp},
          {"ki", cfg.controller.ki},
          {"kii", cfg.controller.kii},
          {"kd", cfg.controller.kd},
          {"derivative_rolloff_hz", cfg.controller.derivative_rolloff}}},
        {"sim", {{"dt_s", cfg.dt}, {"t_end_s", cfg.t_end}}}};
}

inline ServoConfig load_servo_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open servo config '" + path + "'");
    nlohmann::json j;
    in >> j;
    return servo_config_from_json(j);
}

inline void save_time_response_csv(std::ostream& out, const ResponseRecord& rec) {
    out << "t_s,value\n";
    char buf[80];
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", rec.times[i], rec.values[i]);
        out << buf;
    }
}

inline void save_freq_response_csv(std::ostream& out, const ResponseRecord& rec) {
    out << "freq_hz,mag_db\n";
    char buf[80];
    for (std::size_t i = 0; i < rec.freqs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", rec.freqs[i], rec.magnitude_db[i]);
        out << buf;
    }
}

}  // namespace polsynth

#endif
