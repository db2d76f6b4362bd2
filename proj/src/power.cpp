// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/power.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "tokenjoule/errors.hpp"
#include "tokenjoule/hash.hpp"

namespace tokenjoule {

namespace {

constexpr double kGapFactor = 10.0;  // max tolerated gap, in sample periods

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::size_t line, const char* what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(std::string("bad ") + what + " value: " + std::string(s), line);
    return v;
}

double lerp_power(const PowerSample& a, const PowerSample& b, double t) {
    if (b.timestamp_s == a.timestamp_s) return a.watts;
    const double f = (t - a.timestamp_s) / (b.timestamp_s - a.timestamp_s);
    return a.watts + f * (b.watts - a.watts);
}

double infer_period(const std::vector<PowerSample>& samples) {
    if (samples.size() < 2) return 0.1;
    std::vector<double> dts;
    dts.reserve(samples.size() - 1);
    for (std::size_t i = 1; i < samples.size(); ++i)
        dts.push_back(samples[i].timestamp_s - samples[i - 1].timestamp_s);
    std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
    return dts[dts.size() / 2];
}

// Parses one "device_id,watts" sampler line; nullopt for malformed input.
std::optional<std::pair<std::string, double>> parse_sampler_line(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
    if (line.empty()) return std::nullopt;
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos || comma == 0) return std::nullopt;
    const std::string_view device = line.substr(0, comma);
    const std::string_view watts_s = line.substr(comma + 1);
    double watts = 0.0;
    const auto res = std::from_chars(watts_s.data(), watts_s.data() + watts_s.size(), watts);
    if (res.ec != std::errc{} || res.ptr != watts_s.data() + watts_s.size()) return std::nullopt;
    if (!(watts >= 0.0) || !std::isfinite(watts)) return std::nullopt;
    return std::make_pair(std::string(device), watts);
}

}  // namespace

EnergyMeasurement integrate_energy(const PowerTrace& trace, double t0, double t1) {
    if (!(t0 < t1)) throw DomainError("integration window must satisfy t0 < t1");
    const auto& s = trace.samples;
    if (s.size() < 2) throw DataError("need at least 2 samples to integrate");

    const double period = trace.sample_period_s > 0 ? trace.sample_period_s : infer_period(s);
    if (s.front().timestamp_s > t0 + period || s.back().timestamp_s < t1 - period)
        throw DataError("trace does not cover the integration window");

    // Clamp to the trace span; within the allowed slack this drops at most
    // one sample period off each end, never extrapolates.
    const double a = std::max(t0, s.front().timestamp_s);
    const double b = std::min(t1, s.back().timestamp_s);
    if (!(a < b)) throw DataError("integration window collapses after clamping");

    auto after = [&](double t) {
        return std::lower_bound(s.begin(), s.end(), t, [](const PowerSample& ps, double v) {
            return ps.timestamp_s < v;
        });
    };

    auto it = after(a);
    std::size_t i = static_cast<std::size_t>(it - s.begin());
    if (i > 0) --i;  // segment containing `a`

    double joules = 0.0;
    double prev_t = a;
    double prev_p = lerp_power(s[i], s[std::min(i + 1, s.size() - 1)], a);
    for (std::size_t k = i + 1; k < s.size(); ++k) {
        const double tk = s[k].timestamp_s;
        const double gap = tk - s[k - 1].timestamp_s;
        if (gap > kGapFactor * period && s[k - 1].timestamp_s < b && tk > a)
            throw DataError("sampling gap of " + std::to_string(gap) +
                            " s inside integration window");
        if (tk <= prev_t) continue;
        if (tk >= b) {
            const double pb = lerp_power(s[k - 1], s[k], b);
            joules += 0.5 * (prev_p + pb) * (b - prev_t);
            prev_t = b;
            break;
        }
        joules += 0.5 * (prev_p + s[k].watts) * (tk - prev_t);
        prev_t = tk;
        prev_p = s[k].watts;
    }

    EnergyMeasurement m;
    m.energy_wh = joules / 3600.0;
    m.t_start_s = t0;
    m.t_end_s = t1;
    m.device_id = trace.device_id;
    m.source = EnergySource::sampled;
    return m;
}

PowerTrace slice_trace(const PowerTrace& trace, double t0, double t1) {
    if (!(t0 < t1)) throw DomainError("slice window must satisfy t0 < t1");
    const auto& s = trace.samples;
    auto lo = std::lower_bound(s.begin(), s.end(), t0, [](const PowerSample& ps, double v) {
        return ps.timestamp_s < v;
    });
    auto hi = std::upper_bound(s.begin(), s.end(), t1, [](double v, const PowerSample& ps) {
        return v < ps.timestamp_s;
    });
    if (s.empty() || t1 < s.front().timestamp_s || t0 > s.back().timestamp_s)
        throw DataError("slice window lies outside the trace span");

    // One boundary sample each side, when available, keeps the slice
    // interpolatable at the window edges.
    if (lo != s.begin()) --lo;
    if (hi != s.end()) ++hi;
    PowerTrace out;
    out.device_id = trace.device_id;
    out.sample_period_s = trace.sample_period_s;
    out.samples.assign(lo, hi);
    if (out.samples.empty()) throw DataError("empty trace slice");
    return out;
}

PowerTrace rebase_trace(const PowerTrace& trace, double new_start_s) {
    PowerTrace out = trace;
    if (out.samples.empty()) return out;
    const double shift = new_start_s - out.samples.front().timestamp_s;
    for (PowerSample& ps : out.samples) ps.timestamp_s += shift;
    return out;
}

void write_trace_csv(std::ostream& out, std::span<const PowerTrace> traces) {
    out << "timestamp_s,device_id,watts\n";
    for (const PowerTrace& trace : traces) {
        for (const PowerSample& ps : trace.samples) {
            out << format_double(ps.timestamp_s) << ',' << trace.device_id << ','
                << format_double(ps.watts) << '\n';
        }
    }
}

void write_trace_csv_file(const std::filesystem::path& path, std::span<const PowerTrace> traces) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write trace file: " + path.string());
    write_trace_csv(out, traces);
}

std::vector<PowerTrace> read_trace_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty trace file", 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp_s,device_id,watts")
        throw ParseError("bad trace header: " + line, lineno);

    std::map<std::string, PowerTrace> by_device;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ParseError("bad trace row: " + line, lineno);
        PowerSample ps;
        ps.timestamp_s = parse_double(std::string_view(line).substr(0, c1), lineno, "timestamp");
        ps.device_id = line.substr(c1 + 1, c2 - c1 - 1);
        ps.watts = parse_double(std::string_view(line).substr(c2 + 1), lineno, "watts");
        if (ps.watts < 0) throw ParseError("negative watts", lineno);
        PowerTrace& trace = by_device[ps.device_id];
        if (!trace.samples.empty() && ps.timestamp_s <= trace.samples.back().timestamp_s)
            throw ParseError("timestamps not strictly increasing for device " + ps.device_id,
                             lineno);
        trace.samples.push_back(std::move(ps));
    }

    std::vector<PowerTrace> out;
    out.reserve(by_device.size());
    for (auto& [device, trace] : by_device) {
        trace.device_id = device;
        trace.sample_period_s = infer_period(trace.samples);
        out.push_back(std::move(trace));
    }
    return out;
}

std::vector<PowerTrace> read_trace_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read trace file: " + path.string());
    return read_trace_csv(in);
}

std::vector<std::pair<std::string, double>> run_sampler_command_once(const std::string& command,
                                                                     std::size_t* dropped) {
    FILE* pipe = popen(command.c_str(), "r");
    if (pipe == nullptr) throw SamplerError("cannot start sampler command: " + command);
    std::string output;
    char buf[512];
    while (std::fgets(buf, sizeof(buf), pipe) != nullptr) output += buf;
    const int status = pclose(pipe);
    if (status != 0)
        throw SamplerError("sampler command exited with status " + std::to_string(status));

    std::vector<std::pair<std::string, double>> readings;
    std::istringstream lines(output);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        if (auto reading = parse_sampler_line(line)) {
            readings.push_back(std::move(*reading));
        } else if (dropped != nullptr) {
            ++*dropped;
        }
    }
    return readings;
}

SamplingSession::SamplingSession(SamplerConfig config) : config_(std::move(config)) {}

std::unique_ptr<SamplingSession> SamplingSession::start(const SamplerConfig& config) {
    if (config.period_s <= 0) throw ConfigError("sampler period must be positive");
    // Fail fast: one synchronous probe before any benchmark work begins.
    const auto probe = run_sampler_command_once(config.command, nullptr);
    if (probe.empty()) throw SamplerError("sampler probe produced no parseable reading");

    auto session = std::unique_ptr<SamplingSession>(new SamplingSession(config));
    session->thread_ = std::thread([raw = session.get()] { raw->run(); });
    return session;
}

void SamplingSession::run() {
    std::map<std::string, PowerTrace> by_device;
    auto next_tick = std::chrono::steady_clock::now();
    while (!stopping_.load()) {
        std::size_t dropped = 0;
        std::vector<std::pair<std::string, double>> readings;
        try {
            readings = run_sampler_command_once(config_.command, &dropped);
        } catch (const SamplerError&) {
            ++dropped;  // mid-run command failure: sample lost, keep going
        }
        dropped_.fetch_add(dropped);
        const double now = mono_now_s();
        for (auto& [device, watts] : readings) {
            PowerTrace& trace = by_device[device];
            if (!trace.samples.empty() && now <= trace.samples.back().timestamp_s) continue;
            trace.samples.push_back(PowerSample{now, watts, device});
        }
        next_tick += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(config_.period_s));
        std::this_thread::sleep_until(next_tick);
    }
    result_.clear();
    for (auto& [device, trace] : by_device) {
        trace.device_id = device;
        trace.sample_period_s = config_.period_s;
        result_.push_back(std::move(trace));
    }
}

std::vector<PowerTrace> SamplingSession::stop() {
    if (!stopped_) {
        stopping_.store(true);
        if (thread_.joinable()) thread_.join();
        stopped_ = true;
    }
    return result_;
}

SamplingSession::~SamplingSession() {
    stop();
}

}  // namespace tokenjoule
