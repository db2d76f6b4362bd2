// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace tokenjoule {

struct PowerSample {
    double timestamp_s = 0.0;  // monotonic seconds
    double watts = 0.0;
    std::string device_id;
};

/// Timestamped board-power samples for one device, ordered by time.
struct PowerTrace {
    std::string device_id;
    std::vector<PowerSample> samples;
    double sample_period_s = 0.1;
};

enum class EnergySource { sampled, replayed };

struct EnergyMeasurement {
    double energy_wh = 0.0;
    double t_start_s = 0.0;
    double t_end_s = 0.0;
    std::string device_id;
    EnergySource source = EnergySource::sampled;
};

/// Trapezoidal integration of board power over [t0, t1], in watt-hours.
/// The trace must cover the window to within one sample_period of slack on
/// each side; boundary power is clamped to the nearest sample, never
/// extrapolated. An inter-sample gap longer than 10 sample periods inside
/// the window makes the trace unusable (DataError).
EnergyMeasurement integrate_energy(const PowerTrace& trace, double t0, double t1);

/// Samples with timestamp in [t0, t1] plus the nearest sample on each side
/// when available, so boundaries stay interpolatable.
PowerTrace slice_trace(const PowerTrace& trace, double t0, double t1);

/// Shifts all timestamps so the first sample lands at `new_start_s`.
PowerTrace rebase_trace(const PowerTrace& trace, double new_start_s);

/// Trace file format: CSV with header "timestamp_s,device_id,watts".
void write_trace_csv(std::ostream& out, std::span<const PowerTrace> traces);
void write_trace_csv_file(const std::filesystem::path& path, std::span<const PowerTrace> traces);
std::vector<PowerTrace> read_trace_csv(std::istream& in);
std::vector<PowerTrace> read_trace_csv_file(const std::filesystem::path& path);

/// Sampler command contract: each invocation writes one "device_id,watts"
/// line per device to stdout and exits 0.
struct SamplerConfig {
    std::string command;
    double period_s = 0.1;
};

/// Background power sampling at a fixed period. The command is probed once
/// synchronously before sampling starts so failures surface before any
/// benchmark request is issued. stop() is idempotent.
class SamplingSession {
  public:
    static std::unique_ptr<SamplingSession> start(const SamplerConfig& config);
    ~SamplingSession();

    SamplingSession(const SamplingSession&) = delete;
    SamplingSession& operator=(const SamplingSession&) = delete;

    /// Stops the sampler thread and hands out the traces (sorted by device).
    std::vector<PowerTrace> stop();

    /// Malformed sampler lines dropped so far.
    std::size_t dropped_count() const { return dropped_.load(); }

  private:
    explicit SamplingSession(SamplerConfig config);
    void run();

    SamplerConfig config_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> dropped_{0};
    bool stopped_ = false;
    std::vector<PowerTrace> result_;
};

/// Runs the sampler command once and parses its output; used for the
/// fail-fast probe and by the sampling loop.
std::vector<std::pair<std::string, double>> run_sampler_command_once(const std::string& command,
                                                                     std::size_t* dropped);

}  // namespace tokenjoule
