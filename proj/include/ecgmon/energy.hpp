#pragma once

#include <map>
#include <string>
#include <vector>

#include "ecgmon/edge.hpp"

namespace ecgmon {

// Abstract communication/compute energy model. The per-bit rates are
// order-of-magnitude placeholders (non-normative); deployments supply
// measured values through the config file.
struct EnergyModel {
    std::map<std::string, double> uj_per_bit = {
        {"wifi", 0.25},
        {"lte", 1.0},
        {"3g", 2.0},
        {"ble", 0.1},
    };
    double compute_nj_per_mac = 0.5;
    int sample_bits = 16;
    double raw_stream_fs = 1000.0; // native ADC rate assumed for full streaming
};

// One-hour session composition in minutes per segment kind.
struct CaseSpec {
    double clean_minutes = 60.0;
    double noisy_minutes = 0.0;
    double arrhythmic_minutes = 0.0;

    double total_minutes() const { return clean_minutes + noisy_minutes + arrhythmic_minutes; }

    static CaseSpec case_I() { return {60.0, 0.0, 0.0}; }
    static CaseSpec case_II() { return {50.0, 10.0, 0.0}; }
    static CaseSpec case_III() { return {40.0, 10.0, 10.0}; }
    static CaseSpec parse(const std::string& name); // "I"/"II"/"III"
};

void validate_case(const CaseSpec& c);

// Raw-streaming energy: seconds * fs * sample_bits * uJ/bit.
double raw_stream_energy_j(double uj_per_bit, double fs, int sample_bits, double seconds);

// Frame-based energy for a session's emitted bytes.
double transmit_energy_j(double uj_per_bit, uint64_t bytes);

double compute_energy_j(double nj_per_mac, uint64_t macs);

struct CaseEnergy {
    std::map<std::string, double> joules; // per technology
    uint64_t bytes = 0;
    uint64_t macs = 0;
    double compute_j = 0.0;
};

struct EnergyReport {
    CaseEnergy case_i;   // closed-form raw streaming
    CaseEnergy case_ii;  // from simulated session counters
    CaseEnergy case_iii;
    std::map<std::string, double> ratio_i_over_ii;
    std::map<std::string, double> ratio_i_over_iii;
};

CaseEnergy raw_case_energy(const EnergyModel& model, double seconds);
CaseEnergy session_case_energy(const EnergyModel& model, const SessionCounters& counters);

EnergyReport make_energy_report(const EnergyModel& model, const SessionCounters& case_ii,
                                const SessionCounters& case_iii, double duration_s = 3600.0);

std::string format_energy_report(const EnergyReport& report);

// MAC / parameter comparison against user-supplied baselines
// (name -> {macs, params}); empty by default.
struct MacBaseline {
    std::string name;
    double macs = 0.0;
    double params = 0.0;
};

std::string format_mac_report(const ModelGraph& model, const std::vector<MacBaseline>& baselines);

} // namespace ecgmon
