#include "ecgmon/energy.hpp"

#include <cmath>
#include <sstream>

#include "ecgmon/errors.hpp"

namespace ecgmon {

CaseSpec CaseSpec::parse(const std::string& name) {
    if (name == "I" || name == "i" || name == "1") return case_I();
    if (name == "II" || name == "ii" || name == "2") return case_II();
    if (name == "III" || name == "iii" || name == "3") return case_III();
    throw ParameterError("unknown case name: " + name + " (expected I, II or III)");
}

void validate_case(const CaseSpec& c) {
    if (c.clean_minutes < 0.0 || c.noisy_minutes < 0.0 || c.arrhythmic_minutes < 0.0) {
        throw ParameterError("case: segment durations must be non-negative");
    }
    if (std::abs(c.total_minutes() - 60.0) > 1e-9 && c.total_minutes() != 0.0) {
        throw ParameterError("case: segment durations must total 60 minutes");
    }
}

double raw_stream_energy_j(double uj_per_bit, double fs, int sample_bits, double seconds) {
    if (uj_per_bit <= 0.0) throw ParameterError("energy: uJ/bit must be positive");
    return seconds * fs * static_cast<double>(sample_bits) * uj_per_bit * 1e-6;
}

double transmit_energy_j(double uj_per_bit, uint64_t bytes) {
    if (uj_per_bit <= 0.0) throw ParameterError("energy: uJ/bit must be positive");
    return static_cast<double>(bytes) * 8.0 * uj_per_bit * 1e-6;
}

double compute_energy_j(double nj_per_mac, uint64_t macs) {
    return static_cast<double>(macs) * nj_per_mac * 1e-9;
}

CaseEnergy raw_case_energy(const EnergyModel& model, double seconds) {
    CaseEnergy e;
    e.bytes = static_cast<uint64_t>(
        seconds * model.raw_stream_fs * static_cast<double>(model.sample_bits) / 8.0);
    for (const auto& [tech, rate] : model.uj_per_bit) {
        e.joules[tech] = raw_stream_energy_j(rate, model.raw_stream_fs, model.sample_bits, seconds);
    }
    e.macs = 0;
    e.compute_j = 0.0;
    return e;
}

CaseEnergy session_case_energy(const EnergyModel& model, const SessionCounters& counters) {
    CaseEnergy e;
    e.bytes = counters.bytes_sent;
    for (const auto& [tech, rate] : model.uj_per_bit) {
        e.joules[tech] = transmit_energy_j(rate, counters.bytes_sent);
    }
    e.macs = counters.edge_mac_count + counters.fog_mac_count;
    e.compute_j = compute_energy_j(model.compute_nj_per_mac, e.macs);
    return e;
}

EnergyReport make_energy_report(const EnergyModel& model, const SessionCounters& case_ii,
                                const SessionCounters& case_iii, double duration_s) {
    EnergyReport r;
    r.case_i = raw_case_energy(model, duration_s);
    r.case_ii = session_case_energy(model, case_ii);
    r.case_iii = session_case_energy(model, case_iii);
    for (const auto& [tech, e1] : r.case_i.joules) {
        const double e2 = r.case_ii.joules.at(tech);
        const double e3 = r.case_iii.joules.at(tech);
        r.ratio_i_over_ii[tech] = e2 > 0.0 ? e1 / e2 : 0.0;
        r.ratio_i_over_iii[tech] = e3 > 0.0 ? e1 / e3 : 0.0;
    }
    return r;
}

std::string format_energy_report(const EnergyReport& r) {
    std::ostringstream out;
    out << "communication energy (J)\n";
    out << "technology,case_I,case_II,case_III,ratio_I/II,ratio_I/III\n";
    for (const auto& [tech, e1] : r.case_i.joules) {
        out << tech << ',' << e1 << ',' << r.case_ii.joules.at(tech) << ','
            << r.case_iii.joules.at(tech) << ',' << r.ratio_i_over_ii.at(tech) << ','
            << r.ratio_i_over_iii.at(tech) << '\n';
    }
    out << "\nbytes case_I=" << r.case_i.bytes << " case_II=" << r.case_ii.bytes
        << " case_III=" << r.case_iii.bytes << '\n';
    out << "compute energy (J, rate-independent): case_II=" << r.case_ii.compute_j
        << " case_III=" << r.case_iii.compute_j << '\n';
    out << "note: per-bit rates are non-normative placeholders; supply measured values via config\n";
    return out.str();
}

std::string format_mac_report(const ModelGraph& model, const std::vector<MacBaseline>& baselines) {
    std::ostringstream out;
    out << "layer,kind,output_shape,params,macs\n";
    for (const auto& l : model.layers) {
        out << l.name << ',' << to_string(l.kind) << ',' << l.out_len << 'x'
            << (l.kind == LayerKind::dense ? 1 : l.out_ch) << ',' << count_params(l) << ','
            << count_macs(l) << '\n';
    }
    const long total_params = count_params(model);
    const long total_macs = count_macs(model);
    out << "total,,," << total_params << ',' << total_macs << '\n';
    out << "edge,,," << edge_params(model) << ',' << edge_macs(model) << '\n';
    out << "fog,,," << fog_params(model) << ',' << fog_macs(model) << '\n';
    out << "edge_param_share," << static_cast<double>(edge_params(model)) / total_params << "\n";

    if (!baselines.empty()) {
        out << "\nbaseline,macs,params,mac_ratio,param_ratio\n";
        for (const auto& b : baselines) {
            out << b.name << ',' << b.macs << ',' << b.params << ','
                << (total_macs > 0 ? b.macs / static_cast<double>(total_macs) : 0.0) << ','
                << (total_params > 0 ? b.params / static_cast<double>(total_params) : 0.0) << '\n';
        }
    }
    return out.str();
}

} // namespace ecgmon
