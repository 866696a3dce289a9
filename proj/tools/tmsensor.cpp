// tmsensor: anonymizing traffic-matrix sensor.
//
//   tmsensor genkey  --out KEY
//   tmsensor convert --key KEY --pcap FILE --out-dir DIR [--window-size N]
//   tmsensor analyze [--format text|json] FILE...
//   tmsensor watch   --config FILE [--once]
//   tmsensor synth   --pcap-out FILE [--truth-out FILE] [workload flags]
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 environment error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "tmsensor/analytics.hpp"
#include "tmsensor/anonymizer.hpp"
#include "tmsensor/sensor.hpp"
#include "tmsensor/synth.hpp"
#include "tmsensor/tmf.hpp"

namespace fs = std::filesystem;
using namespace tmsensor;

namespace {

enum Exit : int { ok = 0, usage = 1, data = 2, environment = 3 };

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::Io:
        case Errc::EntropyUnavailable:
        case Errc::Exists:
        case Errc::SinkFailure:
            return environment;
        case Errc::ConfigInvalid:
        case Errc::SpecInvalid:
            return usage;
        default:
            return data;
    }
}

int fail(const Error& e, const std::string& context = {}) {
    std::cerr << "error: " << (context.empty() ? "" : context + ": ") << e.what() << '\n';
    return exit_code_for(e.code());
}

int cmd_genkey(const fs::path& out) {
    const AnonKey key = generate_key();
    save_key(key, out);
    std::cout << "key_id=" << key_id_hex(key.key_id()) << '\n';
    return ok;
}

int cmd_convert(const fs::path& key_path, std::uint32_t window_size, const fs::path& pcap,
                const fs::path& out_dir, const std::string& prefix) {
    if (!is_configurable_window(window_size)) {
        std::cerr << "error: --window-size must be a power of two in [1024, 16777216]\n";
        return usage;
    }
    if (!fs::is_directory(out_dir)) {
        std::cerr << "error: output directory " << out_dir << " does not exist\n";
        return environment;
    }
    const AnonKey key = load_key(key_path);
    const ConversionResult r = convert_capture(key, window_size, pcap, out_dir, prefix);
    const auto& s = r.stats;
    if (s.truncated_tail) {
        std::cerr << "warning: " << pcap.string()
                  << ": capture truncated mid-record, converted the complete records\n";
    }
    std::cout << "total_records=" << s.total_records << '\n'
              << "valid_ip_packets=" << s.valid_ip_packets << '\n'
              << "skipped_non_ip=" << s.skipped_non_ip << '\n'
              << "skipped_malformed=" << s.skipped_malformed << '\n'
              << "truncated_tail=" << (s.truncated_tail ? "true" : "false") << '\n'
              << "bytes_read=" << s.bytes_read << '\n'
              << "windows=" << r.windows << '\n';
    if (!r.tmf_path) {
        std::cerr << "notice: 0 packets, no traffic matrix file written\n";
        return ok;
    }
    const auto report = *r.compression();
    std::cout << "tmf_path=" << r.tmf_path->string() << '\n'
              << "pcap_bytes=" << report.pcap_bytes << '\n'
              << "tmf_bytes=" << report.tmf_bytes << '\n'
              << "compression_ratio=" << report.ratio() << '\n';
    return ok;
}

int cmd_analyze(const std::vector<fs::path>& files, const std::string& format) {
    std::vector<TrafficMatrix> all;
    std::vector<std::string> labels;
    for (const auto& f : files) {
        try {
            auto ms = read_tmf_file(f);
            for (std::size_t i = 0; i < ms.size(); ++i) {
                labels.push_back(f.string() + "#" + std::to_string(i));
                all.push_back(std::move(ms[i]));
            }
        } catch (const Error& e) {
            return fail(e, f.string());
        }
    }
    const MultiReport reports = analyze_many(all, std::min(4u, std::max(1u, std::thread::hardware_concurrency())));
    if (format == "json") {
        std::cout << report_to_json(reports) << '\n';
        return ok;
    }
    for (std::size_t i = 0; i < reports.windows.size(); ++i) {
        std::cout << "# window " << labels[i] << '\n';
        write_report_text(std::cout, reports.windows[i]);
    }
    std::cout << "# merged\n";
    write_report_text(std::cout, reports.merged);
    return ok;
}

int cmd_watch(const fs::path& config_path, const std::string& key_override, bool once) {
    SensorConfig config = load_config(config_path);
    if (!key_override.empty()) config.key_path = key_override;
    const AnonKey key = load_key(config.key_path);

    // Blocked here so every thread inherits the mask; sigwait below takes them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Watcher watcher(config, key, std::cerr);
    if (once) {
        watcher.poll_once();
        return ok;
    }
    std::jthread loop([&](std::stop_token stop) { watcher.run(stop); });
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "stopping after in-flight conversions\n";
    loop.request_stop();
    return ok;
}

int cmd_synth(const SynthSpec& spec, const fs::path& pcap_out, const fs::path& truth_out) {
    validate(spec);
    std::ofstream pcap(pcap_out, std::ios::binary | std::ios::trunc);
    if (!pcap) throw Error(Errc::Io, "cannot create " + pcap_out.string());
    const GroundTruth truth = synthesize(spec, pcap);
    pcap.close();
    if (!pcap) throw Error(Errc::Io, "failed writing " + pcap_out.string());
    if (!truth_out.empty()) {
        std::ofstream t(truth_out, std::ios::trunc);
        write_ground_truth(t, truth);
        if (!t) throw Error(Errc::Io, "failed writing " + truth_out.string());
    }
    std::cout << "packets=" << spec.packet_count << '\n' << "pairs=" << truth.size() << '\n';
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anonymizing traffic-matrix network sensor"};
    app.require_subcommand(1);

    fs::path genkey_out;
    auto* genkey = app.add_subcommand("genkey", "Generate a deployment anonymization key");
    genkey->add_option("--out", genkey_out, "Key file to create")->required();

    fs::path key_path, pcap_path, out_dir;
    std::uint32_t window_size = default_window_size;
    std::string prefix = "tm";
    auto* convert = app.add_subcommand("convert", "Convert a PCAP capture into a traffic matrix file");
    convert->add_option("--key", key_path, "Key file")->envname("TMSENSOR_KEY")->required();
    convert->add_option("--pcap", pcap_path, "Input capture")->required();
    convert->add_option("--out-dir", out_dir, "Output directory")->required();
    convert->add_option("--window-size", window_size, "Packets per window (power of two)");
    convert->add_option("--prefix", prefix, "Output file name prefix");

    std::vector<fs::path> tmf_files;
    std::string format = "text";
    auto* analyze = app.add_subcommand("analyze", "Report network quantities from traffic matrix files");
    analyze->add_option("files", tmf_files, "TMF files")->required();
    analyze->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

    fs::path config_path;
    std::string watch_key;
    bool once = false;
    auto* watch = app.add_subcommand("watch", "Convert captures as they appear in a directory");
    watch->add_option("--config", config_path, "Config file")->required();
    watch->add_option("--key", watch_key, "Key file (overrides key_path)");
    watch->add_flag("--once", once, "Run a single poll cycle and exit");

    SynthSpec spec;
    fs::path synth_pcap, synth_truth;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic capture with ground truth");
    synth->add_option("--pcap-out", synth_pcap, "Capture to write")->required();
    synth->add_option("--truth-out", synth_truth, "Ground truth file to write");
    synth->add_option("--hosts", spec.host_count, "Number of hosts");
    synth->add_option("--packets", spec.packet_count, "Number of packets");
    synth->add_option("--zipf", spec.zipf_exponent, "Zipf exponent of host popularity");
    synth->add_option("--payload-min", spec.payload_min, "Minimum UDP payload bytes");
    synth->add_option("--payload-max", spec.payload_max, "Maximum UDP payload bytes");
    synth->add_option("--seed", spec.seed, "PRNG seed");
    synth->add_option("--start-us", spec.start_time_us, "First timestamp, microseconds since epoch");
    synth->add_option("--mean-gap-us", spec.mean_interarrival_us, "Mean inter-arrival time, microseconds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (*genkey) return cmd_genkey(genkey_out);
        if (*convert) return cmd_convert(key_path, window_size, pcap_path, out_dir, prefix);
        if (*analyze) return cmd_analyze(tmf_files, format);
        if (*watch) return cmd_watch(config_path, watch_key, once);
        if (*synth) return cmd_synth(spec, synth_pcap, synth_truth);
    } catch (const Error& e) {
        return fail(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return environment;
    }
    return usage;
}
