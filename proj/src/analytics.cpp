#include "tmsensor/analytics.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <unordered_map>

#include <json.hpp>

namespace tmsensor {

AnalysisReport analyze(const TrafficMatrix& m) {
    AnalysisReport r;
    struct ColumnTally {
        std::uint64_t packets = 0;
        std::uint64_t fanin = 0;
    };
    std::unordered_map<std::uint64_t, ColumnTally> columns;

    // Rows arrive grouped because entries are sorted by (row, col).
    std::size_t i = 0;
    const auto& es = m.entries;
    while (i < es.size()) {
        const AnonId row = es[i].row;
        std::uint64_t row_packets = 0;
        std::uint64_t fanout = 0;
        for (; i < es.size() && es[i].row == row; ++i) {
            const auto& e = es[i];
            row_packets += e.count;
            ++fanout;
            r.max_link_packets = std::max(r.max_link_packets, e.count);
            auto& col = columns[e.col.value];
            col.packets += e.count;
            ++col.fanin;
        }
        ++r.unique_sources;
        r.valid_packets += row_packets;
        r.unique_links += fanout;
        r.max_source_packets = std::max(r.max_source_packets, row_packets);
        r.max_source_fanout = std::max(r.max_source_fanout, fanout);
        ++r.fanout_histogram[fanout];
    }

    r.unique_destinations = columns.size();
    for (const auto& [id, tally] : columns) {
        r.max_destination_packets = std::max(r.max_destination_packets, tally.packets);
        r.max_destination_fanin = std::max(r.max_destination_fanin, tally.fanin);
        ++r.fanin_histogram[tally.fanin];
    }
    return r;
}

MultiReport analyze_many(std::span<const TrafficMatrix> ms, unsigned max_threads) {
    MultiReport out;
    out.windows.resize(ms.size());
    const unsigned workers =
        std::max(1u, std::min<unsigned>(max_threads, static_cast<unsigned>(ms.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < ms.size(); ++i) out.windows[i] = analyze(ms[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < ms.size(); i = next++) out.windows[i] = analyze(ms[i]);
            });
        }
    }
    out.merged = analyze(merge_all(ms));
    return out;
}

void write_report_text(std::ostream& os, const AnalysisReport& r) {
    os << "valid_packets=" << r.valid_packets << '\n'
       << "unique_links=" << r.unique_links << '\n'
       << "unique_sources=" << r.unique_sources << '\n'
       << "unique_destinations=" << r.unique_destinations << '\n'
       << "max_link_packets=" << r.max_link_packets << '\n'
       << "max_source_packets=" << r.max_source_packets << '\n'
       << "max_source_fanout=" << r.max_source_fanout << '\n'
       << "max_destination_packets=" << r.max_destination_packets << '\n'
       << "max_destination_fanin=" << r.max_destination_fanin << '\n';
    for (const auto& [d, n] : r.fanout_histogram) os << "fanout[" << d << "]=" << n << '\n';
    for (const auto& [d, n] : r.fanin_histogram) os << "fanin[" << d << "]=" << n << '\n';
}

namespace {
nlohmann::ordered_json histogram_json(const DegreeHistogram& h) {
    auto j = nlohmann::ordered_json::object();
    for (const auto& [d, n] : h) j[std::to_string(d)] = n;
    return j;
}

nlohmann::ordered_json report_json(const AnalysisReport& r) {
    nlohmann::ordered_json j;
    j["valid_packets"] = r.valid_packets;
    j["unique_links"] = r.unique_links;
    j["unique_sources"] = r.unique_sources;
    j["unique_destinations"] = r.unique_destinations;
    j["max_link_packets"] = r.max_link_packets;
    j["max_source_packets"] = r.max_source_packets;
    j["max_source_fanout"] = r.max_source_fanout;
    j["max_destination_packets"] = r.max_destination_packets;
    j["max_destination_fanin"] = r.max_destination_fanin;
    j["fanout_histogram"] = histogram_json(r.fanout_histogram);
    j["fanin_histogram"] = histogram_json(r.fanin_histogram);
    return j;
}

}  // namespace

std::string report_to_json(const AnalysisReport& r) { return report_json(r).dump(); }

std::string report_to_json(const MultiReport& r) {
    nlohmann::ordered_json j;
    j["windows"] = nlohmann::ordered_json::array();
    for (const auto& w : r.windows) j["windows"].push_back(report_json(w));
    j["merged"] = report_json(r.merged);
    return j.dump();
}

}  // namespace tmsensor
