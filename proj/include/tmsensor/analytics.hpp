#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tmsensor/traffic_matrix.hpp"

namespace tmsensor {

using DegreeHistogram = std::map<std::uint64_t, std::uint64_t>;

struct AnalysisReport {
    std::uint64_t valid_packets = 0;
    std::uint64_t unique_links = 0;
    std::uint64_t unique_sources = 0;
    std::uint64_t unique_destinations = 0;
    std::uint64_t max_link_packets = 0;
    std::uint64_t max_source_packets = 0;
    std::uint64_t max_source_fanout = 0;
    std::uint64_t max_destination_packets = 0;
    std::uint64_t max_destination_fanin = 0;
    DegreeHistogram fanout_histogram;  // fan-out degree -> number of sources
    DegreeHistogram fanin_histogram;   // fan-in degree -> number of destinations

    friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

AnalysisReport analyze(const TrafficMatrix& m);

struct MultiReport {
    std::vector<AnalysisReport> windows;
    AnalysisReport merged;
};

/// Per-window reports plus the report of the merged matrix. Windows are
/// analyzed on up to `max_threads` workers; the result does not depend on it.
MultiReport analyze_many(std::span<const TrafficMatrix> ms, unsigned max_threads = 1);

enum class ReportFormat { text, json };

/// `name=value` lines; histogram buckets as `fanout[d]=n` and `fanin[d]=n`.
void write_report_text(std::ostream& os, const AnalysisReport& r);
std::string report_to_json(const AnalysisReport& r);
/// {"windows": [...], "merged": {...}}
std::string report_to_json(const MultiReport& r);

}  // namespace tmsensor
