#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "tmsensor/sensor.hpp"

namespace tmsensor {

namespace fs = std::filesystem;

namespace {

bool is_digest(std::string_view s) {
    return s.size() == 64 &&
           std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

bool looks_like_capture(const std::string& name) {
    return !name.empty() && name.front() != '.' && name.find(".pcap") != std::string::npos;
}

}  // namespace

std::optional<Watcher::Seen> Watcher::stat_file(const fs::path& path) {
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec) return std::nullopt;
    const auto mtime = fs::last_write_time(path, ec);
    if (ec) return std::nullopt;
    return Seen{size, mtime};
}

Journal::Journal(fs::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) {
        std::error_code ec;
        if (fs::exists(path_, ec)) throw Error(Errc::JournalCorrupt, "cannot read " + path_.string());
        return;
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto space = line.find(' ');
        if (space == std::string::npos || !is_digest(std::string_view(line).substr(0, space)) ||
            space + 1 >= line.size()) {
            throw Error(Errc::JournalCorrupt, path_.string() + ":" + std::to_string(lineno) + ": malformed entry");
        }
        entries_.emplace(line.substr(0, space), line.substr(space + 1));
    }
}

bool Journal::contains_digest(const std::string& digest) const {
    std::lock_guard lock(mutex_);
    return entries_.contains(digest);
}

void Journal::append(const std::string& digest, const std::string& name) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    out << digest << ' ' << name << '\n';
    out.flush();
    if (!out) throw Error(Errc::Io, "cannot append to " + path_.string());
    entries_.emplace(digest, name);
}

std::size_t Journal::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

Watcher::Watcher(SensorConfig config, AnonKey key, std::ostream& log)
    : config_(std::move(config)),
      key_(std::move(key)),
      log_(log),
      journal_((validate(config_), config_.output_dir / Journal::file_name)) {
    if (!fs::is_directory(config_.input_dir)) {
        throw Error(Errc::Io, "input_dir " + config_.input_dir.string() + " is not a directory");
    }
    if (!fs::is_directory(config_.output_dir)) {
        throw Error(Errc::Io, "output_dir " + config_.output_dir.string() + " is not a directory");
    }
}

void Watcher::log_line(const std::string& line) {
    std::lock_guard lock(log_mutex_);
    log_ << line << '\n';
    log_.flush();
}

std::size_t Watcher::poll_once() {
    std::vector<fs::path> names;
    std::error_code ec;
    for (fs::directory_iterator it(config_.input_dir, ec), end; !ec && it != end; it.increment(ec)) {
        const std::string name = it->path().filename().string();
        if (looks_like_capture(name)) names.push_back(it->path());
    }
    if (ec) {
        log_line("error: scanning " + config_.input_dir.string() + ": " + ec.message());
        return 0;
    }
    std::sort(names.begin(), names.end());

    const auto now = fs::file_time_type::clock::now();
    const auto quiet = std::chrono::seconds(config_.quiescence_secs);
    std::vector<Candidate> todo;
    for (const auto& path : names) {
        const std::string name = path.filename().string();
        std::error_code fe;
        if (!fs::is_regular_file(path, fe)) continue;
        const auto stat = stat_file(path);
        if (!stat) continue;  // vanished between listing and stat
        const Seen seen = *stat;
        if (now - seen.mtime < quiet) continue;
        {
            std::lock_guard lock(failed_mutex_);
            if (failed_.contains({name, seen})) continue;
        }
        std::string digest;
        if (auto it = digests_.find(name); it != digests_.end() && it->second.first == seen) {
            digest = it->second.second;
        } else {
            try {
                digest = sha256_file_hex(path);
            } catch (const Error& e) {
                log_line("error: " + name + ": " + e.what());
                continue;
            }
            digests_[name] = {seen, digest};
        }
        if (journal_.contains_digest(digest)) continue;
        if (std::any_of(todo.begin(), todo.end(), [&](const Candidate& c) { return c.digest == digest; })) continue;
        todo.push_back({path, digest});
    }
    if (todo.empty()) return 0;

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    const unsigned workers =
        std::min<unsigned>(config_.max_concurrent_conversions, static_cast<unsigned>(todo.size()));
    auto work = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            if (convert_one(todo[i])) ++done;
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return done;
}

bool Watcher::convert_one(const Candidate& c) {
    const std::string name = c.path.filename().string();
    try {
        const auto result = convert_capture(key_, config_.window_size, c.path, config_.output_dir, config_.prefix);
        if (result.stats.truncated_tail) {
            log_line("warning: " + name + ": capture truncated mid-record, converted the complete records");
        }
        std::ostringstream msg;
        if (result.tmf_path) {
            msg << "converted " << name << " -> " << result.tmf_path->filename().string()
                << " packets=" << result.stats.valid_ip_packets << " windows=" << result.windows
                << " ratio=" << result.compression()->ratio();
        } else {
            msg << "converted " << name << ": 0 packets, no output";
        }
        journal_.append(c.digest, name);
        log_line(msg.str());
        if (config_.delete_after_convert) {
            std::error_code ec;
            fs::remove(c.path, ec);
            if (ec) log_line("warning: " + name + ": could not delete: " + ec.message());
        }
        return true;
    } catch (const Error& e) {
        if (const auto seen = stat_file(c.path)) {
            std::lock_guard lock(failed_mutex_);
            failed_.insert({name, *seen});
        }
        log_line("error: " + name + ": " + e.what());
        return false;
    }
}

void Watcher::run(std::stop_token stop) {
    std::mutex m;
    std::condition_variable_any cv;
    while (!stop.stop_requested()) {
        poll_once();
        std::unique_lock lock(m);
        cv.wait_for(lock, stop, std::chrono::seconds(config_.poll_interval_secs), [] { return false; });
    }
}

}  // namespace tmsensor
