#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "space.hpp"
#include "types.hpp"

namespace dmobo {

/// One evaluated configuration as stored in the shared archive.
struct Trial {
  Configuration config;
  Outcome outcome;
  int agent_rank = 0;
  std::int64_t local_step = 0;
  double t_submit = 0.0;
  double t_complete = 0.0;
  std::optional<double> kappa_used;

  friend bool operator==(const Trial&, const Trial&) = default;
};

// ---------------------------------------------------------------------------
// JSON-lines record, keys in this order:
//   {"agent_rank":0,"local_step":3,"config":{...},"objectives":[...] | "failure":"...",
//    "t_submit":1.0,"t_complete":2.0,"kappa_used":0.72 | null}

inline nlohmann::ordered_json trial_to_json(const SearchSpace& space, const Trial& t) {
  nlohmann::ordered_json j;
  j["agent_rank"] = t.agent_rank;
  j["local_step"] = t.local_step;
  j["config"] = config_to_json(space, t.config);
  if (auto* y = objectives_of(t.outcome)) {
    j["objectives"] = *y;
  } else {
    j["failure"] = std::get<FailureMarker>(t.outcome).reason;
  }
  j["t_submit"] = t.t_submit;
  j["t_complete"] = t.t_complete;
  if (t.kappa_used) {
    j["kappa_used"] = *t.kappa_used;
  } else {
    j["kappa_used"] = nullptr;
  }
  return j;
}

inline std::string trial_to_line(const SearchSpace& space, const Trial& t) {
  return trial_to_json(space, t).dump() + "\n";
}

// With a null space the configuration is skipped (objective-only reads).
template <typename Json>
Trial trial_from_json(const SearchSpace* space, const Json& j) {
  try {
    Trial t;
    t.agent_rank = j.at("agent_rank").template get<int>();
    t.local_step = j.at("local_step").template get<std::int64_t>();
    if (space) t.config = config_from_json(*space, j.at("config"));
    if (j.contains("objectives")) {
      t.outcome = j.at("objectives").template get<ObjectiveVector>();
    } else {
      t.outcome = FailureMarker{j.at("failure").template get<std::string>()};
    }
    t.t_submit = j.at("t_submit").template get<double>();
    t.t_complete = j.at("t_complete").template get<double>();
    if (j.contains("kappa_used") && !j.at("kappa_used").is_null())
      t.kappa_used = j.at("kappa_used").template get<double>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("malformed trial record: ") + e.what());
  }
}

template <typename Json>
Trial trial_from_json(const SearchSpace& space, const Json& j) {
  return trial_from_json(&space, j);
}

inline Trial trial_from_line(const SearchSpace* space, const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("malformed trial record: ") + e.what());
  }
  return trial_from_json(space, j);
}

inline Trial trial_from_line(const SearchSpace& space, const std::string& line) {
  return trial_from_line(&space, line);
}

inline void write_archive_jsonl(const std::filesystem::path& path, const SearchSpace& space,
                                const std::vector<Trial>& trials) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& t : trials) out << trial_to_line(space, t);
}

inline std::vector<Trial> read_archive_jsonl(const std::filesystem::path& path,
                                             const SearchSpace* space) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open archive " + path.string());
  std::vector<Trial> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(trial_from_line(space, line));
  return out;
}

inline std::vector<Trial> read_archive_jsonl(const std::filesystem::path& path,
                                             const SearchSpace& space) {
  return read_archive_jsonl(path, &space);
}

// ---------------------------------------------------------------------------

using ReaderId = std::size_t;

/// Append-only trial log with per-reader cursors. Successive read_new calls of
/// one reader return every entry exactly once, in append order.
class TrialArchive {
 public:
  virtual ~TrialArchive() = default;
  virtual std::size_t append(const Trial& t) = 0;
  virtual ReaderId register_reader() = 0;
  virtual std::vector<Trial> read_new(ReaderId reader) = 0;
  virtual std::vector<Trial> snapshot() const = 0;
  virtual std::size_t size() const = 0;
};

/// In-process archive; optionally mirrors every append to a JSON-lines file.
class MemoryArchive final : public TrialArchive {
 public:
  MemoryArchive() = default;
  MemoryArchive(std::shared_ptr<const SearchSpace> space, const std::filesystem::path& mirror)
      : space_(std::move(space)), mirror_(std::make_unique<std::ofstream>(mirror, std::ios::binary | std::ios::trunc)) {
    if (!*mirror_) throw std::runtime_error("cannot open archive mirror " + mirror.string());
  }

  std::size_t append(const Trial& t) override {
    std::unique_lock lock(mutex_);
    entries_.push_back(t);
    if (mirror_) {
      *mirror_ << trial_to_line(*space_, t);
      mirror_->flush();
    }
    return entries_.size() - 1;
  }

  ReaderId register_reader() override {
    std::unique_lock lock(mutex_);
    cursors_.push_back(0);
    return cursors_.size() - 1;
  }

  std::vector<Trial> read_new(ReaderId reader) override {
    std::unique_lock lock(mutex_);
    if (reader >= cursors_.size()) throw std::out_of_range("unknown archive reader");
    auto& cur = cursors_[reader];
    std::vector<Trial> out(entries_.begin() + static_cast<std::ptrdiff_t>(cur), entries_.end());
    cur = entries_.size();
    return out;
  }

  std::vector<Trial> snapshot() const override {
    std::shared_lock lock(mutex_);
    return entries_;
  }

  std::size_t size() const override {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

 private:
  mutable std::shared_mutex mutex_;
  std::vector<Trial> entries_;
  std::vector<std::size_t> cursors_;
  std::shared_ptr<const SearchSpace> space_;
  std::unique_ptr<std::ofstream> mirror_;
};

/// JSON-lines archive shared through the filesystem, usable from several
/// processes. Each record is written with a single O_APPEND write; readers
/// only consume complete lines.
class FileArchive final : public TrialArchive {
 public:
  FileArchive(std::shared_ptr<const SearchSpace> space, std::filesystem::path path)
      : space_(std::move(space)), path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd_ < 0)
      throw std::system_error(errno, std::generic_category(), "open " + path_.string());
  }
  FileArchive(const FileArchive&) = delete;
  FileArchive& operator=(const FileArchive&) = delete;
  ~FileArchive() override {
    if (fd_ >= 0) ::close(fd_);
  }

  std::size_t append(const Trial& t) override {
    const std::string line = trial_to_line(*space_, t);
    std::lock_guard lock(mutex_);
    std::size_t done = 0;
    while (done < line.size()) {
      auto n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw std::system_error(errno, std::generic_category(), "write " + path_.string());
      }
      done += static_cast<std::size_t>(n);
    }
    return count_lines() - 1;
  }

  ReaderId register_reader() override {
    std::lock_guard lock(mutex_);
    offsets_.push_back(0);
    return offsets_.size() - 1;
  }

  std::vector<Trial> read_new(ReaderId reader) override {
    std::lock_guard lock(mutex_);
    if (reader >= offsets_.size()) throw std::out_of_range("unknown archive reader");
    std::ifstream in(path_, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(offsets_[reader]));
    std::string chunk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<Trial> out;
    std::size_t pos = 0;
    while (true) {
      auto nl = chunk.find('\n', pos);
      if (nl == std::string::npos) break;
      if (nl > pos) out.push_back(trial_from_line(*space_, chunk.substr(pos, nl - pos)));
      pos = nl + 1;
    }
    offsets_[reader] += pos;
    return out;
  }

  std::vector<Trial> snapshot() const override {
    std::lock_guard lock(mutex_);
    return read_archive_jsonl(path_, *space_);
  }

  std::size_t size() const override {
    std::lock_guard lock(mutex_);
    return count_lines();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::size_t count_lines() const {
    std::ifstream in(path_, std::ios::binary);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ++n;
    return n;
  }

  std::shared_ptr<const SearchSpace> space_;
  std::filesystem::path path_;
  int fd_ = -1;
  mutable std::mutex mutex_;
  std::vector<std::size_t> offsets_;
};

}  // namespace dmobo
