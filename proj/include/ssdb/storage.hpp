#pragma once

// On-disk layout of one share server:
//
//   <data_dir>/server.json          {"server_id": k, "x_coord": "k"}
//   <data_dir>/<table>/schema.json  the table schema
//   <data_dir>/<table>/rows.log     one {"index": k, "cells": {...}} per line
//
// rows.log is append-only. Recovery replays it and truncates at the first
// record that is incomplete or fails validation.

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <shared_mutex>
#include <spdlog/spdlog.h>
#include <sstream>
#include <string>
#include <vector>

#include "ssdb/encoding.hpp"
#include "ssdb/error.hpp"
#include "ssdb/protocol.hpp"

namespace ssdb::storage {

namespace fs = std::filesystem;

struct StoredRow {
  u64 index = 0;
  proto::Cells cells;

  friend bool operator==(const StoredRow&, const StoredRow&) = default;
};

namespace detail {

inline void write_file_atomic(const fs::path& path, const std::string& content, bool sync) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    ensure(out.good(), ErrorCode::Internal, "cannot write " + tmp.string());
    out << content;
    out.flush();
    ensure(out.good(), ErrorCode::Internal, "short write to " + tmp.string());
  }
  if (sync) {
    int fd = ::open(tmp.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd >= 0) {
      ::fsync(fd);
      ::close(fd);
    }
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  ensure(in.good(), ErrorCode::Internal, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string encode_record(const StoredRow& row) {
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [attr, v] : row.cells) {
    nlohmann::json a = nlohmann::json::array();
    for (u64 x : v) a.push_back(std::to_string(x));
    cells[attr] = std::move(a);
  }
  nlohmann::json j = {{"index", row.index}, {"cells", std::move(cells)}};
  return j.dump() + "\n";
}

/// Append-only file handle; a record is on disk (or at least in the kernel)
/// before append() returns.
class LogFile {
 public:
  LogFile(const fs::path& path, bool sync) : sync_(sync) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    ensure(fd_ >= 0, ErrorCode::Internal, "cannot open " + path.string());
  }
  LogFile(const LogFile&) = delete;
  LogFile& operator=(const LogFile&) = delete;
  ~LogFile() {
    if (fd_ >= 0) ::close(fd_);
  }

  void append(const std::string& record) {
    std::size_t off = 0;
    while (off < record.size()) {
      ssize_t n = ::write(fd_, record.data() + off, record.size() - off);
      if (n < 0 && errno == EINTR) continue;
      ensure(n > 0, ErrorCode::Internal, "log write failed");
      off += static_cast<std::size_t>(n);
    }
    if (sync_) ::fdatasync(fd_);
  }

 private:
  int fd_ = -1;
  bool sync_;
};

}  // namespace detail

/// One table's schema and rows. Inserts are serialized; readers share.
class StoredTable {
 public:
  StoredTable(TableSchema schema, fs::path dir, u64 p, bool sync)
      : schema_(std::move(schema)), dir_(std::move(dir)), p_(p) {
    recover();
    log_ = std::make_unique<detail::LogFile>(dir_ / "rows.log", sync);
  }

  const TableSchema& schema() const noexcept { return schema_; }

  std::size_t row_count() const {
    std::shared_lock lock(mu_);
    return rows_.size();
  }

  void insert(const proto::InsertShares& msg) {
    std::unique_lock lock(mu_);
    validate_row(msg.index, msg.cells, rows_.size());
    StoredRow row{msg.index, msg.cells};
    log_->append(detail::encode_record(row));
    rows_.push_back(std::move(row));
  }

  proto::ColumnShares column(const std::string& attr, u64 server_x) const {
    schema_.at(attr);
    proto::ColumnShares out{schema_.table(), attr, server_x, {}, {}};
    std::shared_lock lock(mu_);
    out.index_list.reserve(rows_.size());
    out.cells.reserve(rows_.size());
    for (const auto& r : rows_) {
      out.index_list.push_back(r.index);
      out.cells.push_back(r.cells.at(attr));
    }
    return out;
  }

  /// Cells of `attr` at `indices`, in the requested order.
  std::vector<proto::DeliveredRow> cells_at(const std::string& attr, const std::vector<u64>& indices) const {
    schema_.at(attr);
    std::shared_lock lock(mu_);
    std::vector<proto::DeliveredRow> out;
    out.reserve(indices.size());
    for (u64 index : indices) {
      ensure(index >= 1 && index <= rows_.size(), ErrorCode::BadRequest,
             "table '" + schema_.table() + "' has no row " + std::to_string(index));
      out.push_back({index, rows_[index - 1].cells.at(attr)});
    }
    return out;
  }

  std::vector<StoredRow> snapshot() const {
    std::shared_lock lock(mu_);
    return rows_;
  }

 private:
  void validate_row(u64 index, const proto::Cells& cells, std::size_t have) const {
    ensure(index == have + 1, ErrorCode::SchemaMismatch,
           "table '" + schema_.table() + "' expects index " + std::to_string(have + 1) + ", got " +
               std::to_string(index));
    ensure(cells.size() == schema_.attributes().size(), ErrorCode::SchemaMismatch,
           "row has " + std::to_string(cells.size()) + " cells, schema has " +
               std::to_string(schema_.attributes().size()) + " attributes");
    for (const auto& a : schema_.attributes()) {
      auto it = cells.find(a.name);
      ensure(it != cells.end(), ErrorCode::SchemaMismatch, "row is missing attribute '" + a.name + "'");
      ensure(!it->second.empty(), ErrorCode::SchemaMismatch, "cell '" + a.name + "' has no elements");
      ensure(a.type != AttrType::Integer || it->second.size() == 1, ErrorCode::SchemaMismatch,
             "INTEGER cell '" + a.name + "' must hold exactly one element");
    }
  }

  void recover() {
    const fs::path path = dir_ / "rows.log";
    if (!fs::exists(path)) return;
    const std::string content = detail::read_file(path);
    std::size_t pos = 0;
    std::size_t valid_end = 0;
    while (pos < content.size()) {
      std::size_t nl = content.find('\n', pos);
      if (nl == std::string::npos) break;  // unterminated tail
      try {
        auto j = nlohmann::json::parse(content.begin() + static_cast<std::ptrdiff_t>(pos),
                                       content.begin() + static_cast<std::ptrdiff_t>(nl));
        proto::detail::Reader r(p_);
        StoredRow row{r.uint(j, "index"), r.cells(r.object(j, "cells"))};
        validate_row(row.index, row.cells, rows_.size());
        rows_.push_back(std::move(row));
      } catch (const std::exception& e) {
        spdlog::warn("{}: invalid record at byte {} ({}); truncating", path.string(), pos, e.what());
        break;
      }
      pos = nl + 1;
      valid_end = pos;
    }
    if (valid_end < content.size()) {
      spdlog::warn("{}: dropping {} trailing bytes; {} rows recovered", path.string(),
                   content.size() - valid_end, rows_.size());
      fs::resize_file(path, valid_end);
    }
  }

  TableSchema schema_;
  fs::path dir_;
  u64 p_;
  mutable std::shared_mutex mu_;
  std::vector<StoredRow> rows_;
  std::unique_ptr<detail::LogFile> log_;
};

}  // namespace ssdb::storage
