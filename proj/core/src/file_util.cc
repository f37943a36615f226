#include "file_util.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cobra/error.h"

namespace cobra::internal {
namespace {

[[noreturn]] void IoFailure(const std::string& what,
                            const std::filesystem::path& path) {
  throw Error(ErrorCode::kIoError,
              what + " " + path.string() + ": " + std::strerror(errno),
              path.string());
}

void WriteAll(int fd, std::string_view data, const std::filesystem::path& path) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      IoFailure("cannot write", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

void AppendDurable(const std::filesystem::path& path, std::string_view line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) IoFailure("cannot open", path);
  std::string buf(line);
  buf.push_back('\n');
  WriteAll(fd, buf, path);
  if (::fsync(fd) != 0) {
    ::close(fd);
    IoFailure("cannot sync", path);
  }
  ::close(fd);
}

void WriteAtomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) IoFailure("cannot open", tmp);
  WriteAll(fd, content, tmp);
  if (::fsync(fd) != 0) {
    ::close(fd);
    IoFailure("cannot sync", tmp);
  }
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot replace " + path.string() + ": " + ec.message(),
                path.string());
  }
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string(), path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void RepairTornTail(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return;
  const std::string text = ReadFile(path);
  if (text.empty() || text.back() == '\n') return;
  const std::size_t cut = text.rfind('\n');
  const std::size_t start = cut == std::string::npos ? 0 : cut + 1;
  if (nlohmann::json::accept(std::string_view(text).substr(start))) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
    if (fd < 0) IoFailure("cannot open", path);
    WriteAll(fd, "\n", path);
    if (::fsync(fd) != 0) {
      ::close(fd);
      IoFailure("cannot sync", path);
    }
    ::close(fd);
    return;
  }
  std::error_code ec;
  std::filesystem::resize_file(path, start, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError, "cannot truncate " + path.string() + ": " + ec.message(),
                path.string());
  }
}

}  // namespace cobra::internal
