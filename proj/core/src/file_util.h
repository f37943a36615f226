#ifndef COBRA_SRC_FILE_UTIL_H_
#define COBRA_SRC_FILE_UTIL_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace cobra::internal {

// Appends `line` plus a newline and fsyncs before returning.
void AppendDurable(const std::filesystem::path& path, std::string_view line);

// Writes to a sibling temp file, fsyncs, then renames over `path`.
void WriteAtomic(const std::filesystem::path& path, std::string_view content);

std::string ReadFile(const std::filesystem::path& path);

// Makes a JSONL log end on a line boundary before new appends: a final line
// without its newline is completed when it parses and cut off otherwise.
void RepairTornTail(const std::filesystem::path& path);

}  // namespace cobra::internal

#endif  // COBRA_SRC_FILE_UTIL_H_
