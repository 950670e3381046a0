#include "perfpred/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "perfpred/error.hpp"

namespace perfpred {

void read_jsonl(const std::filesystem::path& path,
                const std::function<void(size_t, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded())
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": malformed record");
    fn(line_no, rec);
  }
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::vector<json> out;
  read_jsonl(path, [&](size_t, const json& rec) { out.push_back(rec); });
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ostringstream body;
  for (const auto& rec : records) body << rec.dump() << '\n';
  write_text_file(path, body.str());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + tmp.string());
    out << content;
    if (!out) fail(ErrorKind::io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace perfpred
