#include "polyfa/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "polyfa/diagnostics.hpp"

namespace polyfa {

void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open " + tmp.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

void atomic_write(const std::string& path, const std::string& content) {
  atomic_write(path, [&](std::ostream& out) { out << content; });
}

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_draws_csv(std::ostream& out, const PosteriorSample& sample) {
  const auto traces = parameter_traces(sample, true);
  out << "chain,draw";
  for (const auto& t : traces) out << ',' << t.name;
  out << '\n';
  for (std::size_t c = 0; c < sample.chains.size(); ++c) {
    for (std::size_t s = 0; s < sample.chains[c].count; ++s) {
      out << c + 1 << ',' << s + 1;
      for (const auto& t : traces) out << ',' << format_double(t.chains[c][s]);
      out << '\n';
    }
  }
}

}  // namespace polyfa
