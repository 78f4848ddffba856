#pragma once

// Output plumbing: atomic file writes, checksums, posterior draw tables.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "polyfa/sampler.hpp"

namespace polyfa {

/// Writes via a temporary sibling file and renames it over `path`.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body);
void atomic_write(const std::string& path, const std::string& content);

/// FNV-1a 64-bit hash of a file's bytes, as 16 lowercase hex digits.
std::string file_checksum(const std::string& path);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// One row per retained draw: chain, draw, then every free loading, every
/// variance and every factor score.
void write_draws_csv(std::ostream& out, const PosteriorSample& sample);

}  // namespace polyfa
