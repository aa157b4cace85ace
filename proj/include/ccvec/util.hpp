#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace ccvec {

// Worker cap: CCVEC_THREADS if set (>=1), otherwise hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks across
// threads; fn must only write to slots it owns. Exceptions from workers are
// rethrown on the calling thread. threads <= 1 runs inline.
void parallel_for(size_t n, const std::function<void(size_t)>& fn, int threads = worker_count());

// FNV-1a over bytes, used for content-derived patch ids.
uint64_t fnv1a64(std::string_view bytes);
std::string hex64(uint64_t value);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// write-temp-then-rename so partially written files are never observed
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace ccvec
