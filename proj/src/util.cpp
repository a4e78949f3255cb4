#include "util.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <sstream>

namespace plmm {

void parallel_blocks(std::int64_t n_blocks,
                     const std::function<void(std::int64_t)> &fn) {
  int n_threads = Runtime::threads();
  if (n_threads < 1) n_threads = 1;
  if (n_threads == 1 || n_blocks <= 1) {
    for (std::int64_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr err;
  std::mutex err_mu;
  auto body = [&] {
    for (;;) {
      std::int64_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  int nw = static_cast<int>(std::min<std::int64_t>(n_threads, n_blocks));
  workers.reserve(nw);
  for (int i = 0; i < nw; ++i) workers.emplace_back(body);
  for (auto &w : workers) w.join();
  if (err) std::rethrow_exception(err);
}

std::vector<std::string> split_ws(const std::string &line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_delim(const std::string &line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_double(const std::string &s, double &out) {
  if (s.empty()) return false;
  char *end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace plmm
