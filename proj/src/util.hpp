#ifndef PLMM_UTIL_HPP
#define PLMM_UTIL_HPP

#include <chrono>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace plmm {

// Error categories map 1:1 onto process exit codes and C API return codes.
enum class ErrorCode : int {
  ok = 0,
  usage = 1,
  data = 2,
  capacity = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail_data(const std::string &msg) {
  throw Error(ErrorCode::data, msg);
}
[[noreturn]] inline void fail_usage(const std::string &msg) {
  throw Error(ErrorCode::usage, msg);
}
[[noreturn]] inline void fail_capacity(const std::string &msg) {
  throw Error(ErrorCode::capacity, msg);
}

// Global knobs set once by the CLI / C API before a run.
struct Runtime {
  static int &threads() {
    static int t = static_cast<int>(std::thread::hardware_concurrency());
    return t;
  }
  static std::int64_t &block_width() {
    static std::int64_t w = 1024;
    return w;
  }
  // 0 means unlimited.
  static std::int64_t &memory_budget() {
    static std::int64_t b = 0;
    return b;
  }
};

// Refuse up front any single allocation that would blow the budget.
inline void check_budget(std::int64_t bytes, const std::string &what) {
  std::int64_t budget = Runtime::memory_budget();
  if (budget > 0 && bytes > budget) {
    fail_capacity(what + " needs " + std::to_string(bytes) +
                  " bytes, over the memory budget of " +
                  std::to_string(budget));
  }
}

// Runs fn(block_index) for blocks 0..n_blocks-1 on up to Runtime::threads()
// workers. Callers that reduce results must do so in block order afterwards
// so thread count never changes the numbers.
void parallel_blocks(std::int64_t n_blocks,
                     const std::function<void(std::int64_t)> &fn);

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> split_ws(const std::string &line);
std::vector<std::string> split_delim(const std::string &line, char delim);
bool parse_double(const std::string &s, double &out);

}  // namespace plmm

#endif  // PLMM_UTIL_HPP
