// Copyright 2026 The Explore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EXPLORE_EXTERNAL_HPP
#define EXPLORE_EXTERNAL_HPP

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "explore/errors.hpp"
#include "explore/io.hpp"
#include "explore/outcome.hpp"
#include "explore/params.hpp"
#include "explore/rng.hpp"

extern char** environ;

namespace explore {

/// Writes a record in the line protocol: METRIC lines in name order, then one OUTCOME line.
inline std::string format_protocol(const OutcomeRecord& r) {
  std::string out;
  for (const auto& [name, value] : r.metrics) out += "METRIC " + name + ' ' + io::format_double(value) + '\n';
  out += r.outcome_holds ? "OUTCOME 1\n" : "OUTCOME 0\n";
  return out;
}

/// Strict parse of the line protocol. Throws SimulatorError (without captured output) on any deviation.
inline OutcomeRecord parse_protocol(std::string_view text) {
  OutcomeRecord r;
  bool have_outcome = false;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw SimulatorError("malformed simulator output, line " + std::to_string(line_no) + ": " + why);
  };
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos) fail("missing final newline");
    const std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl + 1);
    if (have_outcome) fail("output after OUTCOME");

    std::vector<std::string_view> tok;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const auto sp = line.find(' ', pos);
      tok.push_back(line.substr(pos, sp == std::string_view::npos ? std::string_view::npos : sp - pos));
      if (sp == std::string_view::npos) break;
      pos = sp + 1;
    }
    if (tok.size() == 3 && tok[0] == "METRIC") {
      if (tok[1].empty()) fail("empty metric name");
      const auto v = io::parse_double(tok[2]);
      if (!v) fail("bad metric value '" + std::string(tok[2]) + "'");
      if (!r.metrics.emplace(std::string(tok[1]), *v).second) fail("duplicate metric '" + std::string(tok[1]) + "'");
    } else if (tok.size() == 2 && tok[0] == "OUTCOME" && (tok[1] == "0" || tok[1] == "1")) {
      r.outcome_holds = tok[1] == "1";
      have_outcome = true;
    } else {
      fail("unexpected line '" + std::string(line) + "'");
    }
  }
  if (!have_outcome) throw SimulatorError("malformed simulator output: no OUTCOME line");
  return r;
}

enum class Comparison { less, less_equal, greater, greater_equal };

inline bool compare(double a, Comparison c, double b) {
  switch (c) {
    case Comparison::less: return a < b;
    case Comparison::less_equal: return a <= b;
    case Comparison::greater: return a > b;
    case Comparison::greater_equal: return a >= b;
  }
  return false;
}

inline Comparison parse_comparison(std::string_view s) {
  if (s == "<") return Comparison::less;
  if (s == "<=") return Comparison::less_equal;
  if (s == ">") return Comparison::greater;
  if (s == ">=") return Comparison::greater_equal;
  throw ContractViolation("unknown comparison '" + std::string(s) + "' (expected <, <=, >, >=)");
}

/// Without a metric the OUTCOME line decides; otherwise `metric <cmp> threshold` does.
struct OutcomeRule {
  std::optional<std::string> metric;
  Comparison comparison = Comparison::less_equal;
  double threshold = 0.0;
};

struct ExternalSimSpec {
  std::string executable;
  std::vector<std::string> fixed_args;
  /// Dimension name -> name used in `--param <name>=<value>`. Unlisted dimensions use their own name.
  std::map<std::string, std::string> flags;
  OutcomeRule outcome;
  double timeout_seconds = 60.0;

  /// Flag names in dimension order; rejects mappings for unknown dimensions or two dimensions sharing a flag.
  [[nodiscard]] std::vector<std::string> flag_names(const ParameterSpace& space) const {
    for (const auto& [dim, flag] : flags) {
      if (!space.index_of(dim)) throw ContractViolation("external simulator: flag mapping for unknown dimension '" + dim + "'");
      if (flag.empty()) throw ContractViolation("external simulator: empty flag for dimension '" + dim + "'");
    }
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& d : space.dims()) {
      const auto it = flags.find(d.name);
      out.push_back(it == flags.end() ? d.name : it->second);
      if (!seen.insert(out.back()).second)
        throw ContractViolation("external simulator: flag '" + out.back() + "' used by two dimensions");
    }
    return out;
  }
};

namespace detail {

struct ProcessResult {
  int status = 0;
  bool timed_out = false;
  std::string out, err;
};

class FdPair {
 public:
  FdPair() {
    if (::pipe2(fd_, O_CLOEXEC) != 0) throw SimulatorError(std::string("pipe: ") + std::strerror(errno));
  }
  ~FdPair() {
    close_read();
    close_write();
  }
  FdPair(const FdPair&) = delete;
  FdPair& operator=(const FdPair&) = delete;

  int read_end() const { return fd_[0]; }
  int write_end() const { return fd_[1]; }
  void close_read() {
    if (fd_[0] >= 0) ::close(fd_[0]);
    fd_[0] = -1;
  }
  void close_write() {
    if (fd_[1] >= 0) ::close(fd_[1]);
    fd_[1] = -1;
  }

 private:
  int fd_[2] = {-1, -1};
};

inline ProcessResult run_process(const std::vector<std::string>& argv, double timeout_seconds) {
  FdPair out, err;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_adddup2(&actions, out.write_end(), 1);
  posix_spawn_file_actions_adddup2(&actions, err.write_end(), 2);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw SimulatorError("cannot launch '" + argv[0] + "': " + std::strerror(rc));
  out.close_write();
  err.close_write();

  ProcessResult res;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
  pollfd fds[2] = {{out.read_end(), POLLIN, 0}, {err.read_end(), POLLIN, 0}};
  std::string* sinks[2] = {&res.out, &res.err};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      res.timed_out = true;
      break;
    }
    const int n = ::poll(fds, 2, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int k = 0; k < 2; ++k) {
      if (fds[k].fd < 0 || fds[k].revents == 0) continue;
      const ssize_t got = ::read(fds[k].fd, buf, sizeof buf);
      if (got > 0) {
        sinks[k]->append(buf, static_cast<std::size_t>(got));
      } else if (got == 0 || errno != EINTR) {
        fds[k].fd = -1;
        --open_fds;
      }
    }
  }
  int status = 0;
  // Output closed, but the process may linger; keep honouring the deadline.
  while (!res.timed_out) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid || (done < 0 && errno != EINTR)) {
      res.status = status;
      return res;
    }
    if (std::chrono::steady_clock::now() >= deadline) res.timed_out = true;
    else ::usleep(1000);
  }
  ::kill(pid, SIGKILL);
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  res.status = status;
  return res;
}

}  // namespace detail

/// Command line for one run: executable, fixed args, --seed, then one --param per dimension.
inline std::vector<std::string> external_command(const ExternalSimSpec& spec, const ParameterSpace& space,
                                                 const ParameterVector& theta, std::uint64_t seed) {
  space.require_dimension(theta.size(), "run_external");
  const auto flags = spec.flag_names(space);
  const ParameterVector input = to_simulator_input(space, theta);
  std::vector<std::string> argv{spec.executable};
  argv.insert(argv.end(), spec.fixed_args.begin(), spec.fixed_args.end());
  argv.push_back("--seed");
  argv.push_back(std::to_string(seed));
  for (std::size_t i = 0; i < space.size(); ++i) {
    argv.push_back("--param");
    argv.push_back(flags[i] + '=' + io::format_double(input[i]));
  }
  return argv;
}

/// Runs the executable once and parses its output. Any failure is a SimulatorError carrying the captured streams.
inline OutcomeRecord run_external(const ExternalSimSpec& spec, const ParameterSpace& space, const ParameterVector& theta,
                                  std::uint64_t seed) {
  if (::access(spec.executable.c_str(), X_OK) != 0)
    throw SimulatorError("external simulator '" + spec.executable + "' is not an executable file");
  if (!(spec.timeout_seconds > 0.0)) throw ContractViolation("run_external: timeout must be positive");
  const auto res = detail::run_process(external_command(spec, space, theta, seed), spec.timeout_seconds);
  if (res.timed_out)
    throw SimulatorError("external simulator timed out after " + io::format_double(spec.timeout_seconds) + " s",
                         res.out, res.err);
  if (!WIFEXITED(res.status) || WEXITSTATUS(res.status) != 0) {
    const std::string how = WIFEXITED(res.status) ? "exited with status " + std::to_string(WEXITSTATUS(res.status))
                                                  : "killed by signal " + std::to_string(WTERMSIG(res.status));
    throw SimulatorError("external simulator " + how, res.out, res.err);
  }
  OutcomeRecord r;
  try {
    r = parse_protocol(res.out);
  } catch (const SimulatorError& e) {
    throw SimulatorError(e.what(), res.out, res.err);
  }
  if (spec.outcome.metric) {
    const auto it = r.metrics.find(*spec.outcome.metric);
    if (it == r.metrics.end())
      throw SimulatorError("external simulator did not report metric '" + *spec.outcome.metric + "'", res.out, res.err);
    r.outcome_holds = compare(it->second, spec.outcome.comparison, spec.outcome.threshold);
  }
  return r;
}

/// A simulation driven by an explicit seed rather than a stream; both sides of a paired comparison use this form.
using SeededSimulator = std::function<OutcomeRecord(const ParameterVector&, std::uint64_t)>;

inline SeededSimulator external_side(ExternalSimSpec spec, ParameterSpace space) {
  (void)spec.flag_names(space);  // validates the mapping up front
  return [spec = std::move(spec), space = std::move(space)](const ParameterVector& theta, std::uint64_t seed) {
    return run_external(spec, space, theta, seed);
  };
}

/// Adapts a seeded simulation to the stream interface: one 64-bit draw becomes the seed.
class SeededAdapter {
 public:
  explicit SeededAdapter(SeededSimulator sim) : sim_(std::move(sim)) {}

  OutcomeRecord operator()(const ParameterVector& theta, RngStream& rng) const { return sim_(theta, rng()); }

 private:
  SeededSimulator sim_;
};

enum class TieRule { at_most_equal, strict };

/**
 * Side A succeeds when its criterion metric beats side B's. Direction is
 * smaller-is-better unless `larger_is_better` is set.
 */
struct PairedComparisonSpec {
  SeededSimulator a;
  SeededSimulator b;
  std::string criterion;
  bool larger_is_better = false;
  TieRule tie = TieRule::at_most_equal;
};

/// Runs A then B with the same (theta, seed). Metrics come back prefixed "a." and "b.".
inline OutcomeRecord paired_comparison(const PairedComparisonSpec& pair, const ParameterVector& theta, std::uint64_t seed) {
  if (!pair.a || !pair.b) throw ContractViolation("paired_comparison: both sides must be set");
  const OutcomeRecord ra = pair.a(theta, seed);
  const OutcomeRecord rb = pair.b(theta, seed);
  const auto ia = ra.metrics.find(pair.criterion);
  const auto ib = rb.metrics.find(pair.criterion);
  if (ia == ra.metrics.end() || ib == rb.metrics.end())
    throw SimulatorError("paired_comparison: criterion metric '" + pair.criterion + "' missing from a side");
  double x = ia->second, y = ib->second;
  if (pair.larger_is_better) std::swap(x, y);
  OutcomeRecord out;
  out.outcome_holds = pair.tie == TieRule::at_most_equal ? x <= y : x < y;
  for (const auto& [k, v] : ra.metrics) out.metrics["a." + k] = v;
  for (const auto& [k, v] : rb.metrics) out.metrics["b." + k] = v;
  return out;
}

class PairedSimulator {
 public:
  explicit PairedSimulator(PairedComparisonSpec pair) : pair_(std::move(pair)) {}

  OutcomeRecord operator()(const ParameterVector& theta, RngStream& rng) const {
    return paired_comparison(pair_, theta, rng());
  }

  [[nodiscard]] const PairedComparisonSpec& spec() const noexcept { return pair_; }

 private:
  PairedComparisonSpec pair_;
};

}  // namespace explore

#endif
