#pragma once

// Lockstep simulation kernel: owns the clock, the tick task schedule, FTRT
// pacing and pause/resume. Everything downstream is driven from here; no
// module may read the host clock for simulation purposes.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace sky::sim {

// Integer nanoseconds since simulation epoch. Advances only in whole
// physics-timestep increments.
using SimTime = int64_t;

inline constexpr int64_t kDtFlavorA = 4'000'000;  // 4 ms, 250 Hz
inline constexpr int64_t kDtFlavorB = 2'000'000;  // 2 ms, 500 Hz

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidPeriod : SimError {
  using SimError::SimError;
};
struct AlreadyRunning : SimError {
  using SimError::SimError;
};

using TaskId = uint32_t;
using TaskFn = std::function<void(SimTime)>;

struct TickTask {
  TaskId id{0};
  int64_t period_ns{0};
  int64_t phase_ns{0};
  std::string owner;
};

struct RunConfig {
  int64_t physics_dt_ns{kDtFlavorA};
  double rtf_cap{15.0};
  double duration_s{0.0};
  uint64_t seed{0};
  bool paused_at_start{false};
};

struct RunReport {
  double sim_seconds{0.0};
  double wall_seconds{0.0};
  double rtf{0.0};
  int64_t ticks{0};
  std::map<std::string, int64_t> per_task_overrun_count;
};

enum class ControlVerb { Pause, Resume, Step, Quit };
struct ControlCommand {
  ControlVerb verb;
  int64_t count{0};  // for Step
};

class Kernel {
 public:
  explicit Kernel(int64_t physics_dt_ns);

  // Registration is only legal before the run starts; the registration order
  // is the deterministic tie-break for tasks due at the same instant.
  TaskId register_task(int64_t period_ns, int64_t phase_ns, std::string owner,
                       TaskFn fn);

  // Fires every tick before any task, carrying the new SimTime. This is the
  // /clock broadcast; modules must timestamp from it.
  void on_clock(std::function<void(SimTime)> fn) { clock_subs_.push_back(std::move(fn)); }

  // Runs after the clock and before the tasks of a tick (message delivery).
  void on_pre_tick(std::function<void(SimTime)> fn) { pre_tick_.push_back(std::move(fn)); }
  // Runs after every task of a tick has completed (the lockstep barrier).
  void on_post_tick(std::function<void(SimTime)> fn) { post_tick_.push_back(std::move(fn)); }
  // Optional trace of task executions, for determinism tests.
  void on_task_trace(std::function<void(SimTime, const TickTask&)> fn) {
    trace_ = std::move(fn);
  }

  // Advances the clock by one dt and executes everything due, in order.
  SimTime advance_tick();

  // Advances until duration (or a stop request), pacing wall time so the
  // measured RTF never exceeds config.rtf_cap. Honors pause/resume/step/quit
  // between ticks only.
  RunReport run_ftrt(const RunConfig& config);

  void push_control(ControlCommand cmd);
  // A module (e.g. the mission runner) may end the run early.
  void request_stop() { stop_requested_ = true; }
  bool stop_requested() const { return stop_requested_; }

  SimTime now() const { return now_ns_; }
  int64_t dt_ns() const { return dt_ns_; }
  int64_t ticks() const { return tick_count_; }
  bool running() const { return running_; }

  const std::vector<TickTask>& tasks() const { return tasks_; }

 private:
  void drain_control(bool& paused, int64_t& step_budget, bool& quit);

  int64_t dt_ns_;
  SimTime now_ns_{0};
  int64_t tick_count_{0};
  bool running_{false};
  bool stop_requested_{false};

  std::vector<TickTask> tasks_;
  std::vector<TaskFn> task_fns_;
  std::vector<std::function<void(SimTime)>> clock_subs_;
  std::vector<std::function<void(SimTime)>> pre_tick_;
  std::vector<std::function<void(SimTime)>> post_tick_;
  std::function<void(SimTime, const TickTask&)> trace_;

  std::vector<int64_t> overruns_;

  std::mutex control_mu_;
  std::deque<ControlCommand> control_q_;
};

// Parses "pause" / "resume" / "step N" / "quit"; returns false on garbage.
bool parse_control_command(const std::string& line, ControlCommand& out);

}  // namespace sky::sim
