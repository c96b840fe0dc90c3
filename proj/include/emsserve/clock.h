#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace emsserve {

// One unit of simulated or real work: `cost` seconds of inference that
// performs `work` (computing a feature, running a header).
struct Task {
  double cost = 0;
  std::function<void()> work;
};

// Executes work and reports elapsed time in model seconds.
class ExecutionClock {
 public:
  virtual ~ExecutionClock() = default;

  // Runs `concurrent` as a fan-out/join, then `sequential` in order.
  // Returns max(concurrent costs) + sum(sequential costs) in virtual mode.
  virtual double run(std::vector<Task>& concurrent, std::vector<Task>& sequential) = 0;
  // Blocks for a transfer or an idle wait of `seconds`.
  virtual double wait(double seconds) = 0;
  virtual bool is_virtual() const = 0;
};

// Deterministic: runs everything inline on the caller's thread and returns
// the accounted durations.
class VirtualClock final : public ExecutionClock {
 public:
  double run(std::vector<Task>& concurrent, std::vector<Task>& sequential) override;
  double wait(double seconds) override { return seconds; }
  bool is_virtual() const override { return true; }
};

// Demo mode: sleeps cost * scale per task, concurrent tasks on their own
// threads, and reports measured time divided by scale.
class WallClock final : public ExecutionClock {
 public:
  explicit WallClock(double scale = 1.0);
  double run(std::vector<Task>& concurrent, std::vector<Task>& sequential) override;
  double wait(double seconds) override;
  bool is_virtual() const override { return false; }

 private:
  double scale_;
};

}  // namespace emsserve
