#include "emsserve/clock.h"

#include <algorithm>
#include <chrono>
#include <thread>

#include "emsserve/error.h"

namespace emsserve {

double VirtualClock::run(std::vector<Task>& concurrent, std::vector<Task>& sequential) {
  double elapsed = 0;
  for (auto& t : concurrent) {
    if (t.work) t.work();
    elapsed = std::max(elapsed, t.cost);
  }
  for (auto& t : sequential) {
    if (t.work) t.work();
    elapsed += t.cost;
  }
  return elapsed;
}

WallClock::WallClock(double scale) : scale_(scale) {
  if (!(scale > 0)) fail(ErrorKind::InvalidArgs, "wall clock scale must be positive");
}

namespace {

void sleep_for_seconds(double s) {
  if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
}

}  // namespace

double WallClock::run(std::vector<Task>& concurrent, std::vector<Task>& sequential) {
  const auto start = std::chrono::steady_clock::now();
  {
    std::vector<std::jthread> workers;
    workers.reserve(concurrent.size());
    for (auto& t : concurrent) {
      workers.emplace_back([&t, scale = scale_] {
        sleep_for_seconds(t.cost * scale);
        if (t.work) t.work();
      });
    }
  }
  for (auto& t : sequential) {
    sleep_for_seconds(t.cost * scale_);
    if (t.work) t.work();
  }
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return elapsed.count() / scale_;
}

double WallClock::wait(double seconds) {
  const auto start = std::chrono::steady_clock::now();
  sleep_for_seconds(seconds * scale_);
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return elapsed.count() / scale_;
}

}  // namespace emsserve
