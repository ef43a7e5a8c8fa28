#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "qsim/errors.hpp"

namespace qsim {

/// Simulated seconds since the start of an episode.
struct SimTime {
  double seconds = 0.0;

  constexpr SimTime() = default;
  constexpr explicit SimTime(double s) : seconds(s) {}

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime operator+(double dt) const { return SimTime{seconds + dt}; }
  constexpr double operator-(SimTime other) const { return seconds - other.seconds; }
};

using EventId = std::uint64_t;
using TaskId = std::int64_t;
using NodeId = std::int64_t;

enum class EventKind : std::uint8_t { TaskArrival, ExecutionStart, ExecutionComplete, Custom };

const char* to_string(EventKind kind);

/// What an event means. Interpretation is up to the handler passed to run_until.
struct EventPayload {
  EventKind kind = EventKind::Custom;
  TaskId task = -1;
  NodeId node = -1;
  std::int64_t tag = 0;

  bool operator==(const EventPayload&) const = default;
};

struct Event {
  EventId id = 0;
  SimTime fire_at;
  std::uint64_t seq = 0;
  EventPayload payload;

  bool operator==(const Event&) const = default;
};

// Discrete-event kernel. Events fire in (fire_at, seq) order; seq is the
// insertion counter, so simultaneous events fire in the order they were
// scheduled. The engine holds only data, so copying it clones the calendar.
class Engine {
 public:
  SimTime now() const noexcept { return now_; }

  /// Enqueues an event. Throws SchedulingInPast when `at` < now().
  EventId schedule(SimTime at, EventPayload payload);

  /// Fires every pending event with fire_at <= limit, in order, then sets the
  /// clock to `limit`. `on_fire(engine, event)` may schedule further events;
  /// those fire in this call too when they fall within the limit.
  template <typename Handler>
  SimTime run_until(SimTime limit, Handler&& on_fire);

  SimTime run_until(SimTime limit) {
    return run_until(limit, [](Engine&, const Event&) {});
  }

  /// Drains the calendar. The clock stops at the last fire time.
  template <typename Handler>
  SimTime run_all(Handler&& on_fire);

  std::size_t pending() const noexcept { return calendar_.size(); }
  std::uint64_t fired() const noexcept { return fired_; }
  std::uint64_t scheduled() const noexcept { return next_seq_; }

  std::optional<SimTime> next_fire_time() const {
    if (calendar_.empty()) return std::nullopt;
    return calendar_.top().fire_at;
  }

  bool operator==(const Engine& other) const;

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  Event pop_next();

  std::priority_queue<Event, std::vector<Event>, Later> calendar_;
  SimTime now_{};
  std::uint64_t next_seq_ = 0;
  std::uint64_t fired_ = 0;
};

template <typename Handler>
SimTime Engine::run_until(SimTime limit, Handler&& on_fire) {
  if (limit < now_) throw SchedulingInPast("run_until limit is before the current clock");
  while (!calendar_.empty() && calendar_.top().fire_at <= limit) {
    const Event ev = pop_next();
    on_fire(*this, ev);
  }
  now_ = limit;
  return now_;
}

template <typename Handler>
SimTime Engine::run_all(Handler&& on_fire) {
  while (!calendar_.empty()) {
    const Event ev = pop_next();
    on_fire(*this, ev);
  }
  return now_;
}

}  // namespace qsim
